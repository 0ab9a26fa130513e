"""Stage-2 ABM supervision: crop the ABM by an RoI and score a mask head."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .grid_resize import bilinear_sample, half_pixel_positions

MASK_SIZE = 28


@dataclass(frozen=True)
class RoiBox:
    """RoI in continuous ABM-map coordinates; pixel ``i`` spans ``[i, i+1)``."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(c) for c in coords):
            raise ValidationError(f"RoI {coords} has non-finite coordinates")
        if self.x2 <= self.x1 or self.y2 <= self.y1:
            raise ValidationError(f"RoI {coords} has zero or negative extent")


def crop_resize_abm(abm: np.ndarray, roi: RoiBox, out_width: int = MASK_SIZE,
                    out_height: int = MASK_SIZE) -> np.ndarray:
    """Bilinearly sample ``abm`` over an ``out_height x out_width`` grid in ``roi``.

    Parts of the RoI hanging off the map read the nearest edge pixel.
    """
    abm = np.asarray(abm)
    if abm.ndim != 2:
        raise ValidationError(f"expected a 2-D map, got shape {abm.shape}")
    if out_width < 1 or out_height < 1:
        raise ValidationError(f"output size must be >= 1, got {out_width}x{out_height}")
    h, w = abm.shape
    if roi.x1 >= w or roi.x2 <= 0 or roi.y1 >= h or roi.y2 <= 0:
        raise ValidationError(
            f"RoI {(roi.x1, roi.y1, roi.x2, roi.y2)} does not intersect a {w}x{h} map")
    xs = half_pixel_positions(out_width, roi.x1, roi.x2 - roi.x1)
    ys = half_pixel_positions(out_height, roi.y1, roi.y2 - roi.y1)
    return bilinear_sample(abm, xs, ys).astype(np.float32)


def abm_loss(pred: np.ndarray, target: np.ndarray, reduction: str = "mean") -> float:
    """Squared-error loss between the mask-head output and ``ABM^RoI``."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValidationError(f"shape mismatch: {pred.shape} vs {target.shape}")
    sq = (pred - target) ** 2
    if reduction == "mean":
        return float(sq.mean())
    if reduction == "sum":
        return float(sq.sum())
    raise ValidationError(f"unknown reduction {reduction!r}")
