"""Bilinear resampling between image and feature-grid resolution.

Coordinates follow the half-pixel-center convention: output pixel ``i``
reads source position ``(i + 0.5) * in / out - 0.5``, clamped to the
valid index range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class GridSpec:
    image_width: int
    image_height: int
    stride: int = 1
    anchor_classes: int = 1

    def __post_init__(self):
        if self.image_width < 1 or self.image_height < 1:
            raise ValidationError(
                f"image size must be positive, got {self.image_width}x{self.image_height}")
        if self.stride < 1 or self.anchor_classes < 1:
            raise ValidationError("stride and anchor_classes must be >= 1")

    @property
    def feature_width(self) -> int:
        return math.ceil(self.image_width / self.stride)

    @property
    def feature_height(self) -> int:
        return math.ceil(self.image_height / self.stride)


def _source_index(positions: np.ndarray, size: int):
    pos = np.clip(positions, 0.0, size - 1)
    lo = np.floor(pos).astype(np.intp)
    hi = np.minimum(lo + 1, size - 1)
    return lo, hi, pos - lo


def bilinear_sample(values: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sample ``values`` on the tensor grid ``ys x xs`` of source positions.

    Positions are in source index units and are edge-clamped.  Returns a
    ``(len(ys), len(xs))`` float64 array.
    """
    src = np.asarray(values, dtype=np.float64)
    if src.ndim != 2 or src.size == 0:
        raise ValidationError(f"expected a non-empty 2-D map, got shape {src.shape}")
    h, w = src.shape
    x0, x1, wx = _source_index(np.asarray(xs, dtype=np.float64), w)
    y0, y1, wy = _source_index(np.asarray(ys, dtype=np.float64), h)
    rows = src[:, x0] * (1.0 - wx) + src[:, x1] * wx
    return rows[y0] * (1.0 - wy)[:, None] + rows[y1] * wy[:, None]


def half_pixel_positions(out_size: int, start: float, extent: float) -> np.ndarray:
    """Centers of ``out_size`` equal bins over ``[start, start + extent)``,
    shifted into source index units."""
    return start + (np.arange(out_size) + 0.5) * (extent / out_size) - 0.5


def resize_linear(values: np.ndarray, out_width: int, out_height: int) -> np.ndarray:
    if out_width < 1 or out_height < 1:
        raise ValidationError(f"output size must be >= 1, got {out_width}x{out_height}")
    values = np.asarray(values)
    if values.ndim != 2:
        raise ValidationError(f"expected a 2-D map, got shape {values.shape}")
    h, w = values.shape
    if (w, h) == (out_width, out_height):
        return values.astype(np.float32, copy=True)
    xs = half_pixel_positions(out_width, 0.0, w)
    ys = half_pixel_positions(out_height, 0.0, h)
    return bilinear_sample(values, xs, ys).astype(np.float32)


def to_feature_grid(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Resize an image-resolution map to the ``ceil(W/R) x ceil(H/R)`` grid."""
    values = np.asarray(values)
    if values.shape != (grid.image_height, grid.image_width):
        raise ValidationError(
            f"map shape {values.shape} does not match image "
            f"{grid.image_width}x{grid.image_height}")
    return resize_linear(values, grid.feature_width, grid.feature_height)


def replicate_anchor_classes(bm_r: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Read-only ``(A, h, w)`` view; every anchor class shares one map."""
    bm_r = np.asarray(bm_r)
    return np.broadcast_to(bm_r, (grid.anchor_classes,) + bm_r.shape)
