"""Stage-1 supervision: objectness targets, background sampling, positive
anchor selection, and the IoU matcher used as a baseline.

Pixel sets are ``(N, 2)`` integer arrays of ``(x, y)`` feature-grid
locations in row-major order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .bm_core import GtBox, generate_map, per_box_maps
from .errors import ValidationError
from .grid_resize import GridSpec, to_feature_grid

FOREGROUND_LEVEL = 0.5
DEFAULT_BOUNDARY = 0.25
SMALL_BOX_AREA = 16.0
BCE_EPS = 1e-12


def mask_to_pixels(mask: np.ndarray) -> np.ndarray:
    ys, xs = np.nonzero(mask)
    return np.column_stack([xs, ys]).astype(np.int64)


def pixels_to_mask(pixels: np.ndarray, width: int, height: int) -> np.ndarray:
    mask = np.zeros((height, width), dtype=bool)
    pixels = np.asarray(pixels, dtype=np.int64).reshape(-1, 2)
    if len(pixels):
        xs, ys = pixels[:, 0], pixels[:, 1]
        if xs.min() < 0 or ys.min() < 0 or xs.max() >= width or ys.max() >= height:
            raise ValidationError(f"pixel locations fall outside a {width}x{height} grid")
        mask[ys, xs] = True
    return mask


def partition_pixels(bm_r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split the grid into foreground (``>= 0.5``) and background pixels."""
    bm_r = np.asarray(bm_r)
    if bm_r.ndim != 2:
        raise ValidationError(f"expected a 2-D map, got shape {bm_r.shape}")
    fg = bm_r >= FOREGROUND_LEVEL
    return mask_to_pixels(fg), mask_to_pixels(~fg)


def sample_background(foreground: np.ndarray, background: np.ndarray,
                      seed: int | np.random.SeedSequence, min_background: int = 0) -> np.ndarray:
    """Draw ``min(max(2 * N_f, min_background), |S_b|)`` background pixels.

    Sampling is uniform without replacement and fully determined by
    ``seed``.  ``min_background`` defaults to 0, which leaves lesion-free
    images with no training pixels at all.
    """
    background = np.asarray(background, dtype=np.int64).reshape(-1, 2)
    n_fg = len(np.asarray(foreground).reshape(-1, 2))
    quota = min(max(2 * n_fg, int(min_background)), len(background))
    rng = np.random.default_rng(seed)
    picked = np.sort(rng.choice(len(background), size=quota, replace=False))
    return background[picked]


@dataclass
class SupervisionTarget:
    """Objectness ground truth plus the pixel sets that drive training."""

    target: np.ndarray
    foreground: np.ndarray
    sampled_background: np.ndarray
    positives: np.ndarray
    boundary: float = DEFAULT_BOUNDARY
    seed: int = 0
    background: np.ndarray = field(default=None, repr=False)

    @property
    def training_mask(self) -> np.ndarray:
        h, w = self.target.shape
        return (pixels_to_mask(self.foreground, w, h)
                | pixels_to_mask(self.sampled_background, w, h))


def select_positive_anchors(boxes: Sequence[GtBox], per_box_bm_r: Sequence[np.ndarray],
                            boundary: float = DEFAULT_BOUNDARY,
                            area_threshold: float = SMALL_BOX_AREA) -> np.ndarray:
    """Union over boxes of the cells whose per-box map clears the threshold.

    Boxes smaller than ``area_threshold`` square input pixels use the
    foreground level 0.5 instead of ``boundary``.
    """
    if len(boxes) != len(per_box_bm_r):
        raise ValidationError(
            f"{len(boxes)} boxes but {len(per_box_bm_r)} per-box maps")
    if not 0 < boundary < 1:
        raise ValidationError(f"boundary must lie in (0, 1), got {boundary}")
    if not boxes:
        return np.zeros((0, 2), dtype=np.int64)
    shape = np.asarray(per_box_bm_r[0]).shape
    selected = np.zeros(shape, dtype=bool)
    for box, bm_r in zip(boxes, per_box_bm_r):
        bm_r = np.asarray(bm_r)
        if bm_r.shape != shape:
            raise ValidationError(f"per-box map shape {bm_r.shape} does not match {shape}")
        level = boundary if box.area >= area_threshold else FOREGROUND_LEVEL
        selected |= bm_r >= level
    return mask_to_pixels(selected)


def per_box_feature_maps(boxes: Sequence[GtBox], grid: GridSpec) -> list[np.ndarray]:
    maps = per_box_maps(boxes, grid.image_width, grid.image_height)
    return [to_feature_grid(m, grid) for m in maps]


def build_target(boxes: Sequence[GtBox], grid: GridSpec, boundary: float = DEFAULT_BOUNDARY,
                 seed: int = 0, min_background: int = 0,
                 area_threshold: float = SMALL_BOX_AREA) -> SupervisionTarget:
    """Full stage-1 target for one image: BM^r, pixel sets and Loc_p."""
    bm = generate_map(boxes, grid.image_width, grid.image_height)
    bm_r = to_feature_grid(bm, grid)
    fg, bg = partition_pixels(bm_r)
    sampled = sample_background(fg, bg, seed, min_background)
    positives = select_positive_anchors(
        boxes, per_box_feature_maps(boxes, grid), boundary, area_threshold)
    return SupervisionTarget(target=bm_r, foreground=fg, sampled_background=sampled,
                             positives=positives, boundary=boundary, seed=seed,
                             background=bg)


def objectness_loss(pred: np.ndarray, target: SupervisionTarget,
                    reduction: str = "sum") -> float:
    """Soft-label binary cross entropy over ``S_f`` and the sampled ``S_b``."""
    pred = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target.target, dtype=np.float64)
    if pred.shape != t.shape:
        raise ValidationError(f"prediction shape {pred.shape} does not match target {t.shape}")
    if reduction not in ("sum", "mean"):
        raise ValidationError(f"unknown reduction {reduction!r}")
    mask = target.training_mask
    p = np.clip(pred[mask], BCE_EPS, 1.0 - BCE_EPS)
    t = t[mask]
    bce = -(t * np.log(p) + (1.0 - t) * np.log1p(-p))
    if reduction == "mean":
        return float(bce.mean()) if bce.size else 0.0
    return float(bce.sum())


def smooth_l1(pred: np.ndarray, target: np.ndarray, beta: float = 1.0) -> float:
    """Reference per-location regression loss, summed over coordinates."""
    diff = np.abs(np.asarray(pred, dtype=np.float64) - np.asarray(target, dtype=np.float64))
    if beta <= 0:
        return float(diff.sum())
    return float(np.where(diff < beta, 0.5 * diff ** 2 / beta, diff - 0.5 * beta).sum())


def regression_loss(per_location_losses: Mapping[tuple[int, int], float],
                    positives: np.ndarray) -> float:
    """Sum of the host detector's per-location losses over ``Loc_p``."""
    total = 0.0
    for x, y in np.asarray(positives, dtype=np.int64).reshape(-1, 2):
        key = (int(x), int(y))
        if key not in per_location_losses:
            raise ValidationError(f"no regression loss supplied for location {key}")
        total += float(per_location_losses[key])
    return total


def iou(a: GtBox, b: GtBox) -> float:
    iw = min(a.x2, b.x2) - max(a.x1, b.x1)
    ih = min(a.y2, b.y2) - max(a.y1, b.y1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IoU between ``(N, 4)`` and ``(M, 4)`` xyxy arrays."""
    a = np.asarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 4)
    iw = np.minimum(a[:, None, 2], b[None, :, 2]) - np.maximum(a[:, None, 0], b[None, :, 0])
    ih = np.minimum(a[:, None, 3], b[None, :, 3]) - np.maximum(a[:, None, 1], b[None, :, 1])
    inter = np.clip(iw, 0, None) * np.clip(ih, 0, None)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    return inter / (area_a[:, None] + area_b[None, :] - inter)


@dataclass(frozen=True)
class AnchorConfig:
    sizes: tuple[tuple[float, float], ...] = ((16, 16), (32, 32), (64, 64), (128, 128))
    iou_threshold: float = 0.7

    def __post_init__(self):
        if not self.sizes or any(w <= 0 or h <= 0 for w, h in self.sizes):
            raise ValidationError(f"anchor sizes must be positive, got {self.sizes}")
        # 0 is tolerated as a degenerate "any overlap" setting
        if not 0 <= self.iou_threshold < 1:
            raise ValidationError(f"iou_threshold must lie in [0, 1), got {self.iou_threshold}")


def grid_anchors(config: AnchorConfig, grid: GridSpec) -> np.ndarray:
    """Anchors centered on every feature cell, ordered (y, x, size).

    No clipping at the image border.
    """
    r = grid.stride
    cx = (np.arange(grid.feature_width) + 0.5) * r
    cy = (np.arange(grid.feature_height) + 0.5) * r
    sizes = np.asarray(config.sizes, dtype=np.float64)
    cy, cx = np.meshgrid(cy, cx, indexing="ij")
    cx = cx[..., None]
    cy = cy[..., None]
    half_w = sizes[:, 0] / 2
    half_h = sizes[:, 1] / 2
    anchors = np.stack([cx - half_w, cy - half_h, cx + half_w, cy + half_h], axis=-1)
    return anchors.reshape(-1, 4)


def iou_positive_counts(boxes: Sequence[GtBox], config: AnchorConfig,
                        grid: GridSpec) -> tuple[list[int], int]:
    """Positive anchors per GT box under the IoU rule, and their total.

    The per-image figure is the plain sum, so an anchor matching two boxes
    counts twice.
    """
    if not boxes:
        return [], 0
    ious = iou_matrix(np.array([b.as_tuple() for b in boxes]), grid_anchors(config, grid))
    positive = (ious >= config.iou_threshold) & (ious > 0)
    per_box = [int(n) for n in positive.sum(axis=1)]
    return per_box, sum(per_box)
