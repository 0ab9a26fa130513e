"""Bounding maps (BM) and size-adaptive bounding maps (ABM) from boxes.

Maps are 2-D ``float32`` arrays of shape ``(height, width)``.  Pixel
``(x, y)`` sits at integer coordinates, so a box ``(x1, y1, x2, y2)``
covers every pixel with ``x1 <= x <= x2`` and ``y1 <= y <= y2``.

Inside a box each axis map decays linearly from 1 at the box center to
``1 - alpha / 2`` at the box edge (0.5 for the plain BM).  Per-box axis
maps are summed and clipped at 1, and the two axes are merged with a
geometric mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import ValidationError

Axis = Literal["x", "y"]


@dataclass(frozen=True)
class GtBox:
    """Ground-truth box in input-pixel coordinates."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(c) for c in coords):
            raise ValidationError(f"box {coords} has non-finite coordinates")
        if self.x2 <= self.x1 or self.y2 <= self.y1:
            raise ValidationError(f"box {coords} has zero or negative extent")

    @classmethod
    def from_seq(cls, seq: Sequence[float]) -> "GtBox":
        if len(seq) != 4:
            raise ValidationError(f"box {list(seq)} must have 4 coordinates")
        return cls(*(float(v) for v in seq))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def x_ctr(self) -> float:
        return (self.x1 + self.x2) / 2

    @property
    def y_ctr(self) -> float:
        return (self.y1 + self.y2) / 2

    @property
    def k_x(self) -> float:
        return 1.0 / self.width

    @property
    def k_y(self) -> float:
        return 1.0 / self.height

    @property
    def area(self) -> float:
        return self.width * self.height

    def check_bounds(self, width: int, height: int) -> None:
        """Raise unless the box lies inside a ``width`` x ``height`` image."""
        if not (0 <= self.x1 and self.x2 <= width and 0 <= self.y1 and self.y2 <= height):
            raise ValidationError(
                f"box {self.as_tuple()} falls outside a {width}x{height} image")


@dataclass(frozen=True)
class AlphaPolicy:
    """Piecewise slope ratio keyed on box area (square input pixels)."""

    a_small: float = 250.0
    a_medium: float = 1000.0
    alpha_small: float = 0.0
    alpha_medium: float = 1.0
    alpha_large: float = 1.4

    def __post_init__(self):
        if not 0 < self.a_small < self.a_medium:
            raise ValidationError(
                f"need 0 < a_small < a_medium, got {self.a_small}, {self.a_medium}")
        if min(self.alpha_small, self.alpha_medium, self.alpha_large) < 0:
            raise ValidationError("alpha values must be non-negative")


def alpha_for_area(area: float, policy: AlphaPolicy | None = None) -> float:
    if policy is None:
        policy = AlphaPolicy()
    if not area > 0:
        raise ValidationError(f"area must be positive, got {area}")
    if area < policy.a_small:
        return policy.alpha_small
    if area < policy.a_medium:
        return policy.alpha_medium
    return policy.alpha_large


def _check_dims(width: int, height: int) -> None:
    if int(width) != width or int(height) != height or width < 1 or height < 1:
        raise ValidationError(f"map size must be positive integers, got {width}x{height}")


def _axis_values(box: GtBox, width: int, height: int, axis: Axis,
                 alpha: float) -> np.ndarray:
    # float64 working copy; callers decide when to round to float32
    if axis not in ("x", "y"):
        raise ValidationError(f"axis must be 'x' or 'y', got {axis!r}")
    if not alpha >= 0:
        raise ValidationError(f"alpha must be non-negative, got {alpha}")
    _check_dims(width, height)
    box.check_bounds(width, height)

    xs = np.arange(width, dtype=np.float64)
    ys = np.arange(height, dtype=np.float64)
    inside = (((ys >= box.y1) & (ys <= box.y2))[:, None]
              & ((xs >= box.x1) & (xs <= box.x2))[None, :])
    if axis == "x":
        profile = (1.0 - alpha * box.k_x * np.abs(xs - box.x_ctr))[None, :]
    else:
        profile = (1.0 - alpha * box.k_y * np.abs(ys - box.y_ctr))[:, None]
    # large custom alphas can push the edge below zero
    return np.where(inside, np.maximum(profile, 0.0), 0.0)


def axis_map(box: GtBox, map_width: int, map_height: int, axis: Axis,
             alpha: float = 1.0) -> np.ndarray:
    """Single-box, single-axis map; ``alpha=1`` gives the plain BM."""
    return _axis_values(box, map_width, map_height, axis, alpha).astype(np.float32)


def _stack(maps: Iterable[np.ndarray]) -> np.ndarray:
    maps = [np.asarray(m) for m in maps]
    if not maps:
        raise ValidationError("cannot aggregate an empty list of maps")
    shape = maps[0].shape
    for m in maps:
        if m.ndim != 2 or m.shape != shape:
            raise ValidationError(f"map shape {m.shape} does not match {shape}")
    return np.stack(maps).astype(np.float64)


def aggregate(maps: Sequence[np.ndarray]) -> np.ndarray:
    """Element-wise sum of per-box maps, clipped above at 1."""
    return np.minimum(_stack(maps).sum(axis=0), 1.0).astype(np.float32)


def combine_xy(mx: np.ndarray, my: np.ndarray) -> np.ndarray:
    """Geometric mean ``sqrt(mx * my)`` of the two axis maps."""
    mx = np.asarray(mx, dtype=np.float64)
    my = np.asarray(my, dtype=np.float64)
    if mx.shape != my.shape:
        raise ValidationError(f"map shapes differ: {mx.shape} vs {my.shape}")
    return np.sqrt(mx * my).astype(np.float32)


def _box_alpha(box: GtBox, policy: AlphaPolicy | None) -> float:
    return 1.0 if policy is None else alpha_for_area(box.area, policy)


def generate_map(boxes: Sequence[GtBox], map_width: int, map_height: int,
                 policy: AlphaPolicy | None = None) -> np.ndarray:
    """BM_xy for ``boxes`` (``policy=None``) or ABM_xy (with a policy).

    An empty box list gives an all-zero map.
    """
    _check_dims(map_width, map_height)
    if not boxes:
        return np.zeros((map_height, map_width), dtype=np.float32)
    sum_x = np.zeros((map_height, map_width))
    sum_y = np.zeros((map_height, map_width))
    for box in boxes:
        alpha = _box_alpha(box, policy)
        sum_x += _axis_values(box, map_width, map_height, "x", alpha)
        sum_y += _axis_values(box, map_width, map_height, "y", alpha)
    bm_x = np.minimum(sum_x, 1.0)
    bm_y = np.minimum(sum_y, 1.0)
    return np.sqrt(bm_x * bm_y).astype(np.float32)


def per_box_maps(boxes: Sequence[GtBox], map_width: int, map_height: int,
                 policy: AlphaPolicy | None = None) -> list[np.ndarray]:
    """One combined map per box, without cross-box aggregation."""
    return [generate_map([box], map_width, map_height, policy) for box in boxes]
