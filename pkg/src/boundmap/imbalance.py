"""Positive-anchor counts under the IoU rule versus BM-based selection."""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .anchor_supervision import (AnchorConfig, DEFAULT_BOUNDARY, SMALL_BOX_AREA,
                                 iou_positive_counts, per_box_feature_maps,
                                 select_positive_anchors)
from .bm_core import GtBox
from .grid_resize import GridSpec


@dataclass
class BoxStats:
    image_id: str
    box_index: int
    iou_positives: int
    loc_p: int


def synthetic_boxes(n: int, rng: np.random.Generator, image_size: int = 512,
                    min_side: float = 8.0, max_side: float = 128.0) -> list[GtBox]:
    """``n`` boxes with independent log-uniform sides, placed uniformly."""
    sides = np.exp(rng.uniform(np.log(min_side), np.log(max_side), size=(n, 2)))
    x1 = rng.uniform(0, image_size - sides[:, 0])
    y1 = rng.uniform(0, image_size - sides[:, 1])
    return [GtBox(float(a), float(b), float(a + w), float(b + h))
            for a, b, (w, h) in zip(x1, y1, sides)]


def box_stats(image_id: str, boxes: Sequence[GtBox], grid: GridSpec,
              anchors: AnchorConfig, boundary: float = DEFAULT_BOUNDARY,
              area_threshold: float = SMALL_BOX_AREA) -> list[BoxStats]:
    """Per box: IoU-matched anchor count and BM-selected ``|Loc_p^(n)|``."""
    per_box, _ = iou_positive_counts(boxes, anchors, grid)
    maps = per_box_feature_maps(boxes, grid)
    rows = []
    for i, (box, bm_r) in enumerate(zip(boxes, maps)):
        loc = select_positive_anchors([box], [bm_r], boundary, area_threshold)
        rows.append(BoxStats(image_id, i, per_box[i], len(loc)))
    return rows


def histogram(per_box: Iterable[int], per_image: Iterable[int]) -> list[tuple[int, int, int]]:
    """Rows of ``(count, n_boxes, n_images)`` for every observed count."""
    boxes = Counter(per_box)
    images = Counter(per_image)
    top = max(list(boxes) + list(images), default=-1)
    return [(c, boxes.get(c, 0), images.get(c, 0)) for c in range(top + 1)]


def write_histogram(path, rows: Sequence[tuple[int, int, int]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["positive_anchors", "gt_boxes", "images"])
        writer.writerows(rows)
