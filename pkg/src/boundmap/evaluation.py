"""Detection scoring: greedy IoU matching and FROC sensitivities."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .anchor_supervision import iou
from .bm_core import GtBox
from .errors import ValidationError

DEFAULT_FPPI = (0.5, 1.0, 2.0, 4.0)
EVAL_IOU = 0.5


@dataclass(frozen=True)
class Detection:
    image_id: str
    box: GtBox
    score: float

    def __post_init__(self):
        if not np.isfinite(self.score):
            raise ValidationError(f"detection on {self.image_id!r} has non-finite score")


@dataclass
class MatchResult:
    order: list[int]
    """Detection indices in processing order (score descending, stable)."""
    is_tp: list[bool]
    """Per detection, indexed like the input list."""
    detected: dict[str, list[bool]]


@dataclass
class FrocResult:
    points: list[tuple[float, float]]
    average: float

    def sensitivity_at(self, fppi: float) -> float:
        for p, s in self.points:
            if p == fppi:
                return s
        raise KeyError(fppi)


def match_detections(dets: Sequence[Detection], gts: Mapping[str, Sequence[GtBox]],
                     iou_threshold: float = EVAL_IOU) -> MatchResult:
    """Greedy one-to-one matching, highest score first.

    Each detection takes the unmatched GT in its image with the largest
    IoU (lowest index on ties), provided that IoU reaches the threshold.
    """
    if not 0 < iou_threshold < 1:
        raise ValidationError(f"iou_threshold must lie in (0, 1), got {iou_threshold}")
    for d in dets:
        if d.image_id not in gts:
            raise ValidationError(f"detection refers to unknown image {d.image_id!r}")
    order = sorted(range(len(dets)), key=lambda i: -dets[i].score)
    detected = {k: [False] * len(v) for k, v in gts.items()}
    is_tp = [False] * len(dets)
    for i in order:
        det = dets[i]
        taken = detected[det.image_id]
        best, best_iou = -1, -1.0
        for j, gt in enumerate(gts[det.image_id]):
            if taken[j]:
                continue
            v = iou(det.box, gt)
            if v >= iou_threshold and v > best_iou:
                best, best_iou = j, v
        if best >= 0:
            taken[best] = True
            is_tp[i] = True
    return MatchResult(order=order, is_tp=is_tp, detected=detected)


def operating_points(dets: Sequence[Detection], gts: Mapping[str, Sequence[GtBox]],
                     iou_threshold: float = EVAL_IOU) -> tuple[np.ndarray, np.ndarray]:
    """(FPPI, sensitivity) for every distinct score threshold, plus the
    empty-detection origin."""
    n_images = len(gts)
    if n_images == 0:
        raise ValidationError("need at least one image")
    n_gt = sum(len(v) for v in gts.values())
    if n_gt == 0:
        raise ValidationError("ground truth contains no boxes")
    match = match_detections(dets, gts, iou_threshold)
    scores = np.array([dets[i].score for i in match.order], dtype=np.float64)
    tp = np.array([match.is_tp[i] for i in match.order], dtype=np.int64)
    cum_tp = np.cumsum(tp)
    cum_fp = np.cumsum(1 - tp)
    # thresholds land after the last detection of each score group
    last = np.flatnonzero(np.append(scores[1:] != scores[:-1], True)) if len(scores) else []
    fppi = np.concatenate([[0.0], cum_fp[last] / n_images])
    sens = np.concatenate([[0.0], cum_tp[last] / n_gt])
    return fppi, sens


def froc(dets: Sequence[Detection], gts: Mapping[str, Sequence[GtBox]],
         fppi_points: Sequence[float] = DEFAULT_FPPI, iou_threshold: float = EVAL_IOU,
         interpolate: bool = False) -> FrocResult:
    """Sensitivity at each requested FPPI.

    By default this is the best sensitivity among operating points whose
    FPPI does not exceed the requested value.  ``interpolate=True`` instead
    reads the monotone envelope linearly between operating points.
    """
    if not fppi_points or any(not p > 0 for p in fppi_points):
        raise ValidationError(f"fppi points must be positive, got {list(fppi_points)}")
    fppi, sens = operating_points(dets, gts, iou_threshold)
    values = []
    for p in fppi_points:
        if interpolate:
            xs, idx = np.unique(fppi, return_inverse=True)
            ys = np.zeros(len(xs))
            np.maximum.at(ys, idx, sens)
            values.append(float(np.interp(p, xs, np.maximum.accumulate(ys))))
        else:
            values.append(float(sens[fppi <= p].max()))
    points = [(float(p), v) for p, v in zip(fppi_points, values)]
    return FrocResult(points=points, average=float(np.mean(values)))
