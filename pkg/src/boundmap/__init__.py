"""Bounding-map supervision targets and FROC evaluation for lesion detectors."""

__version__ = "0.1.0"

from .anchor_supervision import (AnchorConfig, SupervisionTarget, build_target,
                                 iou, iou_positive_counts, objectness_loss,
                                 partition_pixels, regression_loss, sample_background,
                                 select_positive_anchors)
from .bm_core import (AlphaPolicy, GtBox, aggregate, alpha_for_area, axis_map,
                      combine_xy, generate_map)
from .errors import ValidationError
from .evaluation import Detection, FrocResult, froc, match_detections
from .grid_resize import GridSpec, resize_linear, to_feature_grid
from .roi_supervision import RoiBox, abm_loss, crop_resize_abm

__all__ = [
    "AlphaPolicy", "AnchorConfig", "Detection", "FrocResult", "GridSpec", "GtBox",
    "RoiBox", "SupervisionTarget", "ValidationError", "abm_loss", "aggregate",
    "alpha_for_area", "axis_map", "build_target", "combine_xy", "crop_resize_abm",
    "froc", "generate_map", "iou", "iou_positive_counts", "match_detections",
    "objectness_loss", "partition_pixels", "regression_loss", "resize_linear",
    "sample_background", "select_positive_anchors", "to_feature_grid",
]
