"""Oriented-box detection toolkit.

Pure-numpy building blocks for rotated-box detectors: exact rotated IoU,
anchor-prior fitting and assignment, log-space target encoding, detection
loss evaluation, locality-aware score alignment, rotated NMS, and
average-precision evaluation, plus small deterministic file formats and a
synthetic-scene harness for end-to-end verification.
"""

__version__ = "0.1.0"

from .anchors import (
    AnchorPrior,
    AnchorSet,
    EncodedTarget,
    LevelAssignment,
    LevelSpec,
    assign,
    build_target_maps,
    decode,
    encode,
    fit_anchor_priors,
    levels_for_image,
)
from .evaluation import APResult, GroundTruth, average_precision, match_detections
from .geometry import (
    DistanceForm,
    OrientedBox,
    contains_point,
    from_corners,
    from_distance_form,
    iou_matrix,
    normalize_angle,
    raster_iou_oracle,
    rigid_transform,
    rotated_iou,
    to_corners,
    to_distance_form,
)
from .lasa import (
    DIAMOND5,
    DIAMOND9,
    DIAMOND13,
    PATTERNS,
    RECT9,
    SamplingPattern,
    ScoreMap,
    align_score,
    bilinear_sample,
    sampling_points,
)
from .losses import LossConfig, LossReport, angle_loss, focal_loss, iou_loss, total_loss
from .postprocess import (
    Detection,
    PipelineConfig,
    RegressionMap,
    decode_maps,
    nms_indices,
    rotated_nms,
    run_pipeline,
)
from .synthetic import SyntheticScene, default_anchor_set, synth_scene, write_scene
from .tensorfile import read_tensor, write_tensor

__all__ = [
    "__version__",
    "AnchorPrior", "AnchorSet", "EncodedTarget", "LevelAssignment", "LevelSpec",
    "assign", "build_target_maps", "decode", "encode", "fit_anchor_priors",
    "levels_for_image",
    "APResult", "GroundTruth", "average_precision", "match_detections",
    "DistanceForm", "OrientedBox", "contains_point", "from_corners",
    "from_distance_form", "iou_matrix", "normalize_angle", "raster_iou_oracle",
    "rigid_transform", "rotated_iou", "to_corners", "to_distance_form",
    "DIAMOND5", "DIAMOND9", "DIAMOND13", "PATTERNS", "RECT9",
    "SamplingPattern", "ScoreMap", "align_score", "bilinear_sample",
    "sampling_points",
    "LossConfig", "LossReport", "angle_loss", "focal_loss", "iou_loss",
    "total_loss",
    "Detection", "PipelineConfig", "RegressionMap", "decode_maps",
    "nms_indices", "rotated_nms", "run_pipeline",
    "SyntheticScene", "default_anchor_set", "synth_scene", "write_scene",
    "read_tensor", "write_tensor",
]
