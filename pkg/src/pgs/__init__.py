"""Perception-guided trajectory supervision: lane selection, centerline snapping and
collision repulsion as plain geometric losses, plus a small closed-loop simulator."""

__version__ = "0.1.0"

from .geometry import (
    OrientedBox,
    Point2,
    Polyline,
    Pose2,
    Trajectory,
    headings_from_offsets,
    nearest_point_discrete,
    project_point,
    sat_overlap,
    signed_side,
)
from .lanes import (
    DEFAULT_CLASS_WEIGHTS,
    Lane,
    LaneCandidate,
    RelevantLaneSet,
    Slot,
    TargetLaneLabel,
    class_weights_vector,
    filter_relevant_lanes,
    label_target_lane,
    mtps_loss,
    mtps_score_gradient,
)
from .losses import (
    FiniteDiffReport,
    LossBreakdown,
    LossWeights,
    OptimizerConfig,
    finite_diff_check,
    optimize_trajectory,
    total_pgs_loss,
)
from .ntps import (
    AgentMode,
    AgentTrack,
    CollisionEvent,
    CollisionSet,
    FutureBoxSequence,
    build_future_boxes,
    detect_collisions,
    ntps_gradient,
    ntps_loss,
)
from .stps import SpatialTarget, generate_spatial_target, stps_gradient, stps_loss

__all__ = [
    "AgentMode", "AgentTrack", "CollisionEvent", "CollisionSet", "FiniteDiffReport", "FutureBoxSequence",
    "Lane", "LaneCandidate", "LossBreakdown", "LossWeights", "OptimizerConfig", "OrientedBox",
    "DEFAULT_CLASS_WEIGHTS", "Point2", "Polyline", "Pose2", "RelevantLaneSet", "Slot", "SpatialTarget",
    "TargetLaneLabel", "Trajectory", "build_future_boxes", "class_weights_vector", "detect_collisions",
    "filter_relevant_lanes", "finite_diff_check", "generate_spatial_target", "headings_from_offsets",
    "label_target_lane", "mtps_loss", "mtps_score_gradient", "nearest_point_discrete", "ntps_gradient",
    "ntps_loss", "optimize_trajectory", "project_point", "sat_overlap", "signed_side", "stps_gradient",
    "stps_loss", "total_pgs_loss",
]
