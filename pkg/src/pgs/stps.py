"""Centerline-aligned spatial targets and their L1 supervision loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch
from .geometry import Polyline, Trajectory, nearest_vertices

DEFAULT_SNAP_THRESHOLD = 2.0

__all__ = [
    "SpatialTarget",
    "Trajectory",
    "generate_spatial_target",
    "stps_loss",
    "stps_gradient",
]


@dataclass(frozen=True, eq=False)
class SpatialTarget:
    target: Trajectory
    snapped: tuple[bool, ...]
    snap_threshold: float

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SpatialTarget)
            and self.target == other.target
            and self.snapped == other.snapped
            and self.snap_threshold == other.snap_threshold
        )

    __hash__ = None


def generate_spatial_target(
    gt: Trajectory, target_centerline: Polyline, w: float = DEFAULT_SNAP_THRESHOLD
) -> SpatialTarget:
    """Replace expert points near the target centerline by their nearest vertex.

    A point is snapped when its nearest centerline vertex lies within ``w``;
    otherwise the expert point is kept as is. Timestamps are unchanged.
    """
    if not w > 0:
        raise ValueError("snap threshold w must be positive")
    idx, dist = nearest_vertices(target_centerline, gt.points)
    snapped = dist <= w
    pts = np.where(snapped[:, None], target_centerline.points[idx], gt.points)
    return SpatialTarget(gt.with_points(pts), tuple(bool(s) for s in snapped), float(w))


def _check(pred: Trajectory, spatial_target: SpatialTarget) -> np.ndarray:
    tgt = spatial_target.target
    if len(pred) != len(tgt):
        raise LengthMismatch(f"prediction has {len(pred)} points, target has {len(tgt)}")
    if pred.dt != tgt.dt:
        raise LengthMismatch(f"prediction dt {pred.dt} differs from target dt {tgt.dt}")
    return pred.points - tgt.points


def stps_loss(pred: Trajectory, spatial_target: SpatialTarget) -> float:
    """Mean over points of the L1 distance |dx| + |dy| to the spatial target."""
    diff = _check(pred, spatial_target)
    return float(np.abs(diff).sum() / len(diff))


def stps_gradient(pred: Trajectory, spatial_target: SpatialTarget) -> np.ndarray:
    """Subgradient of :func:`stps_loss` w.r.t. the predicted points, sign(0) = 0."""
    diff = _check(pred, spatial_target)
    return np.sign(diff) / len(diff)
