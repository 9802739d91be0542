"""Lane-level supervision: relevant-lane filtering, target-lane labels, lane-selection loss."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyMap, LabelAbsent, NoCandidates, TrajectoryTooShort
from .geometry import Polyline, Pose2, Trajectory, nearest_point_discrete, nearest_vertices, signed_side

DEFAULT_LANE_WIDTH = 3.5
DEFAULT_MATCH_HORIZON = 2.0


class Slot(enum.Enum):
    LEFT = "left"
    CURRENT = "current"
    RIGHT = "right"

    @property
    def index(self) -> int:
        """Position in the (left, current, right) score vector."""
        return _SLOT_ORDER.index(self)


_SLOT_ORDER = (Slot.LEFT, Slot.CURRENT, Slot.RIGHT)
SCORE_ORDER = _SLOT_ORDER

# Inverse-frequency class weights keyed by slot. Published in
# (current, left, right) order as [1.074, 32.480, 26.505].
DEFAULT_CLASS_WEIGHTS: Mapping[Slot, float] = {
    Slot.CURRENT: 1.074,
    Slot.LEFT: 32.480,
    Slot.RIGHT: 26.505,
}


def class_weights_vector(weights: Mapping[Slot, float] = DEFAULT_CLASS_WEIGHTS) -> tuple[float, float, float]:
    """Arrange per-slot weights in score order (left, current, right)."""
    return tuple(float(weights[s]) for s in _SLOT_ORDER)


@dataclass(frozen=True)
class Lane:
    id: str
    centerline: Polyline
    width: float = DEFAULT_LANE_WIDTH
    successors: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError(f"lane {self.id}: width must be positive")
        object.__setattr__(self, "successors", tuple(self.successors))


@dataclass(frozen=True)
class LaneCandidate:
    slot: Slot
    lane_id: str
    d: float
    phi: float
    centerline: Polyline = field(repr=False, compare=True)


@dataclass(frozen=True)
class RelevantLaneSet:
    left: LaneCandidate | None = None
    current: LaneCandidate | None = None
    right: LaneCandidate | None = None

    def get(self, slot: Slot) -> LaneCandidate | None:
        return getattr(self, slot.value)

    @property
    def present(self) -> list[Slot]:
        return [s for s in _SLOT_ORDER if self.get(s) is not None]

    @property
    def candidates(self) -> list[LaneCandidate]:
        return [self.get(s) for s in self.present]

    def __bool__(self) -> bool:
        return bool(self.present)


@dataclass(frozen=True)
class TargetLaneLabel:
    slot: Slot
    mean_terminal_distance: float


def classify_band(d: float, phi: float, W: float) -> Slot | None:
    """Slot for a lane at distance ``d`` and side ``phi``; None means discarded."""
    if d <= 0.5 * W:
        return Slot.CURRENT
    if d <= 1.5 * W:
        if phi < 0:
            return Slot.LEFT
        if phi > 0:
            return Slot.RIGHT
    return None


def filter_relevant_lanes(lanes: Sequence[Lane], ego: Pose2, W: float | None = DEFAULT_LANE_WIDTH) -> RelevantLaneSet:
    """Pick the current lane and its immediate neighbours around the ego.

    ``d`` is the distance from the ego to the nearest centerline vertex and
    ``phi`` the side of that vertex relative to the ego heading. With
    ``W=None`` each lane's own width sets its bands. When several lanes fall
    in one slot the nearest wins, then the lexicographically smallest id.
    """
    if not lanes:
        raise EmptyMap("no lanes supplied")
    if W is not None and not W > 0:
        raise ValueError("lane width W must be positive")
    pos = ego.position
    best: dict[Slot, LaneCandidate] = {}
    for lane in lanes:
        p_star, _, d = nearest_point_discrete(lane.centerline, pos)
        phi = signed_side((p_star.x - pos.x, p_star.y - pos.y), ego.heading)
        slot = classify_band(d, phi, lane.width if W is None else W)
        if slot is None:
            continue
        cand = LaneCandidate(slot, lane.id, d, phi, lane.centerline)
        held = best.get(slot)
        if held is None or (cand.d, cand.lane_id) < (held.d, held.lane_id):
            best[slot] = cand
    return RelevantLaneSet(**{s.value: c for s, c in best.items()})


def terminal_window(dt: float, match_horizon: float) -> int:
    k = math.ceil(match_horizon / dt - 1e-9)
    return max(k, 1)


def label_target_lane(
    relevant: RelevantLaneSet,
    gt_traj: Trajectory,
    match_horizon: float = DEFAULT_MATCH_HORIZON,
) -> TargetLaneLabel:
    """Label the candidate lane closest to the end of the expert trajectory.

    Averages the nearest-vertex distance over the last ``ceil(match_horizon / dt)``
    trajectory points. Equal averages prefer current, then left, then right.
    """
    present = relevant.present
    if not present:
        raise NoCandidates("relevant lane set is empty")
    k = terminal_window(gt_traj.dt, match_horizon)
    if len(gt_traj) < k:
        raise TrajectoryTooShort(f"need {k} points for a {match_horizon} s window, have {len(gt_traj)}")
    window = gt_traj.points[-k:]
    best: tuple[float, Slot] | None = None
    for slot in (Slot.CURRENT, Slot.LEFT, Slot.RIGHT):
        cand = relevant.get(slot)
        if cand is None:
            continue
        _, dists = nearest_vertices(cand.centerline, window)
        mean = float(np.mean(dists))
        if best is None or mean < best[0]:
            best = (mean, slot)
    return TargetLaneLabel(best[1], best[0])


def _label_slot(label) -> Slot:
    return label.slot if isinstance(label, TargetLaneLabel) else Slot(label)


def _log_softmax(scores: np.ndarray, mask: np.ndarray | None) -> np.ndarray:
    z = np.where(mask, scores, -np.inf) if mask is not None else scores
    m = np.max(z)
    return z - (m + math.log(np.sum(np.exp(z - m))))


def _prepare(scores, label, relevant, masked):
    s = np.asarray(scores, dtype=float)
    if s.shape != (3,):
        raise ValueError("expected 3 scores ordered (left, current, right)")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    slot = _label_slot(label)
    mask = None
    if relevant is not None:
        if relevant.get(slot) is None:
            raise LabelAbsent(f"label slot {slot.value} is absent from the relevant lane set")
        if masked:
            mask = np.array([relevant.get(x) is not None for x in _SLOT_ORDER])
    elif masked:
        raise ValueError("masked softmax needs the relevant lane set")
    return s, slot, mask


def mtps_loss(
    scores,
    label,
    class_weights=None,
    *,
    relevant: RelevantLaneSet | None = None,
    masked: bool = False,
) -> float:
    """Cross-entropy of the 3-way lane-selection softmax against the target slot.

    By default absent slots keep their score position; ``masked=True`` drops
    them from the softmax (requires ``relevant``). ``class_weights`` are given
    in score order (left, current, right).
    """
    s, slot, mask = _prepare(scores, label, relevant, masked)
    loss = -float(_log_softmax(s, mask)[slot.index])
    if class_weights is not None:
        loss *= float(class_weights[slot.index])
    return loss


def mtps_score_gradient(
    scores,
    label,
    class_weights=None,
    *,
    relevant: RelevantLaneSet | None = None,
    masked: bool = False,
) -> np.ndarray:
    s, slot, mask = _prepare(scores, label, relevant, masked)
    p = np.exp(_log_softmax(s, mask))
    g = p.copy()
    g[slot.index] -= 1.0
    if class_weights is not None:
        g *= float(class_weights[slot.index])
    return g
