"""Weighted combination of the supervision losses, a trajectory optimizer and gradient checks.

The network losses a full training objective would add (detection, motion
forecasting, imitation) are outside this library; in a :class:`LossBreakdown`
they are implicitly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .geometry import Polyline, Trajectory, headings_from_offsets
from .lanes import mtps_loss, mtps_score_gradient
from .ntps import (
    DEFAULT_BETA,
    AgentTrack,
    CollisionSet,
    build_future_boxes,
    detect_collisions,
    ntps_gradient,
    ntps_loss,
    rebind_collisions,
    select_agent_trajectories,
)
from .stps import DEFAULT_SNAP_THRESHOLD, SpatialTarget, generate_spatial_target, stps_gradient, stps_loss

DEFAULT_EGO_WIDTH = 2.0
DEFAULT_EGO_LENGTH = 4.6


@dataclass(frozen=True)
class LossWeights:
    w_mtps: float = 1.0
    w_stps: float = 0.3
    w_ntps: float = 1.0

    def __post_init__(self):
        for name in ("w_mtps", "w_stps", "w_ntps"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and non-negative, got {v}")

    def scaled(self, k: float) -> "LossWeights":
        return LossWeights(self.w_mtps * k, self.w_stps * k, self.w_ntps * k)


@dataclass(frozen=True)
class LossBreakdown:
    mtps: float
    stps: float
    ntps: float
    weighted_total: float


@dataclass(frozen=True)
class OptimizerConfig:
    step_size: float = 0.1
    max_iters: int = 200
    convergence_tol: float = 1e-6
    refresh_collisions_every: int = 5

    def __post_init__(self):
        if not (self.step_size > 0 and self.max_iters > 0 and self.refresh_collisions_every > 0):
            raise ValueError("step_size, max_iters and refresh_collisions_every must be positive")


@dataclass(frozen=True)
class FiniteDiffReport:
    max_rel_error: float
    max_abs_error: float
    worst_coordinate: tuple[int, int]
    checked: int = 0
    skipped: int = 0


def combine(mtps: float, stps: float, ntps: float, weights: LossWeights) -> LossBreakdown:
    total = weights.w_mtps * mtps + weights.w_stps * stps + weights.w_ntps * ntps
    return LossBreakdown(mtps, stps, ntps, total)


def total_pgs_loss(
    mtps_in: tuple | None = None,
    stps_in: tuple[Trajectory, SpatialTarget] | None = None,
    ntps_in: CollisionSet | None = None,
    weights: LossWeights = LossWeights(),
) -> LossBreakdown:
    """Evaluate whichever supervision terms are supplied and weight them.

    ``mtps_in`` is ``(scores, label)`` or ``(scores, label, class_weights)``.
    Missing terms contribute 0.
    """
    if mtps_in is None and stps_in is None and ntps_in is None:
        raise ValueError("at least one loss component must be supplied")
    m = mtps_loss(*mtps_in) if mtps_in is not None else 0.0
    s = stps_loss(*stps_in) if stps_in is not None else 0.0
    n = ntps_loss(ntps_in) if ntps_in is not None else 0.0
    return combine(m, s, n, weights)


class OptimizeResult(NamedTuple):
    trajectory: Trajectory
    final: LossBreakdown
    iterations: int
    history: list[float]


def _agent_pairs(agents, mode: str) -> list[tuple[AgentTrack, Trajectory]]:
    pairs, tracks = [], []
    for a in agents:
        if isinstance(a, AgentTrack):
            tracks.append(a)
        else:
            pairs.append(tuple(a))
    return pairs + select_agent_trajectories(tracks, mode)


def optimize_trajectory(
    init: Trajectory,
    target_centerline: Polyline,
    gt: Trajectory,
    agents: Sequence = (),
    weights: LossWeights = LossWeights(),
    cfg: OptimizerConfig = OptimizerConfig(),
    w_snap: float = DEFAULT_SNAP_THRESHOLD,
    beta: float = DEFAULT_BETA,
    *,
    ego_width: float = DEFAULT_EGO_WIDTH,
    ego_length: float = DEFAULT_EGO_LENGTH,
    fallback_heading: float | None = None,
    agent_mode: str = "top",
) -> OptimizeResult:
    """Fixed-step gradient descent of the weighted spatial + collision losses.

    ``agents`` holds :class:`AgentTrack` objects (their top mode is used, or
    every mode above threshold with ``agent_mode="threshold"``) or explicit
    ``(agent, trajectory)`` pairs. The spatial target is built once from
    ``gt``; the collision set driving the gradient is re-detected every
    ``cfg.refresh_collisions_every`` iterations. Every iterate is scored with
    freshly detected collisions and the best one is returned.
    """
    if len(init) != len(gt) or init.dt != gt.dt:
        raise ValueError("init and gt must share length and dt")
    pairs = _agent_pairs(agents, agent_mode)
    target = generate_spatial_target(gt, target_centerline, w_snap)
    if fallback_heading is None:
        fallback_heading = headings_from_offsets(gt, 0.0)[0]

    def detect(traj: Trajectory) -> CollisionSet:
        boxes = build_future_boxes(traj, ego_width, ego_length, fallback_heading)
        return detect_collisions(boxes, traj, pairs, beta)

    def score(traj: Trajectory, cs: CollisionSet) -> LossBreakdown:
        return combine(0.0, stps_loss(traj, target), ntps_loss(cs), weights)

    traj = init
    fresh = detect(traj)
    current = score(traj, fresh)
    best_traj, best = traj, current
    history = [current.weighted_total]
    frozen = fresh
    prev = current.weighted_total
    it = 0
    for it in range(1, cfg.max_iters + 1):
        if (it - 1) % cfg.refresh_collisions_every == 0:
            frozen = fresh
        grad = weights.w_stps * stps_gradient(traj, target)
        if weights.w_ntps and frozen.events:
            grad = grad + weights.w_ntps * ntps_gradient(traj, frozen)
        traj = traj.with_points(traj.points - cfg.step_size * grad)
        fresh = detect(traj)
        current = score(traj, fresh)
        if current.weighted_total < best.weighted_total:
            best_traj, best = traj, current
        history.append(best.weighted_total)
        if abs(current.weighted_total - prev) < cfg.convergence_tol:
            break
        prev = current.weighted_total
    return OptimizeResult(best_traj, best, it, history)


def _rel(a: float, n: float) -> float:
    # absolute floor keeps exactly-zero gradients from producing 0/0
    return abs(a - n) / max(abs(a), abs(n), 1e-8)


def _central(f, x: np.ndarray, h: float) -> np.ndarray:
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (f(xp) - f(xm)) / (2 * h)
    return g


def finite_diff_check(kind: str, inputs, h: float = 1e-5) -> FiniteDiffReport:
    """Compare an analytical gradient with central differences.

    ``kind`` is ``"mtps"`` with inputs ``(scores, label[, class_weights])``,
    ``"stps"`` with ``(pred, spatial_target)`` or ``"ntps"`` with
    ``(ego_traj, collisions)``. Coordinates within ``10 * h`` of a kink of the
    loss (L1 zero, hinge boundary) are skipped.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    kind = kind.lower()
    if kind == "mtps":
        scores, label, *rest = inputs
        cw = rest[0] if rest else None
        x = np.asarray(scores, dtype=float).reshape(3, 1)
        analytic = mtps_score_gradient(x[:, 0], label, cw).reshape(3, 1)
        numeric = _central(lambda v: mtps_loss(v[:, 0], label, cw), x, h)
        skip = np.zeros_like(x, dtype=bool)
    elif kind == "stps":
        pred, target = inputs
        x = pred.points.copy()
        analytic = stps_gradient(pred, target)
        numeric = _central(lambda v: stps_loss(pred.with_points(v), target), x, h)
        skip = np.abs(x - target.target.points) < 10 * h
    elif kind == "ntps":
        ego, cs = inputs
        x = ego.points.copy()
        analytic = ntps_gradient(ego, cs)
        numeric = _central(lambda v: ntps_loss(rebind_collisions(cs, ego.with_points(v))), x, h)
        skip = np.zeros_like(x, dtype=bool)
        for ev in rebind_collisions(cs, ego).events:
            if abs(ev.center_distance - cs.beta) < 10 * h or ev.center_distance < 10 * h:
                skip[ev.t, :] = True
    else:
        raise ValueError(f"unknown loss kind {kind!r}")

    max_rel = max_abs = 0.0
    worst = (0, 0)
    checked = 0
    for idx in np.ndindex(x.shape):
        if skip[idx]:
            continue
        checked += 1
        a, n = float(analytic[idx]), float(numeric[idx])
        rel = _rel(a, n)
        max_abs = max(max_abs, abs(a - n))
        if rel > max_rel:
            max_rel, worst = rel, (int(idx[0]), int(idx[1]))
    return FiniteDiffReport(max_rel, max_abs, worst, checked, int(skip.sum()))
