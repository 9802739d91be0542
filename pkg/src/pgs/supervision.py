"""Derive the full supervision bundle for a scenario at a given time."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Polyline, Pose2, Trajectory, headings_from_offsets
from .io import SupervisionRecord, scenario_hash
from .lanes import RelevantLaneSet, TargetLaneLabel, filter_relevant_lanes, label_target_lane
from .losses import LossBreakdown, LossWeights, total_pgs_loss
from .ntps import AgentMode, AgentTrack, CollisionSet, build_future_boxes, detect_collisions, select_agent_trajectories
from .scenario import ScenarioSpec
from .stps import SpatialTarget, generate_spatial_target


@dataclass(frozen=True)
class Snapshot:
    """Ego pose, expert window and lane labels at time ``t``."""

    t: float
    ego: Pose2
    gt: Trajectory
    relevant: RelevantLaneSet
    label: TargetLaneLabel
    target_centerline: Polyline


def expert_pose(scenario: ScenarioSpec, t: float) -> Pose2:
    expert = scenario.ego.expert_trajectory
    if t <= expert.t0:
        return scenario.ego.pose
    p = expert.sample(t)
    ahead = expert.sample(t + expert.dt, extrapolate=True)
    heading = headings_from_offsets(np.array([p, ahead]), scenario.ego.pose.heading)[0]
    return Pose2.from_xyh(p[0], p[1], heading)


def snapshot(scenario: ScenarioSpec, t: float = 0.0, match_horizon: float = 2.0) -> Snapshot:
    ego = expert_pose(scenario, t)
    gt = scenario.expert_window(t)
    relevant = filter_relevant_lanes(scenario.lanes, ego, scenario.lane_width)
    label = label_target_lane(relevant, gt, match_horizon)
    return Snapshot(t, ego, gt, relevant, label, relevant.get(label.slot).centerline)


def predicted_agents(scenario: ScenarioSpec, like: Trajectory) -> list[AgentTrack]:
    """Agents with every mode resampled onto the time grid of ``like``."""
    out = []
    for a in scenario.agents:
        modes = tuple(AgentMode(m.score, m.trajectory.resample(like.t0, like.dt, len(like))) for m in a.modes)
        out.append(AgentTrack(a.id, a.width, a.length, a.initial_pose, a.speed, modes))
    return out


def collisions_for(scenario: ScenarioSpec, pred: Trajectory, beta: float | None = None, agent_mode: str = "top") -> CollisionSet:
    w, l = scenario.ego.dims
    boxes = build_future_boxes(pred, w, l, scenario.ego.pose.heading)
    pairs = select_agent_trajectories(predicted_agents(scenario, pred), agent_mode)
    return detect_collisions(boxes, pred, pairs, scenario.thresholds.beta if beta is None else beta)


def build_supervision(
    scenario: ScenarioSpec,
    pred: Trajectory | None = None,
    *,
    t: float = 0.0,
    scores=None,
    class_weights=None,
    weights: LossWeights = LossWeights(),
    w_snap: float | None = None,
    beta: float | None = None,
) -> SupervisionRecord:
    """Target lane, spatial target, collision set and losses for ``pred``.

    ``pred`` defaults to the expert window. The lane-selection term is only
    included when ``scores`` are given.
    """
    snap = snapshot(scenario, t)
    pred = snap.gt if pred is None else pred
    target: SpatialTarget = generate_spatial_target(
        snap.gt, snap.target_centerline, scenario.thresholds.w_snap if w_snap is None else w_snap
    )
    cs = collisions_for(scenario, pred, beta)
    mtps_in = (scores, snap.label, class_weights) if scores is not None else None
    losses: LossBreakdown = total_pgs_loss(mtps_in, (pred, target), cs, weights)
    return SupervisionRecord(snap.label, target, cs, losses, scenario_hash(scenario))
