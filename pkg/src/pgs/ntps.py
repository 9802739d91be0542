"""Negative supervision from predicted agent boxes: SAT overlap events and the hinge loss."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateDistance, HorizonMismatch
from .geometry import OrientedBox, Point2, Pose2, Trajectory, headings_from_offsets, sat_overlap

DEFAULT_BETA = 3.0
DEFAULT_MODE_THRESHOLD = 0.3
DEGENERATE_DISTANCE = 1e-9


@dataclass(frozen=True, eq=False)
class AgentMode:
    score: float
    trajectory: Trajectory

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise ValueError("mode score must be finite")

    def __eq__(self, other) -> bool:
        return isinstance(other, AgentMode) and self.score == other.score and self.trajectory == other.trajectory

    __hash__ = None


@dataclass(frozen=True)
class AgentTrack:
    id: str
    width: float
    length: float
    initial_pose: Pose2
    speed: float
    modes: tuple[AgentMode, ...] = ()

    def __post_init__(self):
        if not (self.width > 0 and self.length > 0):
            raise ValueError(f"agent {self.id}: width and length must be positive")
        modes = tuple(m if isinstance(m, AgentMode) else AgentMode(*m) for m in self.modes)
        object.__setattr__(self, "modes", modes)
        if modes:
            dt, n = modes[0].trajectory.dt, len(modes[0].trajectory)
            for m in modes[1:]:
                if m.trajectory.dt != dt or len(m.trajectory) != n:
                    raise ValueError(f"agent {self.id}: modes must share dt and horizon")

    def top_mode(self) -> AgentMode:
        if not self.modes:
            raise ValueError(f"agent {self.id} has no predicted modes")
        # first of the highest scores
        return max(self.modes, key=lambda m: m.score)


@dataclass(frozen=True)
class FutureBoxSequence:
    boxes: tuple[OrientedBox, ...]

    def __len__(self) -> int:
        return len(self.boxes)

    def __getitem__(self, i) -> OrientedBox:
        return self.boxes[i]


@dataclass(frozen=True)
class CollisionEvent:
    t: int
    agent_id: str
    ego_point: Point2
    agent_point: Point2
    center_distance: float


@dataclass(frozen=True)
class CollisionSet:
    events: tuple[CollisionEvent, ...] = ()
    beta: float = DEFAULT_BETA

    def __len__(self) -> int:
        return len(self.events)

    @property
    def timesteps(self) -> list[int]:
        return sorted({e.t for e in self.events})


def build_future_boxes(traj: Trajectory, width: float, length: float, fallback_heading: float) -> FutureBoxSequence:
    """One box per trajectory step, oriented along the local trajectory offset."""
    if not (width > 0 and length > 0):
        raise ValueError("box dimensions must be positive")
    headings = headings_from_offsets(traj, fallback_heading)
    return FutureBoxSequence(
        tuple(
            OrientedBox(Point2(float(p[0]), float(p[1])), width / 2.0, length / 2.0, h)
            for p, h in zip(traj.points, headings)
        )
    )


def select_agent_trajectories(
    agents: Iterable[AgentTrack], mode: str = "top", threshold: float = DEFAULT_MODE_THRESHOLD
) -> list[tuple[AgentTrack, Trajectory]]:
    """Expand agents into (agent, trajectory) pairs to check.

    ``mode="top"`` keeps the highest-scoring mode; ``mode="threshold"`` keeps
    every mode scoring at least ``threshold`` (falling back to the top mode).
    """
    pairs = []
    for agent in agents:
        if mode == "top":
            pairs.append((agent, agent.top_mode().trajectory))
        elif mode == "threshold":
            kept = [m for m in agent.modes if m.score >= threshold] or [agent.top_mode()]
            pairs.extend((agent, m.trajectory) for m in kept)
        else:
            raise ValueError(f"unknown mode selection {mode!r}")
    return pairs


def detect_collisions(
    ego_boxes: FutureBoxSequence,
    ego_traj: Trajectory,
    agents: Sequence[tuple[AgentTrack, Trajectory]],
    beta: float = DEFAULT_BETA,
) -> CollisionSet:
    """SAT-check the ego box against every agent box at every step.

    Each overlapping (step, agent) pair becomes one event. When an agent is
    listed with several trajectories, the closest overlapping one is kept.
    """
    if len(ego_boxes) != len(ego_traj):
        raise HorizonMismatch("ego boxes and ego trajectory differ in length")
    found: dict[tuple[int, str], CollisionEvent] = {}
    for agent, traj in agents:
        if len(traj) != len(ego_traj) or traj.dt != ego_traj.dt:
            raise HorizonMismatch(
                f"agent {agent.id}: trajectory ({len(traj)} pts, dt={traj.dt}) does not match "
                f"ego ({len(ego_traj)} pts, dt={ego_traj.dt})"
            )
        boxes = build_future_boxes(traj, agent.width, agent.length, agent.initial_pose.heading)
        for t, (eb, ab) in enumerate(zip(ego_boxes.boxes, boxes.boxes)):
            if not sat_overlap(eb, ab):
                continue
            e, a = ego_traj.points[t], traj.points[t]
            d = math.hypot(e[0] - a[0], e[1] - a[1])
            ev = CollisionEvent(t, agent.id, Point2(float(e[0]), float(e[1])), Point2(float(a[0]), float(a[1])), d)
            key = (t, agent.id)
            if key not in found or d < found[key].center_distance:
                found[key] = ev
    events = tuple(found[k] for k in sorted(found))
    return CollisionSet(events, float(beta))


def rebind_collisions(collisions: CollisionSet, ego_traj: Trajectory) -> CollisionSet:
    """Keep the detected (step, agent) pairs but move ego points onto ``ego_traj``."""
    events = []
    for ev in collisions.events:
        p = ego_traj.points[ev.t]
        d = math.hypot(p[0] - ev.agent_point.x, p[1] - ev.agent_point.y)
        events.append(replace(ev, ego_point=Point2(float(p[0]), float(p[1])), center_distance=d))
    return CollisionSet(tuple(events), collisions.beta)


def ntps_loss(collisions: CollisionSet) -> float:
    """Sum over events of max(0, beta - center distance)."""
    if not collisions.beta > 0:
        raise ValueError("beta must be positive")
    return float(sum(max(0.0, collisions.beta - e.center_distance) for e in collisions.events))


def ntps_gradient(ego_traj: Trajectory, collisions: CollisionSet) -> np.ndarray:
    """Gradient of the hinge loss w.r.t. ego points, with the event set held fixed.

    Each active event pushes its ego point with unit magnitude directly away
    from the colliding agent point.
    """
    grad = np.zeros_like(ego_traj.points)
    for ev in collisions.events:
        p = ego_traj.points[ev.t]
        diff = p - np.array([ev.agent_point.x, ev.agent_point.y])
        d = math.hypot(diff[0], diff[1])
        if d < DEGENERATE_DISTANCE:
            raise DegenerateDistance(f"ego and agent {ev.agent_id} coincide at step {ev.t}")
        if d < collisions.beta:
            grad[ev.t] -= diff / d
    return grad
