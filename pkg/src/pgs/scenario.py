"""Scenario description, validation and synthetic scenario generators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .geometry import DEFAULT_DENSIFY_SPACING, Polyline, Pose2, Trajectory, concat_polylines
from .lanes import DEFAULT_LANE_WIDTH, Lane
from .ntps import DEFAULT_BETA, AgentMode, AgentTrack
from .stps import DEFAULT_SNAP_THRESHOLD

SYNTHETIC_KINDS = ("straight3", "curve", "intersection", "overtake", "merge")


@dataclass(frozen=True)
class ScenarioMeta:
    dt_plan: float = 0.5
    horizon_steps: int = 6
    default_lane_width: float = DEFAULT_LANE_WIDTH
    seed: int = 0
    densify_spacing: float | None = DEFAULT_DENSIFY_SPACING
    name: str = ""


@dataclass(frozen=True)
class EgoSpec:
    pose: Pose2
    speed: float
    expert_trajectory: Trajectory
    route: tuple[str, ...]
    dims: tuple[float, float] = (2.0, 4.6)  # (width, length)
    command: str = "lane_follow"

    def __post_init__(self):
        object.__setattr__(self, "route", tuple(self.route))
        object.__setattr__(self, "dims", tuple(float(v) for v in self.dims))


@dataclass(frozen=True)
class Thresholds:
    w_snap: float = DEFAULT_SNAP_THRESHOLD
    beta: float = DEFAULT_BETA
    lane_width: float | None = None


@dataclass(frozen=True)
class ScenarioSpec:
    meta: ScenarioMeta
    lanes: tuple[Lane, ...]
    ego: EgoSpec
    agents: tuple[AgentTrack, ...] = ()
    thresholds: Thresholds = field(default_factory=Thresholds)

    def __post_init__(self):
        object.__setattr__(self, "lanes", tuple(self.lanes))
        object.__setattr__(self, "agents", tuple(self.agents))

    @property
    def lane_width(self) -> float:
        """The W used for lane bands and departure checks."""
        if self.thresholds.lane_width is not None:
            return self.thresholds.lane_width
        return self.meta.default_lane_width

    @property
    def horizon(self) -> float:
        return self.meta.dt_plan * self.meta.horizon_steps

    def lane(self, lane_id: str) -> Lane:
        for lane in self.lanes:
            if lane.id == lane_id:
                return lane
        raise KeyError(lane_id)

    def expert_window(self, t: float = 0.0) -> Trajectory:
        """Expert positions at the next ``horizon_steps`` planning ticks after ``t``."""
        dt = self.meta.dt_plan
        return self.ego.expert_trajectory.resample(t + dt, dt, self.meta.horizon_steps)


def validate(spec: ScenarioSpec) -> ScenarioSpec:
    """Raise :class:`ValidationError` naming the first violated invariant."""
    m = spec.meta
    if not m.dt_plan > 0:
        raise ValidationError("meta.dt_plan must be positive")
    if m.horizon_steps < 1:
        raise ValidationError("meta.horizon_steps must be >= 1")
    if not m.default_lane_width > 0:
        raise ValidationError("meta.default_lane_width must be positive")
    if m.densify_spacing is not None and not m.densify_spacing > 0:
        raise ValidationError("meta.densify_spacing must be positive or null")
    if not spec.lanes:
        raise ValidationError("scenario has no lanes")
    ids = [lane.id for lane in spec.lanes]
    dup = {i for i in ids if ids.count(i) > 1}
    if dup:
        raise ValidationError(f"duplicate lane id {sorted(dup)[0]!r}")
    known = set(ids)
    for lane in spec.lanes:
        for s in lane.successors:
            if s not in known:
                raise ValidationError(f"lane {lane.id!r} lists unknown successor {s!r}")
    if not spec.ego.route:
        raise ValidationError("ego.route is empty")
    for rid in spec.ego.route:
        if rid not in known:
            raise ValidationError(f"ego.route references unknown lane id {rid!r}")
    w, l = spec.ego.dims
    if not (w > 0 and l > 0):
        raise ValidationError("ego.dims must be positive")
    if spec.ego.speed < 0:
        raise ValidationError("ego.speed must be non-negative")
    expert = spec.ego.expert_trajectory
    if len(expert) < m.horizon_steps:
        raise ValidationError(
            f"ego.expert_trajectory has {len(expert)} points, fewer than horizon_steps={m.horizon_steps}"
        )
    if expert.dt != m.dt_plan:
        raise ValidationError(f"ego.expert_trajectory.dt {expert.dt} != meta.dt_plan {m.dt_plan}")
    agent_ids = [a.id for a in spec.agents]
    if len(set(agent_ids)) != len(agent_ids):
        raise ValidationError("duplicate agent id")
    for a in spec.agents:
        if not a.modes:
            raise ValidationError(f"agent {a.id!r} has no modes")
        for k, mode in enumerate(a.modes):
            if mode.trajectory.dt != m.dt_plan:
                raise ValidationError(f"agents[{a.id}].modes[{k}].trajectory.dt != meta.dt_plan")
            if not 0.0 <= mode.score <= 1.0:
                raise ValidationError(f"agents[{a.id}].modes[{k}].score outside [0, 1]")
    t = spec.thresholds
    if not t.w_snap > 0:
        raise ValidationError("thresholds.w_snap must be positive")
    if not t.beta > 0:
        raise ValidationError("thresholds.beta must be positive")
    if t.lane_width is not None and not t.lane_width > 0:
        raise ValidationError("thresholds.lane_width must be positive")
    return spec


def densify_lanes(spec: ScenarioSpec) -> ScenarioSpec:
    """Resample every centerline to the configured vertex spacing (idempotent)."""
    spacing = spec.meta.densify_spacing
    if spacing is None:
        return spec
    lanes = tuple(
        Lane(lane.id, lane.centerline.densify(spacing), lane.width, lane.successors) for lane in spec.lanes
    )
    return ScenarioSpec(spec.meta, lanes, spec.ego, spec.agents, spec.thresholds)


# --- synthetic scenarios -------------------------------------------------


def _lateral_noise(rng: np.random.Generator, t: np.ndarray, scale: float = 0.12) -> np.ndarray:
    """Smooth, bounded sway made of three random sinusoids."""
    out = np.zeros_like(t)
    for _ in range(3):
        amp = rng.uniform(0.3, 1.0) * scale
        freq = rng.uniform(0.05, 0.3)
        phase = rng.uniform(0.0, 2 * math.pi)
        out += amp * np.sin(2 * math.pi * freq * t + phase)
    return out


def _follow(path: Polyline, s0: float, speed: float, times: np.ndarray, lateral: np.ndarray | None = None) -> np.ndarray:
    pts = []
    for i, t in enumerate(times):
        s = s0 + speed * t
        p = path.point_at(s)
        if lateral is not None:
            h = path.heading_at(s)
            p = p + lateral[i] * np.array([-math.sin(h), math.cos(h)])
        pts.append(p)
    return np.array(pts)


def _line(x0, y0, x1, y1, step=5.0) -> Polyline:
    n = max(1, math.ceil(math.hypot(x1 - x0, y1 - y0) / step))
    return Polyline(np.linspace([x0, y0], [x1, y1], n + 1))


def _arc(cx, cy, r, a0, a1, step=1.0) -> Polyline:
    n = max(2, math.ceil(abs(a1 - a0) * r / step))
    a = np.linspace(a0, a1, n + 1)
    return Polyline(np.column_stack([cx + r * np.cos(a), cy + r * np.sin(a)]))


def _chain(*polys: Polyline) -> Polyline:
    return concat_polylines(polys)


def _times(duration: float, dt: float) -> np.ndarray:
    return np.arange(0.0, duration + 1e-9, dt)


def _stationary_agent(aid: str, x: float, y: float, heading: float, times: np.ndarray, dt: float) -> AgentTrack:
    pts = np.tile([x, y], (len(times), 1))
    return AgentTrack(aid, 2.0, 4.6, Pose2.from_xyh(x, y, heading), 0.0, (AgentMode(1.0, Trajectory(pts, dt)),))


def generate_synthetic(kind: str, seed: int = 0) -> ScenarioSpec:
    """Deterministic synthetic scenario of the given kind.

    Kinds: ``straight3`` (three parallel lanes 3.5 m apart), ``curve``,
    ``intersection`` (left turn), ``overtake`` (stopped vehicle in the ego
    lane; the expert does not avoid it) and ``merge`` (a converging agent from
    an on-ramp; the expert does not yield). Expert trajectories carry seeded
    smooth lateral noise.
    """
    if kind not in SYNTHETIC_KINDS:
        raise ValueError(f"unknown scenario kind {kind!r}; expected one of {SYNTHETIC_KINDS}")
    rng = np.random.default_rng([seed, SYNTHETIC_KINDS.index(kind)])
    dt = 0.5
    meta = ScenarioMeta(dt_plan=dt, horizon_steps=6, default_lane_width=3.5, seed=seed, name=kind)
    W = 3.5
    agents: list[AgentTrack] = []
    command = "lane_follow"

    if kind == "straight3":
        length = 120.0
        lanes = [
            Lane("left", _line(0, W, length, W)),
            Lane("current", _line(0, 0, length, 0)),
            Lane("right", _line(0, -W, length, -W)),
        ]
        route = ("current",)
        speed = float(rng.uniform(7.5, 8.5))
        path, s0 = lanes[1].centerline, 5.0
    elif kind == "curve":
        r = 60.0
        main = _chain(_line(0, 0, 30, 0), _arc(30, r, r, -math.pi / 2, 0.0), _line(30 + r, r, 30 + r, r + 30))
        inner = _chain(_line(0, W, 30, W), _arc(30, r, r - W, -math.pi / 2, 0.0), _line(30 + r - W, r, 30 + r - W, r + 30))
        lanes = [Lane("main", main), Lane("inner", inner)]
        route = ("main",)
        speed = float(rng.uniform(6.0, 7.0))
        path, s0 = main, 5.0
    elif kind == "intersection":
        lanes = [
            Lane("in", _line(-60, 0, -10, 0), successors=("turn_left", "straight")),
            Lane("turn_left", _arc(-10, 10, 10, -math.pi / 2, 0.0), successors=("out_north",)),
            Lane("straight", _line(-10, 0, 10, 0), successors=("out_east",)),
            Lane("out_north", _line(0, 10, 0, 60)),
            Lane("out_east", _line(10, 0, 60, 0)),
            Lane("cross_south", _line(W + 1.5, 60, W + 1.5, -60)),
        ]
        route = ("in", "turn_left", "out_north")
        command = "turn_left"
        speed = float(rng.uniform(5.0, 6.0))
        path = _chain(*(next(l for l in lanes if l.id == rid).centerline for rid in route))
        s0 = 5.0
        duration = (path.length - s0) / speed
        times = _times(duration, dt)
        cy0 = float(rng.uniform(10.0, 14.0))
        cross = np.column_stack([np.full(len(times), W + 1.5), cy0 - 6.0 * times])
        agents.append(
            AgentTrack("crossing", 2.0, 4.6, Pose2.from_xyh(W + 1.5, cy0, -math.pi / 2), 6.0,
                       (AgentMode(1.0, Trajectory(cross, dt)),))
        )
    elif kind == "overtake":
        length = 150.0
        lanes = [Lane("ego_lane", _line(0, 0, length, 0)), Lane("left", _line(0, W, length, W))]
        route = ("ego_lane",)
        speed = float(rng.uniform(7.5, 8.5))
        path, s0 = lanes[0].centerline, 5.0
        duration = (length - s0) / speed
        times = _times(duration, dt)
        px = float(rng.uniform(50.0, 60.0))
        py = float(rng.uniform(-0.2, 0.2))
        agents.append(_stationary_agent("parked", px, py, float(rng.uniform(-0.05, 0.05)), times, dt))
    else:  # merge
        length = 150.0
        ramp = _chain(_line(0, -W, 40, -W), _line(40, -W, 70, 0, step=2.0))
        lanes = [
            Lane("main", _line(0, 0, length, 0)),
            Lane("left", _line(0, W, length, W)),
            Lane("ramp", ramp, successors=("main",)),
        ]
        route = ("main",)
        speed = float(rng.uniform(7.5, 8.5))
        path, s0 = lanes[0].centerline, 5.0
        duration = (length - s0) / speed
        times = _times(duration, dt)
        merge_path = _chain(ramp, _line(70, 0, 200, 0))
        ax0 = float(rng.uniform(18.0, 24.0))
        v_agent = 6.0
        pts = _follow(merge_path, ax0, v_agent, times)
        slow = _follow(merge_path, ax0, 0.6 * v_agent, times)
        agents.append(
            AgentTrack("merger", 2.0, 4.6, Pose2.from_xyh(pts[0, 0], pts[0, 1], 0.0), v_agent,
                       (AgentMode(0.8, Trajectory(pts, dt)), AgentMode(0.2, Trajectory(slow, dt))))
        )

    if kind not in ("intersection", "overtake", "merge"):
        duration = (path.length - s0) / speed
    times = _times(duration, dt)
    expert = _follow(path, s0, speed, times, _lateral_noise(rng, times))
    start = expert[0]
    pose = Pose2.from_xyh(start[0], start[1], path.heading_at(s0))
    ego = EgoSpec(pose, speed, Trajectory(expert, dt), route, command=command)
    spec = ScenarioSpec(meta, tuple(lanes), ego, tuple(agents), Thresholds())
    return validate(densify_lanes(spec))
