"""Closed-loop desk simulator: kinematic ego, aim-point PID, rule-based planners, metrics.

Steering follows a left-negative convention (steer < 0 turns counter-clockwise).
Agents replay their top-score scripted trajectory and ignore the ego.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import NoCandidates
from .geometry import (
    OrientedBox,
    Point2,
    Polyline,
    Pose2,
    Trajectory,
    concat_polylines,
    headings_from_offsets,
    normalize_angle,
    project_point,
    sat_overlap,
)
from .lanes import RelevantLaneSet, Slot, filter_relevant_lanes
from .losses import LossWeights, OptimizerConfig, optimize_trajectory
from .ntps import AgentMode, AgentTrack
from .scenario import ScenarioSpec


@dataclass(frozen=True)
class EgoState:
    pose: Pose2
    speed: float
    dims: tuple[float, float] = (2.0, 4.6)  # (width, length)
    wheelbase: float = 2.8

    def __post_init__(self):
        if self.speed < 0:
            raise ValueError("speed must be non-negative")
        if not (self.dims[0] > 0 and self.dims[1] > 0 and self.wheelbase > 0):
            raise ValueError("dims and wheelbase must be positive")

    def box(self) -> OrientedBox:
        return OrientedBox(self.pose.position, self.dims[0] / 2, self.dims[1] / 2, self.pose.heading)


@dataclass(frozen=True)
class PIDConfig:
    """Aim-point and PID gains. The gains are placeholders tuned for this simulator."""

    near_aim: float = 4.0
    far_aim: float = 10.0
    speed_threshold: float = 6.5
    lat_kp: float = 1.0
    lat_ki: float = 0.0
    lat_kd: float = 0.1
    lon_kp: float = 0.5
    lon_ki: float = 0.05
    lon_kd: float = 0.0
    integral_clamp: float = 5.0

    def __post_init__(self):
        if not self.near_aim < self.far_aim:
            raise ValueError("near_aim must be smaller than far_aim")
        if not self.speed_threshold > 0:
            raise ValueError("speed_threshold must be positive")


@dataclass
class ControllerState:
    lat_integral: float = 0.0
    lat_prev: float | None = None
    lon_integral: float = 0.0
    lon_prev: float | None = None


@dataclass(frozen=True)
class Control:
    steer: float = 0.0
    throttle: float = 0.0
    brake: float = 0.0


@dataclass(frozen=True)
class PlannerKind:
    """``replay`` (expert + optional lateral noise), ``centerline`` or ``pgs``."""

    name: str
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.name not in ("replay", "centerline", "pgs"):
            raise ValueError(f"unknown planner {self.name!r}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")

    @classmethod
    def replay(cls, noise_sigma: float = 0.0) -> "PlannerKind":
        return cls("replay", noise_sigma)


CENTERLINE_FOLLOW = PlannerKind("centerline")
PGS_FULL = PlannerKind("pgs")


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.05
    max_time: float | None = None  # defaults to the expert duration + 10 s
    route_end_tolerance: float = 1.0
    max_steer_angle: float = math.radians(35.0)
    a_max: float = 3.0
    brake_decel: float = 6.0
    seed: int | None = None  # defaults to the scenario seed
    pid: PIDConfig = field(default_factory=PIDConfig)
    free_lookahead: float = 40.0
    free_station_step: float = 1.0
    comfort_decel: float = 2.5
    standoff: float = 2.0
    optimizer: OptimizerConfig = field(
        default_factory=lambda: OptimizerConfig(step_size=0.5, max_iters=20, refresh_collisions_every=5)
    )
    weights: LossWeights = field(default_factory=LossWeights)


@dataclass(frozen=True)
class StepTrace:
    time: float
    ego: EgoState
    control: Control
    planned: Trajectory
    chosen_lane: Slot | None
    collision_flags: dict[str, bool]


@dataclass(frozen=True)
class Metrics:
    """Simplified closed-loop metrics; not comparable with benchmark driving scores."""

    collisions: int
    lane_departure_fraction: float
    route_completion: float
    success: bool
    mean_speed: float


# --- controller and vehicle ----------------------------------------------


def pid_aim_point(path: Polyline, ego: EgoState, cfg: PIDConfig = PIDConfig()) -> Point2:
    """Path point a speed-dependent distance ahead of the ego's projection.

    Below ``speed_threshold`` the near aim distance is used, at or above it the
    far one. The result is clamped to the path end.
    """
    _, s, _ = project_point(path, ego.pose.position)
    look = cfg.near_aim if ego.speed < cfg.speed_threshold else cfg.far_aim
    p = path.point_at(s + look)
    return Point2(float(p[0]), float(p[1]))


def _pid(err, integral, prev, kp, ki, kd, dt, clamp):
    integral = min(max(integral + err * dt, -clamp), clamp)
    deriv = 0.0 if prev is None else (err - prev) / dt
    return kp * err + ki * integral + kd * deriv, integral


def pid_control(
    ego: EgoState,
    aim: Point2,
    target_speed: float,
    cfg: PIDConfig,
    state: ControllerState,
    dt: float = 0.05,
) -> Control:
    """One PID update. ``state`` is updated in place."""
    if target_speed < 0:
        raise ValueError("target_speed must be non-negative")
    p = ego.pose
    bearing = math.atan2(aim.y - p.position.y, aim.x - p.position.x)
    heading_err = normalize_angle(bearing - p.heading)
    u_lat, state.lat_integral = _pid(
        heading_err, state.lat_integral, state.lat_prev, cfg.lat_kp, cfg.lat_ki, cfg.lat_kd, dt, cfg.integral_clamp
    )
    state.lat_prev = heading_err
    # positive heading error = aim to the left = negative steer
    steer = float(np.clip(-u_lat, -1.0, 1.0))

    speed_err = target_speed - ego.speed
    u_lon, state.lon_integral = _pid(
        speed_err, state.lon_integral, state.lon_prev, cfg.lon_kp, cfg.lon_ki, cfg.lon_kd, dt, cfg.integral_clamp
    )
    state.lon_prev = speed_err
    throttle = float(np.clip(u_lon, 0.0, 1.0))
    brake = float(np.clip(-u_lon, 0.0, 1.0))
    return Control(steer, throttle, brake)


def step_ego(
    ego: EgoState,
    control: Control,
    dt: float = 0.05,
    *,
    max_steer_angle: float = math.radians(35.0),
    a_max: float = 3.0,
    brake_decel: float = 6.0,
) -> EgoState:
    """Explicit-Euler kinematic bicycle step; speed is clamped at zero."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    p = ego.pose
    v = ego.speed
    yaw_rate = -v * math.tan(control.steer * max_steer_angle) / ego.wheelbase
    x = p.position.x + v * math.cos(p.heading) * dt
    y = p.position.y + v * math.sin(p.heading) * dt
    accel = control.throttle * a_max - control.brake * brake_decel
    v_new = max(0.0, v + accel * dt)
    return replace(ego, pose=Pose2(Point2(x, y), p.heading + yaw_rate * dt), speed=v_new)


# --- world ---------------------------------------------------------------


class _AgentReplay:
    """Scripted motion of one agent (its top-score mode) with per-step headings."""

    def __init__(self, agent: AgentTrack):
        self.agent = agent
        self.traj = agent.top_mode().trajectory
        self.headings = headings_from_offsets(self.traj, agent.initial_pose.heading)

    def box_at(self, t: float) -> OrientedBox:
        p = self.traj.sample(t)
        k = int(min(max(math.floor((t - self.traj.t0) / self.traj.dt), 0), len(self.traj) - 1))
        return OrientedBox(Point2(float(p[0]), float(p[1])), self.agent.width / 2, self.agent.length / 2, self.headings[k])

    def pose_at(self, t: float) -> Pose2:
        b = self.box_at(t)
        return Pose2(b.center, b.heading)


@dataclass(frozen=True)
class WorldSnapshot:
    time: float
    ego: EgoState
    scenario: ScenarioSpec

    def predicted_agents(self, n: int, include_now: bool = False) -> list[AgentTrack]:
        """Agents with every mode cut to the window starting one plan step ahead."""
        dt = self.scenario.meta.dt_plan
        start = self.time if include_now else self.time + dt
        out = []
        for a in self.scenario.agents:
            rep = _AgentReplay(a)
            modes = tuple(AgentMode(m.score, m.trajectory.resample(start, dt, n)) for m in a.modes)
            out.append(AgentTrack(a.id, a.width, a.length, rep.pose_at(self.time), a.speed, modes))
        return out


def _route_polyline(scenario: ScenarioSpec) -> Polyline:
    return concat_polylines(scenario.lane(r).centerline for r in scenario.ego.route)


def _corridor(scenario: ScenarioSpec, lane_id: str) -> Polyline:
    """The lane plus whatever follows it: the rest of the route, else first successors."""
    route = scenario.ego.route
    if lane_id in route:
        ids = list(route[route.index(lane_id):])
    else:
        ids, seen = [lane_id], {lane_id}
        while True:
            succ = scenario.lane(ids[-1]).successors
            if not succ or succ[0] in seen:
                break
            ids.append(succ[0])
            seen.add(succ[0])
    return concat_polylines(scenario.lane(i).centerline for i in ids)


def _relevant_for_route(scenario: ScenarioSpec, ego: Pose2) -> RelevantLaneSet:
    """Lane filter, with the current slot pinned to a route lane when one qualifies."""
    W = scenario.lane_width
    relevant = filter_relevant_lanes(scenario.lanes, ego, W)
    route_cands = []
    for rid in scenario.ego.route:
        single = filter_relevant_lanes([scenario.lane(rid)], ego, W)
        if single.current is not None:
            route_cands.append(single.current)
    if route_cands and (relevant.current is None or relevant.current.lane_id not in scenario.ego.route):
        best = min(route_cands, key=lambda c: (c.d, c.lane_id))
        relevant = replace(relevant, current=best)
    return relevant


def _free_distance(corridor: Polyline, ego: EgoState, agent_boxes: Sequence[OrientedBox], cfg: SimConfig) -> float:
    """Arc length ahead along the corridor before an ego-sized box touches an agent box."""
    _, s0, _ = project_point(corridor, ego.pose.position)
    w, l = ego.dims
    reach = math.hypot(w, l) / 2 + max((math.hypot(b.half_width, b.half_length) for b in agent_boxes), default=0.0)
    n = int(cfg.free_lookahead / cfg.free_station_step)
    for k in range(n + 1):
        ds = k * cfg.free_station_step
        p = corridor.point_at(s0 + ds)
        if s0 + ds > corridor.length:
            break
        box = None
        for b in agent_boxes:
            if math.hypot(b.center.x - p[0], b.center.y - p[1]) > reach:
                continue
            if box is None:
                box = OrientedBox(Point2(float(p[0]), float(p[1])), w / 2, l / 2, corridor.heading_at(s0 + ds))
            if sat_overlap(box, b):
                return ds
    return cfg.free_lookahead


def _centerline_trajectory(corridor: Polyline, ego: EgoState, speed: float, dt: float, n: int, t0: float) -> Trajectory:
    _, s0, _ = project_point(corridor, ego.pose.position)
    pts = np.array([corridor.point_at(s0 + speed * dt * (k + 1), extrapolate=True) for k in range(n)])
    return Trajectory(pts, dt, t0 + dt)


def plan(
    snapshot: WorldSnapshot,
    kind: PlannerKind,
    horizon: float | None = None,
    dt_plan: float | None = None,
    *,
    rng: np.random.Generator | None = None,
    cfg: SimConfig = SimConfig(),
) -> tuple[Trajectory, Slot | None]:
    """Plan the next ``horizon`` seconds at ``dt_plan`` spacing.

    ``centerline`` scores every relevant lane by its free distance ahead
    (time-agnostic SAT against all predicted agent boxes) and follows the best
    one at a speed that can stop before the obstruction; ties prefer current,
    then left, then right. ``pgs`` refines that trajectory with the
    spatial/collision optimizer. ``replay`` returns the expert trajectory with
    optional seeded lateral noise.
    """
    sc = snapshot.scenario
    dt = dt_plan if dt_plan is not None else sc.meta.dt_plan
    horizon = horizon if horizon is not None else sc.horizon
    n = max(1, int(round(horizon / dt)))
    now = snapshot.time

    if kind.name == "replay":
        traj = sc.ego.expert_trajectory.resample(now + dt, dt, n, extrapolate=True)
        if kind.noise_sigma > 0:
            rng = rng if rng is not None else np.random.default_rng(sc.meta.seed)
            heads = headings_from_offsets(traj, snapshot.ego.pose.heading)
            normals = np.array([[-math.sin(h), math.cos(h)] for h in heads])
            traj = traj.with_points(traj.points + rng.normal(0.0, kind.noise_sigma, size=(n, 1)) * normals)
        return traj, None

    relevant = _relevant_for_route(sc, snapshot.ego.pose)
    if not relevant:
        raise NoCandidates("no relevant lanes around the ego")
    predicted = snapshot.predicted_agents(n + 1, include_now=True)
    agent_boxes = []
    for a in predicted:
        for m in a.modes:
            heads = headings_from_offsets(m.trajectory, a.initial_pose.heading)
            agent_boxes.extend(
                OrientedBox(Point2(float(p[0]), float(p[1])), a.width / 2, a.length / 2, h)
                for p, h in zip(m.trajectory.points, heads)
            )
    best: tuple[float, Slot, Polyline] | None = None
    for slot in (Slot.CURRENT, Slot.LEFT, Slot.RIGHT):
        cand = relevant.get(slot)
        if cand is None:
            continue
        corridor = _corridor(sc, cand.lane_id)
        free = _free_distance(corridor, snapshot.ego, agent_boxes, cfg)
        if best is None or free > best[0]:
            best = (free, slot, corridor)
    free, slot, corridor = best
    cruise = sc.ego.speed
    speed = min(cruise, math.sqrt(2.0 * cfg.comfort_decel * max(free - cfg.standoff, 0.0)))
    traj = _centerline_trajectory(corridor, snapshot.ego, speed, dt, n, now)

    if kind.name == "pgs":
        agents_now = snapshot.predicted_agents(n)
        result = optimize_trajectory(
            traj,
            corridor,
            traj,
            agents_now,
            cfg.weights,
            cfg.optimizer,
            sc.thresholds.w_snap,
            sc.thresholds.beta,
            ego_width=snapshot.ego.dims[0],
            ego_length=snapshot.ego.dims[1],
            fallback_heading=snapshot.ego.pose.heading,
        )
        traj = result.trajectory
    return traj, slot


def _tracking_path(ego: EgoState, planned: Trajectory) -> tuple[Polyline, float]:
    """Polyline from the ego through the plan, and the plan's implied speed."""
    pts = [ego.pose.xy]
    for p in planned.points:
        if np.hypot(*(p - pts[-1])) > 1e-6:
            pts.append(p)
    if len(planned) >= 2:
        speed = float(np.hypot(*(planned.points[-1] - planned.points[0]))) / (planned.dt * (len(planned) - 1))
    else:
        speed = float(np.hypot(*(planned.points[0] - ego.pose.xy))) / planned.dt
    if len(pts) < 2:
        h = ego.pose.heading
        pts.append(pts[0] + 1e-3 * np.array([math.cos(h), math.sin(h)]))
    return Polyline(np.array(pts)), speed


def run(
    scenario: ScenarioSpec,
    kind: PlannerKind,
    cfg: SimConfig = SimConfig(),
) -> tuple[Metrics, list[StepTrace]]:
    """Closed loop: replan every ``dt_plan``, control and integrate every ``cfg.dt``.

    Stops at the route end, on the first collision, or at the timeout.
    Deterministic for a given (scenario, kind, seed).
    """
    seed = scenario.meta.seed if cfg.seed is None else cfg.seed
    rng = np.random.default_rng(seed)
    dt = cfg.dt
    replan_every = max(1, int(round(scenario.meta.dt_plan / dt)))
    max_time = cfg.max_time if cfg.max_time is not None else scenario.ego.expert_trajectory.t_end + 10.0
    route = _route_polyline(scenario)
    centerlines = [lane.centerline for lane in scenario.lanes]
    W = scenario.lane_width
    replays = [_AgentReplay(a) for a in scenario.agents]

    ego = EgoState(scenario.ego.pose, scenario.ego.speed, scenario.ego.dims)
    state = ControllerState()
    traces: list[StepTrace] = []
    progress = 0.0
    departures = 0
    collisions = 0
    speeds = []
    planned, chosen, path, target_speed = None, None, None, 0.0
    n_steps = int(math.ceil(max_time / dt))

    for k in range(n_steps + 1):
        t = k * dt
        if k % replan_every == 0:
            planned, chosen = plan(WorldSnapshot(t, ego, scenario), kind, rng=rng, cfg=cfg)
            path, target_speed = _tracking_path(ego, planned)
        aim = pid_aim_point(path, ego, cfg.pid)
        control = pid_control(ego, aim, target_speed, cfg.pid, state, dt)

        ego_box = ego.box()
        flags = {r.agent.id: sat_overlap(ego_box, r.box_at(t)) for r in replays}
        _, s, _ = project_point(route, ego.pose.position)
        progress = max(progress, s)
        nearest = min(project_point(c, ego.pose.position)[2] for c in centerlines)
        departures += nearest > 0.5 * W
        speeds.append(ego.speed)
        traces.append(StepTrace(t, ego, control, planned, chosen, flags))

        if any(flags.values()):
            collisions = sum(flags.values())
            break
        if progress >= route.length - cfg.route_end_tolerance:
            break
        ego = step_ego(ego, control, dt, max_steer_angle=cfg.max_steer_angle, a_max=cfg.a_max, brake_decel=cfg.brake_decel)

    completion = min(1.0, progress / route.length)
    if progress >= route.length - cfg.route_end_tolerance:
        completion = 1.0
    metrics = Metrics(
        collisions=collisions,
        lane_departure_fraction=departures / len(traces),
        route_completion=completion,
        success=completion >= 0.95 and collisions == 0,
        mean_speed=float(np.mean(speeds)),
    )
    return metrics, traces
