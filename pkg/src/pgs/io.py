"""JSON file formats: scenarios, trajectories, result envelopes and line-delimited traces.

Conventions: UTF-8 JSON, meters and radians, global frame (+x east, +y north,
counter-clockwise headings). Points are ``[x, y]`` pairs. Result files wrap
their payload in an envelope carrying the tool version and the SHA-256 of the
canonical scenario JSON.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from . import __version__
from .errors import ParseError, ValidationError
from .geometry import Point2, Polyline, Pose2, Trajectory
from .lanes import Lane, TargetLaneLabel
from .losses import LossBreakdown
from .ntps import AgentMode, AgentTrack, CollisionSet
from .scenario import EgoSpec, ScenarioMeta, ScenarioSpec, Thresholds, densify_lanes, validate
from .stps import SpatialTarget

SCENARIO_FORMAT = "pgs-scenario"
SCENARIO_FORMAT_VERSION = 1


@dataclass(frozen=True)
class SupervisionRecord:
    target_lane: TargetLaneLabel
    spatial_target: SpatialTarget
    collision_set: CollisionSet
    losses: LossBreakdown
    scenario_hash: str


# --- encoding ------------------------------------------------------------


def to_jsonable(obj: Any) -> Any:
    """Convert library values into plain JSON types."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            raise ValueError("cannot serialize a non-finite number")
        return v
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, Point2):
        return [obj.x, obj.y]
    if isinstance(obj, Polyline):
        return obj.points.tolist()
    if isinstance(obj, Trajectory):
        return {"points": obj.points.tolist(), "dt": obj.dt, "t0": obj.t0}
    if isinstance(obj, ScenarioSpec):
        return scenario_to_dict(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if dataclasses.is_dataclass(obj):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(data: Any) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(to_jsonable(data), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _pose(p: Pose2) -> dict:
    return {"position": [p.position.x, p.position.y], "heading": p.heading}


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    m, e, t = spec.meta, spec.ego, spec.thresholds
    return {
        "format": SCENARIO_FORMAT,
        "format_version": SCENARIO_FORMAT_VERSION,
        "meta": to_jsonable(m),
        "lanes": [
            {"id": l.id, "centerline": l.centerline.points.tolist(), "width": l.width, "successors": list(l.successors)}
            for l in spec.lanes
        ],
        "ego": {
            "pose": _pose(e.pose),
            "dims": list(e.dims),
            "speed": e.speed,
            "expert_trajectory": to_jsonable(e.expert_trajectory),
            "command": e.command,
            "route": list(e.route),
        },
        "agents": [
            {
                "id": a.id,
                "width": a.width,
                "length": a.length,
                "initial_pose": _pose(a.initial_pose),
                "speed": a.speed,
                "modes": [{"score": m_.score, "trajectory": to_jsonable(m_.trajectory)} for m_ in a.modes],
            }
            for a in spec.agents
        ],
        "thresholds": to_jsonable(t),
    }


def scenario_hash(spec: ScenarioSpec) -> str:
    return hashlib.sha256(dumps(scenario_to_dict(spec)).encode("utf-8")).hexdigest()


def envelope(kind: str, payload: Any, scenario: ScenarioSpec | None = None) -> dict:
    return {
        "kind": kind,
        "tool_version": __version__,
        "scenario_hash": scenario_hash(scenario) if scenario is not None else None,
        "payload": to_jsonable(payload),
    }


def save(record: Any, path, *, kind: str | None = None, scenario: ScenarioSpec | None = None) -> None:
    """Write a record as canonical JSON.

    Scenarios and trajectories are written bare; anything else is wrapped in
    an envelope (``kind`` defaults to the record's class name).
    """
    if isinstance(record, (ScenarioSpec, Trajectory)) and kind is None:
        data = record
    else:
        data = envelope(kind or type(record).__name__, record, scenario)
    Path(path).write_text(dumps(data), encoding="utf-8")


# --- decoding ------------------------------------------------------------


def _get(obj: dict, key: str, path: str, default=..., types=None):
    if not isinstance(obj, dict):
        raise ParseError("expected an object", path)
    if key not in obj:
        if default is ...:
            raise ParseError("missing required field", f"{path}.{key}" if path else key)
        return default
    v = obj[key]
    p = f"{path}.{key}" if path else key
    if types is not None and v is not None and not isinstance(v, types):
        raise ParseError(f"expected {_type_name(types)}, got {type(v).__name__}", p)
    return v


def _type_name(types) -> str:
    if isinstance(types, tuple):
        return " or ".join(t.__name__ for t in types)
    return types.__name__


def _num(obj: dict, key: str, path: str, default=...) -> float:
    v = _get(obj, key, path, default)
    p = f"{path}.{key}" if path else key
    if v is None and default is None:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"expected a number, got {v!r}", p)
    return float(v)


def _points(v, path: str) -> np.ndarray:
    if not isinstance(v, list):
        raise ParseError("expected a list of [x, y] pairs", path)
    for i, p in enumerate(v):
        if (
            not isinstance(p, list)
            or len(p) != 2
            or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in p)
        ):
            raise ParseError(f"expected an [x, y] number pair, got {p!r}", f"{path}[{i}]")
    return np.array(v, dtype=float).reshape(-1, 2)


def _construct(path: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, (ParseError, ValidationError)):
            raise
        raise ValidationError(f"{path}: {exc}") from exc


def _pose_from(obj, path: str) -> Pose2:
    pos = _points([_get(obj, "position", path, types=list)], f"{path}.position")[0]
    return _construct(path, Pose2.from_xyh, pos[0], pos[1], _num(obj, "heading", path))


def trajectory_from_dict(obj, path: str = "") -> Trajectory:
    pts = _points(_get(obj, "points", path), f"{path}.points" if path else "points")
    return _construct(path or "trajectory", Trajectory, pts, _num(obj, "dt", path), _num(obj, "t0", path, 0.0))


def scenario_from_dict(obj) -> ScenarioSpec:
    if not isinstance(obj, dict):
        raise ParseError("scenario must be a JSON object")
    fmt = obj.get("format", SCENARIO_FORMAT)
    if fmt != SCENARIO_FORMAT:
        raise ParseError(f"unexpected format {fmt!r}", "format")
    m = _get(obj, "meta", "", types=dict)
    meta = ScenarioMeta(
        dt_plan=_num(m, "dt_plan", "meta"),
        horizon_steps=int(_get(m, "horizon_steps", "meta", types=int)),
        default_lane_width=_num(m, "default_lane_width", "meta", 3.5),
        seed=int(_get(m, "seed", "meta", 0, types=int)),
        densify_spacing=_num(m, "densify_spacing", "meta", None),
        name=str(_get(m, "name", "meta", "", types=str)),
    )
    lanes = []
    for i, lo in enumerate(_get(obj, "lanes", "", types=list)):
        p = f"lanes[{i}]"
        pts = _points(_get(lo, "centerline", p), f"{p}.centerline")
        poly = _construct(f"{p}.centerline", Polyline, pts)
        succ = _get(lo, "successors", p, [], types=list)
        lanes.append(
            _construct(p, Lane, str(_get(lo, "id", p, types=str)), poly, _num(lo, "width", p, meta.default_lane_width), tuple(succ))
        )
    e = _get(obj, "ego", "", types=dict)
    dims = _get(e, "dims", "ego", [2.0, 4.6], types=list)
    if len(dims) != 2 or any(isinstance(d, bool) or not isinstance(d, (int, float)) for d in dims):
        raise ParseError("expected [width, length]", "ego.dims")
    ego = _construct(
        "ego",
        EgoSpec,
        pose=_pose_from(_get(e, "pose", "ego", types=dict), "ego.pose"),
        speed=_num(e, "speed", "ego"),
        expert_trajectory=trajectory_from_dict(_get(e, "expert_trajectory", "ego", types=dict), "ego.expert_trajectory"),
        route=tuple(str(r) for r in _get(e, "route", "ego", types=list)),
        dims=tuple(float(d) for d in dims),
        command=str(_get(e, "command", "ego", "lane_follow", types=str)),
    )
    agents = []
    for i, ao in enumerate(_get(obj, "agents", "", [], types=list)):
        p = f"agents[{i}]"
        modes = []
        for k, mo in enumerate(_get(ao, "modes", p, types=list)):
            mp = f"{p}.modes[{k}]"
            traj = trajectory_from_dict(_get(mo, "trajectory", mp, types=dict), f"{mp}.trajectory")
            modes.append(_construct(mp, AgentMode, _num(mo, "score", mp), traj))
        agents.append(
            _construct(
                p,
                AgentTrack,
                str(_get(ao, "id", p, types=str)),
                _num(ao, "width", p),
                _num(ao, "length", p),
                _pose_from(_get(ao, "initial_pose", p, types=dict), f"{p}.initial_pose"),
                _num(ao, "speed", p, 0.0),
                tuple(modes),
            )
        )
    t = _get(obj, "thresholds", "", {}, types=dict)
    thresholds = Thresholds(
        w_snap=_num(t, "w_snap", "thresholds", 2.0),
        beta=_num(t, "beta", "thresholds", 3.0),
        lane_width=_num(t, "lane_width", "thresholds", None),
    )
    spec = ScenarioSpec(meta, tuple(lanes), ego, tuple(agents), thresholds)
    return validate(densify_lanes(validate(spec)))


def _read_json(path):
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc


def load_scenario(path) -> ScenarioSpec:
    """Read, validate and densify a scenario file."""
    return scenario_from_dict(_read_json(path))


def load_trajectory(path) -> Trajectory:
    """Read a trajectory file, or pull the trajectory out of a result envelope."""
    obj = _read_json(path)
    if isinstance(obj, dict) and "payload" in obj:
        payload = obj["payload"]
        for key, sub in (("trajectory", None), ("target", None), ("spatial_target", "target")):
            if isinstance(payload, dict) and key in payload:
                inner = payload[key]
                if sub is not None:
                    inner = inner[sub]
                return trajectory_from_dict(inner, f"payload.{key}")
        raise ParseError("envelope holds no trajectory", "payload")
    return trajectory_from_dict(obj)


def load_json(path) -> Any:
    return _read_json(path)


# --- traces --------------------------------------------------------------


def trace_lines(traces: Iterable, scenario: ScenarioSpec | None = None) -> Iterable[str]:
    """Line-delimited trace: a header record, then one record per simulation step."""
    header = {
        "record": "header",
        "tool_version": __version__,
        "scenario_hash": scenario_hash(scenario) if scenario is not None else None,
    }
    yield json.dumps(header, sort_keys=True, allow_nan=False)
    for st in traces:
        row = to_jsonable(st)
        row["record"] = "step"
        yield json.dumps(row, sort_keys=True, allow_nan=False)


def save_trace(traces, path, scenario: ScenarioSpec | None = None) -> None:
    Path(path).write_text("\n".join(trace_lines(traces, scenario)) + "\n", encoding="utf-8")


def load_trace(path) -> tuple[dict, list[dict]]:
    header, rows = {}, []
    for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=i) from exc
        if rec.get("record") == "header":
            header = rec
        else:
            rows.append(rec)
    return header, rows
