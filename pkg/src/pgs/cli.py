"""Command-line interface. Exit codes: 0 success, 1 invalid input, 2 runtime failure."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ParseError, ValidationError
from .geometry import Point2, Polyline, Trajectory
from .io import (
    dumps,
    envelope,
    load_json,
    load_scenario,
    load_trace,
    load_trajectory,
    save,
    save_trace,
    scenario_from_dict,
)
from .lanes import DEFAULT_CLASS_WEIGHTS, Slot, class_weights_vector
from .losses import LossWeights, OptimizerConfig, finite_diff_check, optimize_trajectory
from .ntps import CollisionEvent, CollisionSet, ntps_gradient, ntps_loss
from .scenario import SYNTHETIC_KINDS, generate_synthetic
from .simulate import PlannerKind, SimConfig, run
from .stps import generate_spatial_target
from .supervision import build_supervision, collisions_for, predicted_agents, snapshot

GRADCHECK_TOLERANCE = {"mtps": 1e-6, "stps": 1e-6, "ntps": 1e-5}


def _floats(text: str, n: int, name: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"{name}: expected {n} comma-separated numbers")
    if len(vals) != n:
        raise argparse.ArgumentTypeError(f"{name}: expected {n} comma-separated numbers")
    return vals


def _write(path, data) -> None:
    text = dumps(data)
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _candidates(relevant) -> dict:
    return {
        s.value: (None if c is None else {"lane_id": c.lane_id, "d": c.d, "phi": c.phi})
        for s in Slot
        for c in [relevant.get(s)]
    }


def cmd_labels(args) -> None:
    sc = load_scenario(args.scenario)
    snap = snapshot(sc, args.t)
    payload = {"time": args.t, "relevant_lanes": _candidates(snap.relevant), "target_lane": snap.label}
    _write(args.out, envelope("labels", payload, sc))


def cmd_snap(args) -> None:
    sc = load_scenario(args.scenario)
    snap = snapshot(sc, args.t)
    w = args.w if args.w is not None else sc.thresholds.w_snap
    target = generate_spatial_target(snap.gt, snap.target_centerline, w)
    payload = {"time": args.t, "target_lane": snap.label, "expert": snap.gt, "spatial_target": target}
    _write(args.out, envelope("snap", payload, sc))


def cmd_ntps(args) -> None:
    sc = load_scenario(args.scenario)
    pred = load_trajectory(args.pred)
    cs = collisions_for(sc, pred, args.beta)
    payload = {"collision_set": cs, "loss": ntps_loss(cs), "gradient": ntps_gradient(pred, cs)}
    _write(args.out, envelope("ntps", payload, sc))


def cmd_loss(args) -> None:
    sc = load_scenario(args.scenario)
    pred = load_trajectory(args.pred)
    weights = LossWeights(*args.weights)
    class_weights = class_weights_vector(DEFAULT_CLASS_WEIGHTS) if args.class_weights else None
    rec = build_supervision(sc, pred, t=args.t, scores=args.scores, class_weights=class_weights, weights=weights)
    _write(args.out, envelope("loss", {"losses": rec.losses, "weights": weights}, sc))


def cmd_optimize(args) -> None:
    sc = load_scenario(args.scenario)
    snap = snapshot(sc, args.t)
    init = load_trajectory(args.init) if args.init else snap.gt
    cfg = OptimizerConfig(step_size=args.step, max_iters=args.iters)
    result = optimize_trajectory(
        init,
        snap.target_centerline,
        snap.gt,
        predicted_agents(sc, init),
        LossWeights(*args.weights),
        cfg,
        sc.thresholds.w_snap,
        sc.thresholds.beta,
        ego_width=sc.ego.dims[0],
        ego_length=sc.ego.dims[1],
        fallback_heading=snap.ego.heading,
    )
    payload = {
        "target_lane": snap.label,
        "trajectory": result.trajectory,
        "final": result.final,
        "iterations": result.iterations,
        "history": result.history,
    }
    _write(args.out, envelope("optimize", payload, sc))


def cmd_simulate(args) -> None:
    sc = load_scenario(args.scenario)
    kind = PlannerKind(args.planner, args.noise)
    metrics, traces = run(sc, kind, SimConfig(seed=args.seed))
    _write(args.metrics, envelope("metrics", {"planner": kind, "metrics": metrics}, sc))
    if args.trace:
        save_trace(traces, args.trace, sc)


def gradcheck_fixtures():
    """Small built-in inputs for the three analytical gradients."""
    rng = np.random.default_rng(7)
    mtps = (rng.normal(size=3), Slot.LEFT, class_weights_vector())
    pts = np.column_stack([np.arange(6.0), np.zeros(6)])
    center = Polyline(np.column_stack([np.arange(-1.0, 8.0, 0.5), np.zeros(18)]))
    target = generate_spatial_target(Trajectory(pts + [0.0, 0.3], 0.5), center, 2.0)
    pred = Trajectory(pts + rng.uniform(-0.8, 0.8, size=(6, 2)), 0.5)
    ego = Trajectory(np.array([[0.0, 0.0], [1.0, 0.4], [2.0, 0.8]]), 0.5)
    events = (
        CollisionEvent(1, "a", Point2(1.0, 0.4), Point2(2.1, -0.3), float(np.hypot(1.1, 0.7))),
        CollisionEvent(2, "b", Point2(2.0, 0.8), Point2(1.5, 2.0), float(np.hypot(0.5, 1.2))),
    )
    return {"mtps": mtps, "stps": (pred, target), "ntps": (ego, CollisionSet(events, 3.0))}


def cmd_gradcheck(args) -> int:
    reports, ok = {}, True
    for kind, inputs in gradcheck_fixtures().items():
        rep = finite_diff_check(kind, inputs, args.h)
        passed = rep.max_rel_error < GRADCHECK_TOLERANCE[kind]
        ok &= passed
        reports[kind] = {"report": rep, "tolerance": GRADCHECK_TOLERANCE[kind], "passed": passed}
    _write(args.out, envelope("gradcheck", {"h": args.h, "checks": reports}))
    return 0 if ok else 2


def cmd_gen(args) -> None:
    save(generate_synthetic(args.kind, args.seed), args.out)


def cmd_plot(args) -> None:
    from .plotting import plot_scenario, plot_trace

    text = Path(args.input).read_text(encoding="utf-8")
    first = text.lstrip().split("\n", 1)[0]
    is_trace = first.startswith("{") and '"record"' in first
    if is_trace:
        _, rows = load_trace(args.input)
        sc = load_scenario(args.scenario) if args.scenario else None
        plot_trace(rows, args.out, sc)
    else:
        sc = scenario_from_dict(load_json(args.input))
        target = None
        try:
            snap = snapshot(sc)
            target = generate_spatial_target(snap.gt, snap.target_centerline, sc.thresholds.w_snap)
        except ValueError:
            pass
        plot_scenario(sc, args.out, target)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pgs", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def weights_arg(sp):
        sp.add_argument("--weights", type=lambda s: _floats(s, 3, "--weights"), default=(1.0, 0.3, 1.0),
                        help="w_mtps,w_stps,w_ntps (default 1.0,0.3,1.0)")

    sp = sub.add_parser("labels", help="relevant lanes and target-lane label")
    sp.add_argument("scenario")
    sp.add_argument("--t", type=float, default=0.0, help="snapshot time [s]")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_labels)

    sp = sub.add_parser("snap", help="centerline-aligned spatial target")
    sp.add_argument("scenario")
    sp.add_argument("--w", type=float, default=None, help="snap threshold [m]")
    sp.add_argument("--t", type=float, default=0.0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_snap)

    sp = sub.add_parser("ntps", help="collision set, hinge loss and gradient for a trajectory")
    sp.add_argument("scenario")
    sp.add_argument("--pred", required=True)
    sp.add_argument("--beta", type=float, default=None)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_ntps)

    sp = sub.add_parser("loss", help="weighted loss breakdown for a trajectory")
    sp.add_argument("scenario")
    sp.add_argument("--pred", required=True)
    weights_arg(sp)
    sp.add_argument("--scores", type=lambda s: _floats(s, 3, "--scores"), default=None,
                    help="lane scores left,current,right; the lane-selection term is skipped without them")
    sp.add_argument("--class-weights", action="store_true", help="apply inverse-frequency class weights")
    sp.add_argument("--t", type=float, default=0.0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_loss)

    sp = sub.add_parser("optimize", help="gradient-descent refinement of a trajectory")
    sp.add_argument("scenario")
    sp.add_argument("--init", default=None, help="initial trajectory (default: expert window)")
    sp.add_argument("--t", type=float, default=0.0)
    sp.add_argument("--step", type=float, default=OptimizerConfig.step_size)
    sp.add_argument("--iters", type=int, default=OptimizerConfig.max_iters)
    weights_arg(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("simulate", help="closed-loop run")
    sp.add_argument("scenario")
    sp.add_argument("--planner", choices=("replay", "centerline", "pgs"), required=True)
    sp.add_argument("--noise", type=float, default=0.0, help="replay lateral noise sigma [m]")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--metrics", required=True)
    sp.add_argument("--trace", default=None)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("gradcheck", help="finite-difference check of the analytical gradients")
    sp.add_argument("--h", type=float, default=1e-5)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_gradcheck)

    sp = sub.add_parser("gen", help="write a synthetic scenario")
    sp.add_argument("kind", choices=SYNTHETIC_KINDS)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("plot", help="SVG figure of a scenario or trace")
    sp.add_argument("input")
    sp.add_argument("--scenario", default=None, help="scenario to draw under a trace")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        rc = args.func(args)
    except (ParseError, ValidationError, FileNotFoundError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return rc or 0


if __name__ == "__main__":
    sys.exit(main())
