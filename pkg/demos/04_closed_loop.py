"""Replaying the expert versus planning with the supervision losses.

Each overtake and merge scenario is driven three ways: replaying the expert
with lateral noise, following the free-est lane centerline, and the full
pipeline that also refines the plan with the spatial and collision losses.
"""

import json
from pathlib import Path

from pgs.io import save_trace, trace_lines
from pgs.plotting import plot_trace
from pgs.scenario import generate_synthetic
from pgs.simulate import CENTERLINE_FOLLOW, PGS_FULL, PlannerKind, SimConfig, run

out = Path(__file__).with_name("output")
out.mkdir(exist_ok=True)

planners = {"replay": PlannerKind.replay(0.3), "centerline": CENTERLINE_FOLLOW, "pgs": PGS_FULL}
print(f"{'scenario':12} {'planner':11} {'coll':>4} {'depart':>7} {'compl':>6} {'speed':>6}")
for kind in ("overtake", "merge"):
    for seed in range(3):
        sc = generate_synthetic(kind, seed)
        for name, planner in planners.items():
            m, traces = run(sc, planner, SimConfig(seed=seed))
            print(f"{kind + '-' + str(seed):12} {name:11} {m.collisions:4d} {m.lane_departure_fraction:7.3f} "
                  f"{m.route_completion:6.2f} {m.mean_speed:6.2f}")
            if seed == 0:
                path = out / f"{kind}_{name}.jsonl"
                save_trace(traces, path, sc)
                rows = [json.loads(line) for line in trace_lines(traces)][1:]
                plot_trace(rows, out / f"{kind}_{name}.svg", sc)
print(f"\ntraces and figures in {out}")
