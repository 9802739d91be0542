"""Pushing a planned trajectory out of a parked car.

A straight plan runs through a stopped vehicle. Alone, the collision hinge
pushes the plan until centers are beta apart; with the spatial term pulling
toward the neighbouring lane, descent settles on the left centerline.
"""

import numpy as np

from pgs import LossWeights, OptimizerConfig, Trajectory, optimize_trajectory
from pgs.scenario import generate_synthetic

sc = generate_synthetic("overtake", seed=0)
park = sc.agents[0]
px, py = park.modes[0].trajectory.points[0]
print(f"parked car at ({px:.1f}, {py:.2f})")

xs = px - 12.0 + 4.0 * np.arange(1, 7)
init = Trajectory(np.column_stack([xs, np.zeros(6)]), 0.5, 0.5)
gt = Trajectory(np.column_stack([xs, np.full(6, 3.5)]), 0.5, 0.5)
pairs = [(park, park.modes[0].trajectory.resample(0.5, 0.5, 6))]
left = sc.lane("left").centerline

for name, weights in (("hinge only", LossWeights(0.0, 0.0, 1.0)), ("hinge + spatial", LossWeights())):
    res = optimize_trajectory(init, left, gt, pairs, weights, OptimizerConfig(step_size=1.0))
    print(f"\n{name}: {res.iterations} iterations, loss {res.history[0]:.3f} -> {res.final.weighted_total:.3f}")
    for p in res.trajectory.points:
        print(f"  ({p[0]:6.2f}, {p[1]:5.2f})  center gap to car {np.hypot(p[0] - px, p[1] - py):5.2f} m")
