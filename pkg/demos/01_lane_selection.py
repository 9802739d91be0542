"""Which lane is the expert heading for?

On a three-lane road the ego sees a current lane and one neighbour on each
side. A lane-change expert trajectory is labelled by comparing its last two
seconds against each candidate centerline, and the lane-selection loss is
evaluated for a few score vectors a planner might output.
"""

import numpy as np

from pgs import (
    Slot,
    Trajectory,
    class_weights_vector,
    filter_relevant_lanes,
    label_target_lane,
    mtps_loss,
)
from pgs.scenario import generate_synthetic

sc = generate_synthetic("straight3", seed=0)
ego = sc.ego.pose
relevant = filter_relevant_lanes(sc.lanes, ego, sc.lane_width)
for slot in Slot:
    c = relevant.get(slot)
    print(f"{slot.value:>7}: lane {c.lane_id!r:10} d = {c.d:5.2f} m  phi = {c.phi:+.2f}")

# the expert drifts from y = 0 to the left lane at y = 3.5 over 3 s
xs = ego.position.x + 4.0 * np.arange(1, 7)
change = Trajectory(np.column_stack([xs, np.linspace(0.0, 3.5, 6)]), dt=0.5)
keep = Trajectory(np.column_stack([xs, np.zeros(6)]), dt=0.5)
for name, traj in (("lane change", change), ("lane keep", keep)):
    label = label_target_lane(relevant, traj)
    print(f"{name:>11} -> {label.slot.value} (mean terminal distance {label.mean_terminal_distance:.2f} m)")

label = label_target_lane(relevant, change)
weights = class_weights_vector()
print("\nscores (left, current, right)   loss   weighted")
for scores in ([0.0, 0.0, 0.0], [2.0, 0.5, -1.0], [-1.0, 3.0, 0.0]):
    print(f"{str(scores):30} {mtps_loss(scores, label):6.3f} {mtps_loss(scores, label, weights):9.3f}")
# rare left/right labels are up-weighted, so a planner that always keeps its lane pays heavily
