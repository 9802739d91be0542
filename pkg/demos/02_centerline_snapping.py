"""Snapping a noisy expert onto the lane centerline.

The expert on the curve fixture sways around the lane center. Points within
w of the centerline are replaced by the nearest centerline vertex; the rest
are kept. Larger w snaps more points, and the spatial loss shrinks to zero
for a prediction that follows the target.
"""

from pathlib import Path

import numpy as np

from pgs import generate_spatial_target, stps_loss
from pgs.plotting import plot_scenario
from pgs.scenario import generate_synthetic
from pgs.supervision import snapshot

out = Path(__file__).with_name("output")
out.mkdir(exist_ok=True)

sc = generate_synthetic("curve", seed=1)
snap = snapshot(sc, t=4.0)
print(f"target lane at t = 4 s: {snap.label.slot.value}")
for w in (0.05, 0.1, 0.2, 2.0):
    target = generate_spatial_target(snap.gt, snap.target_centerline, w)
    moved = np.hypot(*(target.target.points - snap.gt.points).T)
    print(f"w = {w:4.2f} m: snapped {sum(target.snapped)}/{len(target.snapped)}, "
          f"largest move {moved.max():.3f} m, stps(expert) = {stps_loss(snap.gt, target):.4f}")

target = generate_spatial_target(snap.gt, snap.target_centerline, sc.thresholds.w_snap)
print(f"stps(target) = {stps_loss(target.target, target)}")
plot_scenario(sc, out / "curve_snapping.svg", target)
print(f"figure: {out / 'curve_snapping.svg'}")
