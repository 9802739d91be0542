import numpy as np
import pytest

from pgs.geometry import Pose2
from pgs.lanes import Slot, filter_relevant_lanes
from pgs.scenario import SYNTHETIC_KINDS, ScenarioMeta, densify_lanes, generate_synthetic
from pgs.simulate import PlannerKind, run
from pgs.supervision import build_supervision, expert_pose, snapshot


@pytest.mark.parametrize("kind", SYNTHETIC_KINDS)
def test_deterministic_per_seed(kind):
    assert generate_synthetic(kind, 7) == generate_synthetic(kind, 7)
    assert generate_synthetic(kind, 7) != generate_synthetic(kind, 8)


def test_unknown_kind():
    with pytest.raises(ValueError):
        generate_synthetic("roundabout", 0)


def test_straight3_geometry():
    sc = generate_synthetic("straight3", 0)
    ys = sorted(float(np.unique(l.centerline.points[:, 1])[0]) for l in sc.lanes)
    assert ys == [-3.5, 0.0, 3.5]
    for lane in sc.lanes:
        assert np.ptp(lane.centerline.points[:, 1]) == 0.0
        assert np.hypot(*np.diff(lane.centerline.points, axis=0).T).max() <= 0.5 + 1e-12


def test_overtake_has_stopped_vehicle_in_ego_lane():
    sc = generate_synthetic("overtake", 2)
    (park,) = sc.agents
    pts = park.top_mode().trajectory.points
    assert np.ptp(pts, axis=0).max() == 0.0
    rel = filter_relevant_lanes(sc.lanes, Pose2.from_xyh(pts[0, 0], pts[0, 1], 0.0), 3.5)
    assert rel.current.lane_id == "ego_lane"


def test_merge_agent_converges():
    sc = generate_synthetic("merge", 0)
    pts = sc.agents[0].top_mode().trajectory.points
    assert pts[0, 1] == pytest.approx(-3.5) and abs(pts[-1, 1]) < 1e-9
    assert len(sc.agents[0].modes) == 2


def test_expert_has_lateral_noise():
    sc = generate_synthetic("straight3", 0)
    ys = sc.ego.expert_trajectory.points[:, 1]
    assert 0.0 < np.abs(ys).max() < 0.5


def test_overtake_expert_replay_collides():
    m, _ = run(generate_synthetic("overtake", 5), PlannerKind.replay(0.0))
    assert m.collisions >= 1


def test_densify_off_keeps_raw_vertices():
    sc = generate_synthetic("straight3", 0)
    raw = type(sc)(ScenarioMeta(densify_spacing=None), sc.lanes, sc.ego, sc.agents, sc.thresholds)
    assert densify_lanes(raw) == raw


def test_snapshot_and_supervision():
    sc = generate_synthetic("straight3", 1)
    snap = snapshot(sc)
    assert snap.label.slot is Slot.CURRENT and len(snap.gt) == sc.meta.horizon_steps
    assert expert_pose(sc, 0.0) == sc.ego.pose
    rec = build_supervision(sc)
    assert rec.losses.mtps == 0.0 and rec.losses.ntps == 0.0 and all(rec.spatial_target.snapped)
    rec = build_supervision(sc, scores=[0.0, 0.0, 0.0])
    assert rec.losses.mtps == pytest.approx(np.log(3))


def test_supervision_sees_overtake_collision():
    sc = generate_synthetic("overtake", 0)
    park = sc.agents[0].top_mode().trajectory.points[0]
    # the expert reaches the parked car after roughly (px - 5) / v seconds
    t_hit = (park[0] - 5.0 - 12.0) / sc.ego.speed
    rec = build_supervision(sc, t=round(t_hit * 2) / 2)
    assert len(rec.collision_set) > 0 and rec.losses.ntps > 0
