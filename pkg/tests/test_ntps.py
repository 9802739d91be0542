import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pgs.errors import DegenerateDistance, HorizonMismatch
from pgs.geometry import Point2, Pose2, Trajectory, headings_from_offsets
from pgs.losses import finite_diff_check
from pgs.ntps import (
    AgentMode,
    AgentTrack,
    CollisionEvent,
    CollisionSet,
    build_future_boxes,
    detect_collisions,
    ntps_gradient,
    ntps_loss,
    rebind_collisions,
    select_agent_trajectories,
)
from tests import oracles as orc


def agent(aid, pts, dt=0.5, w=2.0, l=4.6, heading=0.0, modes=None):
    pts = np.asarray(pts, dtype=float)
    modes = modes or ((1.0, Trajectory(pts, dt)),)
    return AgentTrack(aid, w, l, Pose2.from_xyh(pts[0, 0], pts[0, 1], heading), 0.0, modes)


def straight_x(x0, step, n, y=0.0):
    return np.column_stack([x0 + step * np.arange(n), np.full(n, y)])


def ego_setup(pts, dt=0.5):
    traj = Trajectory(pts, dt)
    return traj, build_future_boxes(traj, 2.0, 4.6, 0.0)


# --- boxes --------------------------------------------------------------------


def test_boxes_straight_axis_aligned():
    traj = Trajectory(straight_x(0, 2.0, 5), 0.5)
    seq = build_future_boxes(traj, 2.0, 4.0, 1.0)
    assert len(seq) == 5
    for b, p in zip(seq.boxes, traj.points):
        assert b.heading == 0.0 and (b.half_width, b.half_length) == (1.0, 2.0)
        assert (b.center.x, b.center.y) == tuple(p)


def test_boxes_stationary_use_fallback():
    seq = build_future_boxes(Trajectory(np.tile([3.0, 1.0], (4, 1)), 0.5), 2.0, 4.6, 0.8)
    assert all(b.heading == pytest.approx(0.8) for b in seq.boxes)


def test_boxes_circle_headings_from_independent_offsets():
    a = np.arange(8) * 0.15
    pts = np.column_stack([10 * np.cos(a), 10 * np.sin(a)])
    seq = build_future_boxes(Trajectory(pts, 0.5), 2.0, 4.6, 0.0)
    d = np.diff(pts, axis=0)
    expected = list(np.arctan2(d[:, 1], d[:, 0])) + [math.atan2(d[-1, 1], d[-1, 0])]
    assert np.allclose([b.heading for b in seq.boxes], expected, atol=1e-12)


def test_boxes_reject_bad_dims():
    with pytest.raises(ValueError):
        build_future_boxes(Trajectory([[0.0, 0.0]], 0.5), 0.0, 4.6, 0.0)


# --- agents ---------------------------------------------------------------------


def test_agent_track_validation():
    with pytest.raises(ValueError):
        agent("a", straight_x(0, 1, 3), w=0.0)
    t1, t2 = Trajectory(straight_x(0, 1, 3), 0.5), Trajectory(straight_x(0, 1, 4), 0.5)
    with pytest.raises(ValueError):
        agent("a", straight_x(0, 1, 3), modes=((0.5, t1), (0.5, t2)))
    with pytest.raises(ValueError):
        AgentMode(float("nan"), t1)


def test_mode_selection():
    fast = Trajectory(straight_x(0, 2, 4), 0.5)
    slow = Trajectory(straight_x(0, 1, 4), 0.5)
    still = Trajectory(straight_x(0, 0, 4), 0.5)
    a = agent("a", fast.points, modes=((0.25, slow), (0.6, fast), (0.15, still)))
    assert select_agent_trajectories([a])[0][1] == fast
    picked = [t for _, t in select_agent_trajectories([a], "threshold", 0.2)]
    assert picked == [slow, fast]
    only_top = [t for _, t in select_agent_trajectories([a], "threshold", 0.9)]
    assert only_top == [fast]
    with pytest.raises(ValueError):
        select_agent_trajectories([a], "bogus")


def test_top_mode_tie_takes_first():
    t1 = Trajectory(straight_x(0, 1, 3), 0.5)
    t2 = Trajectory(straight_x(5, 1, 3), 0.5)
    assert agent("a", t1.points, modes=((0.5, t1), (0.5, t2))).top_mode().trajectory == t1


# --- detection ------------------------------------------------------------------


def test_far_agents_no_events():
    ego, boxes = ego_setup(straight_x(0, 2, 6))
    far = agent("far", straight_x(0, 2, 6, y=30.0))
    assert len(detect_collisions(boxes, ego, select_agent_trajectories([far]))) == 0


def _sampled_steps(ego_boxes, agent_pts):
    a_traj = Trajectory(agent_pts, 0.5)
    a_boxes = build_future_boxes(a_traj, 2.0, 4.6, math.pi)
    return [
        t
        for t, (e, a) in enumerate(zip(ego_boxes.boxes, a_boxes.boxes))
        if orc.sampled_overlap(e.corners(), a.corners(), n=40)
    ]


def test_head_on_overlap_steps():
    ego, boxes = ego_setup(straight_x(0, 2, 8))
    pts = straight_x(14, -2, 8, y=0.5)
    oncoming = agent("oncoming", pts, heading=math.pi)
    cs = detect_collisions(boxes, ego, select_agent_trajectories([oncoming]), beta=3.0)
    assert cs.timesteps == [3, 4] == _sampled_steps(boxes, pts)
    for ev in cs.events:
        assert ev.center_distance == pytest.approx(math.hypot(2.0, 0.5))
        assert (ev.ego_point.x, ev.ego_point.y) == tuple(ego.points[ev.t])


def test_two_agents_same_step():
    ego, boxes = ego_setup(straight_x(0, 2, 4))
    a = agent("b", straight_x(4, 2, 4, y=1.0))
    b = agent("a", straight_x(4, 2, 4, y=-1.0))
    cs = detect_collisions(boxes, ego, select_agent_trajectories([a, b]))
    assert [(e.t, e.agent_id) for e in cs.events][:2] == [(0, "a"), (0, "b")]
    assert len(cs) == 8


def test_duplicate_mode_events_keep_closest():
    ego, boxes = ego_setup(straight_x(0, 2, 3))
    near = Trajectory(straight_x(1, 2, 3), 0.5)
    farther = Trajectory(straight_x(3, 2, 3), 0.5)
    a = agent("a", near.points, modes=((0.5, farther), (0.5, near)))
    cs = detect_collisions(boxes, ego, select_agent_trajectories([a], "threshold", 0.3))
    assert len(cs) == 3
    assert all(e.center_distance == pytest.approx(1.0) for e in cs.events)


def test_horizon_mismatch():
    ego, boxes = ego_setup(straight_x(0, 2, 4))
    with pytest.raises(HorizonMismatch):
        detect_collisions(boxes, ego, select_agent_trajectories([agent("a", straight_x(0, 2, 5))]))
    with pytest.raises(HorizonMismatch):
        detect_collisions(boxes, ego, select_agent_trajectories([agent("a", straight_x(0, 2, 4), dt=0.25)]))


@st.composite
def crowded(draw):
    n = draw(st.integers(2, 6))
    ego = straight_x(0, draw(st.floats(0.5, 3.0)), n, y=draw(st.floats(-1, 1)))
    agents = []
    for k in range(draw(st.integers(1, 3))):
        x0, y0 = draw(st.floats(-5, 15)), draw(st.floats(-5, 5))
        vx, vy = draw(st.floats(-3, 3)), draw(st.floats(-1, 1))
        pts = np.column_stack([x0 + vx * np.arange(n), y0 + vy * np.arange(n)])
        agents.append(agent(f"a{k}", pts, heading=draw(st.floats(-3, 3))))
    return Trajectory(ego, 0.5), agents


@given(crowded(), st.floats(0.0, 1.5))
def test_detection_monotone_in_box_size(scene, grow):
    ego, agents = scene
    small = detect_collisions(build_future_boxes(ego, 2.0, 4.6, 0.0), ego, select_agent_trajectories(agents))
    big_agents = [AgentTrack(a.id, a.width + 2 * grow, a.length + 2 * grow, a.initial_pose, a.speed, a.modes) for a in agents]
    big_boxes = build_future_boxes(ego, 2.0 + 2 * grow, 4.6 + 2 * grow, 0.0)
    big = detect_collisions(big_boxes, ego, select_agent_trajectories(big_agents))
    assert {(e.t, e.agent_id) for e in small.events} <= {(e.t, e.agent_id) for e in big.events}


@given(crowded())
def test_collision_set_invariants(scene):
    ego, agents = scene
    cs = detect_collisions(build_future_boxes(ego, 2.0, 4.6, 0.0), ego, select_agent_trajectories(agents))
    keys = [(e.t, e.agent_id) for e in cs.events]
    assert keys == sorted(set(keys))
    for e in cs.events:
        assert e.center_distance == pytest.approx(math.hypot(e.ego_point.x - e.agent_point.x, e.ego_point.y - e.agent_point.y))


# --- loss and gradient ---------------------------------------------------------------


def event(t, ego, other):
    return CollisionEvent(t, "a", Point2(*ego), Point2(*other), math.hypot(ego[0] - other[0], ego[1] - other[1]))


def test_loss_direct_cases():
    assert ntps_loss(CollisionSet()) == 0.0
    assert ntps_loss(CollisionSet((event(0, (1, 0), (0, 0)),), 3.0)) == 2.0
    assert ntps_loss(CollisionSet((event(0, (3, 0), (0, 0)),), 3.0)) == 0.0
    with pytest.raises(ValueError):
        ntps_loss(CollisionSet((), 0.0))


def test_gradient_single_event():
    traj = Trajectory([[0.0, 5.0], [1.0, 0.0]], 0.5)
    cs = CollisionSet((event(1, (1, 0), (0, 0)),), 3.0)
    g = ntps_gradient(traj, cs)
    assert np.array_equal(g, [[0.0, 0.0], [-1.0, 0.0]])
    moved = traj.with_points(traj.points - 0.1 * g)
    assert ntps_loss(rebind_collisions(cs, moved)) < ntps_loss(cs)


def test_gradient_zero_without_events_or_outside_margin():
    traj = Trajectory([[0.0, 0.0], [5.0, 0.0]], 0.5)
    assert not ntps_gradient(traj, CollisionSet()).any()
    assert not ntps_gradient(traj, CollisionSet((event(1, (5, 0), (0, 0)),), 3.0)).any()


def test_degenerate_distance():
    traj = Trajectory([[1.0, 1.0]], 0.5)
    with pytest.raises(DegenerateDistance):
        ntps_gradient(traj, CollisionSet((event(0, (1, 1), (1, 1)),), 3.0))


def test_gradient_central_differences(rng):
    for _ in range(30):
        n = 5
        pts = rng.uniform(-5, 5, size=(n, 2))
        events = []
        for t in range(n):
            d = rng.uniform(0.2, 2.8)
            ang = rng.uniform(-math.pi, math.pi)
            other = pts[t] + d * np.array([math.cos(ang), math.sin(ang)])
            events.append(event(t, pts[t], other))
        cs = CollisionSet(tuple(events), 3.0)
        rep = finite_diff_check("ntps", (Trajectory(pts, 0.5), cs))
        assert rep.max_rel_error < 1e-5 and rep.skipped == 0
        num = orc.central_diff(lambda v: ntps_loss(rebind_collisions(cs, Trajectory(v, 0.5))), pts)
        assert np.allclose(num, ntps_gradient(Trajectory(pts, 0.5), cs), rtol=1e-5, atol=1e-8)


def test_unit_magnitude_per_active_event(rng):
    pts = rng.uniform(-5, 5, size=(4, 2))
    cs = CollisionSet(tuple(event(t, pts[t], pts[t] + [0.0, 1.0 + t * 0.3]) for t in range(4)), 3.0)
    assert np.allclose(np.hypot(*ntps_gradient(Trajectory(pts, 0.5), cs).T), 1.0, atol=1e-15)


@given(st.floats(0.05, 2.9), st.floats(0.0, 5.0), st.floats(-math.pi, math.pi))
def test_hinge_decrease_exact(d, delta, ang):
    u = np.array([math.cos(ang), math.sin(ang)])
    agent_p = np.array([1.0, -2.0])
    ego_p = agent_p + d * u
    cs = CollisionSet((event(0, ego_p, agent_p),), 3.0)
    moved = rebind_collisions(cs, Trajectory([ego_p + delta * u], 0.5))
    assert ntps_loss(cs) - ntps_loss(moved) == pytest.approx(min(delta, 3.0 - d), abs=1e-9)


@given(st.floats(-math.pi, math.pi), st.floats(-30, 30), st.floats(-30, 30))
def test_rigid_invariance(rot, tx, ty):
    rng = np.random.default_rng(3)
    pts = rng.uniform(-3, 3, size=(4, 2))
    others = pts + rng.uniform(-2, 2, size=(4, 2))
    ego = Trajectory(pts, 0.5)
    cs = CollisionSet(tuple(event(t, pts[t], others[t]) for t in range(4)), 3.0)
    ego2 = ego.transformed(rot, (tx, ty))
    others2 = Trajectory(others, 0.5).transformed(rot, (tx, ty)).points
    cs2 = CollisionSet(tuple(event(t, ego2.points[t], others2[t]) for t in range(4)), 3.0)
    assert ntps_loss(cs2) == pytest.approx(ntps_loss(cs), abs=1e-9)
    c, s = math.cos(rot), math.sin(rot)
    rotated = ntps_gradient(ego, cs) @ np.array([[c, -s], [s, c]]).T
    assert np.allclose(ntps_gradient(ego2, cs2), rotated, atol=1e-9)


def test_heading_helper_consistency():
    traj = Trajectory(straight_x(0, 1.0, 3), 0.5)
    assert [b.heading for b in build_future_boxes(traj, 1, 1, 0.3).boxes] == headings_from_offsets(traj, 0.3)
