import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from pgs.geometry import (
    OrientedBox,
    Point2,
    Polyline,
    Pose2,
    Trajectory,
    concat_polylines,
    headings_from_offsets,
    nearest_point_discrete,
    nearest_vertices,
    normalize_angle,
    project_point,
    rigid_transform,
    sat_overlap,
    sat_overlap_polygons,
    signed_side,
)
from tests import oracles as orc

coord = st.floats(-50, 50, allow_nan=False)
angle = st.floats(-math.pi, math.pi, allow_nan=False)
extent = st.floats(0.2, 4.0)


@st.composite
def boxes(draw):
    return OrientedBox(Point2(draw(coord), draw(coord)), draw(extent), draw(extent), draw(angle))


@st.composite
def polylines(draw, n_min=2, n_max=12):
    n = draw(st.integers(n_min, n_max))
    start = np.array([draw(coord), draw(coord)])
    steps = np.array([[draw(st.floats(0.3, 5.0)), draw(st.floats(-3, 3))] for _ in range(n - 1)])
    return Polyline(np.vstack([start, start + np.cumsum(steps, axis=0)]))


# --- primitives -------------------------------------------------------------


def test_point_rejects_nonfinite():
    with pytest.raises(ValueError):
        Point2(float("nan"), 0.0)
    with pytest.raises(ValueError):
        Point2(0.0, float("inf"))


@pytest.mark.parametrize(
    "raw, expected", [(math.pi, math.pi), (-math.pi, math.pi), (3 * math.pi, math.pi), (-0.5, -0.5), (7.0, 7.0 - 2 * math.pi)]
)
def test_normalize_angle_half_open_range(raw, expected):
    assert normalize_angle(raw) == pytest.approx(expected, abs=1e-12)
    assert -math.pi < normalize_angle(raw) <= math.pi


def test_pose_heading_normalized():
    assert Pose2(Point2(0, 0), -math.pi).heading == pytest.approx(math.pi)


def test_polyline_needs_two_distinct_points():
    with pytest.raises(ValueError):
        Polyline([[0.0, 0.0]])
    with pytest.raises(ValueError):
        Polyline([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]])


def test_polyline_is_immutable():
    poly = Polyline([[0.0, 0.0], [1.0, 0.0]])
    with pytest.raises(ValueError):
        poly.points[0, 0] = 5.0


def test_densify_spacing_and_endpoints():
    poly = Polyline([[0.0, 0.0], [3.0, 0.0], [3.0, 2.2]])
    dense = poly.densify(0.5)
    gaps = np.hypot(*np.diff(dense.points, axis=0).T)
    assert gaps.max() <= 0.5 + 1e-12
    assert dense.length == pytest.approx(poly.length)
    assert np.array_equal(dense.points[0], poly.points[0]) and np.array_equal(dense.points[-1], poly.points[-1])
    assert dense.densify(0.5) == dense


def test_point_at_clamps_unless_extrapolating():
    poly = Polyline([[0.0, 0.0], [2.0, 0.0]])
    assert np.allclose(poly.point_at(5.0), [2.0, 0.0])
    assert np.allclose(poly.point_at(5.0, extrapolate=True), [5.0, 0.0])
    assert np.allclose(poly.point_at(-1.0), [0.0, 0.0])


def test_trajectory_sample_and_resample():
    traj = Trajectory([[0.0, 0.0], [1.0, 0.0], [2.0, 2.0]], dt=0.5, t0=1.0)
    assert np.allclose(traj.sample(1.25), [0.5, 0.0])
    assert np.allclose(traj.sample(10.0), [2.0, 2.0])
    assert np.allclose(traj.sample(2.5, extrapolate=True), [3.0, 4.0])
    re = traj.resample(1.0, 0.25, 5)
    assert len(re) == 5 and re.dt == 0.25
    assert np.allclose(re.points[2], [1.0, 0.0])


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory([[0.0, 0.0]], dt=0.0)
    with pytest.raises(ValueError):
        Trajectory(np.zeros((0, 2)), dt=0.5)


def test_box_corners_counter_clockwise():
    box = OrientedBox(Point2(1.0, 2.0), 1.0, 2.0, 0.3)
    c = box.corners()
    assert np.allclose(c, orc.box_corners(1.0, 2.0, 1.0, 2.0, 0.3), atol=1e-12)
    area2 = sum(c[i, 0] * c[(i + 1) % 4, 1] - c[(i + 1) % 4, 0] * c[i, 1] for i in range(4))
    assert area2 == pytest.approx(2 * 4.0 * 2.0)


def test_box_requires_positive_extents():
    with pytest.raises(ValueError):
        OrientedBox(Point2(0, 0), 0.0, 1.0, 0.0)


def test_concat_polylines_drops_shared_vertex():
    a = Polyline([[0.0, 0.0], [1.0, 0.0]])
    b = Polyline([[1.0, 0.0], [2.0, 0.0]])
    assert len(concat_polylines([a, b])) == 3


# --- nearest vertex / projection -------------------------------------------


def test_nearest_point_discrete_example():
    poly = Polyline([[0, 0], [1, 0], [2, 0]])
    p, i, d = nearest_point_discrete(poly, Point2(1.1, 0.5))
    assert (p.x, p.y, i) == (1.0, 0.0, 1)
    assert d == pytest.approx(math.sqrt(0.01 + 0.25), abs=1e-15)


def test_nearest_point_on_vertex_is_zero():
    poly = Polyline([[0, 0], [1, 0], [2, 3]])
    p, i, d = nearest_point_discrete(poly, Point2(2, 3))
    assert (i, d) == (2, 0.0)


def test_nearest_point_tie_prefers_lowest_index():
    poly = Polyline([[0, 0], [2, 0]])
    _, i, _ = nearest_point_discrete(poly, Point2(1, 0))
    assert i == 0


def test_nearest_point_matches_brute_force(rng):
    for _ in range(100):
        n = int(rng.integers(2, 30))
        pts = np.cumsum(rng.uniform(0.1, 3.0, size=(n, 2)) * rng.choice([-1, 1], size=(n, 2)), axis=0)
        poly = Polyline(pts)
        q = rng.uniform(-20, 20, size=2)
        _, i, d = nearest_point_discrete(poly, Point2(*q))
        bi, bd = orc.brute_nearest_vertex(pts, q)
        assert (i, d) == (bi, pytest.approx(bd, abs=1e-12))


def test_nearest_vertices_matches_scalar(rng):
    poly = Polyline(np.column_stack([np.arange(10.0), rng.normal(size=10)]))
    q = rng.uniform(-2, 12, size=(25, 2))
    idx, dist = nearest_vertices(poly, q)
    for k in range(25):
        _, i, d = nearest_point_discrete(poly, Point2(*q[k]))
        assert idx[k] == i and dist[k] == pytest.approx(d)


def test_project_point_perpendicular_foot():
    p, s, d = project_point(Polyline([[0, 0], [2, 0]]), Point2(1, 1))
    assert (p.x, p.y, s, d) == (1.0, 0.0, 1.0, 1.0)


def test_project_point_clamps_to_endpoint():
    p, s, d = project_point(Polyline([[0, 0], [2, 0]]), Point2(5, 0))
    assert (p.x, p.y, s) == (2.0, 0.0, 2.0) and d == 3.0


def test_project_point_vs_dense_sampling(rng):
    for _ in range(20):
        pts = np.cumsum(rng.uniform(0.5, 3.0, size=(5, 2)), axis=0)
        poly = Polyline(pts)
        q = rng.uniform(0, 12, size=2)
        _, _, d = project_point(poly, Point2(*q))
        assert d == pytest.approx(orc.dense_segment_distance(pts, q), abs=1e-6)


@given(polylines(), coord, coord)
def test_discrete_vs_projection_bounds(poly, x, y):
    p = Point2(x, y)
    _, _, d_disc = nearest_point_discrete(poly, p)
    _, _, d_proj = project_point(poly, p)
    max_seg = float(np.max(np.hypot(*np.diff(poly.points, axis=0).T)))
    assert d_proj <= d_disc + 1e-9
    assert d_disc <= d_proj + max_seg / 2 + 1e-9


# --- signed side --------------------------------------------------------------


@pytest.mark.parametrize(
    "rel, heading, expected",
    [((0, 1), 0.0, -1.0), ((0, -1), 0.0, 1.0), ((1, 0), math.pi / 2, 1.0), ((-1, 0), math.pi / 2, -1.0)],
)
def test_signed_side_cardinal(rel, heading, expected):
    assert signed_side(rel, heading) == pytest.approx(expected, abs=1e-15)


@given(coord, coord, angle, angle)
def test_signed_side_joint_rotation_invariant(x, y, h, rot):
    c, s = math.cos(rot), math.sin(rot)
    rel2 = (c * x - s * y, s * x + c * y)
    assert signed_side(rel2, h + rot) == pytest.approx(signed_side((x, y), h), abs=1e-9)


# --- SAT ----------------------------------------------------------------------


def test_sat_identical_boxes_overlap():
    b = OrientedBox(Point2(0, 0), 0.5, 0.5, 0.7)
    assert sat_overlap(b, b)


def test_sat_separated_unit_boxes():
    a = OrientedBox(Point2(0, 0), 0.5, 0.5, 0.0)
    b = OrientedBox(Point2(3, 0), 0.5, 0.5, 0.0)
    assert not sat_overlap(a, b)


def test_sat_touching_counts_as_overlap():
    a = OrientedBox(Point2(0, 0), 0.5, 0.5, 0.0)
    b = OrientedBox(Point2(1, 0), 0.5, 0.5, 0.0)
    assert sat_overlap(a, b)
    c = OrientedBox(Point2(1.0 + 1e-7, 0), 0.5, 0.5, 0.0)
    assert not sat_overlap(a, c)


def test_sat_rotated_45_near_touching_vs_sampling(rng):
    checked = 0
    for _ in range(200):
        a = OrientedBox(Point2(0.0, 0.0), 1.0, 1.0, 0.0)
        gap = rng.uniform(-0.3, 0.3)
        ang = rng.uniform(-0.4, 0.4)
        # corner of a 45-degree square pointing at the face of a
        reach = math.sqrt(2.0)
        cx = 1.0 + reach + gap
        b = OrientedBox(Point2(cx * math.cos(ang), cx * math.sin(ang)), 1.0, 1.0, math.pi / 4 + ang)
        ca, cb = a.corners(), b.corners()
        margin = orc.minkowski_margin(ca, cb)
        if abs(margin) < 1e-9:
            continue
        got = sat_overlap(a, b)
        assert got == orc.clipping_overlap(ca, cb) == (margin < 0)
        if abs(margin) > 0.02:
            assert got == orc.sampled_overlap(ca, cb, n=120)
        checked += 1
    assert checked > 150


def test_sat_polygon_general_matches_box(rng):
    for _ in range(200):
        a = OrientedBox(Point2(*rng.uniform(-3, 3, 2)), *rng.uniform(0.3, 2, 2), rng.uniform(-3, 3))
        b = OrientedBox(Point2(*rng.uniform(-3, 3, 2)), *rng.uniform(0.3, 2, 2), rng.uniform(-3, 3))
        assert sat_overlap(a, b) == sat_overlap_polygons(a.corners(), b.corners())


@given(boxes(), boxes())
def test_sat_symmetric(a, b):
    assert sat_overlap(a, b) == sat_overlap(b, a)


@given(boxes(), boxes(), angle, coord, coord)
def test_sat_rigid_invariance(a, b, rot, tx, ty):
    margin = orc.minkowski_margin(a.corners(), b.corners())
    assume(abs(margin) > 1e-6)

    def move(box):
        c = rigid_transform([[box.center.x, box.center.y]], rot, (tx, ty))[0]
        return OrientedBox(Point2(*c), box.half_width, box.half_length, box.heading + rot)

    assert sat_overlap(move(a), move(b)) == sat_overlap(a, b)


@given(boxes(), boxes())
def test_sat_agrees_with_shapely(a, b):
    ca, cb = a.corners(), b.corners()
    assume(abs(orc.minkowski_margin(ca, cb)) > 1e-9)
    assert sat_overlap(a, b) == orc.shapely_intersects(ca, cb)


# --- headings ----------------------------------------------------------------


def test_headings_straight_line():
    traj = Trajectory(np.column_stack([np.arange(5.0), np.zeros(5)]), 0.5)
    assert headings_from_offsets(traj, 1.0) == [0.0] * 5


def test_headings_single_stationary_point():
    assert headings_from_offsets(Trajectory([[3.0, 4.0]], 0.5), 0.42) == [0.42]


def test_headings_degenerate_offsets_inherit():
    pts = [[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [1.0 + 1e-4, 1.0], [1.0 + 1e-4, 1.0]]
    h = headings_from_offsets(Trajectory(pts, 0.5), -0.3)
    assert h[0] == -0.3
    assert h[1] == pytest.approx(math.pi / 4)
    assert h[2] == h[3] == h[4] == h[1]


def test_headings_circle_tangents():
    r, step = 20.0, 0.1
    a = np.arange(8) * step
    pts = np.column_stack([r * np.cos(a), r * np.sin(a)])
    h = headings_from_offsets(Trajectory(pts, 0.5), 0.0)
    tangent = a + math.pi / 2
    err = [abs(normalize_angle(x - y)) for x, y in zip(h, tangent)]
    assert max(err) <= 2 * step


@given(angle, st.floats(0.5, 3.0), st.integers(2, 10))
def test_headings_reversed_straight(h, step, n):
    d = np.array([math.cos(h), math.sin(h)]) * step
    pts = np.arange(n)[:, None] * d
    fwd = headings_from_offsets(Trajectory(pts, 0.5), 0.0)
    back = headings_from_offsets(Trajectory(pts[::-1], 0.5), 0.0)
    for f, b in zip(fwd, back):
        assert abs(normalize_angle(b - (f + math.pi))) < 1e-9
