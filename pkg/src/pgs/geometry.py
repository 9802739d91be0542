"""2D primitives: points, poses, polylines, trajectories, oriented boxes and SAT."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MIN_VERTEX_SEPARATION = 1e-9
HEADING_DEGENERACY = 1e-3
DEFAULT_DENSIFY_SPACING = 0.5


def normalize_angle(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.remainder(float(angle), 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    return a


def _as_points(points, name: str) -> np.ndarray:
    arr = np.array(points, dtype=float)
    if arr.ndim == 1 and arr.size == 2:
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{name}: expected an (N, 2) array of points, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: coordinates must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, slots=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"Point2 coordinates must be finite, got ({self.x}, {self.y})")

    def __iter__(self):
        yield self.x
        yield self.y

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @classmethod
    def of(cls, p) -> "Point2":
        if isinstance(p, Point2):
            return p
        x, y = p
        return cls(float(x), float(y))


@dataclass(frozen=True, slots=True)
class Pose2:
    position: Point2
    heading: float

    def __post_init__(self):
        if not math.isfinite(self.heading):
            raise ValueError("Pose2 heading must be finite")
        object.__setattr__(self, "heading", normalize_angle(self.heading))

    @classmethod
    def from_xyh(cls, x: float, y: float, heading: float) -> "Pose2":
        return cls(Point2(float(x), float(y)), heading)

    @property
    def xy(self) -> np.ndarray:
        return self.position.as_array()


class Polyline:
    """Ordered 2D vertex sequence with at least two distinct consecutive points.

    The vertex array is read-only; instances compare by value.
    """

    __slots__ = ("points", "_cum")

    def __init__(self, points):
        pts = _as_points(points, "Polyline")
        if len(pts) < 2:
            raise ValueError("Polyline needs at least 2 points")
        seg = np.hypot(*np.diff(pts, axis=0).T)
        if np.any(seg < MIN_VERTEX_SEPARATION):
            i = int(np.argmax(seg < MIN_VERTEX_SEPARATION))
            raise ValueError(f"Polyline vertices {i} and {i + 1} coincide")
        self.points = pts
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        cum.setflags(write=False)
        self._cum = cum

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other) -> bool:
        return isinstance(other, Polyline) and np.array_equal(self.points, other.points)

    __hash__ = None

    def __repr__(self) -> str:
        return f"Polyline(n={len(self.points)}, length={self.length:.3f})"

    @property
    def arc_lengths(self) -> np.ndarray:
        """Cumulative arc length at each vertex, starting at 0."""
        return self._cum

    @property
    def length(self) -> float:
        return float(self._cum[-1])

    def point_at(self, s: float, extrapolate: bool = False) -> np.ndarray:
        """Point at arc length ``s``.

        Clamped to the polyline ends unless ``extrapolate``, which continues
        straight along the first or last segment.
        """
        cum = self._cum
        if s <= 0.0:
            if extrapolate:
                d = self.points[1] - self.points[0]
                return self.points[0] + d * (s / (cum[1] - cum[0]))
            return self.points[0].copy()
        if s >= cum[-1]:
            if extrapolate:
                d = self.points[-1] - self.points[-2]
                return self.points[-1] + d * ((s - cum[-1]) / (cum[-1] - cum[-2]))
            return self.points[-1].copy()
        i = int(np.searchsorted(cum, s, side="right")) - 1
        i = min(i, len(cum) - 2)
        t = (s - cum[i]) / (cum[i + 1] - cum[i])
        return self.points[i] + t * (self.points[i + 1] - self.points[i])

    def heading_at(self, s: float) -> float:
        """Direction of the segment containing arc length ``s``."""
        cum = self._cum
        i = int(np.searchsorted(cum, min(max(s, 0.0), cum[-1]), side="right")) - 1
        i = min(max(i, 0), len(cum) - 2)
        d = self.points[i + 1] - self.points[i]
        return math.atan2(d[1], d[0])

    def densify(self, spacing: float = DEFAULT_DENSIFY_SPACING) -> "Polyline":
        """Insert evenly spaced vertices so no segment exceeds ``spacing``.

        Idempotent: segments already within ``spacing`` are left untouched.
        """
        if spacing <= 0:
            raise ValueError("spacing must be positive")
        out = [self.points[0]]
        seg = np.diff(self._cum)
        for i, length in enumerate(seg):
            n = max(1, math.ceil(length / spacing - 1e-9))
            a, b = self.points[i], self.points[i + 1]
            for k in range(1, n):
                out.append(a + (b - a) * (k / n))
            out.append(b)
        return Polyline(np.array(out))

    def transformed(self, rotation: float, translation=(0.0, 0.0)) -> "Polyline":
        return Polyline(rigid_transform(self.points, rotation, translation))


class Trajectory:
    """Fixed-step sequence of 2D points; point ``k`` is at time ``t0 + k * dt``."""

    __slots__ = ("points", "dt", "t0")

    def __init__(self, points, dt: float, t0: float = 0.0):
        pts = _as_points(points, "Trajectory")
        if len(pts) < 1:
            raise ValueError("Trajectory needs at least 1 point")
        if not (dt > 0 and math.isfinite(dt)):
            raise ValueError(f"Trajectory dt must be positive, got {dt}")
        if not math.isfinite(t0):
            raise ValueError("Trajectory t0 must be finite")
        self.points = pts
        self.dt = float(dt)
        self.t0 = float(t0)

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Trajectory)
            and self.dt == other.dt
            and self.t0 == other.t0
            and np.array_equal(self.points, other.points)
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"Trajectory(n={len(self.points)}, dt={self.dt}, t0={self.t0})"

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.points))

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (len(self.points) - 1)

    def with_points(self, points) -> "Trajectory":
        return Trajectory(points, self.dt, self.t0)

    def sample(self, t: float, extrapolate: bool = False) -> np.ndarray:
        """Linearly interpolated position at time ``t``.

        Outside the span the end point is held, or with ``extrapolate`` the
        final velocity is continued past the end.
        """
        u = (t - self.t0) / self.dt
        n = len(self.points)
        if u <= 0 or n == 1:
            return self.points[0].copy()
        if u >= n - 1:
            if extrapolate:
                return self.points[-1] + (u - (n - 1)) * (self.points[-1] - self.points[-2])
            return self.points[-1].copy()
        i = int(math.floor(u))
        f = u - i
        return self.points[i] + f * (self.points[i + 1] - self.points[i])

    def resample(self, t0: float, dt: float, n: int, extrapolate: bool = False) -> "Trajectory":
        return Trajectory(np.array([self.sample(t0 + k * dt, extrapolate) for k in range(n)]), dt, t0)

    def transformed(self, rotation: float, translation=(0.0, 0.0)) -> "Trajectory":
        return Trajectory(rigid_transform(self.points, rotation, translation), self.dt, self.t0)


@dataclass(frozen=True, slots=True)
class OrientedBox:
    """Rectangle centered at ``center``; ``half_length`` runs along ``heading``."""

    center: Point2
    half_width: float
    half_length: float
    heading: float

    def __post_init__(self):
        if not (self.half_width > 0 and self.half_length > 0):
            raise ValueError("OrientedBox half extents must be positive")
        if not math.isfinite(self.heading):
            raise ValueError("OrientedBox heading must be finite")

    @classmethod
    def from_dims(cls, center, width: float, length: float, heading: float) -> "OrientedBox":
        return cls(Point2.of(center), width / 2.0, length / 2.0, heading)

    def corners(self) -> np.ndarray:
        """Four corners, counter-clockwise, starting front-right."""
        c, s = math.cos(self.heading), math.sin(self.heading)
        fwd = np.array([c, s]) * self.half_length
        left = np.array([-s, c]) * self.half_width
        ctr = np.array([self.center.x, self.center.y])
        return np.array([ctr + fwd - left, ctr + fwd + left, ctr - fwd + left, ctr - fwd - left])

    def axes(self) -> np.ndarray:
        """The two distinct unit edge normals of the box."""
        c, s = math.cos(self.heading), math.sin(self.heading)
        return np.array([[c, s], [-s, c]])

    def inflated(self, margin: float) -> "OrientedBox":
        return OrientedBox(self.center, self.half_width + margin, self.half_length + margin, self.heading)


def rigid_transform(points, rotation: float, translation=(0.0, 0.0)) -> np.ndarray:
    c, s = math.cos(rotation), math.sin(rotation)
    rot = np.array([[c, -s], [s, c]])
    return np.asarray(points, dtype=float) @ rot.T + np.asarray(translation, dtype=float)


def nearest_point_discrete(poly: Polyline, p) -> tuple[Point2, int, float]:
    """Nearest polyline *vertex* to ``p``; ties go to the lowest index."""
    q = np.asarray(tuple(p), dtype=float)
    d2 = np.sum((poly.points - q) ** 2, axis=1)
    i = int(np.argmin(d2))
    v = poly.points[i]
    return Point2(float(v[0]), float(v[1])), i, math.sqrt(float(d2[i]))


def nearest_vertices(poly: Polyline, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`nearest_point_discrete` for an (M, 2) array; returns (indices, distances)."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    d2 = np.sum((pts[:, None, :] - poly.points[None, :, :]) ** 2, axis=2)
    idx = np.argmin(d2, axis=1)
    return idx, np.sqrt(d2[np.arange(len(pts)), idx])


def project_point(poly: Polyline, p) -> tuple[Point2, float, float]:
    """Closest point on the polyline segments to ``p``.

    Returns (point, arc length from the start, distance).
    """
    q = np.asarray(tuple(p), dtype=float)
    a = poly.points[:-1]
    ab = poly.points[1:] - a
    seg2 = np.sum(ab * ab, axis=1)
    t = np.clip(np.sum((q - a) * ab, axis=1) / seg2, 0.0, 1.0)
    foot = a + t[:, None] * ab
    d2 = np.sum((foot - q) ** 2, axis=1)
    i = int(np.argmin(d2))
    s = float(poly.arc_lengths[i] + t[i] * math.sqrt(seg2[i]))
    return Point2(float(foot[i, 0]), float(foot[i, 1])), s, math.sqrt(float(d2[i]))


def signed_side(rel, heading: float) -> float:
    """2D cross product of ``rel`` with the heading direction.

    Negative means ``rel`` points to the left of the heading, positive to the right.
    """
    rx, ry = rel
    return float(rx * math.sin(heading) - ry * math.cos(heading))


def _disjoint_on(axis: np.ndarray, ca: np.ndarray, cb: np.ndarray) -> bool:
    pa = ca @ axis
    pb = cb @ axis
    # touching intervals count as overlapping
    return pa.max() < pb.min() or pb.max() < pa.min()


def sat_overlap_polygons(verts_a, verts_b) -> bool:
    """SAT test for two convex polygons given as vertex arrays (any winding).

    Tests the normal of every edge of both polygons and stops at the first
    separating axis. Touching polygons are reported as intersecting.
    """
    polys = (np.asarray(verts_a, dtype=float), np.asarray(verts_b, dtype=float))
    for poly in polys:
        n = len(poly)
        for i in range(n):
            e = poly[(i + 1) % n] - poly[i]
            axis = np.array([-e[1], e[0]])
            if _disjoint_on(axis, polys[0], polys[1]):
                return False
    return True


def sat_overlap(a: OrientedBox, b: OrientedBox) -> bool:
    """Whether two oriented boxes intersect (touching counts).

    A rectangle has only two distinct edge normals, so four axes suffice.
    """
    ca, cb = a.corners(), b.corners()
    for axis in np.concatenate([a.axes(), b.axes()]):
        if _disjoint_on(axis, ca, cb):
            return False
    return True


def headings_from_offsets(traj: Trajectory | np.ndarray, fallback: float) -> list[float]:
    """Per-step heading from forward point offsets.

    The last step reuses the backward offset. Offsets shorter than 1 mm inherit
    the previous heading, or ``fallback`` at the first step.
    """
    pts = traj.points if isinstance(traj, Trajectory) else np.asarray(traj, dtype=float)
    n = len(pts)
    if n == 1:
        return [normalize_angle(fallback)]
    offsets = np.diff(pts, axis=0)
    offsets = np.vstack([offsets, offsets[-1:]])
    out: list[float] = []
    prev = normalize_angle(fallback)
    for dx, dy in offsets:
        if math.hypot(dx, dy) >= HEADING_DEGENERACY:
            prev = normalize_angle(math.atan2(dy, dx))
        out.append(prev)
    return out


def concat_polylines(polys: Iterable[Polyline]) -> Polyline:
    """Join polylines end to end, dropping duplicated junction vertices."""
    chunks: list[np.ndarray] = []
    for poly in polys:
        pts = poly.points
        if chunks and np.hypot(*(chunks[-1][-1] - pts[0])) < MIN_VERTEX_SEPARATION:
            pts = pts[1:]
        if len(pts):
            chunks.append(pts)
    return Polyline(np.vstack(chunks))


def box_sequence_corners(boxes: Sequence[OrientedBox]) -> np.ndarray:
    return np.array([b.corners() for b in boxes])
