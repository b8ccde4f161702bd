"""Planar geometry primitives: polygons with holes, containment, ray casting,
and SE(2) rigid motions.

All values are immutable after construction and every operation is a pure
function, so everything here is safe for concurrent use.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

# Absolute tolerance (meters) for on-boundary and degeneracy tests.
EPS_GEOM = 1e-9

TWO_PI = 2.0 * math.pi

# Containment classifications.
INSIDE = "inside"
ON_BOUNDARY = "on-boundary"
OUTSIDE = "outside"


def wrap_angle(theta: float) -> float:
    """Normalize an angle to [0, 2*pi)."""
    t = math.fmod(theta, TWO_PI)
    if t < 0.0:
        t += TWO_PI
    if t >= TWO_PI:
        t = 0.0
    return t


def circular_difference(a: float, b: float) -> float:
    """Smallest absolute difference between two angles, in [0, pi]."""
    d = abs(wrap_angle(a) - wrap_angle(b))
    return min(d, TWO_PI - d)


@dataclass(frozen=True)
class Point2:
    """A planar point in meters."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("Point2 coordinates must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True)
class Pose:
    """A planar pose: position plus heading, with heading in [0, 2*pi)."""

    position: Point2
    theta: float

    def __post_init__(self):
        if not math.isfinite(self.theta):
            raise ValueError("Pose heading must be finite")
        object.__setattr__(self, "theta", wrap_angle(self.theta))


@dataclass(frozen=True)
class RigidMotion:
    """A body-frame rigid motion: translate in the body frame, then rotate."""

    translation: Point2
    rotation: float

    def __post_init__(self):
        if not math.isfinite(self.rotation):
            raise ValueError("RigidMotion rotation must be finite")
        object.__setattr__(self, "rotation", wrap_angle(self.rotation))


IDENTITY_MOTION = RigidMotion(Point2(0.0, 0.0), 0.0)


def rotation_motion(angle: float) -> RigidMotion:
    """Pure rotation by ``angle`` radians."""
    return RigidMotion(Point2(0.0, 0.0), angle)


def compose(q: Pose, g: RigidMotion) -> Pose:
    """Apply a body-frame motion to a pose (odometry semantics).

    position' = position + R(theta) * g.translation
    theta'    = wrap(theta + g.rotation)
    """
    c = math.cos(q.theta)
    s = math.sin(q.theta)
    x = q.position.x + c * g.translation.x - s * g.translation.y
    y = q.position.y + s * g.translation.x + c * g.translation.y
    return Pose(Point2(x, y), q.theta + g.rotation)


def chain(g1: RigidMotion, g2: RigidMotion) -> RigidMotion:
    """Motion equivalent to applying g1 then g2."""
    c = math.cos(g1.rotation)
    s = math.sin(g1.rotation)
    tx = g1.translation.x + c * g2.translation.x - s * g2.translation.y
    ty = g1.translation.y + s * g2.translation.x + c * g2.translation.y
    return RigidMotion(Point2(tx, ty), g1.rotation + g2.rotation)


def transform_points(g: RigidMotion, pts: np.ndarray) -> np.ndarray:
    """Apply a rigid motion to an (N, 2) array of points (rotate then shift)."""
    c = math.cos(g.rotation)
    s = math.sin(g.rotation)
    rot = np.array([[c, -s], [s, c]])
    return pts @ rot.T + np.array([g.translation.x, g.translation.y])


class Polygon:
    """A planar region with one outer ring and zero or more hole rings.

    Rings are stored open (last vertex != first); closure is implicit.
    The outer ring should be counterclockwise and holes clockwise; use
    :func:`validate` to check all invariants.
    """

    def __init__(self, outer: Sequence, holes: Sequence = ()):
        self.outer = np.asarray(outer, dtype=float).reshape(-1, 2)
        self.holes = [np.asarray(h, dtype=float).reshape(-1, 2) for h in holes]
        self._edges: Optional[tuple] = None

    def rings(self):
        return [self.outer] + list(self.holes)

    def edge_arrays(self):
        """All boundary segments as a pair of (E, 2) arrays (starts, ends)."""
        if self._edges is None:
            starts = []
            ends = []
            for ring in self.rings():
                starts.append(ring)
                ends.append(np.roll(ring, -1, axis=0))
            self._edges = (np.concatenate(starts), np.concatenate(ends))
        return self._edges

    def __eq__(self, other):
        if not isinstance(other, Polygon):
            return NotImplemented
        if len(self.holes) != len(other.holes):
            return False
        if not np.array_equal(self.outer, other.outer):
            return False
        return all(np.array_equal(a, b) for a, b in zip(self.holes, other.holes))

    def __repr__(self):
        return "Polygon(%d outer vertices, %d holes)" % (
            len(self.outer),
            len(self.holes),
        )


@dataclass(frozen=True)
class Violation:
    """Names the first violated polygon invariant and where it occurred.

    ring 0 is the outer ring; holes are rings 1, 2, ...
    """

    code: str
    ring: int
    index: int = -1
    message: str = ""


def signed_area(ring: np.ndarray) -> float:
    """Shoelace signed area; positive for counterclockwise rings."""
    x = ring[:, 0]
    y = ring[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _orient(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def segments_intersect(p, q, r, s, eps: float = EPS_GEOM) -> bool:
    """True if segment pq intersects segment rs (touching counts)."""
    d1 = _orient(r, s, p)
    d2 = _orient(r, s, q)
    d3 = _orient(p, q, r)
    d4 = _orient(p, q, s)
    if ((d1 > eps and d2 < -eps) or (d1 < -eps and d2 > eps)) and (
        (d3 > eps and d4 < -eps) or (d3 < -eps and d4 > eps)
    ):
        return True

    def on_seg(a, b, c):
        if abs(_orient(a, b, c)) > eps:
            return False
        return (
            min(a[0], b[0]) - eps <= c[0] <= max(a[0], b[0]) + eps
            and min(a[1], b[1]) - eps <= c[1] <= max(a[1], b[1]) + eps
        )

    return on_seg(r, s, p) or on_seg(r, s, q) or on_seg(p, q, r) or on_seg(p, q, s)


def _point_in_ring(pt: np.ndarray, ring: np.ndarray) -> bool:
    a = ring
    b = np.roll(ring, -1, axis=0)
    return bool(_crossing_parity(pt[None, :], a, b)[0])


def _crossing_parity(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Even-odd test for (M, 2) points against edges (starts a, ends b)."""
    px = pts[:, 0][:, None]
    py = pts[:, 1][:, None]
    ay = a[None, :, 1]
    by = b[None, :, 1]
    straddles = (ay > py) != (by > py)
    dy = b[None, :, 1] - a[None, :, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = a[None, :, 0] + (py - ay) * (b[None, :, 0] - a[None, :, 0]) / dy
    hits = straddles & (xint > px)
    return (np.count_nonzero(hits, axis=1) % 2).astype(bool)


def points_in_polygon(pts: np.ndarray, polygon: Polygon) -> np.ndarray:
    """Vectorized even-odd containment (boundary points are unspecified)."""
    a, b = polygon.edge_arrays()
    return _crossing_parity(np.asarray(pts, dtype=float), a, b)


def segment_distances_sq(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared distance from each of M points to each of E segments, (M, E)."""
    pts = np.asarray(pts, dtype=float)
    e = b - a
    ee = np.einsum("ij,ij->i", e, e)
    ee = np.where(ee < 1e-300, 1e-300, ee)
    diff = pts[:, None, :] - a[None, :, :]
    t = np.einsum("mej,ej->me", diff, e) / ee
    np.clip(t, 0.0, 1.0, out=t)
    closest = a[None, :, :] + t[:, :, None] * e[None, :, :]
    d = pts[:, None, :] - closest
    return np.einsum("mej,mej->me", d, d)


def _min_boundary_distance(pt: np.ndarray, polygon: Polygon) -> float:
    a, b = polygon.edge_arrays()
    return math.sqrt(float(segment_distances_sq(pt[None, :], a, b).min()))


def contains(polygon: Polygon, p: Point2, eps: float = EPS_GEOM) -> str:
    """Classify a point as INSIDE, ON_BOUNDARY, or OUTSIDE of the polygon."""
    pt = p.as_array()
    if _min_boundary_distance(pt, polygon) <= eps:
        return ON_BOUNDARY
    return INSIDE if bool(points_in_polygon(pt[None, :], polygon)[0]) else OUTSIDE


def ray_hit_distances(
    origins: np.ndarray,
    direction: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
    tmin: float = EPS_GEOM,
) -> np.ndarray:
    """Distance to the first edge hit for M origins along one direction.

    Returns +inf for origins whose ray hits no edge.  Edges exactly
    parallel to the ray are skipped; the shared-vertex overlap between
    adjacent edges keeps vertex hits from falling through cracks.
    """
    origins = np.asarray(origins, dtype=float)
    u = np.asarray(direction, dtype=float)
    e = b - a
    elen = np.hypot(e[:, 0], e[:, 1])
    denom = u[0] * e[:, 1] - u[1] * e[:, 0]
    ok = np.abs(denom) > 1e-14 * np.maximum(elen, 1.0)
    denom_safe = np.where(ok, denom, 1.0)
    ao = a[None, :, :] - origins[:, None, :]
    t = (ao[..., 0] * e[None, :, 1] - ao[..., 1] * e[None, :, 0]) / denom_safe
    s = (ao[..., 0] * u[1] - ao[..., 1] * u[0]) / denom_safe
    stol = EPS_GEOM / np.maximum(elen, EPS_GEOM)
    valid = ok[None, :] & (s >= -stol) & (s <= 1.0 + stol) & (t > tmin)
    t = np.where(valid, t, np.inf)
    return t.min(axis=1)


def ray_cast(polygon: Polygon, origin: Point2, theta: float) -> Optional[float]:
    """Distance from an interior (or boundary) origin to the first boundary hit.

    Raises ValueError("origin-outside") when the origin is strictly outside.
    Collinear ray-edge overlap resolves to the nearest overlapped endpoint.
    """
    if contains(polygon, origin) == OUTSIDE:
        raise ValueError("origin-outside")
    o = origin.as_array()
    u = np.array([math.cos(theta), math.sin(theta)])
    a, b = polygon.edge_arrays()
    best = float(ray_hit_distances(o[None, :], u, a, b)[0])

    # Collinear overlap: project endpoints of edges parallel to the ray.
    e = b - a
    elen = np.hypot(e[:, 0], e[:, 1])
    denom = u[0] * e[:, 1] - u[1] * e[:, 0]
    par = np.abs(denom) <= 1e-14 * np.maximum(elen, 1.0)
    if np.any(par):
        ao = a[par] - o
        bo = b[par] - o
        off = np.abs(ao[:, 0] * u[1] - ao[:, 1] * u[0])
        col = off <= EPS_GEOM
        if np.any(col):
            ta = ao[col] @ u
            tb = bo[col] @ u
            cand = np.concatenate([ta, tb])
            cand = cand[cand > EPS_GEOM]
            if cand.size:
                best = min(best, float(cand.min()))
    return best if math.isfinite(best) else None


def aabb(polygon: Polygon) -> tuple:
    """Tight axis-aligned bounding box of the outer ring."""
    lo = polygon.outer.min(axis=0)
    hi = polygon.outer.max(axis=0)
    return Point2(float(lo[0]), float(lo[1])), Point2(float(hi[0]), float(hi[1]))


def _ring_simple_violation(ring: np.ndarray, ring_idx: int) -> Optional[Violation]:
    m = len(ring)
    pts = [tuple(v) for v in ring]
    for i in range(m):
        a, b = pts[i], pts[(i + 1) % m]
        if math.hypot(b[0] - a[0], b[1] - a[1]) <= EPS_GEOM:
            return Violation("degenerate-edge", ring_idx, i, "zero-length edge")
    for i in range(m):
        for j in range(i + 1, m):
            # Skip adjacent edges (shared endpoint).
            if j == i + 1 or (i == 0 and j == m - 1):
                continue
            if segments_intersect(pts[i], pts[(i + 1) % m], pts[j], pts[(j + 1) % m]):
                return Violation(
                    "self-intersection", ring_idx, i, "edges %d and %d cross" % (i, j)
                )
    return None


def _rings_cross(r1: np.ndarray, r2: np.ndarray) -> bool:
    p1 = [tuple(v) for v in r1]
    p2 = [tuple(v) for v in r2]
    for i in range(len(p1)):
        for j in range(len(p2)):
            if segments_intersect(
                p1[i], p1[(i + 1) % len(p1)], p2[j], p2[(j + 1) % len(p2)]
            ):
                return True
    return False


def validate(polygon: Polygon) -> Optional[Violation]:
    """Check all polygon invariants; None means valid.

    The report names the first violated invariant and the offending
    ring/vertex indices.
    """
    rings = polygon.rings()
    for ri, ring in enumerate(rings):
        if not np.all(np.isfinite(ring)):
            idx = int(np.argwhere(~np.isfinite(ring))[0][0])
            return Violation("non-finite-vertex", ri, idx)
        if len(ring) < 3:
            return Violation("too-few-vertices", ri, message="ring needs >= 3 vertices")
    for ri, ring in enumerate(rings):
        v = _ring_simple_violation(ring, ri)
        if v is not None:
            return v
    if signed_area(polygon.outer) <= 0:
        return Violation(
            "outer-ring-orientation", 0, message="outer ring must be counterclockwise"
        )
    for hi, hole in enumerate(polygon.holes):
        if signed_area(hole) >= 0:
            return Violation(
                "hole-ring-orientation", hi + 1, message="hole rings must be clockwise"
            )
    for hi, hole in enumerate(polygon.holes):
        if _rings_cross(hole, polygon.outer):
            return Violation("hole-not-inside", hi + 1, message="hole crosses outer ring")
        for vi, v in enumerate(hole):
            if not _point_in_ring(v, polygon.outer):
                return Violation("hole-not-inside", hi + 1, vi)
    for hi in range(len(polygon.holes)):
        for hj in range(hi + 1, len(polygon.holes)):
            h1, h2 = polygon.holes[hi], polygon.holes[hj]
            if _rings_cross(h1, h2):
                return Violation(
                    "holes-overlap", hi + 1, message="crosses hole %d" % (hj + 1)
                )
            if _point_in_ring(h1[0], h2) or _point_in_ring(h2[0], h1):
                return Violation(
                    "holes-overlap", hi + 1, message="nested with hole %d" % (hj + 1)
                )
    return None
