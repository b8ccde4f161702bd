"""Ground-truth simulation: scenes with dynamic obstacles, distance
measurement against the current free region, and seeded random generators
for workspaces, obstacles, and sensor poses.

All generators are deterministic functions of their seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Tuple

import numpy as np

from .geometry import (
    EPS_GEOM,
    IDENTITY_MOTION,
    INSIDE,
    OUTSIDE,
    Point2,
    Polygon,
    Pose,
    RigidMotion,
    TWO_PI,
    aabb,
    compose,
    contains,
    ray_cast,
    ray_hit_distances,
    rotation_motion,
    segments_intersect,
    transform_points,
    validate,
)
from .preimage import MeasurementSpec

Trajectory = Callable[[float], RigidMotion]


def static_trajectory(placement: RigidMotion = IDENTITY_MOTION) -> Trajectory:
    """Trajectory of an obstacle that stays put at one placement."""

    def traj(t: float) -> RigidMotion:
        return placement

    return traj


@dataclass
class Obstacle:
    """A dynamic obstacle: body-frame shape plus a placement trajectory."""

    shape: Polygon
    trajectory: Trajectory = field(default_factory=static_trajectory)

    def placed(self, t: float) -> Polygon:
        g = self.trajectory(t)
        return Polygon(
            transform_points(g, self.shape.outer),
            [transform_points(g, h) for h in self.shape.holes],
        )


@dataclass
class Scene:
    """A static workspace plus its dynamic obstacles."""

    workspace: Polygon
    obstacles: List[Obstacle] = field(default_factory=list)


@dataclass
class TrialSetup:
    """One simulated measurement batch with its ground truth."""

    scene: Scene
    ground_truth: Pose
    measurements: List[MeasurementSpec]
    static_flags: List[bool]
    sparsity: int


def measure_dynamic(scene: Scene, t: float, q: Pose) -> Tuple[float, bool]:
    """Distance to the first boundary of the free region at time t, and
    whether that boundary belongs to the static workspace.

    Ties (within the geometric tolerance) count as static.  Raises
    ValueError("pose-in-obstacle-or-outside") when the pose is not strictly
    inside the free region.
    """
    w = scene.workspace
    if contains(w, q.position) != INSIDE:
        raise ValueError("pose-in-obstacle-or-outside")
    placed = [o.placed(t) for o in scene.obstacles]
    for poly in placed:
        if contains(poly, q.position) != OUTSIDE:
            raise ValueError("pose-in-obstacle-or-outside")

    d_static = ray_cast(w, q.position, q.theta)
    origin = q.position.as_array()[None, :]
    u = np.array([math.cos(q.theta), math.sin(q.theta)])
    d_obs = math.inf
    for poly in placed:
        a, b = poly.edge_arrays()
        d_obs = min(d_obs, float(ray_hit_distances(origin, u, a, b)[0]))
    if d_obs < d_static - EPS_GEOM:
        return d_obs, False
    return d_static, True


def make_trial(
    scene: Scene, q_star: Pose, k: int, t0: float = 0.0, eps_meas: float = 0.0
) -> TrialSetup:
    """Measurement batch: k rays with uniform rotation increments of 2*pi/k.

    Obstacles are evaluated at one time t0 (they stay put in experiments).
    The recorded sparsity (how many rays hit the static boundary) is
    informational, never enforced.
    """
    measurements = []
    flags = []
    for i in range(k):
        g = rotation_motion(TWO_PI * i / k)
        d, hit_static = measure_dynamic(scene, t0, compose(q_star, g))
        measurements.append(MeasurementSpec(g=g, d=d, t=t0, eps_meas=eps_meas))
        flags.append(hit_static)
    return TrialSetup(scene, q_star, measurements, flags, sum(flags))


def random_polygon(seed, vertices: int, radius: float, jitter: float) -> Polygon:
    """Star-shaped simple polygon: sorted uniform angles, jittered radii."""
    if vertices < 3:
        raise ValueError("need at least 3 vertices")
    if not (0 <= jitter < 1):
        raise ValueError("jitter must be in [0, 1)")
    rng = np.random.default_rng(seed)
    while True:
        angles = np.sort(rng.uniform(0.0, TWO_PI, vertices))
        radii = radius * (1.0 + rng.uniform(-jitter, jitter, vertices))
        pts = np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)
        poly = Polygon(pts)
        if validate(poly) is None:
            return poly


def _convex_blob(rng, center: np.ndarray, circumradius: float) -> Polygon:
    nv = int(rng.integers(4, 9))
    angles = np.sort(rng.uniform(0.0, TWO_PI, nv))
    pts = circumradius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    return Polygon(pts), center


def _fully_inside(shape_pts: np.ndarray, w: Polygon) -> bool:
    for v in shape_pts:
        if contains(w, Point2(float(v[0]), float(v[1]))) != INSIDE:
            return False
    wa, wb = w.edge_arrays()
    m = len(shape_pts)
    for i in range(m):
        p = tuple(shape_pts[i])
        q = tuple(shape_pts[(i + 1) % m])
        for j in range(len(wa)):
            if segments_intersect(p, q, tuple(wa[j]), tuple(wb[j])):
                return False
    return True


def random_obstacles(
    seed,
    w: Polygon,
    m: int,
    size_range: Tuple[float, float] = (0.02, 0.08),
) -> List[Obstacle]:
    """m convex obstacles (4-8 vertices) rejection-sampled fully inside w.

    Circumradius is uniform in size_range times the workspace aabb diagonal;
    obstacles may overlap each other and get identity trajectories.
    """
    if m < 0:
        raise ValueError("obstacle count must be >= 0")
    rng = np.random.default_rng(seed)
    lo, hi = aabb(w)
    diam = math.hypot(hi.x - lo.x, hi.y - lo.y)
    obstacles = []
    for _ in range(m):
        for attempt in range(10_000):
            center = np.array(
                [rng.uniform(lo.x, hi.x), rng.uniform(lo.y, hi.y)]
            )
            r = rng.uniform(size_range[0], size_range[1]) * diam
            shape, center = _convex_blob(rng, center, r)
            world_pts = shape.outer + center
            if _fully_inside(world_pts, w):
                placement = RigidMotion(Point2(float(center[0]), float(center[1])), 0.0)
                obstacles.append(Obstacle(shape, static_trajectory(placement)))
                break
        else:
            raise ValueError("workspace-too-crowded")
    return obstacles


def sample_free_pose(seed, scene: Scene, t: float, clearance: float) -> Pose:
    """Uniform rejection sample of a pose strictly inside the free region with
    at least ``clearance`` distance from all boundaries (64 probe rays).
    """
    if clearance < 0:
        raise ValueError("clearance must be >= 0")
    rng = np.random.default_rng(seed)
    w = scene.workspace
    lo, hi = aabb(w)
    placed = [o.placed(t) for o in scene.obstacles]
    edges = [w.edge_arrays()] + [p.edge_arrays() for p in placed]
    all_a = np.concatenate([e[0] for e in edges])
    all_b = np.concatenate([e[1] for e in edges])
    probe_angles = np.linspace(0.0, TWO_PI, 64, endpoint=False)
    for _ in range(100_000):
        x = rng.uniform(lo.x, hi.x)
        y = rng.uniform(lo.y, hi.y)
        theta = rng.uniform(0.0, TWO_PI)
        p = Point2(x, y)
        if contains(w, p) != INSIDE:
            continue
        if any(contains(poly, p) != OUTSIDE for poly in placed):
            continue
        if clearance > 0:
            origin = np.array([[x, y]])
            ok = True
            for ang in probe_angles:
                u = np.array([math.cos(ang), math.sin(ang)])
                if float(ray_hit_distances(origin, u, all_a, all_b)[0]) < clearance:
                    ok = False
                    break
            if not ok:
                continue
        return Pose(p, theta)
    raise ValueError("failed to sample a free pose")
