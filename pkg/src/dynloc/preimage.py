"""Conservative voxel approximation of the set of poses at which the static
map would reproduce one distance measurement.

The approximation runs in two stages per heading slice:

* Stage A (candidate generation): every boundary edge, translated backwards
  along the measurement direction by the measured distance, is dilated into a
  capsule whose radius covers all within-voxel pose variation; voxels whose
  centers land in a capsule become candidates.
* Stage B (visibility filter): a candidate is removed only when the ray cast
  from its center pose misses the measured distance by more than
  (1 + slope_bound) times the slack, or when its measurement origin leaves
  the workspace.

Stage A is conservative by construction; Stage B can only unsoundly remove
voxels near visibility discontinuities, which callers can flag with
:func:`near_visibility_event`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .geometry import (
    OUTSIDE,
    Point2,
    Polygon,
    Pose,
    RigidMotion,
    compose,
    contains,
    points_in_polygon,
    ray_cast,
    ray_hit_distances,
    segment_distances_sq,
)
from .voxelgrid import GridSpec, VoxelMask


@dataclass(frozen=True)
class MeasurementSpec:
    """One distance measurement: relative motion, measured distance, time."""

    g: RigidMotion
    d: float
    t: float = 0.0
    eps_meas: float = 0.0

    def __post_init__(self):
        if self.d < 0:
            raise ValueError("measured distance must be >= 0")
        if self.eps_meas < 0:
            raise ValueError("sensor tolerance must be >= 0")


@dataclass(frozen=True)
class PreimageParams:
    """Tuning knobs for the voxelization.

    slope_bound controls how aggressively the visibility filter removes
    candidates (removal threshold is (1 + slope_bound) * slack).
    """

    slack_extra: float = 0.0
    slope_bound: float = 1.0
    n: Optional[int] = None

    def __post_init__(self):
        if self.slack_extra < 0 or self.slope_bound < 0:
            raise ValueError("slack_extra and slope_bound must be >= 0")
        if self.n is not None and self.n < 2:
            raise ValueError("resolution must be >= 2")


def slice_slack(spec: GridSpec, m: MeasurementSpec, slack_extra: float = 0.0) -> float:
    """Conservativeness budget for one voxel.

    Within one voxel the pose position varies by at most half the xy cell
    diagonal, and the heading varies by at most half an angular cell, which
    displaces the ray origin and the translated boundary by at most
    (d + |translation|) * dtheta / 2.
    """
    v = math.hypot(m.g.translation.x, m.g.translation.y)
    return (
        0.5 * math.hypot(spec.cell_dx, spec.cell_dy)
        + (m.d + v) * (spec.cell_dtheta / 2.0)
        + m.eps_meas
        + slack_extra
    )


# Within-voxel xy sample offsets for the visibility filter, in units of the
# half cell size: center first (cheapest accept), then the corners.
_CORNER_UNITS = np.array(
    [[0.0, 0.0], [1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]
)


def _xy_centers(spec: GridSpec) -> np.ndarray:
    xs = spec.x_centers()
    ys = spec.y_centers()
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.stack([gx.ravel(), gy.ravel()], axis=1)


def compute_preimage(
    w: Polygon,
    m: MeasurementSpec,
    spec: GridSpec,
    params: PreimageParams = PreimageParams(),
    theta_slices: Optional[Sequence[int]] = None,
) -> VoxelMask:
    """Conservative voxel mask of poses consistent with one measurement.

    ``theta_slices`` restricts evaluation to the given heading slices (all
    slices by default); slices are independent, so a restricted run produces
    exactly the bits of the corresponding full-mask slices.
    """
    if params.n is not None and params.n != spec.n:
        raise ValueError("params.n disagrees with the grid spec")
    n = spec.n
    mask = VoxelMask.empty(spec)
    a, b = w.edge_arrays()
    s = slice_slack(spec, m, params.slack_extra)

    # Unreachable distance: the whole box plus slack cannot contain a hit.
    lo = w.outer.min(axis=0)
    hi = w.outer.max(axis=0)
    if m.d > math.hypot(hi[0] - lo[0], hi[1] - lo[1]) + s:
        return mask

    pts = _xy_centers(spec)
    s2 = s * s
    # The visibility filter samples the voxel at its center, xy corners, and
    # heading extremes, so any pose in the voxel sits within half a cell edge
    # (and a quarter heading cell) of some sample; the removal threshold only
    # needs to budget for that smaller gap.
    v = math.hypot(m.g.translation.x, m.g.translation.y)
    sample_slack = (
        0.5 * max(spec.cell_dx, spec.cell_dy)
        + (m.d + v) * (spec.cell_dtheta / 4.0)
        + m.eps_meas
        + params.slack_extra
    )
    remove_thresh = (1.0 + params.slope_bound) * sample_slack
    gx = m.g.translation.x
    gy = m.g.translation.y
    slices = range(n) if theta_slices is None else theta_slices
    for it in slices:
        theta_c = (it + 0.5) * spec.cell_dtheta
        phi = theta_c + m.g.rotation
        u = np.array([math.cos(phi), math.sin(phi)])
        c, si = math.cos(theta_c), math.sin(theta_c)
        off = np.array([c * gx - si * gy, si * gx + c * gy])

        # Stage A: centers whose shifted image lands within slack of an edge.
        shift = off + m.d * u
        d2 = segment_distances_sq(pts, a - shift, b - shift)
        cand = d2.min(axis=1) <= s2
        if not np.any(cand):
            continue
        idx = np.nonzero(cand)[0]

        # Stage B: remove a candidate only when every within-voxel sample
        # (center, xy corners, heading extremes) misses the measured distance
        # by more than the removal threshold or leaves the workspace.  The
        # multi-sample check keeps voxels that a visibility discontinuity
        # cuts through, shrinking the unsound-removal set.
        keep = np.zeros(idx.size, dtype=bool)
        for theta_s in (theta_c - 0.5 * spec.cell_dtheta, theta_c, theta_c + 0.5 * spec.cell_dtheta):
            phi_s = theta_s + m.g.rotation
            u_s = np.array([math.cos(phi_s), math.sin(phi_s)])
            cs, ss = math.cos(theta_s), math.sin(theta_s)
            off_s = np.array([cs * gx - ss * gy, ss * gx + cs * gy])
            for corner in _CORNER_UNITS:
                todo = ~keep
                if not np.any(todo):
                    break
                origins = (
                    pts[idx[todo]]
                    + off_s
                    + corner * np.array([0.5 * spec.cell_dx, 0.5 * spec.cell_dy])
                )
                inside = points_in_polygon(origins, w)
                if not np.any(inside):
                    continue
                r = ray_hit_distances(origins[inside], u_s, a, b)
                ok = np.isfinite(r) & (np.abs(r - m.d) <= remove_thresh)
                sel = np.nonzero(todo)[0][np.nonzero(inside)[0][ok]]
                keep[sel] = True
        idx = idx[keep]
        if idx.size == 0:
            continue
        mask.bits[idx // n, idx % n, it] = True
    return mask


def agreement_residual(w: Polygon, q: Pose, m: MeasurementSpec) -> Optional[float]:
    """|static-map distance at the measurement pose - measured distance|.

    None when the measurement origin falls outside the workspace.
    """
    o = compose(q, m.g)
    if contains(w, o.position) == OUTSIDE:
        return None
    r = ray_cast(w, o.position, o.theta)
    if r is None:
        return None
    return abs(r - m.d)


def path_has_visibility_event(
    w: Polygon,
    q0: Pose,
    q1: Pose,
    m: MeasurementSpec,
    slope_bound: float = 1.0,
    steps: int = 24,
) -> bool:
    """True when the static distance violates the assumed smoothness along the
    straight pose path from q0 to q1.

    A step whose distance change exceeds (1 + slope_bound) times the pose
    displacement (position plus lever-arm-scaled heading change) marks a
    visibility event; so does the measurement origin leaving the workspace.
    """
    v = math.hypot(m.g.translation.x, m.g.translation.y)
    lever = m.d + v
    dx = q1.position.x - q0.position.x
    dy = q1.position.y - q0.position.y
    dth = q1.theta - q0.theta
    if dth > math.pi:
        dth -= 2.0 * math.pi
    elif dth < -math.pi:
        dth += 2.0 * math.pi
    step_len = (math.hypot(dx, dy) + abs(dth) * lever) / (steps - 1)
    prev = None
    for f in np.linspace(0.0, 1.0, steps):
        probe = Pose(
            Point2(q0.position.x + f * dx, q0.position.y + f * dy),
            q0.theta + f * dth,
        )
        res = agreement_residual(w, probe, m)
        if res is None:
            return True
        if prev is not None and abs(res - prev) > (1.0 + slope_bound) * step_len:
            return True
        prev = res
    return False


def near_visibility_event(
    w: Polygon,
    q: Pose,
    m: MeasurementSpec,
    radius: float,
    slope_bound: float = 1.0,
    steps: int = 24,
    toward: Optional[Pose] = None,
) -> bool:
    """True when the static distance violates the assumed smoothness within
    ``radius`` of the pose (optionally checking a specific target pose first).
    """
    if toward is not None and path_has_visibility_event(
        w, q, toward, m, slope_bound, steps
    ):
        return True
    for ang in np.linspace(0.0, 2.0 * math.pi, 8, endpoint=False):
        target = Pose(
            Point2(
                q.position.x + radius * math.cos(ang),
                q.position.y + radius * math.sin(ang),
            ),
            q.theta,
        )
        if path_has_visibility_event(w, q, target, m, slope_bound, steps):
            return True
    return False
