"""Discretization of the configuration space AABB(W) x [0, 2*pi) into an
n x n x n voxel grid, with indexing, per-voxel counts, connected components,
and circular-mean centroids.

Components use 6-adjacency (one step along a single axis) with wraparound on
the heading axis only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy import ndimage

from .geometry import Point2, Pose, TWO_PI


@dataclass(frozen=True)
class GridSpec:
    """Geometry of the voxel grid over one bounding box."""

    origin: Point2
    cell_dx: float
    cell_dy: float
    cell_dtheta: float
    n: int

    def x_centers(self) -> np.ndarray:
        return self.origin.x + (np.arange(self.n) + 0.5) * self.cell_dx

    def y_centers(self) -> np.ndarray:
        return self.origin.y + (np.arange(self.n) + 0.5) * self.cell_dy

    def theta_centers(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.cell_dtheta

    def xy_diagonal(self) -> float:
        return math.hypot(self.cell_dx, self.cell_dy)


def make_spec(box: Tuple[Point2, Point2], n: int) -> GridSpec:
    """Grid spec covering the box with n cells per axis (and 2*pi/n in heading)."""
    lo, hi = box
    w = hi.x - lo.x
    h = hi.y - lo.y
    if w <= 0 or h <= 0:
        raise ValueError("degenerate bounding box")
    if n < 2:
        raise ValueError("resolution must be >= 2")
    return GridSpec(lo, w / n, h / n, TWO_PI / n, n)


def voxel_center(spec: GridSpec, ix: int, iy: int, itheta: int) -> Pose:
    """Center pose of one voxel."""
    n = spec.n
    if not (0 <= ix < n and 0 <= iy < n and 0 <= itheta < n):
        raise ValueError("voxel index out of range")
    return Pose(
        Point2(
            spec.origin.x + (ix + 0.5) * spec.cell_dx,
            spec.origin.y + (iy + 0.5) * spec.cell_dy,
        ),
        (itheta + 0.5) * spec.cell_dtheta,
    )


def locate(spec: GridSpec, pose: Pose) -> Tuple[int, int, int]:
    """Voxel index containing a pose (clamped to the grid on x/y)."""
    n = spec.n
    ix = int(math.floor((pose.position.x - spec.origin.x) / spec.cell_dx))
    iy = int(math.floor((pose.position.y - spec.origin.y) / spec.cell_dy))
    it = int(math.floor(pose.theta / spec.cell_dtheta)) % n
    return (min(max(ix, 0), n - 1), min(max(iy, 0), n - 1), it)


@dataclass
class VoxelMask:
    """Boolean occupancy over the grid, indexed bits[ix, iy, itheta]."""

    spec: GridSpec
    bits: np.ndarray

    @classmethod
    def empty(cls, spec: GridSpec) -> "VoxelMask":
        return cls(spec, np.zeros((spec.n, spec.n, spec.n), dtype=bool))

    def count(self) -> int:
        return int(np.count_nonzero(self.bits))


@dataclass
class CountGrid:
    """Per-voxel counts of how many masks contain each voxel."""

    spec: GridSpec
    counts: np.ndarray


@dataclass
class Component:
    """One connected blob of set voxels and its center of mass."""

    voxels: np.ndarray  # (K, 3) int indices
    size: int
    centroid: Pose


def accumulate(grids: Sequence[VoxelMask]) -> CountGrid:
    """Per-voxel sum over a list of masks sharing one grid spec."""
    if not grids:
        raise ValueError("need at least one mask")
    spec = grids[0].spec
    for g in grids[1:]:
        if g.spec != spec:
            raise ValueError("masks have mismatched grid specs")
    counts = np.zeros((spec.n, spec.n, spec.n), dtype=np.int32)
    for g in grids:
        counts += g.bits
    return CountGrid(spec, counts)


_STRUCT6 = ndimage.generate_binary_structure(3, 1)


def connected_components(mask: VoxelMask) -> List[Component]:
    """Partition set voxels into 6-adjacent components (heading axis cyclic).

    Each component carries a centroid whose x/y are arithmetic means of
    voxel-center coordinates and whose heading is the circular mean of
    voxel-center angles.
    """
    spec = mask.spec
    n = spec.n
    labels, nlab = ndimage.label(mask.bits, structure=_STRUCT6)
    if nlab == 0:
        return []

    # Merge components touching across the heading seam (itheta 0 <-> n-1).
    parent = np.arange(nlab + 1)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    lo = labels[:, :, 0]
    hi = labels[:, :, n - 1]
    touching = (lo > 0) & (hi > 0)
    for l1, l2 in zip(lo[touching].ravel(), hi[touching].ravel()):
        r1, r2 = find(l1), find(l2)
        if r1 != r2:
            parent[r2] = r1

    roots = np.array([find(i) for i in range(nlab + 1)])
    labels = roots[labels]

    idx = np.argwhere(labels > 0)
    lab = labels[idx[:, 0], idx[:, 1], idx[:, 2]]
    order = np.argsort(lab, kind="stable")
    idx = idx[order]
    lab = lab[order]
    boundaries = np.nonzero(np.diff(lab))[0] + 1
    groups = np.split(idx, boundaries)

    comps = []
    for vox in groups:
        x = spec.origin.x + (vox[:, 0] + 0.5) * spec.cell_dx
        y = spec.origin.y + (vox[:, 1] + 0.5) * spec.cell_dy
        th = (vox[:, 2] + 0.5) * spec.cell_dtheta
        sx = float(np.mean(np.sin(th)))
        cx = float(np.mean(np.cos(th)))
        if math.hypot(sx, cx) < 1e-12:
            # Degenerate antipodal component: fall back to the most common
            # heading cell.
            vals, cnt = np.unique(vox[:, 2], return_counts=True)
            theta = (float(vals[np.argmax(cnt)]) + 0.5) * spec.cell_dtheta
        else:
            theta = math.atan2(sx, cx)
        centroid = Pose(Point2(float(np.mean(x)), float(np.mean(y))), theta)
        comps.append(Component(vox, len(vox), centroid))
    return comps
