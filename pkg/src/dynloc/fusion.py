"""Robust localization pipeline: k'-of-k consensus over measurement masks,
pose extraction from connected components, agreement and uniqueness filters,
and the plain-intersection baseline.

The consensus set (union over all size-k' subsets of mask intersections) is
computed by per-voxel counting: a voxel lies in some size-k' subset's
intersection exactly when at least k' masks contain it.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from .geometry import Polygon, Pose, aabb, circular_difference
from .preimage import (
    MeasurementSpec,
    PreimageParams,
    agreement_residual,
    compute_preimage,
    slice_slack,
)
from .voxelgrid import GridSpec, VoxelMask, accumulate, connected_components, make_spec


@dataclass(frozen=True)
class FusionParams:
    """Consensus size, agreement tolerance, and uniqueness thresholds.

    None for epsilon/deltas means "derive from the grid": epsilon defaults to
    the slack of the largest-distance measurement, delta_pos to twice the xy
    cell diagonal, and delta_theta to twice the angular cell.
    """

    k_prime: int
    epsilon: Optional[float] = None
    delta_pos: Optional[float] = None
    delta_theta: Optional[float] = None
    min_component: int = 1

    def __post_init__(self):
        if self.k_prime < 1:
            raise ValueError("k_prime must be >= 1")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if self.min_component < 1:
            raise ValueError("min_component must be >= 1")


@dataclass
class CandidatePose:
    pose: Pose
    agreement_count: int
    component_size: int


@dataclass
class LocalizationResult:
    """Ranked candidate poses plus per-stage diagnostics."""

    candidates: List[CandidatePose]
    grid_n: int
    timings: Dict[str, float] = field(default_factory=dict)
    masks_set_voxels: List[int] = field(default_factory=list)


def consensus_mask(masks: Sequence[VoxelMask], k_prime: int) -> VoxelMask:
    """Voxels contained in at least k_prime of the input masks."""
    if not (1 <= k_prime <= len(masks)):
        raise ValueError("k_prime out of range")
    counts = accumulate(masks)
    return VoxelMask(counts.spec, counts.counts >= k_prime)


def _resolve_epsilon(p: FusionParams, spec: GridSpec, ms: Sequence[MeasurementSpec]):
    if p.epsilon is not None:
        return p.epsilon
    largest = max(ms, key=lambda m: m.d)
    return slice_slack(spec, largest)


def extract_candidates(
    mask: VoxelMask,
    w: Polygon,
    ms: Sequence[MeasurementSpec],
    p: FusionParams,
) -> List[CandidatePose]:
    """Component centroids that agree with enough measurements, deduplicated.

    Candidates are ordered by descending agreement count, then descending
    component size, then lexicographic pose; the greedy dedup keeps the
    first of any pair closer than both uniqueness thresholds.
    """
    spec = mask.spec
    epsilon = _resolve_epsilon(p, spec, ms)
    delta_pos = 2.0 * spec.xy_diagonal() if p.delta_pos is None else p.delta_pos
    delta_theta = 2.0 * spec.cell_dtheta if p.delta_theta is None else p.delta_theta

    scored = []
    for comp in connected_components(mask):
        if comp.size < p.min_component:
            continue
        q = comp.centroid
        count = 0
        for m in ms:
            res = agreement_residual(w, q, m)
            if res is not None and res < epsilon:
                count += 1
        if count >= p.k_prime:
            scored.append(CandidatePose(q, count, comp.size))

    scored.sort(
        key=lambda c: (
            -c.agreement_count,
            -c.component_size,
            c.pose.position.x,
            c.pose.position.y,
            c.pose.theta,
        )
    )
    kept: List[CandidatePose] = []
    for cand in scored:
        dup = False
        for other in kept:
            dp = math.hypot(
                cand.pose.position.x - other.pose.position.x,
                cand.pose.position.y - other.pose.position.y,
            )
            dth = circular_difference(cand.pose.theta, other.pose.theta)
            if dp < delta_pos and dth < delta_theta:
                dup = True
                break
        if not dup:
            kept.append(cand)
    return kept


def localize(
    w: Polygon,
    ms: Sequence[MeasurementSpec],
    n: int,
    p: FusionParams,
    prep: PreimageParams = PreimageParams(),
    masks: Optional[Sequence[VoxelMask]] = None,
) -> LocalizationResult:
    """End-to-end pipeline: k preimage masks, consensus at k', extraction.

    Deterministic for fixed inputs.  Precomputed masks may be passed to
    amortize work across consensus settings (they must match w, ms, n, prep).
    """
    k = len(ms)
    if k < 4:
        raise ValueError("need at least 4 measurements")
    if not (3 <= p.k_prime <= k):
        raise ValueError("k_prime must satisfy 3 <= k_prime <= k")

    t0 = time.perf_counter()
    spec = make_spec(aabb(w), n)
    if masks is None:
        masks = [compute_preimage(w, m, spec, prep) for m in ms]
    t1 = time.perf_counter()
    cons = consensus_mask(masks, p.k_prime)
    candidates = extract_candidates(cons, w, ms, p)
    t2 = time.perf_counter()

    return LocalizationResult(
        candidates=candidates,
        grid_n=n,
        timings={
            "preimage_ms": (t1 - t0) * 1e3,
            "fusion_ms": (t2 - t1) * 1e3,
            "total_ms": (t2 - t0) * 1e3,
        },
        masks_set_voxels=[m.count() for m in masks],
    )


def baseline_localize(
    w: Polygon,
    ms: Sequence[MeasurementSpec],
    n: int,
    prep: PreimageParams = PreimageParams(),
    masks: Optional[Sequence[VoxelMask]] = None,
    epsilon: Optional[float] = None,
) -> LocalizationResult:
    """Plain-intersection comparison baseline: consensus and agreement at k."""
    k = len(ms)
    if k < 4:
        raise ValueError("need at least 4 measurements")
    p = FusionParams(k_prime=k, epsilon=epsilon)
    return localize(w, ms, n, p, prep, masks)
