"""Experiment runner: seeded trials, success scoring, CSV reports.

Trials are pure functions of (config, trial index, resolution), so runs are
reproducible byte-for-byte regardless of worker count; rows are buffered and
written in trial order.
"""
from __future__ import annotations

import concurrent.futures
import math
import os
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .fusion import FusionParams, LocalizationResult, localize
from .geometry import Pose, aabb, circular_difference
from .preimage import PreimageParams, compute_preimage
from .scenes import builtin_scene, BUILTIN_SCENES, load_scene
from .simworld import (
    Scene,
    TrialSetup,
    make_trial,
    random_obstacles,
    random_polygon,
    sample_free_pose,
)
from .voxelgrid import make_spec

TRIAL_CSV_HEADER = (
    "trial,seed,method,n,m,k,k_prime,sparsity,success,pos_error,theta_error,"
    "candidates,preimage_ms,fusion_ms,total_ms"
)
AGGREGATE_CSV_HEADER = (
    "method,n,m,trials,skipped,success_rate,mean_pos_error,mean_theta_error,"
    "mean_sparsity"
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a trial needs; all fields have CLI/JSON counterparts."""

    scene_source: str = "random"
    m: int = 10
    k: int = 10
    k_prime: int = 6
    n_values: Tuple[int, ...] = (64,)
    trials: int = 50
    seed: int = 0
    success_pos_tol: float = 2.0  # multiples of the voxel xy diagonal
    success_theta_tol: float = 2.0  # multiples of the angular cell
    epsilon: Optional[float] = None
    delta_pos: Optional[float] = None
    delta_theta: Optional[float] = None
    slack_extra: float = 0.0
    slope_bound: float = 1.0
    eps_meas: float = 0.0
    clearance_voxels: float = 2.0
    obstacle_size_range: Tuple[float, float] = (0.004, 0.016)
    poly_vertices: int = 16
    poly_radius: float = 5.0
    poly_jitter: float = 0.25
    workers: int = 1
    wall_timings: bool = False

    def validate(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.k < 4:
            raise ValueError("k must be >= 4")
        if not (3 <= self.k_prime <= self.k):
            raise ValueError("k_prime must satisfy 3 <= k_prime <= k")


@dataclass
class TrialRecord:
    trial: int
    seed: int
    scene_id: str
    method: str  # "robust" | "baseline"
    n: int
    m: int
    k: int
    k_prime: int
    sparsity: int
    success: bool
    pos_error: float
    theta_error: float
    candidates: int
    preimage_ms: float
    fusion_ms: float
    total_ms: float
    skipped: bool = False


def _trial_seed(cfg: ExperimentConfig, trial_index: int) -> int:
    return cfg.seed * 1_000_003 + trial_index


def build_trial_scene(cfg: ExperimentConfig, trial_index: int) -> Tuple[Scene, str]:
    """Per-trial scene: fixed workspace for builtins/files, fresh random
    polygon otherwise, with per-trial random obstacles either way."""
    seed = _trial_seed(cfg, trial_index)
    if cfg.scene_source in BUILTIN_SCENES:
        scene = builtin_scene(cfg.scene_source)
        scene_id = cfg.scene_source
    elif cfg.scene_source == "random":
        scene = Scene(
            random_polygon(
                np.random.SeedSequence([seed, 0]),
                cfg.poly_vertices,
                cfg.poly_radius,
                cfg.poly_jitter,
            )
        )
        scene_id = "random"
    else:
        scene = load_scene(cfg.scene_source)
        scene_id = os.path.basename(cfg.scene_source)
    scene.obstacles = random_obstacles(
        np.random.SeedSequence([seed, 1]),
        scene.workspace,
        cfg.m,
        cfg.obstacle_size_range,
    )
    return scene, scene_id


def _score(
    result: LocalizationResult, q_star: Pose, pos_tol: float, theta_tol: float
) -> Tuple[bool, float, float]:
    """Success plus the best candidate's errors (nan when empty)."""
    best = None
    success = False
    for cand in result.candidates:
        dp = math.hypot(
            cand.pose.position.x - q_star.position.x,
            cand.pose.position.y - q_star.position.y,
        )
        dth = circular_difference(cand.pose.theta, q_star.theta)
        if dp <= pos_tol and dth <= theta_tol:
            success = True
        score = dp / pos_tol + dth / theta_tol
        if best is None or score < best[0]:
            best = (score, dp, dth)
    if best is None:
        return False, math.nan, math.nan
    return success, best[1], best[2]


def run_trial(
    cfg: ExperimentConfig,
    trial_index: int,
    n: int,
    keep_details: bool = False,
):
    """One seeded trial: scene, pose, measurements, both methods.

    Returns (robust_record, baseline_record) or, with keep_details, a third
    element holding the trial setup and both localization results.  Scene or
    pose generation failures yield skipped records instead of raising.
    """
    seed = _trial_seed(cfg, trial_index)
    prep = PreimageParams(slack_extra=cfg.slack_extra, slope_bound=cfg.slope_bound)

    def skipped(method):
        return TrialRecord(
            trial_index, seed, "-", method, n, cfg.m, cfg.k, cfg.k_prime,
            0, False, math.nan, math.nan, 0, 0.0, 0.0, 0.0, skipped=True,
        )

    try:
        scene, scene_id = build_trial_scene(cfg, trial_index)
        spec = make_spec(aabb(scene.workspace), n)
        clearance = cfg.clearance_voxels * spec.xy_diagonal()
        q_star = sample_free_pose(
            np.random.SeedSequence([seed, 2]), scene, 0.0, clearance
        )
        trial = make_trial(scene, q_star, cfg.k, 0.0, cfg.eps_meas)
    except ValueError:
        out = (skipped("robust"), skipped("baseline"))
        return out + (None,) if keep_details else out

    w = scene.workspace
    masks = [compute_preimage(w, m, spec, prep) for m in trial.measurements]
    robust_params = FusionParams(
        k_prime=cfg.k_prime,
        epsilon=cfg.epsilon,
        delta_pos=cfg.delta_pos,
        delta_theta=cfg.delta_theta,
    )
    baseline_params = replace(robust_params, k_prime=cfg.k)
    robust = localize(w, trial.measurements, n, robust_params, prep, masks=masks)
    baseline = localize(w, trial.measurements, n, baseline_params, prep, masks=masks)

    pos_tol = cfg.success_pos_tol * spec.xy_diagonal()
    theta_tol = cfg.success_theta_tol * spec.cell_dtheta
    records = []
    for method, result in (("robust", robust), ("baseline", baseline)):
        success, dp, dth = _score(result, q_star, pos_tol, theta_tol)
        timings = result.timings if cfg.wall_timings else {}
        records.append(
            TrialRecord(
                trial=trial_index,
                seed=seed,
                scene_id=scene_id,
                method=method,
                n=n,
                m=cfg.m,
                k=cfg.k,
                k_prime=cfg.k_prime if method == "robust" else cfg.k,
                sparsity=trial.sparsity,
                success=success,
                pos_error=dp,
                theta_error=dth,
                candidates=len(result.candidates),
                preimage_ms=timings.get("preimage_ms", 0.0),
                fusion_ms=timings.get("fusion_ms", 0.0),
                total_ms=timings.get("total_ms", 0.0),
            )
        )
    if keep_details:
        details = {"trial": trial, "robust": robust, "baseline": baseline, "spec": spec}
        return records[0], records[1], details
    return records[0], records[1]


def _run_trial_job(args):
    cfg, trial_index, n = args
    return run_trial(cfg, trial_index, n)


def run_experiment(
    cfg: ExperimentConfig, out_dir: Optional[str] = None
) -> Tuple[List[TrialRecord], List[dict]]:
    """All trials for every resolution, plus the aggregate table.

    Writes trials.csv and aggregate.csv under out_dir when given.
    """
    cfg.validate()
    jobs = [(cfg, i, n) for n in cfg.n_values for i in range(cfg.trials)]
    if cfg.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            pairs = list(pool.map(_run_trial_job, jobs, chunksize=1))
    else:
        pairs = [_run_trial_job(j) for j in jobs]
    records: List[TrialRecord] = []
    for robust, baseline in pairs:
        records.append(robust)
        records.append(baseline)

    aggregate = aggregate_records(records)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_trials_csv(records, os.path.join(out_dir, "trials.csv"))
        write_aggregate_csv(aggregate, os.path.join(out_dir, "aggregate.csv"))
    return records, aggregate


def aggregate_records(records: Sequence[TrialRecord]) -> List[dict]:
    """Success rate (%), mean errors, and mean sparsity per (method, n, m)."""
    keys = sorted({(r.method, r.n, r.m) for r in records})
    rows = []
    for method, n, m in keys:
        group = [r for r in records if (r.method, r.n, r.m) == (method, n, m)]
        live = [r for r in group if not r.skipped]
        successes = [r.success for r in live]
        pos = [r.pos_error for r in live if not math.isnan(r.pos_error)]
        th = [r.theta_error for r in live if not math.isnan(r.theta_error)]
        rows.append(
            {
                "method": method,
                "n": n,
                "m": m,
                "trials": len(live),
                "skipped": len(group) - len(live),
                "success_rate": 100.0 * sum(successes) / len(live) if live else math.nan,
                "mean_pos_error": sum(pos) / len(pos) if pos else math.nan,
                "mean_theta_error": sum(th) / len(th) if th else math.nan,
                "mean_sparsity": sum(r.sparsity for r in live) / len(live)
                if live
                else math.nan,
            }
        )
    return rows


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def write_trials_csv(records: Sequence[TrialRecord], path: str) -> None:
    lines = [TRIAL_CSV_HEADER]
    for r in records:
        lines.append(
            ",".join(
                _fmt(v)
                for v in (
                    r.trial, r.seed, r.method, r.n, r.m, r.k, r.k_prime,
                    r.sparsity, r.success, r.pos_error, r.theta_error,
                    r.candidates, r.preimage_ms, r.fusion_ms, r.total_ms,
                )
            )
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_aggregate_csv(rows: Sequence[dict], path: str) -> None:
    lines = [AGGREGATE_CSV_HEADER]
    for row in rows:
        lines.append(
            ",".join(
                _fmt(row[k])
                for k in (
                    "method", "n", "m", "trials", "skipped", "success_rate",
                    "mean_pos_error", "mean_theta_error", "mean_sparsity",
                )
            )
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
