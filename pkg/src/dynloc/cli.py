"""Command-line front end.

Verbs:
    localize    scene + measurement file -> ranked candidate poses
    simulate    one seeded trial (scene + obstacles + rays) -> summary + SVG
    experiment  config -> per-trial and aggregate CSVs
    render      scene -> SVG

Exit codes: 0 ok, 1 usage error, 2 input validation error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import fields, replace

from .fusion import FusionParams, localize
from .geometry import Point2, RigidMotion
from .harness import ExperimentConfig, run_experiment, run_trial
from .preimage import MeasurementSpec, PreimageParams
from .render import render_svg
from .scenes import SceneFormatError, resolve_scene


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_scene_arg(p):
    p.add_argument(
        "--scene",
        required=True,
        help="builtin name (square-room, lab-lidar-like, floor-plan-like, "
        "random) or a scene file path",
    )
    p.add_argument("--seed", type=int, default=0, help="seed for random generation")


def _load_measurements(path: str):
    """Measurement rows of tx,ty,rot,d (a non-numeric first row is skipped)."""
    ms = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise SceneFormatError(
                    "%s: line %d: expected tx,ty,rot,d" % (path, lineno)
                )
            try:
                tx, ty, rot, d = (float(v) for v in parts)
            except ValueError:
                if lineno == 1:
                    continue  # header row
                raise SceneFormatError(
                    "%s: line %d: non-numeric value" % (path, lineno)
                )
            ms.append(MeasurementSpec(RigidMotion(Point2(tx, ty), rot), d))
    if not ms:
        raise SceneFormatError("%s: no measurements" % path)
    return ms


def _print_candidates(result):
    print("candidates: %d" % len(result.candidates))
    for i, c in enumerate(result.candidates):
        print(
            "  #%d pose=(%.4f, %.4f, %.4f) agreement=%d component=%d"
            % (
                i,
                c.pose.position.x,
                c.pose.position.y,
                c.pose.theta,
                c.agreement_count,
                c.component_size,
            )
        )


def _cmd_localize(args) -> int:
    scene = resolve_scene(args.scene, seed=args.seed)
    ms = _load_measurements(args.measurements)
    params = FusionParams(
        k_prime=args.k_prime,
        epsilon=args.epsilon,
        delta_pos=args.delta_pos,
        delta_theta=args.delta_theta,
    )
    prep = PreimageParams(slack_extra=args.slack_extra, slope_bound=args.slope_bound)
    result = localize(scene.workspace, ms, args.n, params, prep)
    _print_candidates(result)
    if args.json:
        doc = {
            "candidates": [
                {
                    "pose": [c.pose.position.x, c.pose.position.y, c.pose.theta],
                    "agreement_count": c.agreement_count,
                    "component_size": c.component_size,
                }
                for c in result.candidates
            ],
            "grid_n": result.grid_n,
        }
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
    return 0


def _cmd_simulate(args) -> int:
    cfg = ExperimentConfig(
        scene_source=args.scene,
        m=args.m,
        k=args.k,
        k_prime=args.k_prime,
        n_values=(args.n,),
        trials=1,
        seed=args.seed,
    )
    cfg.validate()
    robust, baseline, details = run_trial(cfg, 0, args.n, keep_details=True)
    if details is None:
        print("trial skipped (scene or pose generation failed)", file=sys.stderr)
        return 3
    trial = details["trial"]
    print(
        "sparsity: %d/%d  robust: success=%s candidates=%d  baseline: success=%s"
        % (trial.sparsity, args.k, robust.success, robust.candidates, baseline.success)
    )
    if not math.isnan(robust.pos_error):
        print(
            "best robust candidate error: %.4f m, %.4f rad"
            % (robust.pos_error, robust.theta_error)
        )
    if args.svg:
        render_svg(trial.scene, trial, details["robust"], path=args.svg)
        print("wrote %s" % args.svg)
    return 0


def _config_from_args(args) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SceneFormatError(
                    "%s: line %d: %s" % (args.config, exc.lineno, exc.msg)
                )
        known = {f.name for f in fields(ExperimentConfig)}
        unknown = set(doc) - known
        if unknown:
            raise SceneFormatError(
                "unknown config fields: %s" % ", ".join(sorted(unknown))
            )
        for key in ("n_values", "obstacle_size_range"):
            if key in doc:
                doc[key] = tuple(doc[key])
        cfg = replace(cfg, **doc)
    overrides = {}
    for name in (
        "scene_source", "m", "k", "k_prime", "trials", "seed", "workers",
    ):
        v = getattr(args, name)
        if v is not None:
            overrides[name] = v
    if args.n is not None:
        overrides["n_values"] = tuple(args.n)
    if args.wall_timings:
        overrides["wall_timings"] = True
    return replace(cfg, **overrides)


def _cmd_experiment(args) -> int:
    cfg = _config_from_args(args)
    cfg.validate()
    records, aggregate = run_experiment(cfg, out_dir=args.out_dir)
    print(
        "%-9s %4s %4s %7s %8s" % ("method", "n", "m", "trials", "success%")
    )
    for row in aggregate:
        print(
            "%-9s %4d %4d %7d %8.1f"
            % (row["method"], row["n"], row["m"], row["trials"], row["success_rate"])
        )
    if args.out_dir:
        print("wrote %s/trials.csv and %s/aggregate.csv" % (args.out_dir, args.out_dir))
    return 0


def _cmd_render(args) -> int:
    scene = resolve_scene(args.scene, seed=args.seed)
    render_svg(scene, path=args.out)
    print("wrote %s" % args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dynloc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("localize", help="localize from a measurement file")
    _add_scene_arg(p)
    p.add_argument("--measurements", required=True, help="CSV rows of tx,ty,rot,d")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--k-prime", dest="k_prime", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--delta-pos", dest="delta_pos", type=float, default=None)
    p.add_argument("--delta-theta", dest="delta_theta", type=float, default=None)
    p.add_argument("--slack-extra", dest="slack_extra", type=float, default=0.0)
    p.add_argument("--slope-bound", dest="slope_bound", type=float, default=1.0)
    p.add_argument("--json", default=None, help="also write candidates as JSON")
    p.set_defaults(func=_cmd_localize)

    p = sub.add_parser("simulate", help="run one simulated trial")
    _add_scene_arg(p)
    p.add_argument("--m", type=int, default=10, help="dynamic obstacle count")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--k-prime", dest="k_prime", type=int, default=6)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--svg", default=None, help="write the scene rendering here")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("experiment", help="run a batch of trials to CSV")
    p.add_argument("--config", default=None, help="JSON file of config fields")
    p.add_argument("--scene-source", dest="scene_source", default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--k-prime", dest="k_prime", type=int, default=None)
    p.add_argument("--n", type=int, nargs="+", default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--wall-timings", dest="wall_timings", action="store_true")
    p.add_argument("--out-dir", dest="out_dir", default=None)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("render", help="render a scene to SVG")
    _add_scene_arg(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_render)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except SceneFormatError as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return 2
    except ValueError as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return 2
    except OSError as exc:
        print("failure: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
