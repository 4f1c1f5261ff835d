"""
Command-line entry point.

    bayesvf train CONFIG [--output-dir DIR] [--seeds 1 2 3] [--workers N]
    bayesvf sweep CONFIG --param tau --values 0.5 0.85 1.5
    bayesvf stats DIR [--baseline deterministic] [--json OUT]
    bayesvf baseline --env pointmass [--seed 0] [--episodes 100]

Exit codes: 0 success, 1 config error, 2 every seed failed, 3 some seeds failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from ..envs import ENVIRONMENTS, make_env, random_policy_baseline
from .config import SWEEPABLE, ConfigError, ExperimentConfig, load_config
from .records import read_csv, seed_csvs
from .runner import run_experiment, sweep
from .stats import summarize

EXIT_OK, EXIT_CONFIG, EXIT_ALL_FAILED, EXIT_PARTIAL = 0, 1, 2, 3


def _exit_code(n_seeds: int, n_failed: int) -> int:
    if n_failed == 0:
        return EXIT_OK
    return EXIT_ALL_FAILED if n_failed == n_seeds else EXIT_PARTIAL


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    updates = {}
    if args.output_dir is not None:
        updates["output_dir"] = args.output_dir
    if args.seeds is not None:
        updates["seeds"] = args.seeds
    if args.workers is not None:
        updates["workers"] = args.workers
    return cfg.replace(**updates) if updates else cfg


def _parse_value(param: str, raw: str):
    return int(raw) if param == "k_samples" else float(raw)


def cmd_train(args) -> int:
    cfg = _load(args)
    res = run_experiment(cfg)
    for seed in sorted(res.final_scores):
        print(f"seed {seed}: final return {res.final_scores[seed]:.4f}")
    for seed, err in res.errors.items():
        print(f"seed {seed}: FAILED {err}", file=sys.stderr)
    print(f"wrote {Path(cfg.output_dir) / 'summary.json'}")
    return _exit_code(len(cfg.seeds), len(res.errors))


def cmd_sweep(args) -> int:
    cfg = _load(args)
    try:
        values = [_parse_value(args.param, v) for v in args.values]
    except ValueError as exc:
        raise ConfigError(f"bad sweep value: {exc}") from exc
    out = sweep(cfg, args.param, values)
    n_seeds = n_failed = 0
    for row in out["summary"]["values"]:
        mean = row["mean"]
        print(f"{args.param}={row['value']}: mean final return "
              f"{'n/a' if mean is None else f'{mean:.4f}'}")
        n_seeds += len(cfg.seeds)
        n_failed += len(row["seed_errors"])
    return _exit_code(n_seeds, n_failed)


def load_final_scores(directory) -> dict[str, dict[int, float]]:
    """Final score per seed (last row's ``episode_return_mean``), grouped by variant.

    A directory holding ``seed_*.csv`` files is one variant, named by the
    ``mode`` in its ``summary.json`` or else by the directory name. Otherwise
    each immediate subdirectory with seed CSVs is a variant.
    """
    root = Path(directory)
    if not root.is_dir():
        raise ConfigError(f"{root} is not a directory")
    dirs = [root] if seed_csvs(root) else sorted(p for p in root.iterdir() if p.is_dir() and seed_csvs(p))
    if not dirs:
        raise ConfigError(f"no seed_*.csv files under {root}")
    scores: dict[str, dict[int, float]] = {}
    for d in dirs:
        name = d.name
        summary = d / "summary.json"
        if summary.exists():
            name = json.loads(summary.read_text()).get("config", {}).get("mode", name)
        if name in scores:
            name = d.name
        scores[name] = {}
        for seed, path in seed_csvs(d).items():
            rows = read_csv(path)
            if rows:
                scores[name][seed] = rows[-1].episode_return_mean
    return scores


def cmd_stats(args) -> int:
    scores = load_final_scores(args.directory)
    try:
        report = summarize(scores, baseline=args.baseline)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    if args.json:
        Path(args.json).write_text(text + "\n")
    else:
        print(text)
    print(report.table())
    return EXIT_OK


def cmd_baseline(args) -> int:
    envs = [args.env] if args.env else sorted(ENVIRONMENTS)
    result = {}
    for name in envs:
        try:
            env = make_env(name)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        result[name] = random_policy_baseline(env, args.seed, args.episodes)
        print(f"{name}: random-policy mean return {result[name]!r} ({args.episodes} episodes, seed {args.seed})")
    if args.json:
        Path(args.json).write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bayesvf", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-iteration progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def run_args(p):
        p.add_argument("config", help="flat JSON config file")
        p.add_argument("--output-dir")
        p.add_argument("--seeds", type=int, nargs="+")
        p.add_argument("--workers", type=int)

    p = sub.add_parser("train", help="run one config over its seeds")
    run_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="run one config per parameter value")
    run_args(p)
    p.add_argument("--param", required=True, help=f"one of {', '.join(SWEEPABLE)}")
    p.add_argument("--values", required=True, nargs="+")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("stats", help="compare variants from a directory of run CSVs")
    p.add_argument("directory")
    p.add_argument("--baseline", default="deterministic")
    p.add_argument("--json", help="write the report JSON here instead of stdout")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("baseline", help="random-policy return calibration")
    p.add_argument("--env", help="environment id (default: all)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--json")
    p.set_defaults(func=cmd_baseline)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; here 2 means every seed failed
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
