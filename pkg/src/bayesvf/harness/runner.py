"""
Multi-seed experiment execution.

One trial per seed. Each trial writes ``seed_<n>.csv`` (one row per
iteration) and ``resets_seed_<n>.csv`` (every episode reset seed and initial
observation, for checking that runs in different modes saw the same
environment draws). The experiment writes ``summary.json``.

After every iteration the greedy policy (mean action for PPO, actor output
for DDPG) is evaluated on ``EVAL_EPISODES`` fresh episodes; a seed's final
score is the mean return of the last ``EVAL_EPISODES`` evaluation episodes,
which is the ``episode_return_mean`` of its last CSV row.
"""

from __future__ import annotations

import csv
import json
import logging
import tempfile
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..agents.ddpg import DDPGAgent
from ..agents.ppo import PPOAgent
from ..envs import make_env, rollout_return
from ..rng import RngStreams
from .config import SWEEPABLE, ConfigError, ExperimentConfig
from .records import CSV_COLUMNS, RunRecord, write_csv
from .stats import standard_error, summarize

log = logging.getLogger(__name__)

EVAL_EPISODES = 10


@dataclass
class TrialResult:
    seed: int
    records: list[RunRecord]
    final_score: float
    resets: list[tuple[str, int, np.ndarray]]
    wall_time_s: float = 0.0
    q_trace: list[float] = field(default_factory=list)


def make_agent(cfg: ExperimentConfig, spec, streams: RngStreams):
    if cfg.algorithm == "ppo":
        return PPOAgent(spec, cfg.mode, cfg.bnn, cfg.ppo, streams)
    return DDPGAgent(spec, cfg.mode, cfg.bnn, cfg.ddpg, streams)


def run_trial(cfg: ExperimentConfig, seed: int) -> TrialResult:
    """Train one agent on one seed and evaluate it after every iteration."""
    start = time.perf_counter()
    streams = RngStreams.from_seed(seed)
    env = make_env(cfg.env)
    eval_env = make_env(cfg.env)
    resets: list[tuple[str, int, np.ndarray]] = []

    def seed_for(purpose: str):
        def draw() -> int:
            s = int(streams.env_init.integers(2**31))
            resets.append((purpose, s, make_env(cfg.env).reset(s)))
            return s
        return draw

    train_seed, eval_seed = seed_for("train"), seed_for("eval")
    agent = make_agent(cfg, env.spec, streams)
    if cfg.algorithm == "ppo":
        greedy = agent.policy.act_deterministic
    else:
        greedy = agent.act

    records: list[RunRecord] = []
    eval_returns: list[float] = []
    timesteps = 0
    iteration = 0
    while timesteps < cfg.total_timesteps:
        n = min(cfg.iteration_steps, cfg.total_timesteps - timesteps)
        if cfg.algorithm == "ppo":
            if cfg.ppo.anneal_lr:
                agent.set_lr_fraction(1.0 - timesteps / cfg.total_timesteps)
            report = agent.update(agent.collect(env, n, train_seed))
        else:
            report = agent.step(env, n, train_seed)
        timesteps += n
        iteration += 1
        returns = [rollout_return(eval_env, eval_seed(), greedy) for _ in range(EVAL_EPISODES)]
        eval_returns.extend(returns)
        records.append(RunRecord(
            seed=seed, iteration=iteration, timesteps=timesteps,
            episode_return_mean=float(np.mean(returns)),
            episode_return_stderr=standard_error(returns),
            value_loss=report.value_loss, policy_loss=report.policy_loss,
            approx_kl=report.approx_kl, clip_fraction=report.clip_fraction,
            q_estimate_mean=report.q_estimate,
            wall_time_s=(time.perf_counter() - start) if cfg.record_wall_time else None,
        ))
        log.info("seed %d iter %d steps %d return %.3f", seed, iteration, timesteps, records[-1].episode_return_mean)
    final = float(np.mean(eval_returns[-EVAL_EPISODES:]))
    q_trace = [r.q_estimate_mean for r in records if r.q_estimate_mean is not None]
    return TrialResult(seed, records, final, resets, time.perf_counter() - start, q_trace)


def write_resets(path, resets) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        dim = len(resets[0][2]) if resets else 0
        w.writerow(["index", "purpose", "reset_seed"] + [f"obs_{i}" for i in range(dim)])
        for i, (purpose, s, obs) in enumerate(resets):
            w.writerow([i, purpose, s] + [repr(float(v)) for v in obs])


def check_writable(directory) -> Path:
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=out, prefix=".probe"):
            pass
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc}") from exc
    return out


def _trial_job(args):
    cfg, seed = args
    try:
        return run_trial(cfg, seed), None
    except Exception as exc:  # one failed seed must not take down its siblings
        return None, "".join(traceback.format_exception_only(type(exc), exc)).strip()


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    trials: dict[int, TrialResult]
    errors: dict[int, str]
    summary: dict

    @property
    def final_scores(self) -> dict[int, float]:
        return {s: t.final_score for s, t in self.trials.items()}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run every seed, write per-seed CSVs and ``summary.json``."""
    cfg.validate()
    out = check_writable(cfg.output_dir)
    jobs = [(cfg, s) for s in cfg.seeds]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(jobs))) as pool:
            results = list(pool.map(_trial_job, jobs))
    else:
        results = [_trial_job(j) for j in jobs]

    trials, errors = {}, {}
    for seed, (trial, err) in zip(cfg.seeds, results):
        if err is not None:
            errors[seed] = err
            log.error("seed %d failed: %s", seed, err)
            continue
        trials[seed] = trial
        write_csv(out / f"seed_{seed}.csv", trial.records)
        write_resets(out / f"resets_seed_{seed}.csv", trial.resets)

    finals = {s: t.final_score for s, t in trials.items()}
    summary = {
        "config": cfg.to_flat(),
        "final_scores": {str(s): v for s, v in finals.items()},
        "seed_errors": [{"seed": s, "error": e} for s, e in errors.items()],
    }
    if len(finals) >= 2:
        summary["report"] = summarize({cfg.mode: finals}).to_dict()
    if cfg.record_wall_time:
        summary["wall_time_s"] = {str(s): t.wall_time_s for s, t in trials.items()}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return ExperimentResult(cfg, trials, errors, summary)


def check_sweep_param(cfg: ExperimentConfig, param: str) -> None:
    if param not in SWEEPABLE:
        raise ConfigError(f"cannot sweep {param!r}; valid parameters: {list(SWEEPABLE)}")
    applies = {
        "deterministic": {"tau"},
        "l2-only": {"tau"} | ({"keep_prob"} if cfg.bnn.l2_scale is None else set()),
        "alpha-bnn": set(SWEEPABLE),
    }[cfg.mode]
    if param not in applies:
        raise ConfigError(f"parameter {param!r} has no effect in mode {cfg.mode!r}")


def sweep(base: ExperimentConfig, param: str, values: Sequence) -> dict:
    """One ``run_experiment`` per value, shared seeds; writes ``sweep_<param>.csv``."""
    check_sweep_param(base, param)
    if not values:
        raise ConfigError("sweep needs at least one value")
    root = check_writable(base.output_dir)
    per_value = {}
    rows = []
    for value in values:
        cfg = base.replace(**{param: value, "output_dir": str(root / f"{param}={value}")})
        res = run_experiment(cfg)
        per_value[value] = res
        for seed in sorted(res.trials):
            for rec in res.trials[seed].records:
                rows.append([param, repr(value)] + [_cell(v) for v in vars(rec).values()])
    with open(root / f"sweep_{param}.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["parameter", "value", *CSV_COLUMNS])
        w.writerows(rows)
    summary = {
        "parameter": param,
        "values": [
            {"value": v, "final_scores": {str(s): x for s, x in r.final_scores.items()},
             "mean": float(np.mean(list(r.final_scores.values()))) if r.final_scores else None,
             "seed_errors": [{"seed": s, "error": e} for s, e in r.errors.items()]}
            for v, r in per_value.items()
        ],
    }
    (root / f"sweep_{param}.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return {"summary": summary, "results": per_value}


def _cell(v) -> str:
    if v is None:
        return ""
    return str(v) if isinstance(v, int) else repr(float(v))
