"""Per-iteration metric rows and their CSV form."""

from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import Iterable, Optional

CSV_COLUMNS = (
    "seed", "iteration", "timesteps", "episode_return_mean", "episode_return_stderr",
    "value_loss", "policy_loss", "approx_kl", "clip_fraction", "q_estimate_mean", "wall_time_s",
)


@dataclass
class RunRecord:
    seed: int
    iteration: int
    timesteps: int
    episode_return_mean: float
    episode_return_stderr: float
    value_loss: Optional[float] = None
    policy_loss: Optional[float] = None
    approx_kl: Optional[float] = None
    clip_fraction: Optional[float] = None
    q_estimate_mean: Optional[float] = None
    wall_time_s: Optional[float] = None

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if v is not None and not math.isfinite(v):
                raise ValueError(f"RunRecord.{f.name} is not finite: {v}")


assert tuple(f.name for f in fields(RunRecord)) == CSV_COLUMNS


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def check_monotone(records: Iterable[RunRecord]) -> None:
    """Cumulative timesteps must strictly increase within each seed."""
    last: dict[int, int] = {}
    for rec in records:
        if rec.seed in last and rec.timesteps <= last[rec.seed]:
            raise ValueError(f"seed {rec.seed}: timesteps {rec.timesteps} after {last[rec.seed]}")
        last[rec.seed] = rec.timesteps


def write_csv(path, records: Iterable[RunRecord]) -> None:
    records = list(records)
    check_monotone(records)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow([_fmt(v) for v in astuple(rec)])


def read_csv(path) -> list[RunRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"{path}: header {header} does not match {list(CSV_COLUMNS)}")
        out = []
        for row in reader:
            vals = [None if cell == "" else cell for cell in row]
            ints = [int(v) for v in vals[:3]]
            floats = [None if v is None else float(v) for v in vals[3:]]
            out.append(RunRecord(*ints, *floats))
    return out


def seed_csvs(directory) -> dict[int, Path]:
    """``seed_<n>.csv`` files in a run directory, keyed by seed."""
    out = {}
    for p in sorted(Path(directory).glob("seed_*.csv")):
        try:
            out[int(p.stem.split("_", 1)[1])] = p
        except ValueError:
            continue
    return out
