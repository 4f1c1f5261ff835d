"""Configuration, multi-seed runs, sweeps, CSV/JSON output and statistics."""

from .config import CONFIG_KEYS, SWEEPABLE, ConfigError, ExperimentConfig, load_config
from .records import CSV_COLUMNS, RunRecord, read_csv, seed_csvs, write_csv
from .runner import EVAL_EPISODES, ExperimentResult, TrialResult, run_experiment, run_trial, sweep
from .stats import ComparisonReport, DegenerateVarianceError, standard_error, summarize, welch_ttest

__all__ = [
    "CONFIG_KEYS", "SWEEPABLE", "ConfigError", "ExperimentConfig", "load_config", "CSV_COLUMNS",
    "RunRecord", "read_csv", "seed_csvs", "write_csv", "EVAL_EPISODES", "ExperimentResult",
    "TrialResult", "run_experiment", "run_trial", "sweep", "ComparisonReport",
    "DegenerateVarianceError", "standard_error", "summarize", "welch_ttest",
]
