"""
Experiment configuration.

Config files are flat JSON objects. Every key is one of ``CONFIG_KEYS``;
anything else is rejected so that a typo in an ablation sweep fails loudly.
Unset alpha-BNN fields take per-algorithm defaults:

    ppo   alpha 0.5, tau 0.85, keep_prob 0.95, k_samples 25, l2_scale = keep_prob
    ddpg  alpha 0.5, tau 0.85, keep_prob 0.99, k_samples 50, l2_scale 0
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

from ..agents.ddpg import DDPGConfig
from ..agents.ppo import PPOConfig
from ..agents.value import MODES
from ..alpha_bnn import AlphaBnnConfig
from ..envs import ENVIRONMENTS

ALGORITHMS = ("ppo", "ddpg")
BNN_DEFAULTS = {
    "ppo": dict(alpha=0.5, tau=0.85, keep_prob=0.95, k_samples=25, l2_scale=None),
    "ddpg": dict(alpha=0.5, tau=0.85, keep_prob=0.99, k_samples=50, l2_scale=0.0),
}
DEFAULT_SEEDS = {"ppo": list(range(1, 11)), "ddpg": list(range(1, 6))}
DEFAULT_EVAL_EVERY = {"ppo": 2048, "ddpg": 1000}
SWEEPABLE = ("tau", "alpha", "keep_prob", "k_samples")


class ConfigError(ValueError):
    """Invalid or unreadable experiment configuration."""


@dataclass
class ExperimentConfig:
    algorithm: str = "ppo"
    mode: str = "alpha-bnn"
    env: str = "pointmass"
    seeds: list[int] = field(default_factory=list)
    total_timesteps: int = 100_000
    eval_every: Optional[int] = None
    output_dir: str = "runs/experiment"
    workers: int = 1
    record_wall_time: bool = False
    bnn: AlphaBnnConfig = field(default_factory=AlphaBnnConfig)
    ppo: PPOConfig = field(default_factory=PPOConfig)
    ddpg: DDPGConfig = field(default_factory=DDPGConfig)

    def __post_init__(self):
        self.validate()

    @property
    def iteration_steps(self) -> int:
        """Environment steps per CSV row (and per PPO rollout)."""
        if self.eval_every is not None:
            return int(self.eval_every)
        return DEFAULT_EVAL_EVERY[self.algorithm]

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.env not in ENVIRONMENTS:
            raise ConfigError(f"env must be one of {sorted(ENVIRONMENTS)}, got {self.env!r}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if any(int(s) != s or s < 0 for s in self.seeds):
            raise ConfigError(f"seeds must be nonnegative integers, got {self.seeds}")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError(f"seeds must be distinct, got {self.seeds}")
        if int(self.total_timesteps) != self.total_timesteps or self.total_timesteps <= 0:
            raise ConfigError(f"total_timesteps must be a positive integer, got {self.total_timesteps}")
        if self.eval_every is not None and self.eval_every <= 0:
            raise ConfigError("eval_every must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not isinstance(self.bnn, AlphaBnnConfig):
            raise ConfigError("mode alpha-bnn requires a full AlphaBnnConfig")

    def to_flat(self) -> dict[str, Any]:
        """Flat key/value view; the inverse of ``from_flat``."""
        flat: dict[str, Any] = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.name in _NESTED:
                for sub in dataclasses.fields(value):
                    v = getattr(value, sub.name)
                    flat[_NESTED[f.name].get(sub.name, sub.name)] = list(v) if isinstance(v, tuple) else v
            else:
                flat[f.name] = value
        return flat

    @classmethod
    def from_flat(cls, data: dict[str, Any]) -> "ExperimentConfig":
        unknown = sorted(set(data) - set(CONFIG_KEYS))
        if unknown:
            raise ConfigError(f"unknown config keys {unknown}; valid keys: {sorted(CONFIG_KEYS)}")
        algorithm = data.get("algorithm", "ppo")
        if algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {algorithm!r}")
        top, nested = {}, {name: {} for name in _NESTED}
        for key, value in data.items():
            owner, attr = CONFIG_KEYS[key]
            if owner is None:
                top[attr] = value
            else:
                nested[owner][attr] = tuple(value) if attr == "hidden" else value
        bnn_kw = dict(BNN_DEFAULTS[algorithm], **nested["bnn"])
        try:
            top.setdefault("seeds", list(DEFAULT_SEEDS[algorithm]))
            top["seeds"] = [int(s) for s in top["seeds"]]
            return cls(bnn=AlphaBnnConfig(**bnn_kw), ppo=PPOConfig(**nested["ppo"]),
                       ddpg=DDPGConfig(**nested["ddpg"]), **top)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    def replace(self, **flat_updates) -> "ExperimentConfig":
        return ExperimentConfig.from_flat({**self.to_flat(), **flat_updates})


# nested sub-configs, with file-key renames where field names would collide
_NESTED = {
    "bnn": {},
    "ppo": {"hidden": "ppo_hidden"},
    "ddpg": {"gamma": "ddpg_gamma", "hidden": "ddpg_hidden"},
}


def _build_keys() -> dict[str, tuple[Optional[str], str]]:
    keys: dict[str, tuple[Optional[str], str]] = {}
    for f in dataclasses.fields(ExperimentConfig):
        if f.name not in _NESTED:
            keys[f.name] = (None, f.name)
    for owner, cls in (("bnn", AlphaBnnConfig), ("ppo", PPOConfig), ("ddpg", DDPGConfig)):
        for f in dataclasses.fields(cls):
            keys[_NESTED[owner].get(f.name, f.name)] = (owner, f.name)
    return keys


CONFIG_KEYS = _build_keys()


def load_config(path: Union[str, os.PathLike]) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a flat JSON object")
    for key, value in data.items():
        if isinstance(value, dict):
            raise ConfigError(f"config key {key!r}: nested objects are not allowed")
    return ExperimentConfig.from_flat(data)
