"""
Generalized advantage estimation, with a posterior-mean (Bayesian) variant.

GAE is affine in the value estimates, so the expectation of the advantage
over the dropout posterior equals GAE evaluated at the posterior-mean values.
``bayesian_values`` provides those means; ``gae`` is unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .alpha_bnn import AlphaBnnConfig, posterior_predict
from .nn import MlpNet


@dataclass
class Trajectory:
    """One contiguous rollout segment.

    ``dones[t]`` marks that ``s_{t+1}`` is terminal. ``last_value`` is V of the
    state following the final step; it is ignored when the final step is done.
    """

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    dones: np.ndarray
    logps: np.ndarray
    values: np.ndarray
    last_value: float = 0.0
    final_state: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.states = np.atleast_2d(np.asarray(self.states, dtype=np.float64))
        self.actions = np.asarray(self.actions, dtype=np.float64).reshape(len(self.actions), -1)
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        self.dones = np.asarray(self.dones, dtype=bool)
        self.logps = np.asarray(self.logps, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        t = len(self.rewards)
        if t < 1:
            raise ValueError("trajectory must contain at least one step")
        lengths = {
            "states": len(self.states),
            "actions": len(self.actions),
            "dones": len(self.dones),
            "logps": len(self.logps),
            "values": len(self.values),
        }
        bad = {k: v for k, v in lengths.items() if v != t}
        if bad:
            raise ValueError(f"trajectory length mismatch: rewards has {t}, {bad}")
        if not np.all(np.isfinite(self.logps)):
            raise ValueError("trajectory log-probabilities must be finite")

    def __len__(self) -> int:
        return len(self.rewards)


@dataclass
class AdvantageSet:
    advantages: np.ndarray
    value_targets: np.ndarray
    gamma: float
    lam: float


def gae(traj: Trajectory, gamma: float, lam: float) -> AdvantageSet:
    """Backward-recursive GAE(gamma, lambda); targets are the lambda-returns."""
    if not (0.0 <= gamma <= 1.0 and 0.0 <= lam <= 1.0):
        raise ValueError(f"gamma and lam must lie in [0, 1], got {gamma}, {lam}")
    v = traj.values
    r = traj.rewards
    nonterminal = 1.0 - traj.dones.astype(np.float64)
    next_v = np.append(v[1:], traj.last_value)
    deltas = r + gamma * next_v * nonterminal - v
    adv = np.empty_like(deltas)
    running = 0.0
    for t in range(len(r) - 1, -1, -1):
        running = deltas[t] + gamma * lam * nonterminal[t] * running
        adv[t] = running
    return AdvantageSet(adv, adv + v, gamma, lam)


def bayesian_values(net: MlpNet, cfg: AlphaBnnConfig, states, rng: np.random.Generator) -> np.ndarray:
    """Posterior-mean value of each state; one set of K masks for the batch."""
    est = posterior_predict(net, cfg, np.atleast_2d(states), rng)
    return est.mean[..., 0]


def normalize_advantages(adv, floor: float = 1e-8) -> np.ndarray:
    """Zero mean, unit variance; the variance floor keeps constant inputs finite."""
    a = np.asarray(adv, dtype=np.float64)
    if a.size < 2:
        raise ValueError("need at least two advantages to normalize")
    centered = a - a.mean()
    return centered / np.sqrt(max(centered.var(), floor))
