"""Gaussian (PPO) and deterministic tanh-squashed (DDPG) policies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn import Gradients, MlpNet, backward, forward

LOG_2PI = np.log(2.0 * np.pi)


@dataclass
class GaussianPolicy:
    """Diagonal Gaussian with a state-dependent mean and a free log-std.

    Actions are sampled unclipped; clipping to ``[low, high]`` happens at the
    environment, and log-probabilities refer to the unclipped sample.
    """

    net: MlpNet
    log_std: np.ndarray
    low: float
    high: float

    @classmethod
    def init(cls, state_dim, action_dim, hidden, low, high, rng, log_std=0.0):
        net = MlpNet.init([state_dim, *hidden, action_dim], rng, output_scale=0.01)
        return cls(net, np.full(action_dim, float(log_std)), low, high)

    def mean(self, states) -> np.ndarray:
        return forward(self.net, states)

    def sample(self, states, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        mu = self.mean(states)
        actions = mu + np.exp(self.log_std) * rng.standard_normal(mu.shape)
        return actions, self._log_prob(mu, actions)

    def log_prob(self, states, actions) -> np.ndarray:
        return self._log_prob(self.mean(states), actions)

    def _log_prob(self, mu, actions) -> np.ndarray:
        z = (np.asarray(actions) - mu) * np.exp(-self.log_std)
        return -0.5 * np.sum(z * z, axis=-1) - np.sum(self.log_std) - 0.5 * mu.shape[-1] * LOG_2PI

    def act_deterministic(self, obs) -> np.ndarray:
        return np.clip(self.mean(obs), self.low, self.high)

    def copy(self) -> "GaussianPolicy":
        return GaussianPolicy(self.net.copy(), self.log_std.copy(), self.low, self.high)


@dataclass
class PolicyGradients:
    net: Gradients
    log_std: np.ndarray


@dataclass
class ClipStats:
    ratio: np.ndarray
    approx_kl: float
    clip_fraction: float


def ppo_clip_loss(policy: GaussianPolicy, states, actions, old_logp, advantages, clip_eps: float
                  ) -> tuple[float, PolicyGradients, ClipStats]:
    """Clipped surrogate ``-mean(min(r A, clip(r, 1-eps, 1+eps) A))`` and its gradients."""
    if clip_eps <= 0:
        raise ValueError("clip_eps must be positive")
    states = np.atleast_2d(states)
    actions = np.asarray(actions, dtype=np.float64).reshape(len(states), -1)
    old_logp = np.asarray(old_logp, dtype=np.float64)
    adv = np.asarray(advantages, dtype=np.float64)
    if not (len(actions) == len(old_logp) == len(adv) == len(states)):
        raise ValueError("states, actions, old_logp and advantages must have equal length")
    n = len(adv)

    mu = policy.mean(states)
    inv_std = np.exp(-policy.log_std)
    z = (actions - mu) * inv_std
    logp = policy._log_prob(mu, actions)
    with np.errstate(over="ignore"):
        ratio = np.exp(logp - old_logp)
    bad = np.flatnonzero(~np.isfinite(ratio))
    if bad.size:
        raise FloatingPointError(f"non-finite probability ratio at index {int(bad[0])}")

    clipped = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps)
    unclipped_obj = ratio * adv
    clipped_obj = clipped * adv
    loss = -float(np.mean(np.minimum(unclipped_obj, clipped_obj)))

    # gradient flows only where the unclipped branch attains the minimum
    active = unclipped_obj <= clipped_obj
    dlogp = np.where(active, -adv * ratio / n, 0.0)  # dloss/dlogp
    dmu = dlogp[:, None] * z * inv_std
    dlog_std = np.sum(dlogp[:, None] * (z * z - 1.0), axis=0)
    net_grads = backward(policy.net, states, None, dmu)
    grads = PolicyGradients(Gradients(net_grads.weights, net_grads.biases), dlog_std)

    stats = ClipStats(
        ratio=ratio,
        approx_kl=float(np.mean(old_logp - logp)),
        clip_fraction=float(np.mean(np.abs(ratio - 1.0) > clip_eps)),
    )
    return loss, grads, stats


@dataclass
class DeterministicPolicy:
    """``mu(s) = mid + half_range * tanh(net(s))``, always inside the bounds."""

    net: MlpNet
    low: float
    high: float

    @classmethod
    def init(cls, state_dim, action_dim, hidden, low, high, rng):
        net = MlpNet.init([state_dim, *hidden, action_dim], rng, output_scale=0.1)
        return cls(net, low, high)

    @property
    def _mid(self):
        return 0.5 * (self.high + self.low)

    @property
    def _half(self):
        return 0.5 * (self.high - self.low)

    def __call__(self, states) -> np.ndarray:
        return self._mid + self._half * np.tanh(forward(self.net, states))

    def backward(self, states, action_grad) -> Gradients:
        """Parameter gradients of ``sum(action_grad * mu(states))``."""
        pre = forward(self.net, states)
        g = np.asarray(action_grad) * self._half * (1.0 - np.tanh(pre) ** 2)
        return backward(self.net, states, None, g)

    def copy(self) -> "DeterministicPolicy":
        return DeterministicPolicy(self.net.copy(), self.low, self.high)
