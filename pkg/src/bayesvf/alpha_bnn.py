"""
Monte Carlo alpha-divergence dropout objective.

A network trained with dropout is read as a variational posterior over its
weights. Fitting it by minimizing the MC alpha-energy

    L = -(1/alpha) * sum_n [ logsumexp_k( -(alpha*tau/2) * ||y_n - f_k(x_n)||^2 ) - log K ]
        + (N*D/2) * log(tau) + l2 * sum_i ||M_i||^2

where f_k is the network under the k-th dropout mask, gives an "alpha-BNN".
Predictions are the posterior mean over K fresh stochastic passes.

As alpha -> 0 the data term becomes the average squared error over masks
(plain MC dropout); as alpha grows it tends to the best single mask.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .nn import (DropoutMask, Gradients, MlpNet, NonFiniteError, backward_from_cache, forward,
                 forward_with_cache, l2_penalty)


@dataclass(frozen=True)
class AlphaBnnConfig:
    """Hyperparameters of the alpha-energy.

    ``l2_scale=None`` ties the weight penalty to ``keep_prob``.
    """

    alpha: float = 0.5
    tau: float = 0.85
    k_samples: int = 50
    keep_prob: float = 0.95
    l2_scale: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.alpha:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.tau > 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if int(self.k_samples) != self.k_samples or self.k_samples < 1:
            raise ValueError(f"k_samples must be a positive integer, got {self.k_samples}")
        if not 0.0 < self.keep_prob <= 1.0:
            raise ValueError(f"keep_prob must lie in (0, 1], got {self.keep_prob}")
        if self.l2_scale is not None and self.l2_scale < 0:
            raise ValueError(f"l2_scale must be nonnegative, got {self.l2_scale}")

    @property
    def l2(self) -> float:
        return self.keep_prob if self.l2_scale is None else float(self.l2_scale)


@dataclass(frozen=True)
class PosteriorEstimate:
    """K stochastic outputs with their mean and population variance (axis 0)."""

    samples: np.ndarray
    mean: np.ndarray
    variance: np.ndarray

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> "PosteriorEstimate":
        samples = np.asarray(samples, dtype=np.float64)
        # shifting by one sample keeps identical samples exact (zero variance)
        dev = samples - samples[0]
        mean_dev = dev.mean(axis=0)
        mean = samples[0] + mean_dev
        variance = np.mean((dev - mean_dev) ** 2, axis=0)
        return cls(samples, mean, variance)


def logsumexp(values, axis: Optional[int] = None) -> np.ndarray:
    """Max-shifted ``log(sum(exp(values)))``."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("logsumexp of an empty sequence")
    m = np.max(v, axis=axis, keepdims=True)
    # an all -inf slice would give inf - inf
    m = np.where(np.isfinite(m), m, 0.0)
    out = np.log(np.sum(np.exp(v - m), axis=axis, keepdims=True)) + m
    if axis is None:
        return out.reshape(())[()]
    return np.squeeze(out, axis=axis)


def softmax(values, axis: int = 0) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    e = np.exp(v - np.max(v, axis=axis, keepdims=True))
    return e / np.sum(e, axis=axis, keepdims=True)


def sample_masks(net: MlpNet, cfg: AlphaBnnConfig, rng: np.random.Generator) -> DropoutMask:
    """Draw K masks with leading shape ``(K, 1)``: shared by every input row."""
    return DropoutMask.sample(net, cfg.keep_prob, rng, batch_shape=(cfg.k_samples, 1))


def _mask_count(masks: Optional[DropoutMask]) -> int:
    if masks is None:
        return 1
    k = masks.layers[0].shape[0] if masks.layers and masks.layers[0].ndim > 1 else 1
    if k < 1:
        raise ValueError("alpha-energy needs at least one dropout mask")
    return k


def _as_kmask(masks: Optional[DropoutMask]) -> Optional[DropoutMask]:
    # a single un-batched mask counts as K = 1
    if masks is not None and masks.layers and masks.layers[0].ndim == 1:
        return DropoutMask(tuple(m[None, None, :] for m in masks.layers), masks.keep_prob)
    return masks


def _stochastic_pass(net: MlpNet, inputs, masks: Optional[DropoutMask]):
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    masks = _as_kmask(masks)
    out, cache = forward_with_cache(net, x, masks)
    if out.ndim == 2:
        out = out[None]
    if not np.all(np.isfinite(out)):
        raise NonFiniteError("network produced a non-finite output")
    return out, cache


def stochastic_outputs(net: MlpNet, inputs, masks: Optional[DropoutMask]) -> np.ndarray:
    """Outputs under each mask, shape ``(K, N, D)``; no mask means K = 1, no dropout."""
    return _stochastic_pass(net, inputs, masks)[0]


def _targets(targets, n: int, d: int) -> np.ndarray:
    y = np.asarray(targets, dtype=np.float64)
    return y.reshape(n, d)


def _exponents(net, cfg, inputs, targets, masks):
    out, cache = _stochastic_pass(net, inputs, masks)
    k, n, d = out.shape
    if n < 1:
        raise ValueError("alpha-energy needs at least one datapoint")
    y = _targets(targets, n, d)
    resid = out - y
    sq = np.sum(resid * resid, axis=-1)  # (K, N)
    return out, resid, -0.5 * cfg.alpha * cfg.tau * sq, cache


def data_term(exponents: np.ndarray, alpha: float) -> float:
    """``-(1/alpha) * sum_n [logsumexp_k(exponents[:, n]) - log K]``."""
    k = exponents.shape[0]
    return float(-np.sum(logsumexp(exponents, axis=0) - np.log(k)) / alpha)


def alpha_energy(net: MlpNet, cfg: AlphaBnnConfig, inputs, targets, masks: Optional[DropoutMask]) -> float:
    """Monte Carlo alpha-energy of ``net`` on a batch.

    ``masks`` holds K masks (leading shape ``(K, 1)``) shared across the batch;
    ``None`` means a single pass without dropout.
    """
    out, _, expo, _ = _exponents(net, cfg, inputs, targets, masks)
    _, n, d = out.shape
    loss = data_term(expo, cfg.alpha) + 0.5 * n * d * np.log(cfg.tau)
    if cfg.l2:
        loss += l2_penalty(net, cfg.l2)[0]
    if not np.isfinite(loss):
        raise NonFiniteError("alpha-energy is not finite")
    return float(loss)


def alpha_energy_and_grad(
    net: MlpNet, cfg: AlphaBnnConfig, inputs, targets, masks: Optional[DropoutMask]
) -> tuple[float, Gradients, np.ndarray]:
    """Loss, parameter gradients and the per-pass outputs ``(K, N, D)``.

    Each pass's squared-error gradient is weighted by the softmax over K of
    its exponent, so passes that fit a datapoint well dominate its update.
    """
    out, resid, expo, cache = _exponents(net, cfg, inputs, targets, masks)
    k, n, d = out.shape
    loss = data_term(expo, cfg.alpha) + 0.5 * n * d * np.log(cfg.tau)
    w = softmax(expo, axis=0)  # (K, N)
    out_grad = (cfg.tau * w)[..., None] * resid
    grads = backward_from_cache(net, cache, out_grad.reshape(cache.lead + (d,)))
    if cfg.l2:
        pen, pen_grads = l2_penalty(net, cfg.l2)
        loss += pen
        grads = grads + pen_grads
    if not np.isfinite(loss):
        raise NonFiniteError("alpha-energy is not finite")
    return float(loss), Gradients(grads.weights, grads.biases), out


def alpha_energy_grad(net: MlpNet, cfg: AlphaBnnConfig, inputs, targets, masks: Optional[DropoutMask]) -> Gradients:
    return alpha_energy_and_grad(net, cfg, inputs, targets, masks)[1]


def posterior_predict(net: MlpNet, cfg: AlphaBnnConfig, inputs, rng: np.random.Generator) -> PosteriorEstimate:
    """Posterior predictive from K fresh dropout passes.

    ``inputs`` may be one vector or a batch; the same K masks are used for all
    rows. ``samples`` has shape ``(K,) + output shape``.
    """
    x = np.asarray(inputs, dtype=np.float64)
    masks = DropoutMask.sample(net, cfg.keep_prob, rng, batch_shape=(cfg.k_samples,) + (1,) * (x.ndim - 1))
    samples = forward(net, x, masks)
    if samples.shape[0] != cfg.k_samples:  # a network without hidden layers ignores masks
        samples = np.broadcast_to(samples, (cfg.k_samples,) + samples.shape)
    if not np.all(np.isfinite(samples)):
        raise NonFiniteError("network produced a non-finite output")
    return PosteriorEstimate.from_samples(samples)
