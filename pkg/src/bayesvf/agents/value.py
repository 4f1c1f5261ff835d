"""
Value-function variants shared by PPO (state values) and DDPG (action values).

``deterministic``  squared error, no dropout          (V(s) column)
``l2-only``        squared error + l2 weight penalty   (V_reg(s) column)
``alpha-bnn``      MC alpha-energy, posterior mean     (V^alpha_reg(s) column)

The deterministic losses are written out independently of the alpha-energy
code; with K = 1, keep_prob = 1 and no penalty both give the same numbers,
which is what the control-variant checks rely on.
"""

from __future__ import annotations

import numpy as np

from ..alpha_bnn import AlphaBnnConfig, alpha_energy_and_grad, posterior_predict, sample_masks
from ..nn import Gradients, MlpNet, NonFiniteError, backward, forward, l2_penalty

MODES = ("deterministic", "l2-only", "alpha-bnn")


def check_mode(mode: str) -> str:
    if mode not in MODES:
        raise ValueError(f"unknown value-function mode {mode!r}; choose from {MODES}")
    return mode


def squared_error_loss(net: MlpNet, tau: float, inputs, targets, l2_scale: float = 0.0
                       ) -> tuple[float, Gradients, np.ndarray]:
    """``(tau/2) sum ||y - f(x)||^2 + (N D / 2) log tau + l2 * sum ||W||^2``."""
    out = forward(net, inputs)
    if not np.all(np.isfinite(out)):
        raise NonFiniteError("network produced a non-finite output")
    n, d = out.shape
    resid = out - np.asarray(targets, dtype=np.float64).reshape(n, d)
    loss = 0.5 * tau * float(np.sum(resid * resid)) + 0.5 * n * d * np.log(tau)
    g = backward(net, inputs, None, tau * resid)
    grads = Gradients(g.weights, g.biases)
    if l2_scale:
        pen, pen_grads = l2_penalty(net, l2_scale)
        loss += pen
        grads = grads + pen_grads
    return loss, grads, out[None]


def value_loss_and_grad(net: MlpNet, mode: str, cfg: AlphaBnnConfig, inputs, targets,
                        rng: np.random.Generator) -> tuple[float, Gradients, np.ndarray]:
    """Loss, gradients and per-pass predictions ``(K, N, D)`` for one minibatch."""
    if mode == "alpha-bnn":
        return alpha_energy_and_grad(net, cfg, inputs, targets, sample_masks(net, cfg, rng))
    l2 = cfg.l2 if mode == "l2-only" else 0.0
    return squared_error_loss(net, cfg.tau, inputs, targets, l2)


def value_estimate(net: MlpNet, mode: str, cfg: AlphaBnnConfig, inputs, rng: np.random.Generator) -> np.ndarray:
    """Point estimate ``(N, D)``: posterior mean for alpha-bnn, plain forward otherwise."""
    x = np.atleast_2d(inputs)
    if mode == "alpha-bnn":
        return posterior_predict(net, cfg, x, rng).mean
    return forward(net, x)
