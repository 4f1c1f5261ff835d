"""
The alpha-energy between mean and min pooling
=============================================

A dropout network evaluated under K masks gives K predictions per input.
The alpha-energy scores them with a log-sum-exp over the masks, so alpha
controls how the K squared errors are pooled. Small alpha averages them,
large alpha keeps only the best one.
"""

import numpy as np

from bayesvf.alpha_bnn import AlphaBnnConfig, alpha_energy, alpha_energy_grad, sample_masks, softmax, stochastic_outputs
from bayesvf.nn import MlpNet

rng = np.random.default_rng(0)
net = MlpNet.init([3, 32, 32, 1], rng)
x = rng.normal(size=(64, 3))
y = np.sin(x).sum(axis=1)

###############################################################################
# One fixed set of K = 25 masks, so only alpha changes below.

masks = sample_masks(net, AlphaBnnConfig(k_samples=25, keep_prob=0.9), rng)
out = stochastic_outputs(net, x, masks)[..., 0]
sq = (out - y) ** 2
print(f"mean over masks of the summed squared error: {0.5 * sq.mean(axis=0).sum():.4f}")
print(f"best mask per input, summed:                 {0.5 * sq.min(axis=0).sum():.4f}")

###############################################################################
# The data term (tau = 1, no weight penalty) moves monotonically from the
# first number to the second as alpha grows.

for alpha in (1e-6, 0.1, 0.5, 1.0, 4.0, 64.0):
    cfg = AlphaBnnConfig(alpha=alpha, tau=1.0, k_samples=25, keep_prob=0.9, l2_scale=0.0)
    print(f"alpha={alpha:<8g} energy={alpha_energy(net, cfg, x, y, masks):.4f}")

###############################################################################
# The gradient is a weighted average of per-mask squared-error gradients.
# The weights are a softmax over -(alpha tau / 2) * error, so large alpha
# concentrates them on the masks that already fit well.

for alpha in (0.01, 0.5, 8.0, 64.0):
    w = softmax(-0.5 * alpha * sq, axis=0)
    print(f"alpha={alpha:<5g} largest weight on one mask, averaged over inputs: {w.max(axis=0).mean():.3f}")

cfg = AlphaBnnConfig(alpha=0.5, tau=0.85, k_samples=25, keep_prob=0.9)
grad = alpha_energy_grad(net, cfg, x, y, masks)
print("gradient norms per layer:", [f"{np.linalg.norm(w):.3f}" for w in grad.weights])
