"""
Posterior mean and spread of a dropout value function
=====================================================

With dropout left on at prediction time, a value network becomes a
distribution over functions. Averaging K stochastic passes estimates its
mean, and the spread across passes measures how unsure the network is.
"""

import itertools

import numpy as np

from bayesvf.alpha_bnn import AlphaBnnConfig, posterior_predict
from bayesvf.nn import DropoutMask, MlpNet, forward

rng = np.random.default_rng(1)

###############################################################################
# A net with three hidden units has only 2**3 masks, so the exact mean is a
# weighted sum we can write out.

net = MlpNet.init([2, 3, 1], rng)
net.biases = [rng.normal(0, 0.5, b.shape) for b in net.biases]
x = rng.normal(size=(4, 2))
keep = 0.7
exact = sum(
    np.prod(np.where(np.array(bits) == 1, keep, 1 - keep))
    * forward(net, x, DropoutMask((np.array(bits, dtype=float),), keep))
    for bits in itertools.product([0, 1], repeat=3))

for k in (10, 100, 10_000):
    est = posterior_predict(net, AlphaBnnConfig(k_samples=k, keep_prob=keep), x, np.random.default_rng(k))
    se = np.sqrt(est.variance / k)
    print(f"K={k:<6d} max |MC - exact| / SE = {np.max(np.abs(est.mean - exact) / se):.2f}")

###############################################################################
# The spread depends on the input. For an untrained ReLU net it grows with
# the distance from the origin, where the network output scales with |x|.

wide = MlpNet.init([1, 64, 64, 1], rng)
grid = np.linspace(-6, 6, 7)[:, None]
est = posterior_predict(wide, AlphaBnnConfig(k_samples=200, keep_prob=0.9), grid, rng)
for g, m, v in zip(grid[:, 0], est.mean[:, 0], est.variance[:, 0]):
    print(f"x={g:+.1f}  mean={m:+.3f}  std={np.sqrt(v):.3f}")

###############################################################################
# keep_prob = 1 switches dropout off: every pass is the same network.

est = posterior_predict(net, AlphaBnnConfig(k_samples=5, keep_prob=1.0), x, rng)
print("keep_prob=1 variance:", est.variance.ravel())
