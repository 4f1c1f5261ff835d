"""
Minimal feed-forward networks in numpy.

Fully-connected ReLU networks with inverted Bernoulli dropout on the hidden
activations, hand-written backpropagation and an Adam optimizer. Everything
else in the package (value functions, critics, policies) is built on this.

Inputs may carry any number of leading batch dimensions: ``x`` of shape
``(..., in)`` produces ``(..., out)``. Dropout masks broadcast against the
hidden activations, so a mask with leading shape ``(K, 1)`` applied to an
input of shape ``(K, N, in)`` shares each of the K masks across all N rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class InputShapeError(ValueError):
    """Raised when an input does not match the network's layer sizes."""


class NonFiniteError(FloatingPointError):
    """Raised when a loss, output or update contains NaN or inf."""


@dataclass
class MlpNet:
    """Fully-connected network, ReLU on hidden layers, identity output.

    ``weights[i]`` has shape ``(layer_sizes[i+1], layer_sizes[i])``.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise InputShapeError("need one bias vector per weight matrix")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise InputShapeError(f"layer {i}: weight {w.shape} / bias {b.shape}")
            if i and w.shape[1] != self.weights[i - 1].shape[0]:
                raise InputShapeError(f"layer {i} input size does not chain")

    @classmethod
    def init(
        cls,
        layer_sizes: Sequence[int],
        rng: np.random.Generator,
        output_scale: float = 1.0,
    ) -> "MlpNet":
        """Scaled-uniform fan-in initialization, zero biases.

        Weights are drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)); the last
        layer is additionally multiplied by ``output_scale``.
        """
        sizes = [int(s) for s in layer_sizes]
        if len(sizes) < 2 or min(sizes) < 1:
            raise InputShapeError(f"invalid layer sizes {sizes}")
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
            biases.append(np.zeros(fan_out))
        weights[-1] = weights[-1] * output_scale
        return cls(weights, biases)

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def hidden_sizes(self) -> list[int]:
        return self.layer_sizes[1:-1]

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[0]

    def params(self) -> list[np.ndarray]:
        return list(self.weights) + list(self.biases)

    def set_params(self, params: Sequence[np.ndarray]) -> None:
        n = len(self.weights)
        self.weights = list(params[:n])
        self.biases = list(params[n:])

    def copy(self) -> "MlpNet":
        return MlpNet([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def __call__(self, x, mask: Optional["DropoutMask"] = None) -> np.ndarray:
        return forward(self, x, mask)


@dataclass(frozen=True)
class DropoutMask:
    """Binary keep-masks for every hidden layer of a network.

    Each entry of ``layers`` has shape ``batch_shape + (hidden_size,)``. Once
    drawn a mask can be reused to reproduce the same stochastic pass.
    """

    layers: tuple[np.ndarray, ...]
    keep_prob: float

    def __post_init__(self):
        if not 0.0 < self.keep_prob <= 1.0:
            raise ValueError(f"keep_prob must lie in (0, 1], got {self.keep_prob}")

    @classmethod
    def sample(
        cls,
        net: MlpNet,
        keep_prob: float,
        rng: np.random.Generator,
        batch_shape: tuple[int, ...] = (),
    ) -> "DropoutMask":
        layers = tuple(
            (rng.random(batch_shape + (h,)) < keep_prob).astype(np.float64)
            for h in net.hidden_sizes
        )
        return cls(layers, float(keep_prob))

    @classmethod
    def ones(cls, net: MlpNet, batch_shape: tuple[int, ...] = ()) -> "DropoutMask":
        return cls(tuple(np.ones(batch_shape + (h,)) for h in net.hidden_sizes), 1.0)

    def __getitem__(self, idx) -> "DropoutMask":
        """Select masks along the leading batch dimensions."""
        return DropoutMask(tuple(m[idx] for m in self.layers), self.keep_prob)


@dataclass
class Gradients:
    """Parameter gradients (aligned with ``MlpNet.params()``) plus input gradient."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    input: Optional[np.ndarray] = None

    def params(self) -> list[np.ndarray]:
        return list(self.weights) + list(self.biases)

    def __add__(self, other: "Gradients") -> "Gradients":
        return Gradients(
            [a + b for a, b in zip(self.weights, other.weights)],
            [a + b for a, b in zip(self.biases, other.biases)],
        )

    def scale(self, c: float) -> "Gradients":
        return Gradients([c * w for w in self.weights], [c * b for b in self.biases])

    @classmethod
    def zeros_like(cls, net: MlpNet) -> "Gradients":
        return cls([np.zeros_like(w) for w in net.weights], [np.zeros_like(b) for b in net.biases])

    def flat(self) -> np.ndarray:
        return np.concatenate([g.ravel() for g in self.params()])


def _check_input(net: MlpNet, x: np.ndarray, mask: Optional[DropoutMask]) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] != net.in_dim:
        raise InputShapeError(f"expected input (..., {net.in_dim}), got {x.shape}")
    if mask is not None:
        hidden = net.hidden_sizes
        if len(mask.layers) != len(hidden):
            raise InputShapeError(
                f"mask has {len(mask.layers)} layers, network has {len(hidden)} hidden layers"
            )
        for m, h in zip(mask.layers, hidden):
            if m.shape[-1] != h:
                raise InputShapeError(f"mask width {m.shape[-1]} does not match hidden size {h}")
    return x


@dataclass
class ForwardCache:
    """Layer inputs of one forward pass, as 2-D row blocks.

    ``inputs[0]`` is the network input with its own batch shape ``x_lead``;
    after the first dropout layer rows are broadcast to the full ``lead``.
    """

    inputs: list[np.ndarray]
    x_lead: tuple[int, ...]
    lead: tuple[int, ...]
    mask: Optional[DropoutMask]


def _scaled(mask: DropoutMask, i: int) -> np.ndarray:
    m = mask.layers[i]
    return m if mask.keep_prob == 1.0 else m * (1.0 / mask.keep_prob)


def forward_with_cache(net: MlpNet, x, mask: Optional[DropoutMask] = None) -> tuple[np.ndarray, ForwardCache]:
    """Forward pass that also returns what ``backward_from_cache`` needs.

    Mask batch dimensions may exceed the input's: ``x`` of shape ``(N, in)``
    with masks of leading shape ``(K, 1)`` gives output ``(K, N, out)``. The
    first layer is then evaluated once, not K times.
    """
    x = _check_input(net, x, mask)
    x_lead = x.shape[:-1]
    cur = x_lead
    h = x.reshape(-1, x.shape[-1])
    inputs = []
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        inputs.append(h)
        z = h @ w.T
        z += b
        if i == last:
            h = z
            break
        h = np.maximum(z, 0.0, out=z)
        if mask is not None:
            m = _scaled(mask, i)
            width = h.shape[-1]
            h = h.reshape(cur + (width,))
            new = np.broadcast_shapes(cur, m.shape[:-1])
            if new == cur:
                h *= m
            else:
                h = h * m
                cur = new
            h = h.reshape(-1, width)
    out = h.reshape(cur + (h.shape[-1],))
    return out, ForwardCache(inputs, x_lead, cur, mask)


def forward(net: MlpNet, x, mask: Optional[DropoutMask] = None) -> np.ndarray:
    """Evaluate the network on ``x`` of shape ``(..., in)``.

    With a mask, hidden activations are multiplied by the mask and divided by
    ``keep_prob`` (inverted dropout).
    """
    return forward_with_cache(net, x, mask)[0]


def _reduce_to(g: np.ndarray, lead: tuple[int, ...], target: tuple[int, ...]) -> np.ndarray:
    """Sum rows of ``g`` (batch shape ``lead``) over dims broadcast from ``target``."""
    if lead == target:
        return g
    width = g.shape[-1]
    g = g.reshape(lead + (width,))
    pad = len(lead) - len(target)
    axes = tuple(range(pad)) + tuple(pad + j for j, n in enumerate(target) if n == 1 and lead[pad + j] != 1)
    return g.sum(axis=axes).reshape(-1, width)


def backward_from_cache(net: MlpNet, cache: ForwardCache, output_grad, params: bool = True) -> Gradients:
    """Gradients of ``sum(output_grad * out)`` for the pass recorded in ``cache``.

    With ``params=False`` only ``Gradients.input`` is computed; the parameter
    gradients are zeros.
    """
    width = net.out_dim
    g = np.asarray(output_grad, dtype=np.float64)
    full = cache.lead + (width,)
    if g.shape != full:
        try:
            g = np.broadcast_to(g, full)
        except ValueError:
            raise InputShapeError(f"output_grad {g.shape} does not match output {full}") from None
    g = g.reshape(-1, width)
    n = len(net.weights)
    if params:
        gw: list[np.ndarray] = [None] * n  # type: ignore[list-item]
        gb: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    else:
        gw = [np.zeros_like(w) for w in net.weights]
        gb = [np.zeros_like(b) for b in net.biases]
    mask = cache.mask
    inv_keep = 1.0 if mask is None else 1.0 / mask.keep_prob
    for i in range(n - 1, -1, -1):
        h = cache.inputs[i]
        if i == 0:
            g = _reduce_to(g, cache.lead, cache.x_lead)
        if params:
            gw[i] = g.T @ h
            gb[i] = g.sum(axis=0)
        if i == 0:
            g = g @ net.weights[0]
            break
        # h = dropout(relu(z)) of the previous layer: dh/dz = [h > 0] / keep_prob
        g = g @ (net.weights[i] * inv_keep if inv_keep != 1.0 else net.weights[i])
        g *= h > 0
    return Gradients(gw, gb, g.reshape(cache.x_lead + (net.in_dim,)))


def backward(net: MlpNet, x, mask: Optional[DropoutMask], output_grad) -> Gradients:
    """Gradients of ``sum(output_grad * forward(net, x, mask))``.

    Parameter gradients are summed over every batch dimension; the mask is a
    constant. ``Gradients.input`` is the gradient w.r.t. ``x`` itself (summed
    over any dims the masks broadcast it along).
    """
    _, cache = forward_with_cache(net, x, mask)
    return backward_from_cache(net, cache, output_grad)


def l2_penalty(net: MlpNet, scale: float) -> tuple[float, Gradients]:
    """``scale * sum_i ||W_i||^2`` over weight matrices (biases excluded)."""
    if scale < 0:
        raise ValueError(f"l2 scale must be nonnegative, got {scale}")
    value = scale * sum(float(np.sum(w * w)) for w in net.weights)
    grads = Gradients([2.0 * scale * w for w in net.weights], [np.zeros_like(b) for b in net.biases])
    return value, grads


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: Sequence[np.ndarray], lr: float = 3e-4, **kw) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], lr=lr, **kw)


def adam_step(
    state: AdamState, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]
) -> tuple[list[np.ndarray], AdamState]:
    """One bias-corrected Adam update. Inputs are not modified.

    Raises NonFiniteError (and changes nothing) if any gradient is NaN or inf.
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise InputShapeError("params, grads and optimizer state disagree in length")
    for p, g, m in zip(params, grads, state.m):
        if p.shape != g.shape or p.shape != m.shape:
            raise InputShapeError(f"shape mismatch {p.shape} / {g.shape} / {m.shape}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteError("non-finite gradient rejected by adam_step")
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    new_m, new_v, new_p = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        new_p.append(p - state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps))
        new_m.append(m)
        new_v.append(v)
    new_state = AdamState(new_m, new_v, t, state.lr, b1, b2, state.eps)
    return new_p, new_state


@dataclass
class Adam:
    """Adam bound to one network; ``apply`` writes the update back."""

    net: MlpNet
    state: AdamState = field(init=False)
    lr: float = 3e-4

    def __post_init__(self):
        self.state = AdamState.for_params(self.net.params(), lr=self.lr)

    def apply(self, grads: Gradients) -> None:
        new, self.state = adam_step(self.state, self.net.params(), grads.params())
        self.net.set_params(new)
