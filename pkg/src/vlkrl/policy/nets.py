"""Small feed-forward approximators with analytic gradients.

The policy and critic are tiny (two tanh hidden layers of width 128 by
default), so reverse-mode differentiation is written out by hand here and
no autodiff dependency is needed. All math is float64 so seeded runs are
bit-reproducible and finite-difference checks are tight.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class Mlp:
    """tanh MLP: sizes = (in, hidden..., out). Zero hidden layers gives a
    plain linear map (handy for tabular tests on one-hot states)."""

    def __init__(self, sizes: tuple[int, ...], rng: np.random.Generator):
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        self.sizes = tuple(int(s) for s in sizes)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            scale = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.standard_normal((fan_in, fan_out)) * scale)
            self.biases.append(np.zeros(fan_out, dtype=np.float64))

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Returns (output, activation cache). x is (batch, in)."""
        h = np.atleast_2d(np.asarray(x, dtype=np.float64))
        cache = [h]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = np.tanh(h)
            cache.append(h)
        return h, cache

    def backward(self, cache: list[np.ndarray], grad_out: np.ndarray) -> list[np.ndarray]:
        """Gradients of sum(output * grad_out) w.r.t. every parameter,
        ordered [W0, b0, W1, b1, ...]."""
        grads: list[np.ndarray] = []
        delta = np.asarray(grad_out, dtype=np.float64)
        for i in reversed(range(len(self.weights))):
            layer_input = cache[i]
            grads.append(delta.sum(axis=0))      # bias
            grads.append(layer_input.T @ delta)  # weight
            if i > 0:
                delta = delta @ self.weights[i].T
                delta = delta * (1.0 - layer_input ** 2)  # layer_input is tanh output
        grads.reverse()
        return grads

    @property
    def params(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params])

    def set_flat(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        offset = 0
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            self.weights[i] = flat[offset:offset + w.size].reshape(w.shape).copy()
            offset += w.size
            self.biases[i] = flat[offset:offset + b.size].reshape(b.shape).copy()
            offset += b.size
        if offset != flat.size:
            raise ValueError(f"flat vector has {flat.size} entries, expected {offset}")

    @property
    def num_params(self) -> int:
        return sum(p.size for p in self.params)


@dataclass
class AdamState:
    """Adam moments for one parameter list."""

    lr: float = 3e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def adam_step(net: Mlp, grads: list[np.ndarray], state: AdamState) -> None:
    """One minimizing Adam update; pass the gradient of the loss."""
    if not state.m:
        state.m = [np.zeros_like(p) for p in net.params]
        state.v = [np.zeros_like(p) for p in net.params]
    state.step += 1
    t = state.step
    new_params: list[np.ndarray] = []
    for p, g, m, v in zip(net.params, grads, state.m, state.v):
        m[:] = state.beta1 * m + (1 - state.beta1) * g
        v[:] = state.beta2 * v + (1 - state.beta2) * g * g
        m_hat = m / (1 - state.beta1 ** t)
        v_hat = v / (1 - state.beta2 ** t)
        new_params.append(p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps))
    for i in range(len(net.weights)):
        net.weights[i] = new_params[2 * i]
        net.biases[i] = new_params[2 * i + 1]


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))
