"""Small tanh MLPs with hand-written backprop, Adam, categorical heads."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class Mlp:
    """Affine -> tanh -> ... -> affine, float64 throughout.

    Weights are stored ``(fan_in, fan_out)`` so a batch ``x @ W + b`` works
    row-wise. ``params`` lists W0, b0, W1, b1, ... in layer order.
    """

    def __init__(self, dims: Sequence[int], rng: np.random.Generator | None = None,
                 hidden_gain: float = np.sqrt(2.0), out_gain: float = 1.0):
        if len(dims) < 2:
            raise ValueError("an MLP needs at least input and output dims")
        self.dims = [int(d) for d in dims]
        self.params: list[np.ndarray] = []
        for i, (a, b) in enumerate(zip(self.dims[:-1], self.dims[1:])):
            gain = out_gain if i == len(self.dims) - 2 else hidden_gain
            w = orthogonal((a, b), gain, rng) if rng is not None else np.zeros((a, b))
            self.params += [w, np.zeros(b)]

    @property
    def n_layers(self) -> int:
        return len(self.dims) - 1

    def copy(self) -> "Mlp":
        out = Mlp.__new__(Mlp)
        out.dims = list(self.dims)
        out.params = [p.copy() for p in self.params]
        return out

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Return output and the per-layer inputs needed by :meth:`backward`."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dims[0]:
            raise ValueError(f"input has {x.shape[-1]} features, net expects {self.dims[0]}")
        acts = [x]
        h = x
        for i in range(self.n_layers):
            h = h @ self.params[2 * i] + self.params[2 * i + 1]
            if i < self.n_layers - 1:
                h = np.tanh(h)
                acts.append(h)
        return h, acts

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, acts: list[np.ndarray], grad_out: np.ndarray) -> list[np.ndarray]:
        """Gradients of a scalar loss given dLoss/dOutput for the same batch."""
        grads: list[np.ndarray] = [None] * len(self.params)  # type: ignore[list-item]
        g = grad_out
        for i in reversed(range(self.n_layers)):
            a = acts[i]
            if a.ndim == 1:
                grads[2 * i] = np.outer(a, g)
                grads[2 * i + 1] = g.copy()
            else:
                grads[2 * i] = a.T @ g
                grads[2 * i + 1] = g.sum(axis=0)
            if i > 0:
                g = (g @ self.params[2 * i].T) * (1.0 - acts[i] ** 2)
        return grads


def orthogonal(shape: tuple[int, int], gain: float, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal(shape)
    flat = a if shape[0] >= shape[1] else a.T
    q, r = np.linalg.qr(flat)
    q *= np.sign(np.diag(r))
    q = q if shape[0] >= shape[1] else q.T
    return gain * q


@dataclass
class Adam:
    params: list[np.ndarray]
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]

    def step(self, grads: Sequence[np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def clip_grad_norm(grads: list[np.ndarray], max_norm: float) -> float:
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
    if norm > max_norm:
        scale = max_norm / (norm + 1e-6)
        for g in grads:
            g *= scale
    return norm


def log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def split_heads(logits: np.ndarray, sizes: Sequence[int]) -> list[np.ndarray]:
    return np.split(logits, np.cumsum(sizes)[:-1], axis=-1)


def entropy(logp: np.ndarray) -> np.ndarray:
    return -(np.exp(logp) * logp).sum(axis=-1)
