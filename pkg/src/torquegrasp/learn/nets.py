"""Dense feedforward networks with hand-written reverse-mode gradients, plus Adam."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from torquegrasp.errors import ConfigError


@dataclass
class DenseNet:
    """Affine layers with ReLU between them and a linear output.

    weights[i] has shape (sizes[i], sizes[i+1]); inputs are row-major batches.
    """

    sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self) -> None:
        if len(self.sizes) < 2:
            raise ConfigError("a network needs at least an input and an output size")
        if len(self.weights) != len(self.sizes) - 1 or len(self.biases) != len(self.weights):
            raise ConfigError("one weight matrix and bias vector per layer is required")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.sizes[i], self.sizes[i + 1]) or b.shape != (self.sizes[i + 1],):
                raise ConfigError(
                    f"layer {i}: expected W {(self.sizes[i], self.sizes[i + 1])} and "
                    f"b {(self.sizes[i + 1],)}, got {w.shape} and {b.shape}")

    @classmethod
    def init(cls, sizes: Sequence[int], rng: np.random.Generator, dtype=np.float32) -> "DenseNet":
        """Uniform fan-in initialisation, U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
        sizes = tuple(int(s) for s in sizes)
        ws, bs = [], []
        for n_in, n_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / np.sqrt(n_in)
            ws.append(rng.uniform(-bound, bound, size=(n_in, n_out)).astype(dtype))
            bs.append(rng.uniform(-bound, bound, size=n_out).astype(dtype))
        return cls(sizes, ws, bs)

    @property
    def dtype(self):
        return self.weights[0].dtype

    @property
    def params(self) -> list[np.ndarray]:
        """Parameter arrays in a fixed order: W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "DenseNet":
        return DenseNet(self.sizes, [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def astype(self, dtype) -> "DenseNet":
        return DenseNet(self.sizes, [w.astype(dtype) for w in self.weights],
                        [b.astype(dtype) for b in self.biases])

    def forward(self, x: np.ndarray, keep: bool = False):
        """Output for a (batch, in) array; with keep=True also the layer inputs for backward."""
        x = np.asarray(x)
        if x.ndim != 2 or x.shape[1] != self.sizes[0]:
            raise ConfigError(f"expected input of shape (batch, {self.sizes[0]}), got {x.shape}")
        x = x.astype(self.dtype, copy=False)
        cache = [x]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            x = x @ w + b
            if i < last:
                x = np.maximum(x, 0.0)
                cache.append(x)
        return (x, cache) if keep else x

    def backward(self, cache: list[np.ndarray], grad_out: np.ndarray, need_input: bool = False,
                 need_params: bool = True):
        """Gradients of sum(grad_out * output) w.r.t. every parameter (and optionally the input)."""
        g = np.asarray(grad_out, dtype=self.dtype)
        grads: list[np.ndarray] = [None] * (2 * len(self.weights))
        for i in range(len(self.weights) - 1, -1, -1):
            inp = cache[i]
            if need_params:
                grads[2 * i] = inp.T @ g
                grads[2 * i + 1] = g.sum(axis=0)
            if i > 0 or need_input:
                g = g @ self.weights[i].T
                if i > 0:
                    # ReLU mask: cached activations are zero exactly where the unit was off
                    g = g * (inp > 0.0)
        if not need_params:
            return g
        return (grads, g) if need_input else grads


class Adam:
    """Adam over a fixed list of arrays, updated in place."""

    def __init__(self, params: Sequence[np.ndarray], lr: float = 3e-4,
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]

    def step(self, grads: Sequence[np.ndarray]) -> None:
        if len(grads) != len(self.params):
            raise ConfigError("gradient list does not match the optimiser's parameters")
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * (g * g)
            p -= (self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)).astype(p.dtype, copy=False)

    def state(self) -> dict:
        return {"t": self.t, "m": self.m, "v": self.v}


def polyak(targets: Sequence[np.ndarray], sources: Sequence[np.ndarray], tau: float) -> None:
    """theta' <- (1 - tau) theta' + tau theta, in place."""
    if len(targets) != len(sources):
        raise ConfigError("polyak: parameter lists differ in length")
    for t, s in zip(targets, sources):
        if t.shape != s.shape:
            raise ConfigError(f"polyak: shape mismatch {t.shape} vs {s.shape}")
        t *= (1.0 - tau)
        t += tau * s
