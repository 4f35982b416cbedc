"""Multilayer perceptron on a flat parameter vector with a hand-written backward pass."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("tanh", "relu")


@dataclass(frozen=True)
class MLP:
    """Layer sizes ``(in, h1, ..., out)``; hidden layers use ``activation``, the output is linear.

    Parameters are stored layer by layer as ``W`` (out x in, row-major)
    followed by ``b``.
    """

    sizes: tuple
    activation: str = "tanh"

    def __post_init__(self):
        if len(self.sizes) < 2 or min(self.sizes) < 1:
            raise ValueError("need at least input and output sizes, all positive")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))

    @property
    def n_params(self) -> int:
        return sum(o * i + o for i, o in zip(self.sizes, self.sizes[1:]))

    def unpack(self, theta):
        """Views ``[(W, b), ...]`` into ``theta``."""
        out, k = [], 0
        for i, o in zip(self.sizes, self.sizes[1:]):
            w = theta[k:k + o * i].reshape(o, i)
            k += o * i
            b = theta[k:k + o]
            k += o
            out.append((w, b))
        return out

    def init(self, rng: np.random.Generator, out_scale: float = 0.01) -> np.ndarray:
        """Scaled orthogonal-free init: ``N(0, 1/fan_in)`` weights, zero biases, small output layer."""
        theta = np.zeros(self.n_params)
        layers = self.unpack(theta)
        for j, (w, _) in enumerate(layers):
            scale = out_scale if j == len(layers) - 1 else 1.0
            w[...] = rng.normal(0.0, scale / np.sqrt(w.shape[1]), size=w.shape)
        return theta

    def _act(self, z):
        return np.tanh(z) if self.activation == "tanh" else np.maximum(z, 0.0)

    def _act_grad(self, h, z):
        return 1.0 - h * h if self.activation == "tanh" else (z > 0).astype(z.dtype)

    def forward(self, theta, x, keep=False):
        """Evaluate on a batch ``x`` of shape ``(n, in)``; optionally return the cache."""
        x = np.asarray(x, dtype=np.float64)
        layers = self.unpack(theta)
        cache = [x]
        h = x
        for j, (w, b) in enumerate(layers):
            z = h @ w.T + b
            if j < len(layers) - 1:
                h = self._act(z)
                cache.append((z, h))
            else:
                h = z
        return (h, cache) if keep else h

    def backward(self, theta, cache, d_out) -> np.ndarray:
        """Gradient of ``sum(d_out * forward(x))`` with respect to ``theta``."""
        layers = self.unpack(theta)
        grad = np.zeros_like(theta)
        glayers = self.unpack(grad)
        delta = d_out
        for j in range(len(layers) - 1, -1, -1):
            h_in = cache[0] if j == 0 else cache[j][1]
            gw, gb = glayers[j]
            gw[...] = delta.T @ h_in
            gb[...] = delta.sum(axis=0)
            if j > 0:
                z, h = cache[j]
                delta = (delta @ layers[j][0]) * self._act_grad(h, z)
        return grad

    def input_grad(self, theta, cache, d_out) -> np.ndarray:
        """Gradient of ``sum(d_out * forward(x))`` with respect to ``x``."""
        layers = self.unpack(theta)
        delta = d_out
        for j in range(len(layers) - 1, 0, -1):
            z, h = cache[j]
            delta = (delta @ layers[j][0]) * self._act_grad(h, z)
        return delta @ layers[0][0]
