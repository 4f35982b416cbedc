"""Diagonal Gaussian policy and value function on top of :class:`MLP`."""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from hybridwalk.policy.mlp import MLP

LOG_2PI = math.log(2 * math.pi)


def _check_finite(x, what):
    if not np.all(np.isfinite(x)):
        bad = np.argwhere(~np.isfinite(np.asarray(x)))[0]
        raise ValueError(f"non-finite {what} at index {tuple(int(i) for i in bad)}")


@dataclass(frozen=True)
class GaussianPolicy:
    """State-dependent mean from an MLP, state-independent ``log_std``.

    ``theta`` is the MLP parameter vector followed by ``log_std``.
    """

    obs_dim: int
    act_dim: int
    hidden: tuple = (64, 64)
    activation: str = "tanh"

    @property
    def net(self) -> MLP:
        return MLP((self.obs_dim, *self.hidden, self.act_dim), self.activation)

    @property
    def n_params(self) -> int:
        return self.net.n_params + self.act_dim

    def init(self, rng, log_std: float = -0.5) -> np.ndarray:
        return np.concatenate([self.net.init(rng), np.full(self.act_dim, log_std)])

    def split(self, theta):
        n = self.net.n_params
        return theta[:n], theta[n:]

    def forward(self, theta, s, keep=False):
        """Return ``(mean, std)`` (and the cache when ``keep``) for a batch of states."""
        s = np.atleast_2d(np.asarray(s, dtype=np.float64))
        _check_finite(s, "observation")
        w, log_std = self.split(theta)
        if keep:
            mean, cache = self.net.forward(w, s, keep=True)
            return mean, np.exp(log_std), cache
        return self.net.forward(w, s), np.exp(log_std)

    def mean(self, theta, s) -> np.ndarray:
        return self.forward(theta, s)[0]

    def log_prob(self, theta, s, a) -> np.ndarray:
        mean, _ = self.forward(theta, s)
        return gaussian_log_prob(mean, self.split(theta)[1], a)

    def entropy(self, theta) -> float:
        return float(np.sum(self.split(theta)[1]) + 0.5 * self.act_dim * (1.0 + LOG_2PI))

    def sample(self, theta, s, rng) -> tuple:
        mean, std = self.forward(theta, s)
        a = mean + std * rng.standard_normal(mean.shape)
        return a, gaussian_log_prob(mean, self.split(theta)[1], a)

    def logp_backward(self, theta, s, a, d_logp, cache=None, mean=None) -> np.ndarray:
        """Gradient of ``sum(d_logp * log_prob(s, a))`` with respect to ``theta``."""
        w, log_std = self.split(theta)
        if cache is None:
            mean, cache = self.net.forward(w, np.atleast_2d(s), keep=True)
        inv_var = np.exp(-2.0 * log_std)
        diff = np.asarray(a) - mean
        d_mean = d_logp[:, None] * diff * inv_var
        g_std = (d_logp[:, None] * (diff * diff * inv_var - 1.0)).sum(axis=0)
        return np.concatenate([self.net.backward(w, cache, d_mean), g_std])

    def mean_backward(self, theta, cache, d_mean) -> np.ndarray:
        w, _ = self.split(theta)
        return np.concatenate([self.net.backward(w, cache, d_mean), np.zeros(self.act_dim)])


def gaussian_log_prob(mean, log_std, a) -> np.ndarray:
    """``sum_i -(a_i - mu_i)^2 / (2 sigma_i^2) - log sigma_i - log(2 pi) / 2``."""
    a = np.asarray(a, dtype=np.float64)
    if a.shape[-1] != np.shape(mean)[-1]:
        raise ValueError("action dimension does not match the policy")
    z = (a - mean) * np.exp(-log_std)
    return -0.5 * np.sum(z * z, axis=-1) - np.sum(log_std) - 0.5 * len(log_std) * LOG_2PI


@dataclass(frozen=True)
class ValueFn:
    obs_dim: int
    hidden: tuple = (64, 64)
    activation: str = "tanh"

    @property
    def net(self) -> MLP:
        return MLP((self.obs_dim, *self.hidden, 1), self.activation)

    @property
    def n_params(self) -> int:
        return self.net.n_params

    def init(self, rng) -> np.ndarray:
        return self.net.init(rng, out_scale=1.0)

    def __call__(self, omega, s) -> np.ndarray:
        return self.net.forward(omega, np.atleast_2d(s))[:, 0]


def policy_forward(pol: GaussianPolicy, theta, s) -> tuple:
    return pol.forward(theta, s)


def log_prob(pol: GaussianPolicy, theta, s, a) -> np.ndarray:
    return pol.log_prob(theta, s, a)


def digest(*arrays) -> str:
    """SHA-256 of the raw bytes of the arrays; used to check snapshot immutability."""
    h = hashlib.sha256()
    for arr in arrays:
        h.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
    return h.hexdigest()
