"""Mirror and proximal symmetry losses with analytic gradients.

Both losses see the batch through cached, ``theta``-independent data
built from the frozen snapshot: the mirrored states ``f(s)``, the
symmetric mean actions ``a' = g_s(mu_old(s))`` and the log-densities
``log pi_old(a' | f(s))``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from hybridwalk.policy.gaussian import GaussianPolicy, gaussian_log_prob
from hybridwalk.policy.ppo import SampleBatch, safe_ratio
from hybridwalk.symmetry.transform import MirrorTransform, biped_mirror

KINDS = ("none", "msl", "psl")
REGIMES = ("z_below_1", "z_in_trust", "z_above")


@dataclass(frozen=True)
class SymLossConfig:
    kind: str = "none"
    w: float = 0.05
    epsilon: float = 0.2
    transforms: tuple = field(default_factory=lambda: (biped_mirror(),))

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.w < 0:
            raise ValueError("w must be non-negative")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must be in (0, 1)")
        object.__setattr__(self, "transforms", tuple(self.transforms))


def symmetric_mean_action(pol: GaussianPolicy, theta_old, s, tr: MirrorTransform) -> np.ndarray:
    """``a' = g_s(mu_old(s))``: the mirrored deterministic action of the snapshot."""
    return tr.action(s, pol.mean(theta_old, s))


def attach_mirror_data(pol: GaussianPolicy, theta_old, batch: SampleBatch, transforms) -> SampleBatch:
    """Cache ``f_i(s)``, ``a'_i`` and ``log pi_old(a'_i | f_i(s))`` for every transform ``i``."""
    if len(transforms) == 0:
        raise ValueError("at least one transform is required")
    mean_old = pol.mean(theta_old, batch.obs)
    _, log_std = pol.split(theta_old)
    m_obs, m_act, m_logp = [], [], []
    for tr in transforms:
        fs = tr.state(batch.obs)
        a_sym = tr.action(batch.obs, mean_old)
        m_obs.append(fs)
        m_act.append(a_sym)
        m_logp.append(gaussian_log_prob(pol.mean(theta_old, fs), log_std, a_sym))
    return replace(batch, mirror_obs=np.stack(m_obs), mirror_act=np.stack(m_act), logp_old_mirror=np.stack(m_logp))


def _check_mirror(batch, n_transforms):
    if batch.mirror_obs is None:
        raise ValueError("batch carries no mirror data; call attach_mirror_data first")
    if n_transforms == 0 or batch.mirror_obs.shape[0] < n_transforms:
        raise ValueError("batch mirror data does not cover the configured transforms")


def psl_per_sample(pol: GaussianPolicy, theta, batch: SampleBatch, epsilon: float, k: int = 0):
    """Per-sample ``(x', z, bound, value, active)`` for transform ``k``.

    ``value = min(min(x', z), 1 + eps)``; ``active`` marks samples where the
    ``theta``-dependent branch ``x'`` is strictly the smallest.
    """
    logp_new = pol.log_prob(theta, batch.mirror_obs[k], batch.mirror_act[k])
    x_prime, live = safe_ratio(logp_new, batch.logp_old_mirror[k], "symmetry ratio")
    z, _ = safe_ratio(batch.logp_old, batch.logp_old_mirror[k], "old-policy ratio")
    bound = np.minimum(z, 1.0 + epsilon)
    value = np.minimum(x_prime, bound)
    active = (x_prime < bound) & live
    return x_prime, z, bound, value, active


def generalized_psl(pol: GaussianPolicy, theta, batch: SampleBatch, cfg: SymLossConfig):
    """``-w * mean_{t,i} min(x_{t,i}, 1 + eps)`` over all configured transforms."""
    n_tr = len(cfg.transforms)
    if n_tr == 0:
        raise ValueError("generalized PSL needs at least one transform")
    _check_mirror(batch, n_tr)
    n = len(batch)
    total, grad = 0.0, np.zeros_like(theta)
    for k in range(n_tr):
        x_prime, _, _, value, active = psl_per_sample(pol, theta, batch, cfg.epsilon, k)
        total += value.sum()
        # d(-w x'/(nN))/d logp = -w x' / (nN) on active samples
        d_logp = np.where(active, -cfg.w * x_prime / (n * n_tr), 0.0)
        if np.any(active):
            grad += pol.logp_backward(theta, batch.mirror_obs[k], batch.mirror_act[k], d_logp)
    return -cfg.w * total / (n * n_tr), grad


def psl_loss(pol: GaussianPolicy, theta, batch: SampleBatch, cfg: SymLossConfig):
    """Single-transform PSL using the first configured transform."""
    return generalized_psl(pol, theta, batch, replace(cfg, transforms=cfg.transforms[:1]))


def msl_loss(pol: GaussianPolicy, theta, batch: SampleBatch, cfg: SymLossConfig):
    """``w * mean_{t,i} ||mu(s) - g(mu(f_i(s)))||^2`` with gradient through both passes."""
    n_tr = len(cfg.transforms)
    if n_tr == 0:
        raise ValueError("MSL needs at least one transform")
    n = len(batch)
    mean, _, cache = pol.forward(theta, batch.obs, keep=True)
    d_mean = np.zeros_like(mean)
    total, grad = 0.0, np.zeros_like(theta)
    for k, tr in enumerate(cfg.transforms):
        fs = batch.mirror_obs[k] if batch.mirror_obs is not None else tr.state(batch.obs)
        m_mean, _, m_cache = pol.forward(theta, fs, keep=True)
        diff = mean - tr.action(fs, m_mean)
        total += np.sum(diff * diff)
        scale = 2.0 * cfg.w / (n * n_tr)
        d_mean += scale * diff
        grad += pol.mean_backward(theta, m_cache, -tr.action_transpose(fs, scale * diff))
    grad += pol.mean_backward(theta, cache, d_mean)
    return cfg.w * total / (n * n_tr), grad


def symmetry_loss(pol: GaussianPolicy, theta, batch: SampleBatch, cfg: SymLossConfig):
    if cfg.kind == "psl":
        return generalized_psl(pol, theta, batch, cfg)
    if cfg.kind == "msl":
        return msl_loss(pol, theta, batch, cfg)
    return 0.0, np.zeros_like(theta)


@dataclass(frozen=True)
class PSLDiagnostics:
    x: np.ndarray
    z: np.ndarray
    regime: np.ndarray  # indices into REGIMES
    clipped: np.ndarray

    def counts(self) -> dict:
        return {name: int(np.sum(self.regime == i)) for i, name in enumerate(REGIMES)}

    def fractions(self) -> dict:
        n = max(len(self.regime), 1)
        return {k: v / n for k, v in self.counts().items()}


def classify_regimes(pol: GaussianPolicy, theta, batch: SampleBatch, epsilon: float, k: int = 0) -> PSLDiagnostics:
    """Label each sample by where ``z`` sits relative to 1 and ``1 + eps``."""
    _check_mirror(batch, k + 1)
    x_prime, z, bound, value, active = psl_per_sample(pol, theta, batch, epsilon, k)
    regime = np.where(z < 1.0, 0, np.where(z < 1.0 + epsilon, 1, 2))
    return PSLDiagnostics(x=np.minimum(x_prime, z), z=z, regime=regime, clipped=~active)


def _hidden_swap(n):
    """Involutive permutation of ``n`` hidden units pairing the two halves."""
    half = n // 2
    perm = np.arange(n)
    perm[:half] = np.arange(half) + (n - half)
    perm[n - half:] = np.arange(half)
    return perm


def symmetrize_policy(pol: GaussianPolicy, theta, tr: MirrorTransform) -> np.ndarray:
    """Project ``theta`` onto parameters with ``mu(f(s)) = g(mu(s))`` exactly.

    Hidden units are paired by an involutive permutation ``H``; each layer
    is averaged with its conjugate under the input, hidden and output maps.
    Requires ``tr`` to be an involution.
    """
    if not tr.is_involution():
        raise ValueError("symmetrisation needs an involutive transform")
    net = pol.net
    w_flat, log_std = pol.split(np.array(theta, dtype=np.float64, copy=True))
    layers = net.unpack(w_flat)
    S = tr.state_matrix()
    G = tr.action_matrix()
    for j, (w, b) in enumerate(layers):
        n_out, n_in = w.shape
        left = G if j == len(layers) - 1 else np.eye(n_out)[_hidden_swap(n_out)]
        right = S if j == 0 else np.eye(n_in)[_hidden_swap(n_in)]
        w[...] = 0.5 * (w + left @ w @ right)
        b[...] = 0.5 * (b + left @ b)
    log_std = 0.5 * (log_std + log_std[tr.action_perm])
    return np.concatenate([w_flat, log_std])


def symmetry_deficit(pol: GaussianPolicy, theta, tr: MirrorTransform, probes) -> float:
    """``mean_s ||mu(s) - g(mu(f(s)))||`` over the probe states."""
    probes = np.atleast_2d(probes)
    if len(probes) == 0:
        raise ValueError("probe set must be nonempty")
    fs = tr.state(probes)
    diff = pol.mean(theta, probes) - tr.action(fs, pol.mean(theta, fs))
    return float(np.mean(np.linalg.norm(diff, axis=1)))
