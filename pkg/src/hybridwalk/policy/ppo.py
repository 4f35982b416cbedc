"""Rollout batches, GAE, the clipped surrogate, the value loss and the update loop."""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from hybridwalk import kernels
from hybridwalk.policy.gaussian import GaussianPolicy, ValueFn, digest, gaussian_log_prob

LOG_CLAMP = 30.0


@dataclass(frozen=True)
class PPOConfig:
    epsilon: float = 0.2
    c: float = 0.0
    gamma: float = 0.99
    lam: float = 0.95
    epochs: int = 10
    minibatch: int = 256
    lr: float = 3e-4
    value_lr: float = 1e-3

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must be in (0, 1)")
        if not (0 <= self.gamma <= 1 and 0 <= self.lam <= 1):
            raise ValueError("gamma and lambda must be in [0, 1]")
        if self.epochs < 1 or self.minibatch < 1:
            raise ValueError("epochs and minibatch must be >= 1")
        if self.lr < 0 or self.value_lr < 0 or self.c < 0:
            raise ValueError("learning rates and entropy coefficient must be non-negative")


@dataclass
class SampleBatch:
    """Flat rollout records; mirror arrays carry a leading transform axis ``K``.

    ``end`` marks the last step of an episode or of a rollout segment, so
    advantage accumulation stops there; ``done`` marks true terminals,
    where no value is bootstrapped.
    """

    obs: np.ndarray
    act: np.ndarray
    logp_old: np.ndarray
    rew: np.ndarray
    done: np.ndarray
    val: np.ndarray
    next_val: np.ndarray
    end: np.ndarray = None
    adv: np.ndarray = None
    ret: np.ndarray = None
    mirror_obs: np.ndarray = None
    mirror_act: np.ndarray = None
    logp_old_mirror: np.ndarray = None

    def __post_init__(self):
        n = len(self.obs)
        if self.end is None:
            self.end = self.done.copy()
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            length = v.shape[1] if f.name.startswith(("mirror", "logp_old_mirror")) else len(v)
            if length != n:
                raise ValueError(f"field {f.name} has length {length}, expected {n}")

    def __len__(self):
        return len(self.obs)

    def subset(self, idx) -> "SampleBatch":
        kw = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                kw[f.name] = None
            elif f.name.startswith(("mirror", "logp_old_mirror")):
                kw[f.name] = v[:, idx]
            else:
                kw[f.name] = v[idx]
        return SampleBatch(**kw)

    @staticmethod
    def concat(batches) -> "SampleBatch":
        kw = {}
        for f in fields(SampleBatch):
            vals = [getattr(b, f.name) for b in batches]
            if any(v is None for v in vals):
                kw[f.name] = None
            else:
                axis = 1 if f.name.startswith(("mirror", "logp_old_mirror")) else 0
                kw[f.name] = np.concatenate(vals, axis=axis)
        return SampleBatch(**kw)


def gae_advantages(rewards, values, next_values, dones, ends, gamma, lam) -> np.ndarray:
    """``delta_t = r_t + gamma V_{t+1} (1 - done_t) - V_t``, summed with weight ``(gamma lam)^k``."""
    return kernels.gae(rewards, values, next_values, dones, ends, gamma, lam)


def compute_gae(batch: SampleBatch, gamma: float, lam: float, value_fn=None, omega=None) -> SampleBatch:
    """Fill ``adv`` and ``ret``; with ``value_fn`` the stored values are recomputed first."""
    if value_fn is not None:
        batch = replace(batch, val=value_fn(omega, batch.obs))
    adv = gae_advantages(batch.rew, batch.val, batch.next_val, batch.done, batch.end, gamma, lam)
    return replace(batch, adv=adv, ret=adv + batch.val)


def normalize_advantages(batch: SampleBatch) -> SampleBatch:
    if len(batch) < 2:
        raise ValueError("advantage normalisation needs at least two samples")
    a = batch.adv
    return replace(batch, adv=(a - a.mean()) / (a.std() + 1e-8))


def safe_ratio(log_num, log_den, what="ratio"):
    """``exp(log_num - log_den)`` with the exponent clamped to ``+-30``."""
    d = np.asarray(log_num) - np.asarray(log_den)
    if not np.all(np.isfinite(d)):
        i = int(np.flatnonzero(~np.isfinite(d))[0])
        raise FloatingPointError(f"non-finite {what} for sample {i}")
    clamped = np.clip(d, -LOG_CLAMP, LOG_CLAMP)
    # the clamp has zero slope outside its range
    return np.exp(clamped), np.abs(d) <= LOG_CLAMP


def ppo_surrogate(pol: GaussianPolicy, theta, batch: SampleBatch, cfg: PPOConfig):
    """Return ``(loss, grad, info)`` for ``-mean(L^C) - c H``."""
    mean, _, cache = pol.forward(theta, batch.obs, keep=True)
    _, log_std = pol.split(theta)
    logp = gaussian_log_prob(mean, log_std, batch.act)
    ratio, live = safe_ratio(logp, batch.logp_old)
    adv = batch.adv
    bound = (1.0 + np.sign(adv) * cfg.epsilon) * adv
    unclipped = ratio * adv
    surr = np.minimum(unclipped, bound)
    n = len(batch)
    loss = -surr.mean() - cfg.c * pol.entropy(theta)
    # d surr / d logp = ratio * adv on the unclipped branch, zero on the plateau
    active = (unclipped <= bound) & live & (adv != 0)
    d_logp = np.where(active, -ratio * adv / n, 0.0)
    grad = pol.logp_backward(theta, batch.obs, batch.act, d_logp, cache=cache, mean=mean)
    if cfg.c:
        grad[pol.net.n_params:] -= cfg.c
    info = {
        "mean_ratio": float(ratio.mean()),
        "clip_frac": float(np.mean(np.abs(ratio - 1.0) > cfg.epsilon)),
        "surrogate": float(surr.mean()),
    }
    return float(loss), grad, info


def value_loss(vf: ValueFn, omega, obs, targets):
    """``mean((V(s) - target)^2)`` and its gradient."""
    pred, cache = vf.net.forward(omega, obs, keep=True)
    err = pred[:, 0] - targets
    n = len(targets)
    grad = vf.net.backward(omega, cache, (2.0 * err / n)[:, None])
    return float(np.mean(err * err)), grad


def value_update(vf: ValueFn, omega, batch: SampleBatch, lr: float) -> np.ndarray:
    """One plain gradient step on the squared value error."""
    _, g = value_loss(vf, omega, batch.obs, batch.ret)
    return omega - lr * g


@dataclass
class Adam:
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: np.ndarray = None
    v: np.ndarray = None
    t: int = 0

    def step(self, params, grad) -> np.ndarray:
        if self.m is None:
            self.m = np.zeros_like(params)
            self.v = np.zeros_like(params)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def state(self) -> dict:
        n = 0 if self.m is None else len(self.m)
        return {
            "m": self.m if self.m is not None else np.zeros(n),
            "v": self.v if self.v is not None else np.zeros(n),
            "t": self.t,
        }

    def load(self, state: dict) -> None:
        self.t = int(state["t"])
        self.m = None if self.t == 0 else np.array(state["m"], dtype=np.float64)
        self.v = None if self.t == 0 else np.array(state["v"], dtype=np.float64)


@dataclass
class UpdateResult:
    theta: np.ndarray
    omega: np.ndarray
    metrics: dict = field(default_factory=dict)


def update_policy(
    pol: GaussianPolicy,
    vf: ValueFn,
    theta,
    omega,
    batch: SampleBatch,
    cfg: PPOConfig,
    rng: np.random.Generator,
    sym=None,
    pi_opt: Adam | None = None,
    v_opt: Adam | None = None,
) -> UpdateResult:
    """Epochs of shuffled minibatch steps on ``-L^C + L^S + entropy`` and the value loss.

    ``theta_old`` is represented by the batch's cached log-densities, which
    never change during the call; a digest of the incoming parameters is
    reported so callers can confirm the snapshot stayed intact.
    """
    from hybridwalk.losses import symmetry_loss

    theta_old = np.array(theta, copy=True)
    theta_old.setflags(write=False)
    snapshot = digest(theta_old)
    pi_opt = pi_opt or Adam(cfg.lr)
    v_opt = v_opt or Adam(cfg.value_lr)
    theta = np.array(theta, copy=True)
    omega = np.array(omega, copy=True)
    n = len(batch)
    mb = min(cfg.minibatch, n)
    stats = {"mean_ratio": [], "clip_frac": [], "surrogate": [], "value_loss": [], "sym_loss": []}
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n - mb + 1, mb):
            part = batch.subset(order[start:start + mb])
            loss, grad, info = ppo_surrogate(pol, theta, part, cfg)
            if sym is not None and sym.kind != "none" and sym.w > 0:
                s_loss, s_grad = symmetry_loss(pol, theta, part, sym)
                grad = grad + s_grad
                stats["sym_loss"].append(s_loss)
            v_loss, v_grad = value_loss(vf, omega, part.obs, part.ret)
            if cfg.lr > 0:
                theta = pi_opt.step(theta, grad)
            if cfg.value_lr > 0:
                omega = v_opt.step(omega, v_grad)
            for k in ("mean_ratio", "clip_frac", "surrogate"):
                stats[k].append(info[k])
            stats["value_loss"].append(v_loss)
    metrics = {k: (float(np.mean(v)) if v else 0.0) for k, v in stats.items()}
    metrics["snapshot_intact"] = digest(theta_old) == snapshot
    return UpdateResult(theta, omega, metrics)
