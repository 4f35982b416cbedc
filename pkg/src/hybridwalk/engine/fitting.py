"""Least-squares fitting of the oscillator bank to a footstep plan.

Each channel is fitted independently. A constraint row is a linear
combination of channel evaluations (value, first derivative, or the
LIPM-implied ZMP) at knot times inside one gait cycle. The amplitude/phase
parameterisation makes the problem nonlinear; it is solved with a damped
Gauss-Newton iteration seeded from the equivalent sine/cosine linear
solve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from hybridwalk.engine.command import FootstepPlan, WalkCommand
from hybridwalk.engine.gait import GaitTiming
from hybridwalk.engine.oscillator import LIPMParams, OscillatorBank, PFSOscillator, zmp_scales

DEFAULT_TERMS = {"COMx": 3, "COMy": 3, "X": 2, "Y": 2, "Z": 2, "Theta": 1, "Arm": 1}
MIN_TERMS = {"Z": 2}
ARM_GAIN = 0.5

VALUE, VELOCITY, ZMP, ACCEL = 0, 1, 2, 3


class FitError(RuntimeError):
    """The Gauss-Newton iteration did not converge."""


@dataclass(frozen=True)
class Knot:
    """``sum(coef * eval_kind(t)) == target`` for one channel."""

    terms: tuple  # ((t, kind, coef), ...)
    target: float


def _knot(t, kind, target):
    return Knot(((t, kind, 1.0),), target)


def _design(knots, n_terms, beta, omega0):
    """Sine/cosine design matrix: columns ``[1, sin(n b t), cos(n b t)...]``."""
    scales = zmp_scales(n_terms, beta, omega0)
    rows = np.zeros((len(knots), 2 * n_terms + 1))
    for i, k in enumerate(knots):
        for t, kind, coef in k.terms:
            if kind in (VALUE, ZMP):
                rows[i, 0] += coef
            for n in range(1, n_terms + 1):
                w = n * beta
                s, c = math.sin(w * t), math.cos(w * t)
                if kind == VELOCITY:
                    rows[i, 2 * n - 1] += coef * w * c
                    rows[i, 2 * n] -= coef * w * s
                elif kind == ACCEL:
                    rows[i, 2 * n - 1] -= coef * w * w * s
                    rows[i, 2 * n] -= coef * w * w * c
                else:
                    g = scales[n] if kind == ZMP else 1.0
                    rows[i, 2 * n - 1] += coef * g * s
                    rows[i, 2 * n] += coef * g * c
    return rows


def _residual_jacobian(params, knots, targets, n_terms, beta, omega0):
    """Residuals and Jacobian w.r.t. ``[A_0..A_N, phi_1..phi_N]``."""
    amps = params[: n_terms + 1]
    phis = params[n_terms + 1:]
    scales = zmp_scales(n_terms, beta, omega0)
    r = -targets.copy()
    jac = np.zeros((len(knots), len(params)))
    for i, k in enumerate(knots):
        for t, kind, coef in k.terms:
            if kind in (VALUE, ZMP):
                r[i] += coef * amps[0]
                jac[i, 0] += coef
            for n in range(1, n_terms + 1):
                w = n * beta
                arg = w * t + phis[n - 1]
                s, c = math.sin(arg), math.cos(arg)
                if kind == VELOCITY:
                    val, dval = w * c, -w * s
                elif kind == ACCEL:
                    val, dval = -w * w * s, -w * w * c
                else:
                    g = scales[n] if kind == ZMP else 1.0
                    val, dval = g * s, g * c
                r[i] += coef * amps[n] * val
                jac[i, n] += coef * val
                jac[i, n_terms + n] += coef * amps[n] * dval
    return r, jac


def gauss_newton(params, knots, targets, n_terms, beta, omega0, max_iter=200, grad_tol=1e-10):
    """Levenberg-style damped Gauss-Newton; returns ``(params, residuals, iterations)``."""
    mu = 1e-3
    r, jac = _residual_jacobian(params, knots, targets, n_terms, beta, omega0)
    cost = r @ r
    for it in range(max_iter):
        grad = jac.T @ r
        if np.linalg.norm(grad) < grad_tol:
            return params, r, it
        h = jac.T @ jac
        damp = mu * (np.diag(np.diag(h)) + np.eye(len(params)))
        step = np.linalg.lstsq(h + damp, -grad, rcond=None)[0]
        trial = params + step
        r_new, jac_new = _residual_jacobian(trial, knots, targets, n_terms, beta, omega0)
        cost_new = r_new @ r_new
        if cost_new < cost:
            params, r, jac, cost = trial, r_new, jac_new, cost_new
            mu = max(mu / 3.0, 1e-12)
        else:
            mu *= 4.0
            if mu > 1e12:
                break
    grad_norm = float(np.linalg.norm(jac.T @ r))
    if grad_norm < grad_tol:
        return params, r, max_iter
    raise FitError(
        f"Gauss-Newton did not converge in {max_iter} iterations "
        f"(gradient norm {grad_norm:.3e}, cost {cost:.3e})"
    )


def fit_channel(knots, n_terms, beta, omega0, warm_start=True, initial=None, max_iter=200):
    """Fit one PFS channel; returns ``(oscillator, residuals, iterations)``."""
    targets = np.array([k.target for k in knots], dtype=np.float64)
    if initial is not None:
        params = np.asarray(initial, dtype=np.float64).copy()
    elif warm_start:
        coef = np.linalg.lstsq(_design(knots, n_terms, beta, omega0), targets, rcond=None)[0]
        a, b = coef[1::2], coef[2::2]
        params = np.concatenate([[coef[0]], np.hypot(a, b), np.arctan2(b, a)])
    else:
        params = np.concatenate([[0.0], np.full(n_terms, 0.01), np.zeros(n_terms)])
    params, r, iters = gauss_newton(params, knots, targets, n_terms, beta, omega0, max_iter)
    amps = params[: n_terms + 1].copy()
    phases = np.concatenate([[math.pi / 2], params[n_terms + 1:]])
    # fold negative harmonic amplitudes into the phase
    for n in range(1, n_terms + 1):
        if amps[n] < 0:
            amps[n] = -amps[n]
            phases[n] += math.pi
    phases[1:] = np.mod(phases[1:] + math.pi, 2 * math.pi) - math.pi
    return PFSOscillator(amps, phases, beta), r, iters


def stride_from_plan(plan: FootstepPlan, hip_width: float) -> tuple:
    """Average per-stride ``(dx, dy, dtheta)`` in the local frame of each step."""
    if len(plan) < 2:
        raise ValueError("footstep plan needs at least two steps")
    d = []
    for a, b in zip(plan.steps, plan.steps[1:]):
        c, s = math.cos(a.theta), math.sin(a.theta)
        dx, dy = b.x - a.x, b.y - a.y
        lx, ly = c * dx + s * dy, -s * dx + c * dy
        # strip the lateral hip offset between the two feet
        ly -= b.side.sign * hip_width
        d.append((lx, ly, b.theta - a.theta))
    return tuple(float(v) for v in np.mean(d, axis=0))


def cycle_knots(stride, cmd: WalkCommand, timing: GaitTiming, hip_width: float, lipm: LIPMParams):
    """Constraint sets for every channel of one gait cycle.

    The first stride of the cycle swings the left foot (right support),
    the second swings the right foot. Channel values are expressed in the
    frame moving with the command's average velocity, which puts the
    support foot under the body origin at mid single support.
    """
    sx, sy, sth = stride
    wt = cmd.w_t
    vx, vy, vth = sx / wt, sy / wt, sth / wt
    t_lift = timing.lift_off * wt
    t_td = timing.touch_down * wt
    t_mid = 0.5 * (t_lift + t_td)
    half = 0.5 * (t_td - t_lift)
    t_stance = t_mid + wt
    reach = wt - half  # foot offset from body origin at lift-off / touch-down, in time units

    def sweep(v):
        # end points of the swing, then a foot at rest in the world at mid stance
        return [
            _knot(t_lift, VALUE, -v * reach),
            _knot(t_td, VALUE, v * reach),
            _knot(t_stance, VALUE, 0.0),
            _knot(t_stance, VELOCITY, -v),
            _knot(t_stance, ACCEL, 0.0),
        ]

    knots = {
        "X": sweep(vx),
        "Y": sweep(vy),
        # apex at mid swing and a flat contact at mid stance; two harmonics
        # cannot also pin zero height at lift-off and touch-down without
        # pushing the foot below the ground during stance
        "Z": [
            _knot(t_mid, VALUE, cmd.w_z),
            _knot(t_mid, VELOCITY, 0.0),
            _knot(t_stance, VALUE, 0.0),
            _knot(t_stance, VELOCITY, 0.0),
            _knot(t_stance, ACCEL, 0.0),
        ],
        "Theta": [
            _knot(t_lift, VALUE, -vth * reach),
            _knot(t_td, VALUE, vth * reach),
            _knot(t_stance, VALUE, 0.0),
        ],
        "Arm": [
            _knot(t_lift, VALUE, ARM_GAIN * vx * reach),
            _knot(t_td, VALUE, -ARM_GAIN * vx * reach),
            _knot(t_stance, VALUE, 0.0),
        ],
    }
    for name, v, lateral in (("COMx", vx, 0.0), ("COMy", vy, hip_width / 2)):
        rows = []
        for stride_idx, side in ((0, -1.0), (1, 1.0)):
            tm = t_mid + stride_idx * wt
            for t in (tm - half, tm, tm + half):
                rows.append(_knot(t, ZMP, side * lateral - v * (t - tm)))
        # COM symmetric about the centre line at the stride boundaries
        rows.append(Knot(((0.0, VALUE, 1.0), (wt, VALUE, -1.0)), 0.0))
        knots[name] = rows
    return knots


def fit_oscillators(
    plan: FootstepPlan,
    cmd: WalkCommand,
    lipm: LIPMParams,
    term_counts: dict | None = None,
    timing: GaitTiming = GaitTiming(),
    hip_width: float = 0.1,
    max_iter: int = 200,
) -> OscillatorBank:
    """Fit every channel of a gait cycle to the plan's stride."""
    counts = dict(DEFAULT_TERMS)
    counts.update(term_counts or {})
    for name, n in counts.items():
        if n < MIN_TERMS.get(name, 1):
            raise ValueError(f"channel {name} needs at least {MIN_TERMS.get(name, 1)} terms")
    stride = stride_from_plan(plan, hip_width)
    return fit_stride(stride, cmd, lipm, counts, timing, hip_width, max_iter)


def fit_stride(stride, cmd, lipm, counts=None, timing=GaitTiming(), hip_width=0.1, max_iter=200):
    counts = counts or DEFAULT_TERMS
    beta = math.pi / cmd.w_t
    knots = cycle_knots(stride, cmd, timing, hip_width, lipm)
    channels, residuals, rel, iters = {}, [], [], 0
    for name, rows in knots.items():
        osc, r, it = fit_channel(rows, counts[name], beta, lipm.omega0, max_iter=max_iter)
        channels[name] = osc
        residuals.append(r)
        scale = max(np.max(np.abs([k.target for k in rows])), 1e-9)
        rel.append(np.sqrt(np.mean(r**2)) / scale)
        iters = max(iters, it)
    all_r = np.concatenate(residuals)
    bank = OscillatorBank(
        channels=channels,
        lipm=lipm,
        w_t=cmd.w_t,
        hip_width=hip_width,
        residual_rms=float(np.sqrt(np.mean(all_r**2))),
        iterations=iters,
        relative_residual=float(max(rel)),
        velocity=(stride[0] / cmd.w_t, stride[1] / cmd.w_t, stride[2] / cmd.w_t),
        knots=knots,
    )
    return bank
