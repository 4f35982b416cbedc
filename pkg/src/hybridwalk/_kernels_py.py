"""Pure-Python implementations of the numerical hot loops.

Every function here has a twin with the same signature in ``_kernels.pyx``.
The compiled module is preferred at import time (see ``kernels.py``); this
one is the fallback and the reference the benchmark compares against.
"""
import math


def pfs_eval(amps, phases, beta, t, order=0):
    """Sum of ``A_n sin(n beta t + phi_n)`` or its ``order``-th time derivative."""
    total = 0.0
    for n in range(len(amps)):
        w = n * beta
        arg = w * t + phases[n]
        if order == 0:
            total += amps[n] * math.sin(arg)
        elif order == 1:
            total += amps[n] * w * math.cos(arg)
        else:
            total -= amps[n] * w * w * math.sin(arg)
    return total


def pfs_eval_scaled(amps, phases, beta, t, scales):
    total = 0.0
    for n in range(len(amps)):
        total += scales[n] * amps[n] * math.sin(n * beta * t + phases[n])
    return total


def bank_eval(amps, phases, nterms, beta, t, out):
    """Evaluate every row of a padded oscillator bank at time ``t`` into ``out``."""
    for c in range(amps.shape[0]):
        total = 0.0
        for n in range(nterms[c] + 1):
            total += amps[c, n] * math.sin(n * beta * t + phases[c, n])
        out[c] = total
    return out


def lipm_propagate(e, edot, zmp, omega0, dt):
    """Closed-form LIPM flow over ``dt`` with the ZMP held at ``zmp``.

    Solves ``e'' = omega0^2 (e - zmp)`` exactly (cosh/sinh propagation).
    Returns ``(e, edot)`` after ``dt``.
    """
    ch = math.cosh(omega0 * dt)
    sh = math.sinh(omega0 * dt)
    d = e - zmp
    return zmp + d * ch + edot / omega0 * sh, d * omega0 * sh + edot * ch


def gae(rewards, values, next_values, dones, ends, gamma, lam, out):
    """Generalized advantage estimation over a flat trajectory segment.

    ``dones`` marks true terminations (no bootstrap); ``ends`` marks any
    episode boundary, including time-limit or batch cuts, where the
    recursion restarts.
    """
    acc = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        if ends[t]:
            acc = 0.0
        nv = 0.0 if dones[t] else next_values[t]
        delta = rewards[t] + gamma * nv - values[t]
        acc = delta + gamma * lam * acc
        out[t] = acc
    return out


def mirror_vector(v, perm, sign, out):
    for i in range(len(perm)):
        out[i] = sign[i] * v[perm[i]]
    return out


IMPLEMENTATION = "python"

__all__ = [
    "IMPLEMENTATION",
    "bank_eval",
    "gae",
    "lipm_propagate",
    "mirror_vector",
    "pfs_eval",
    "pfs_eval_scaled",
]
