"""Kernel dispatch: compiled extension when available, pure Python otherwise.

Set ``HYBRIDWALK_PURE_PYTHON=1`` to force the fallback (used by the
benchmark and by the parity tests).
"""
import os

import numpy as np

from hybridwalk import _kernels_py

_impl = _kernels_py
if os.environ.get("HYBRIDWALK_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from hybridwalk import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:  # extension not built
        _impl = _kernels_py

IMPLEMENTATION = _impl.IMPLEMENTATION

pfs_eval = _impl.pfs_eval
lipm_propagate = _impl.lipm_propagate


def pfs_eval_scaled(amps, phases, beta, t, scales):
    return _impl.pfs_eval_scaled(amps, phases, beta, t, scales)


def bank_eval(amps, phases, nterms, beta, t, out=None):
    if out is None:
        out = np.empty(amps.shape[0])
    _impl.bank_eval(amps, phases, nterms, beta, t, out)
    return out


def gae(rewards, values, next_values, dones, ends, gamma, lam):
    rewards = np.ascontiguousarray(rewards, dtype=np.float64)
    out = np.empty_like(rewards)
    _impl.gae(
        rewards,
        np.ascontiguousarray(values, dtype=np.float64),
        np.ascontiguousarray(next_values, dtype=np.float64),
        np.ascontiguousarray(dones, dtype=np.uint8),
        np.ascontiguousarray(ends, dtype=np.uint8),
        float(gamma),
        float(lam),
        out,
    )
    return out


def mirror_vector(v, perm, sign, out=None):
    if out is None:
        out = np.empty(len(perm))
    _impl.mirror_vector(v, perm, sign, out)
    return out


def use_backend(name):
    """Switch the module-level kernels at runtime (``"python"`` or ``"cython"``)."""
    global _impl, IMPLEMENTATION, pfs_eval, lipm_propagate
    if name == "python":
        _impl = _kernels_py
    else:
        from hybridwalk import _kernels as compiled

        _impl = compiled
    IMPLEMENTATION = _impl.IMPLEMENTATION
    pfs_eval = _impl.pfs_eval
    lipm_propagate = _impl.lipm_propagate
