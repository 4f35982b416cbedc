# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the functions in ``_kernels_py``."""
from libc.math cimport sin, cos, sinh, cosh

IMPLEMENTATION = "cython"


def pfs_eval(const double[:] amps, const double[:] phases, double beta, double t, int order=0):
    cdef Py_ssize_t n
    cdef double total = 0.0, w, arg
    for n in range(amps.shape[0]):
        w = n * beta
        arg = w * t + phases[n]
        if order == 0:
            total += amps[n] * sin(arg)
        elif order == 1:
            total += amps[n] * w * cos(arg)
        else:
            total -= amps[n] * w * w * sin(arg)
    return total


def pfs_eval_scaled(const double[:] amps, const double[:] phases, double beta, double t,
                    const double[:] scales):
    cdef Py_ssize_t n
    cdef double total = 0.0
    for n in range(amps.shape[0]):
        total += scales[n] * amps[n] * sin(n * beta * t + phases[n])
    return total


def bank_eval(const double[:, :] amps, const double[:, :] phases, const long[:] nterms,
              double beta, double t, double[:] out):
    cdef Py_ssize_t c, n
    cdef double total
    for c in range(amps.shape[0]):
        total = 0.0
        for n in range(nterms[c] + 1):
            total += amps[c, n] * sin(n * beta * t + phases[c, n])
        out[c] = total
    return out.base if out.base is not None else out


def lipm_propagate(double e, double edot, double zmp, double omega0, double dt):
    cdef double ch = cosh(omega0 * dt)
    cdef double sh = sinh(omega0 * dt)
    cdef double d = e - zmp
    return zmp + d * ch + edot / omega0 * sh, d * omega0 * sh + edot * ch


def gae(const double[:] rewards, const double[:] values, const double[:] next_values,
        const unsigned char[:] dones, const unsigned char[:] ends, double gamma, double lam,
        double[:] out):
    cdef Py_ssize_t t
    cdef double acc = 0.0, nv, delta
    for t in range(rewards.shape[0] - 1, -1, -1):
        if ends[t]:
            acc = 0.0
        nv = 0.0 if dones[t] else next_values[t]
        delta = rewards[t] + gamma * nv - values[t]
        acc = delta + gamma * lam * acc
        out[t] = acc
    return out.base if out.base is not None else out


def mirror_vector(const double[:] v, const long[:] perm, const double[:] sign, double[:] out):
    cdef Py_ssize_t i
    for i in range(perm.shape[0]):
        out[i] = sign[i] * v[perm[i]]
    return out.base if out.base is not None else out
