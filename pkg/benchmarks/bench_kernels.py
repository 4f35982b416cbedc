"""Time the compiled kernels against the pure-Python fallback.

Usage: ``python benchmarks/bench_kernels.py [--repeat N]``. Prints one line
per kernel with both timings and the speed-up.
"""
import argparse
import timeit

import numpy as np

from hybridwalk import _kernels_py as py

try:
    from hybridwalk import _kernels as cy
except ImportError:
    cy = None


def cases(rng):
    amps = rng.normal(size=6)
    phases = rng.normal(size=6)
    bank_a = rng.normal(size=(8, 6))
    bank_p = rng.normal(size=(8, 6))
    nterms = np.full(8, 5, dtype=np.int64)
    out8 = np.empty(8)
    n = 4096
    r, v, nv = rng.normal(size=(3, n))
    done = (rng.random(n) < 0.01).astype(np.uint8)
    end = done.copy()
    end[-1] = 1
    gae_out = np.empty(n)
    vec = rng.normal(size=37)
    perm = rng.permutation(37).astype(np.int64)
    sign = rng.choice([-1.0, 1.0], size=37)
    m_out = np.empty(37)
    return {
        "pfs_eval": lambda k: k.pfs_eval(amps, phases, 12.5, 0.3, 2),
        "bank_eval": lambda k: k.bank_eval(bank_a, bank_p, nterms, 12.5, 0.3, out8),
        "lipm_propagate": lambda k: k.lipm_propagate(0.01, 0.1, 0.0, 4.4, 0.02),
        "gae(4096)": lambda k: k.gae(r, v, nv, done, end, 0.99, 0.95, gae_out),
        "mirror_vector": lambda k: k.mirror_vector(vec, perm, sign, m_out),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=2000)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}{'python us':>12}{'cython us':>12}{'speed-up':>10}")
    for name, fn in cases(rng).items():
        n = max(1, args.repeat // 50) if name.startswith("gae") else args.repeat
        t_py = min(timeit.repeat(lambda: fn(py), number=n, repeat=3)) / n * 1e6
        if cy is None:
            print(f"{name:<16}{t_py:12.2f}{'n/a':>12}{'n/a':>10}")
            continue
        t_cy = min(timeit.repeat(lambda: fn(cy), number=n, repeat=3)) / n * 1e6
        print(f"{name:<16}{t_py:12.2f}{t_cy:12.2f}{t_py / t_cy:10.1f}x")


if __name__ == "__main__":
    main()
