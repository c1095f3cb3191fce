#!/usr/bin/env python3
"""Benchmark the compiled sparse-solver kernel against the numpy fallback.

The alternating PMD update (matvec + bisection L1 projection) is the hot
loop of every sparse permutation/bootstrap run; this script times both
backends on the same planted-mode problems and checks they agree.

Usage: python benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from ccakit import SparseParams, SynthSpec, generate, scca_fit
from ccakit import _pmd_numpy

try:
    from ccakit import _pmd_cy
except ImportError:
    _pmd_cy = None


def standardize(M):
    return (M - M.mean(axis=0)) / M.std(axis=0, ddof=1)


def problem(n, p, q, seed):
    m = min(3, min(p, q) // 4)
    support = tuple(
        (tuple(range(4 * i, 4 * i + 3)), tuple(range(4 * i, 4 * i + 3)))
        for i in range(m)
    )
    spec = SynthSpec(n=n, p=p, q=q, rho=tuple(0.8 - 0.2 * i for i in range(m)),
                     sparse_support=support, seed=seed)
    X, Y, _ = generate(spec)
    return standardize(X.values), standardize(Y.values)


def time_fit(X, Y, params, kernel, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        model = scca_fit(X, Y, params, kernel=kernel)
        best = min(best, time.perf_counter() - t0)
    return best, model


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if _pmd_cy is None:
        print("compiled kernel not built; only timing the numpy fallback")

    sizes = [(500, 20, 20), (1000, 50, 40), (2000, 100, 80), (1000, 200, 200)]
    print(f"{'n':>6} {'p':>5} {'q':>5} {'k':>3} {'numpy (ms)':>12} "
          f"{'cython (ms)':>12} {'speedup':>8} {'max |diff|':>11}")
    for n, p, q in sizes:
        X, Y = problem(n, p, q, seed=1)
        k = min(3, min(p, q))
        params = SparseParams(c1=2.0, c2=2.0, k=k, max_iter=500, tol=1e-8)
        t_np, m_np = time_fit(X, Y, params, _pmd_numpy.rank_one_pmd, args.repeats)
        if _pmd_cy is None:
            print(f"{n:>6} {p:>5} {q:>5} {k:>3} {t_np * 1e3:>12.2f} {'-':>12} {'-':>8} {'-':>11}")
            continue
        t_cy, m_cy = time_fit(X, Y, params, _pmd_cy.rank_one_pmd, args.repeats)
        diff = max(
            float(np.max(np.abs(m_np.x_weights - m_cy.x_weights))),
            float(np.max(np.abs(m_np.y_weights - m_cy.y_weights))),
        )
        print(f"{n:>6} {p:>5} {q:>5} {k:>3} {t_np * 1e3:>12.2f} "
              f"{t_cy * 1e3:>12.2f} {t_np / t_cy:>7.1f}x {diff:>11.1e}")


if __name__ == "__main__":
    main()
