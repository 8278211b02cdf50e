"""Time the compiled and pure-Python kernels on the same inputs.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from gwnorm import graphs, kernels
from gwnorm.mc import _draw, _setup
from gwnorm.minorpower import Poly
from gwnorm.taylor import euler_pair


def mc_case(n=100_000):
    g = graphs.petersen()
    ord, perm, eidx, edges, indeg, _ = _setup(g, None)
    rng = np.random.default_rng(0)
    phid, phio = _draw(rng, 1.5 + indeg / 2, len(edges), n)
    D = graphs.random_correlation(rng, g.p)[np.ix_(perm, perm)]
    L = np.linalg.cholesky(D)
    return (phid, phio, eidx, L, np.zeros((g.p, g.p)), False)


def rec_case(N=40):
    tv = ("a", "b", "c")
    a, b, c = (Poly.var(tv, v) for v in tv)
    facs = [(1 - 0.3 * a - 0.2 * b) * (1 - 0.1 * c) - 0.05 * c * c,
            1 - 0.2 * a * b + 0.1 * c, 1 + 0.3 * b - 0.2 * a * c]
    Q, R = euler_pair([f.to_dense() for f in facs], [-2.5, 1.5, -3.0])
    return (Q, R, 1.0, N)


def best_of(f, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        f(*args)
        best = min(best, time.perf_counter() - t)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    cases = {"mc_logweights": mc_case(), "graded_recurrence": rec_case()}
    print(f"compiled extension available: {kernels.BACKEND == 'cython'}")
    print(f"{'kernel':<20}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    for name, inp in cases.items():
        tp = best_of(kernels.get(name, "python"), inp, args.repeat)
        if kernels.BACKEND == "cython":
            tc = best_of(kernels.get(name, "cython"), inp, args.repeat)
            print(f"{name:<20}{tp:>12.4f}{tc:>12.4f}{tp / tc:>10.1f}")
        else:
            print(f"{name:<20}{tp:>12.4f}{'n/a':>12}{'':>10}")


if __name__ == "__main__":
    main()
