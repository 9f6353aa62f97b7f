"""Time each hot kernel on its numba and numpy paths.

    python3 benchmarks/bench_kernels.py [--repeat N]

JIT compilation is triggered before timing starts.
"""
import argparse
import timeit

import numpy as np

from regrad import _kernels as K


def cases(rng):
    c = rng.normal(size=(200_000, 4)) + 1j * rng.normal(size=(200_000, 4))
    cols = np.array([0, 1, 3], dtype=np.int64)
    yield "power_of_sums p=2, 2e5 rows", "power_of_sums", (c, cols, 2)

    pts = np.array([1, -1, 0.5, 2j, -0.5j])
    n = 20_000
    x, y = pts[rng.integers(0, 5, n)], pts[rng.integers(0, 5, n)]
    yield "collision_search, 2e4 rows, 25 buckets", "collision_search", (x, y, x + y, 1e-9)

    m = 801
    g = np.linspace(0.5, 2.0, m)
    X, Y = np.meshgrid(g, g, indexing="ij")
    S = X * Y
    ii, jj = np.nonzero((S >= 0.5) & (S <= 2.0))
    s = S[ii, jj]
    k = np.clip(np.searchsorted(g, s, side="right") - 1, 0, m - 2).astype(np.int64)
    w = (s - g[k]) / (g[k + 1] - g[k])
    yield f"normal_matrix, m={m}, {ii.size} equations", "normal_matrix", (m, k, w, ii.astype(np.int64), jj.astype(np.int64))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not K.NUMBA_AVAILABLE:
        print("numba is not installed; only the numpy path can be timed")
    K.warmup()
    rng = np.random.default_rng(0)
    print(f"{'kernel':45s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s}")
    for label, name, a in cases(rng):
        t_np = min(timeit.repeat(lambda: getattr(K, name + "_np")(*a), number=1, repeat=args.repeat))
        if K.NUMBA_AVAILABLE:
            t_nb = min(timeit.repeat(lambda: getattr(K, name + "_nb")(*a), number=1, repeat=args.repeat))
            print(f"{label:45s} {1e3 * t_np:11.2f} {1e3 * t_nb:11.2f} {t_np / t_nb:7.1f}x")
        else:
            print(f"{label:45s} {1e3 * t_np:11.2f} {'-':>11s} {'-':>8s}")


if __name__ == "__main__":
    main()
