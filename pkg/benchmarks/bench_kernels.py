"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--quick]

Also reports whether both backends agree on every input.
"""
import argparse
import sys
import time
from unittest import mock

import numpy as np

import ldao.cluster
import ldao.harness
from ldao import _fallback
from ldao.augment import run_ldao
from ldao.cluster import kmeans_fit
from ldao.core import RunConfig
from ldao.density import log_density, select_bandwidth
from ldao.synthetic import rare_regime

try:
    from ldao import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def agreement(a, b):
    """'bitwise', 'rtol 1e-12' (float sums; exp differs in the last bits) or 'NO'."""
    if hasattr(a, "sse"):
        a, b = (a.sse, a.assignments), (b.sse, b.assignments)
    elif hasattr(a, "dataset"):
        a, b = a.dataset.features, b.dataset.features
    a, b = (a if isinstance(a, tuple) else (a,)), (b if isinstance(b, tuple) else (b,))
    if all(np.array_equal(x, y) for x, y in zip(a, b)):
        return "bitwise"
    if all(np.allclose(x, y, rtol=1e-12, atol=0) for x, y in zip(a, b)):
        return "rtol 1e-12"
    return "NO"


def with_backend(module, fn):
    """Run ``fn`` with every kernel reference rebound to ``module``."""
    patches = [
        mock.patch.object(ldao.cluster, "nearest_centroid", module.nearest_centroid),
        # the package re-exports a function named density over the module
        mock.patch.object(sys.modules["ldao.density"], "kde_log_sums", module.kde_log_sums),
        mock.patch.object(ldao.harness, "knn_indices", module.knn_indices),
    ]
    for p in patches:
        p.start()
    try:
        return fn()
    finally:
        for p in patches:
            p.stop()


def cases(quick):
    rng = np.random.default_rng(0)
    scale = 4 if quick else 1
    pts = rng.normal(size=(20000 // scale, 8))
    cents = rng.normal(size=(6, 8))
    train = rng.normal(size=(4000 // scale, 6))
    queries = rng.normal(size=(1000 // scale, 6))
    kde = select_bandwidth(rng.normal(size=(1500 // scale, 5)), 1.0, 1e-8)
    zq = rng.normal(size=(1500 // scale, 5))
    Z = rng.normal(size=(5000 // scale, 6))
    ds = rare_regime(1, n=2000 // scale)
    return [
        ("nearest_centroid 20000x8, K=6", lambda m: m.nearest_centroid(pts, cents)),
        ("knn_indices 4000 train, 1000 queries, k=5",
         lambda m: m.knn_indices(train, queries, 5)),
        ("kde log density 1500 members x 1500 queries",
         lambda m: with_backend(m, lambda: log_density(kde, zq))),
        ("kmeans_fit 5000x6, K=5, 10 restarts",
         lambda m: with_backend(m, lambda: kmeans_fit(Z, 5, seed=3, restarts=10))),
        ("run_ldao rare fixture 2000 rows",
         lambda m: with_backend(m, lambda: run_ldao(ds, RunConfig(seed=5)))),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="quarter-size inputs")
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not built; only the fallback is available")
    print(f"{'kernel':<46} {'cython s':>10} {'numpy s':>10} {'speedup':>8}  match")
    for name, fn in cases(args.quick):
        t_py, out_py = best_of(lambda: fn(_fallback), args.repeat)
        if _kernels is None:
            print(f"{name:<46} {'-':>10} {t_py:>10.4f} {'-':>8}  -")
            continue
        t_cy, out_cy = best_of(lambda: fn(_kernels), args.repeat)
        print(f"{name:<46} {t_cy:>10.4f} {t_py:>10.4f} {t_py / t_cy:>7.1f}x  "
              f"{agreement(out_cy, out_py)}")


if __name__ == "__main__":
    main()
