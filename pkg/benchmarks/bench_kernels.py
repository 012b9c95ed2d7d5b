#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Run after installing the package:

    python3 benchmarks/bench_kernels.py

Covers the hot paths: CART split search, fused per-breath metadata and
feature kernels, and trailing-window variance.
"""
import time

import numpy as np

from ventclass import _kernels_py

try:
    from ventclass import _fastkernels
except ImportError:
    _fastkernels = None

IMPLS = {"python": _kernels_py}
if _fastkernels is not None:
    IMPLS["cython"] = _fastkernels


def timeit(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_best_split(impl, rng):
    cols = [np.sort(rng.uniform(0, 10, size=4000)) for _ in range(50)]
    ys = [rng.integers(0, 5, size=4000).astype(np.int64) for _ in range(50)]

    def run():
        for vals, y in zip(cols, ys):
            impl.best_split(vals, y, 5, 1)

    return timeit(run)


def bench_breath_meta(impl, rng):
    breaths = [(rng.normal(8, 20, 160), rng.uniform(3, 30, 160))
               for _ in range(2000)]

    def run():
        for flow, pressure in breaths:
            impl.breath_meta(flow, pressure, 0.02)

    return timeit(run)


def bench_breath_features(impl, rng):
    breaths = []
    for _ in range(2000):
        flow = rng.normal(8, 20, 160)
        pressure = rng.uniform(3, 30, 160)
        x0, peep, pip = _kernels_py.breath_meta(flow, pressure, 0.02)[:3]
        breaths.append((flow, pressure, int(x0), peep, pip))

    def run():
        for flow, pressure, x0, peep, pip in breaths:
            impl.breath_features(flow, pressure, x0, peep, pip, 0.02, 4,
                                 0.4, 1.0, 1.0, 15)

    return timeit(run)


def bench_trailing_var(impl, rng):
    series = [rng.normal(size=5000) for _ in range(20)]

    def run():
        for vals in series:
            impl.trailing_var(vals, 100)

    return timeit(run)


BENCHES = [("best_split (50 cols x 4000 rows)", bench_best_split),
           ("breath_meta (2000 breaths)", bench_breath_meta),
           ("breath_features (2000 breaths)", bench_breath_features),
           ("trailing_var (20 x 5000, w=100)", bench_trailing_var)]


def main():
    rng = np.random.default_rng(0)
    print(f"{'benchmark':40s}" + "".join(f"{name:>12s}" for name in IMPLS)
          + ("     speedup" if len(IMPLS) == 2 else ""))
    for label, bench in BENCHES:
        times = {name: bench(impl, np.random.default_rng(0))
                 for name, impl in IMPLS.items()}
        row = f"{label:40s}" + "".join(f"{times[n] * 1e3:10.1f}ms"
                                       for n in IMPLS)
        if len(IMPLS) == 2:
            row += f"{times['python'] / times['cython']:10.1f}x"
        print(row)
    if _fastkernels is None:
        print("\ncompiled extension not available; fallback only")


if __name__ == "__main__":
    main()
