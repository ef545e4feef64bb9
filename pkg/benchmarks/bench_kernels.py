"""Benchmark the numba level-expansion kernel against the pure-numpy path.

Builds frontiers of growing size by repeatedly expanding from the root point
(no pruning, high threshold is irrelevant to the kernel itself), then times
``expand_level`` (numba unless ORBIT_NO_NUMBA is set) and
``expand_pure_numpy`` on identical inputs and checks they agree.

Usage: python benchmarks/bench_kernels.py [--levels 8] [--repeats 5]
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from mhorbit.engine import kernels


def build_frontiers(levels: int):
    logs = np.log(np.array([[2.0, 2.0, 2.0, 2.0]]))
    errs = np.zeros_like(logs)
    banned = np.full(1, -1, np.int8)
    frontiers = []
    for _ in range(levels):
        cl, ce, letter, _, _, _, _ = kernels.expand_pure_numpy(logs, errs, banned, 0.0)
        logs, errs, banned = cl, ce, letter
        frontiers.append((logs.copy(), errs.copy(), banned.copy()))
    return frontiers


def time_kernel(fn, logs, errs, banned, repeats: int) -> float:
    fn(logs, errs, banned, 0.0)  # warm up (numba compiles here)
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(logs, errs, banned, 0.0)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--levels", type=int, default=8)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    active = "numba" if kernels.USE_NUMBA else "numpy (ORBIT_NO_NUMBA set)"
    print(f"active expand_level backend: {active}")
    print(f"{'rows':>9} {'active (ms)':>12} {'numpy (ms)':>12} {'speedup':>8}")
    for logs, errs, banned in build_frontiers(args.levels):
        ref = kernels.expand_pure_numpy(logs, errs, banned, 0.0)
        got = kernels.expand_level(logs, errs, banned, 0.0)
        # the two paths must agree exactly on the reordered rows
        order_ref = np.lexsort((ref[3], ref[2]))
        order_got = np.lexsort((got[3], got[2]))
        assert np.array_equal(ref[0][order_ref], got[0][order_got]), "kernel mismatch"
        t_active = time_kernel(kernels.expand_level, logs, errs, banned, args.repeats)
        t_numpy = time_kernel(kernels.expand_pure_numpy, logs, errs, banned, args.repeats)
        print(f"{logs.shape[0]:>9} {t_active * 1e3:>12.3f} {t_numpy * 1e3:>12.3f} "
              f"{t_numpy / t_active:>8.2f}x")


if __name__ == "__main__":
    main()
