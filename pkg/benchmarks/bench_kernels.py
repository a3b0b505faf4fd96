#!/usr/bin/env python3
"""Benchmark the compiled set kernels against the pure-Python fallback.

The kernels are the hot inner loop of overlap-index registration (each
new set is intersected against every registered set), so this is the
workload worth measuring. Usage:

    python benchmarks/bench_kernels.py [--sizes 1000,10000,100000] [--repeats 5]
"""

from __future__ import annotations

import argparse
import random
import time

from dataplore.sets import _kernels_py

try:
    from dataplore.sets import _kernels_c
except ImportError:
    _kernels_c = None


def make_sorted_ids(rng: random.Random, size: int, universe: int) -> list[str]:
    return sorted({f"row{n:08d}" for n in rng.sample(range(universe), size)})


def time_call(fn, a, b, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        started = time.perf_counter()
        fn(a, b)
        best = min(best, time.perf_counter() - started)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="1000,10000,100000",
                        help="comma-separated list sizes")
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    sizes = [int(s) for s in args.sizes.split(",")]
    rng = random.Random(args.seed)

    if _kernels_c is None:
        print("compiled kernels not built; benchmarking the pure fallback only")

    kernels = ["intersection_size", "intersect_sorted", "union_sorted", "difference_sorted"]
    header = f"{'kernel':<20}{'size':>9}{'pure ms':>12}{'compiled ms':>14}{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for size in sizes:
        a = make_sorted_ids(rng, size, size * 4)
        b = make_sorted_ids(rng, size, size * 4)
        for name in kernels:
            pure = time_call(getattr(_kernels_py, name), a, b, args.repeats) * 1000
            if _kernels_c is not None:
                compiled = time_call(getattr(_kernels_c, name), a, b, args.repeats) * 1000
                print(f"{name:<20}{size:>9}{pure:>12.3f}{compiled:>14.3f}{pure / compiled:>8.1f}x")
            else:
                print(f"{name:<20}{size:>9}{pure:>12.3f}{'-':>14}{'-':>9}")


if __name__ == "__main__":
    main()
