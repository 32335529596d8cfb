"""Timing comparison of the numba trace kernels against the numpy/python
reference path.

Run:  python3 benchmarks/bench_kernels.py [--points 20000] [--levels 18]

The same comparison can be forced package-wide by setting
STURMSPEC_NO_NUMBA=1 before importing sturmspec.
"""

import argparse
import time

import numpy as np

from sturmspec.frequency import FrequencySpec
from sturmspec.kernels import HAS_NUMBA, reference

try:
    from sturmspec.kernels import accel
except ImportError:
    accel = None


def bench(fn, digits, V, xs, repeats=3):
    best = float("inf")
    # far-from-spectrum points overflow by design; not an error here
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(repeats):
            t0 = time.perf_counter()
            fn(digits, V, xs)
            best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=20_000)
    ap.add_argument("--levels", type=int, default=18)
    ap.add_argument("--kappa", type=int, default=1)
    ap.add_argument("--V", type=float, default=24.0)
    args = ap.parse_args()

    spec = FrequencySpec((0,), args.kappa)
    digits = np.array([spec.digit(i) for i in range(1, args.levels + 1)],
                      dtype=np.int64)
    xs = np.linspace(-2.0, 2.0, args.points)

    print(f"kappa={args.kappa} V={args.V} levels={args.levels} "
          f"points={args.points}")
    t_ref = bench(reference.level_pass_grid, digits, args.V, xs)
    print(f"reference: {t_ref * 1e3:9.2f} ms  "
          f"({t_ref / args.points * 1e6:.2f} us/point)")

    if accel is None or not HAS_NUMBA:
        print("numba path unavailable (STURMSPEC_NO_NUMBA set or import "
              "failure); only the reference was timed")
        return

    accel.level_pass_grid(digits, args.V, xs[:8])  # compile outside timing
    t_acc = bench(accel.level_pass_grid, digits, args.V, xs)
    print(f"numba:     {t_acc * 1e3:9.2f} ms  "
          f"({t_acc / args.points * 1e6:.2f} us/point)")
    print(f"speedup:   {t_ref / t_acc:8.1f}x")

    with np.errstate(over="ignore", invalid="ignore"):
        r = reference.level_pass_grid(digits, args.V, xs)
        a = accel.level_pass_grid(digits, args.V, xs)
    agree = all(np.array_equal(x, y, equal_nan=True) for x, y in zip(r, a))
    print(f"bitwise agreement: {agree}")


if __name__ == "__main__":
    main()
