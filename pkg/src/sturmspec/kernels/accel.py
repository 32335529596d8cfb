"""Numba-compiled versions of the double-precision trace kernels."""

import numpy as np
from numba import njit


@njit(cache=True)
def level_pass(digits, V, x):
    t0, t1, h = 2.0, x - V, x
    for k in range(digits.shape[0]):
        a = digits[k]
        s0, s1 = 0.0, 1.0
        for _ in range(a - 1):
            s0, s1 = s1, h * s1 - s0
        hn = s1 * t1 - s0 * t0
        t1n = (h * s1 - s0) * t1 - s1 * t0
        t0, t1, h = h, t1n, hn
    return t0, t1, h


@njit(cache=True)
def level_pass_grid(digits, V, xs):
    n = xs.shape[0]
    out0 = np.empty(n)
    out1 = np.empty(n)
    outh = np.empty(n)
    for i in range(n):
        out0[i], out1[i], outh[i] = level_pass(digits, V, xs[i])
    return out0, out1, outh
