"""Reference (numpy / pure python) implementations of the trace kernels."""

import numpy as np


def level_pass(digits, V, x):
    """Traces (t0, t1, h) = (tr M_{n-1}, tr M_{n-1} M_n, tr M_n) at level n.

    digits holds the partial quotients a_1..a_n.  The matrix recursion
    M_j = M_{j-2} M_{j-1}^{a_j} (seeds M_{-1} = [[1,-V],[0,1]],
    M_0 = [[x,-1],[1,0]]) collapses to a trace map on triples: with the
    second-kind Chebyshev values S_p at h = tr M_j,

        tr M_{j+1}         = S_a(h) t1 - S_{a-1}(h) t0,
        tr(M_j M_{j+1})    = S_{a+1}(h) t1 - S_a(h) t0,

    so no 2x2 matrices are carried at all.  Initial triple: (2, x-V, x).
    """
    t0, t1, h = 2.0, x - V, x
    for a in digits:
        s0, s1 = 0.0, 1.0  # S_0, S_1
        for _ in range(a - 1):
            s0, s1 = s1, h * s1 - s0
        # s1 = S_a, s0 = S_{a-1}
        hn = s1 * t1 - s0 * t0
        t1n = (h * s1 - s0) * t1 - s1 * t0  # S_{a+1} t1 - S_a t0
        t0, t1, h = h, t1n, hn
    return t0, t1, h


def level_pass_grid(digits, V, xs):
    """Vectorized level_pass over an array of x values."""
    out0 = np.empty(len(xs))
    out1 = np.empty(len(xs))
    outh = np.empty(len(xs))
    for i, x in enumerate(xs):
        out0[i], out1[i], outh[i] = level_pass(digits, V, x)
    return out0, out1, outh


def direct_transfer(vs, x):
    """Direct product of one-site transfer matrices over sites len(vs)..1.

    vs[j-1] is the potential at site j; the product is
    [[x - v_q, -1], [1, 0]] ... [[x - v_1, -1], [1, 0]].
    Used as the independent oracle for the trace recursion.
    """
    a, b, c, d = 1.0, 0.0, 0.0, 1.0
    for v in vs:  # site 1 applied first => rightmost factor; prepend the rest
        na = (x - v) * a - c
        nb = (x - v) * b - d
        nc, nd = a, b
        a, b, c, d = na, nb, nc, nd
    return a, b, c, d
