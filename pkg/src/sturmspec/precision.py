"""Precision-controlled scalars, bracketed root finding and small eigenproblems.

Two scalar backends are used throughout the package: plain Python floats
(mantissa_bits == 53) and gmpy2 big floats for extended precision.  Both
support the arithmetic operators, so most numerical code is written once
and runs on either backend.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
import numpy as np

from .errors import NonFinite, NoSignChange, NotPrimitive

__all__ = [
    "PrecisionContext",
    "DOUBLE",
    "EXTENDED",
    "bisect_root",
    "chebyshev_S",
    "perron_eigen",
    "charpoly_int",
]


@dataclass(frozen=True)
class PrecisionContext:
    """Mantissa width plus the tolerances used by root solves and checks."""

    mantissa_bits: int = 53
    abs_tol: float = 1e-12
    rel_tol: float = 1e-12

    def __post_init__(self):
        if self.mantissa_bits < 53:
            raise ValueError("mantissa_bits must be >= 53")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        # tolerances must be representable at the chosen precision
        if self.abs_tol < 2.0 ** (-16384) or self.rel_tol < 2.0 ** (-16384):
            raise ValueError("tolerance underflows the representable range")

    @property
    def is_double(self) -> bool:
        return self.mantissa_bits == 53

    def workprec(self):
        """Context manager installing this precision for gmpy2 arithmetic."""
        if self.is_double:
            return contextlib.nullcontext()
        return gmpy2.context(gmpy2.context(), precision=self.mantissa_bits)

    def real(self, x):
        """Convert x (float / int / str / mpfr) to the backend scalar type."""
        if self.is_double:
            return float(x)
        return gmpy2.mpfr(x, self.mantissa_bits)

    def to_float(self, x) -> float:
        return float(x)


DOUBLE = PrecisionContext()
EXTENDED = PrecisionContext(mantissa_bits=256, abs_tol=1e-30, rel_tol=1e-30)


def _isfinite(x) -> bool:
    if isinstance(x, float):
        return math.isfinite(x)
    return gmpy2.is_finite(x)


def bisect_root(f, lo, hi, ctx: PrecisionContext, f_tol=None, max_iter=None,
                x_tol=None, f_lo=None, f_hi=None):
    """Root of f on the sign-changing bracket [lo, hi] (Brent's method).

    Inverse-quadratic / secant steps are taken when they behave, with a
    guaranteed fall-back to halving, so the bracket invariant — and hence
    the certificate — is preserved while convergence is superlinear.

    Stops when |f| <= f_tol (if given), or when the bracket width drops
    below x_tol (defaults to max(abs_tol, rel_tol * max(|lo|, |hi|)) from
    the context).  Callers chasing structures far narrower than the
    context tolerances — e.g. deep band edges — must pass an explicit
    x_tol near the mantissa resolution.  Precomputed endpoint values may
    be supplied as f_lo / f_hi to save two evaluations.
    Returns (root, bracket_lo, bracket_hi).
    """
    with ctx.workprec():
        a = ctx.real(lo)
        b = ctx.real(hi)
        fa = f(a) if f_lo is None else f_lo
        fb = f(b) if f_hi is None else f_hi
        for v in (fa, fb):
            if not _isfinite(v):
                raise NonFinite("f non-finite at bracket endpoint")
        if fa == 0:
            return a, a, a
        if fb == 0:
            return b, b, b
        if (fa > 0) == (fb > 0):
            raise NoSignChange(f"f({float(a)})={float(fa)}, f({float(b)})={float(fb)}")

        if x_tol is None:
            scale = max(abs(a), abs(b))
            x_tol = ctx.real(ctx.abs_tol)
            rel_stop = ctx.real(ctx.rel_tol) * scale
            if rel_stop > x_tol:
                x_tol = rel_stop
        else:
            x_tol = ctx.real(x_tol)
        if max_iter is None:
            max_iter = 8 * self_bits(ctx)

        half = ctx.real("0.5")
        c, fc = a, fa
        d = e = b - a
        for _ in range(max_iter):
            if (fb > 0) == (fc > 0):
                c, fc = a, fa
                d = e = b - a
            if abs(fc) < abs(fb):
                a, b, c = b, c, b
                fa, fb, fc = fb, fc, fb
            # b is the best iterate; the root lies between b and c
            xm = (c - b) * half
            done = abs(xm) <= x_tol
            if f_tol is not None and abs(fb) <= f_tol:
                done = True
            if done:
                break
            if abs(e) >= x_tol and abs(fa) > abs(fb):
                s = fb / fa
                if a == c:  # secant
                    p = 2 * xm * s
                    q = 1 - s
                else:  # inverse quadratic interpolation
                    q = fa / fc
                    r = fb / fc
                    p = s * (2 * xm * q * (q - r) - (b - a) * (r - 1))
                    q = (q - 1) * (r - 1) * (s - 1)
                if p > 0:
                    q = -q
                p = abs(p)
                if 2 * p < min(3 * xm * q - abs(x_tol * q), abs(e * q)):
                    e, d = d, p / q
                else:
                    d = e = xm
            else:
                d = e = xm
            a, fa = b, fb
            if abs(d) > x_tol:
                b = b + d
            else:
                b = b + (x_tol if xm > 0 else -x_tol)
            fb = f(b)
            if not _isfinite(fb):
                raise NonFinite("f non-finite inside bracket")
            if fb == 0:
                break
        blo, bhi = (b, c) if b < c else (c, b)
        return b, blo, bhi


def self_bits(ctx: PrecisionContext) -> int:
    return ctx.mantissa_bits


def chebyshev_S(p: int, x):
    """Second-kind Chebyshev-type value S_p with S_0 = 0, S_1 = 1.

    Recursion S_{p+1} = x*S_p - S_{p-1}; S_{-1} = -1 is forced by it.
    Works on floats and big floats alike.
    """
    if p < -1:
        raise ValueError("p >= -1 required")
    if p == -1:
        return -1 + 0 * x
    if p == 0:
        return 0 * x
    s_prev = 0 * x  # S_0
    s_cur = 1 + 0 * x  # S_1
    for _ in range(p - 1):
        s_prev, s_cur = s_cur, x * s_cur - s_prev
    return s_cur


def _is_primitive(M: np.ndarray, cap: int) -> bool:
    B = (np.asarray(M) > 0).astype(np.int8)
    P = B.copy()
    for _ in range(cap):
        if P.min() > 0:
            return True
        P = ((P @ B) > 0).astype(np.int8)
    return bool(P.min() > 0)


def perron_eigen(M, ctx: PrecisionContext = DOUBLE):
    """Perron-Frobenius eigenvalue with left/right vectors (sum-normalized).

    M must be primitive; primitivity is checked via boolean powers up to
    exponent 2*dim^2.  Power iteration runs at the requested precision and
    the residual ||Mv - lam v||_inf <= abs_tol is enforced.
    """
    A = np.asarray(M, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or (A < 0).any():
        raise ValueError("square nonnegative matrix required")
    if not _is_primitive(A, 2 * n * n):
        raise NotPrimitive(f"no positive power up to exponent {2 * n * n}")

    def _power(mat):
        with ctx.workprec():
            rows = [[ctx.real(x) for x in row] for row in mat]
            v = [ctx.real(1) / n for _ in range(n)]
            lam = ctx.real(0)
            for _ in range(100000):
                w = [sum(rows[i][j] * v[j] for j in range(n)) for i in range(n)]
                s = sum(w)
                v_new = [x / s for x in w]
                lam_new = s
                err = max(abs(v_new[i] - v[i]) for i in range(n))
                conv = abs(lam_new - lam)
                v, lam = v_new, lam_new
                if err <= ctx.abs_tol / 10 and conv <= ctx.abs_tol / 10:
                    break
            resid = max(
                abs(sum(rows[i][j] * v[j] for j in range(n)) - lam * v[i])
                for i in range(n)
            )
            if resid > ctx.abs_tol * max(1.0, float(lam)):
                raise NonFinite("power iteration failed to converge")
            return lam, v

    lam, right = _power(A)
    _, left = _power(A.T)
    return lam, left, right


def charpoly_int(M) -> list:
    """Exact integer characteristic polynomial coefficients of an integer matrix.

    Returns [1, c_{n-1}, ..., c_0] for lambda^n + c_{n-1} lambda^{n-1} + ... + c_0,
    computed by the Faddeev-LeVerrier recursion in exact rational arithmetic.
    """
    A = [[Fraction(int(x)) for x in row] for row in np.asarray(M)]
    n = len(A)
    coeffs = [Fraction(1)]
    Mk = [[Fraction(0)] * n for _ in range(n)]
    c = Fraction(1)
    for k in range(1, n + 1):
        # M_k = A*M_{k-1} + c_{k-1} I
        AM = [
            [sum(A[i][l] * Mk[l][j] for l in range(n)) for j in range(n)]
            for i in range(n)
        ]
        for i in range(n):
            AM[i][i] += c
        Mk = AM
        AMk = [
            [sum(A[i][l] * Mk[l][j] for l in range(n)) for j in range(n)]
            for i in range(n)
        ]
        c = -sum(AMk[i][i] for i in range(n)) / k
        coeffs.append(c)
    out = []
    for c in coeffs:
        assert c.denominator == 1
        out.append(int(c))
    return out
