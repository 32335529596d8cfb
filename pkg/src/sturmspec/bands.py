"""Trace polynomials and the spectral generating band hierarchy.

A band of order n is an interval on which its generating polynomial
t_{(m,p)}(x) = tr(M_{m-1} M_m^p) has modulus <= 2; the polynomial maps the
band monotonically onto [-2,2].  Types:

  * (n,I):   band of sigma_{(n,1)} inside a band of sigma_{(n,0)};
  * (n,II):  band of sigma_{(n+1,0)} inside a band of sigma_{(n,-1)};
  * (n,III): band of sigma_{(n+1,0)} inside a band of sigma_{(n,0)}.

Everything needed to locate the children of a level-n parent comes out of a
single matrix-recursion pass to level n: with (t0, t1, h) =
(tr M_{n-1}, tr M_{n-1}M_n, tr M_n) and a = a_{n+1},

  parent polynomial:    t1 (type I parent) or h (II/III; h = t_{(n+1,0)}),
  type-I child poly:    t_{(n,a+1)} = S_{a+1}(h) t1 - S_a(h) t0,
  type-II/III child:    t_{(n,a)}   = S_a(h) t1 - S_{a-1}(h) t0.

Children of II/III parents are bracketed by pullbacks of the Chebyshev
intervals I_{p,l} through the monotone parent polynomial (the warm start);
inside each pullback the child trace crosses +2 and -2 exactly once each
with known end signs, so both edges come out of sign-safe bracketed
solves.  An adaptive-grid locator serves as fallback and as an
independent cross-check.
"""

from __future__ import annotations

import bisect as _bisect
import functools
import json
import math
from dataclasses import dataclass

import gmpy2
import numpy as np

from . import coding, kernels
from .coding import alphabet
from .errors import (
    BoundViolation,
    ChildCountMismatch,
    MissingBand,
    PrecisionExhausted,
)
from .frequency import FrequencySpec
from .precision import DOUBLE, PrecisionContext, bisect_root, chebyshev_S

__all__ = [
    "Coupling",
    "Band",
    "BandTree",
    "Gap",
    "BoundsProfile",
    "eval_trace",
    "build_band_tree",
    "iter_subtree_levels",
    "band_for_word",
    "spectrum_point",
    "gaps",
    "chebyshev_intervals",
    "estimate_bounds_profile",
    "LevelEvaluator",
]

TREE_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Coupling:
    """Coupling constant V.  V > 4 is a hard floor; the dimension and
    measure theory assumes V > 20 (we warn, not refuse, below that)."""

    V: float

    def __post_init__(self):
        if not self.V > 4:
            raise ValueError("coupling V > 4 required")

    @property
    def below_theory_floor(self) -> bool:
        return self.V <= 20


class _LocateFailure(Exception):
    """Internal: warm-start located nothing sensible; try the safe path."""


# ---------------------------------------------------------------------------
# trace evaluation


class LevelEvaluator:
    """Evaluates transfer-matrix traces for one (spec, V, ctx) triple."""

    def __init__(self, spec: FrequencySpec, V: float, ctx: PrecisionContext,
                 max_order: int = 64):
        self.spec = spec
        self.ctx = ctx
        self.Vf = float(V)
        self.digits = [spec.digit(i) for i in range(1, max_order + 2)]
        self.digits_arr = np.array(self.digits, dtype=np.int64)
        if ctx.is_double:
            self.V = float(V)
            self._two = 2.0
        else:
            with ctx.workprec():
                self.V = gmpy2.mpfr(V, ctx.mantissa_bits)
                self._two = gmpy2.mpfr(2, ctx.mantissa_bits)
        self.n_pass = 0  # instrumentation: full recursion passes
        self.n_resume = 0  # instrumentation: short resumes from a checkpoint

    def digit(self, n: int) -> int:
        return self.digits[n - 1]

    def pass_(self, n: int, x):
        """(t0, t1, h) = (tr M_{n-1}, tr M_{n-1}M_n, tr M_n) at level n."""
        self.n_pass += 1
        if self.ctx.is_double:
            return kernels.level_pass(self.digits_arr[:n], self.Vf, float(x))
        return self._advance((self._two, x - self.V, x), 0, n)

    def _advance(self, trip, j: int, n: int):
        """Run the trace map from level j to level n (triple-autonomous:
        the recursion never looks at x again once seeded)."""
        t0, t1, h = trip
        digits = self.digits
        for k in range(j, n):
            a = digits[k]
            if a == 1:
                t0, t1, h = h, h * t1 - t0, t1
            else:
                s0, s1 = 0, 1
                for _ in range(a - 1):
                    s0, s1 = s1, h * s1 - s0
                hn = s1 * t1 - s0 * t0
                t1 = (h * s1 - s0) * t1 - s1 * t0
                t0, h = h, hn
        if not _finite(t1) or not _finite(h):
            raise PrecisionExhausted(f"trace overflow at level {n}")
        return t0, t1, h

    def resume(self, trip, j: int, n: int):
        """Continue a stored level-j triple to level n."""
        self.n_resume += 1
        return self._advance(trip, j, n)

    def pass_capture(self, mid: int, n: int, x):
        """One full pass that also returns the intermediate level-mid triple."""
        self.n_pass += 1
        if self.ctx.is_double:
            tm = kernels.level_pass(self.digits_arr[:mid], self.Vf, float(x))
            return tm, self._advance(tm, mid, n)
        tm = self._advance((self._two, x - self.V, x), 0, mid)
        return tm, self._advance(tm, mid, n)

    def trace(self, m: int, p: int, x):
        """t_{(m,p)}(x) = tr(M_{m-1} M_m^p)."""
        t0, t1, h = self.pass_(m, x)
        if p == -1:
            return h * t0 - t1  # adjugate: tr(M_{m-1} M_m^{-1})
        return chebyshev_S(p, h) * t1 - chebyshev_S(p - 1, h) * t0

    def gen_poly(self, band: "Band", x):
        """Value of the band's generating polynomial at x."""
        t0, t1, h = self.pass_(band.order, x)
        return t1 if band.btype == "I" else h


def _finite(x):
    if isinstance(x, float):
        return math.isfinite(x)
    return gmpy2.is_finite(x)


def eval_trace(spec: FrequencySpec, V, m: int, p: int, x, ctx: PrecisionContext = DOUBLE):
    """tr(M_{m-1}(x) M_m(x)^p) at the requested precision."""
    V = V.V if isinstance(V, Coupling) else V
    with ctx.workprec():
        ev = LevelEvaluator(spec, V, ctx, max_order=m + 2)
        return ev.trace(m, p, ctx.real(x))


# ---------------------------------------------------------------------------
# bands and the tree


class Band:
    """One spectral generating band with certified endpoints.

    word is the rooted coding word as a tuple of 0-based ordinals (position
    i lives in the alphabet A_{a_i}, position 0 in A_0).  cert holds the
    final bisection brackets ((lo_out, lo_in), (hi_in, hi_out)) or None.
    sign_hi is +1 when the generating polynomial equals +2 at hi.
    model is a transient _TraceModel checkpoint shared with siblings (never
    serialized); it lets the child solve start the trace recursion a couple
    of levels below the band's own order.
    """

    __slots__ = ("word", "order", "btype", "lo", "hi", "sign_hi",
                 "trace_index", "cert", "model", "fpred")

    def __init__(self, word, order, btype, lo, hi, sign_hi, trace_index,
                 cert=None, model=None, fpred=None):
        self.word = word
        self.order = order
        self.btype = btype
        self.lo = lo
        self.hi = hi
        self.sign_hi = sign_hi
        self.trace_index = trace_index
        self.cert = cert
        self.model = model
        self.fpred = fpred

    @property
    def width(self):
        return self.hi - self.lo

    def __repr__(self):
        return (f"Band({self.btype}, n={self.order}, "
                f"[{float(self.lo):.6g}, {float(self.hi):.6g}])")


def root_bands(V, ctx: PrecisionContext):
    """The two order-0 bands: sigma_(0,1) = [V-2, V+2] (type I, word 'I')
    and sigma_(1,0) = [-2, 2] (type III, word 'III')."""
    with ctx.workprec():
        Vr = ctx.real(V)
        two = ctx.real(2)
        bI = Band((0,), 0, "I", Vr - two, Vr + two, 1, (0, 1))
        bIII = Band((1,), 0, "III", -two, two, 1, (1, 0))
        return [bIII, bI]  # x-sorted (V > 4)


@functools.lru_cache(maxsize=4096)
def chebyshev_intervals(p: int, l: int):
    """Closed hull [lo, hi] of I_{p,l} = {2cos((l+c)pi/(p+1)) : |c| <= 1/10,
    |S_{p+1}| <= 1/4} in double precision."""
    if not 1 <= l <= p:
        raise ValueError("1 <= l <= p required")

    def smag(c):
        th = (l + c) * math.pi / (p + 1)
        return abs(math.sin((p + 1) * th) / math.sin(th)) - 0.25

    # |S_{p+1}| = |sin((l+c)pi + ...)|/sin(theta) grows from 0 at c=0;
    # find the boundary on each side of c = 0 within |c| <= 1/10
    def boundary(sign):
        cmax = 0.1
        if smag(sign * cmax) <= 0:
            return sign * cmax
        a, b = 0.0, cmax
        for _ in range(80):
            m = 0.5 * (a + b)
            if smag(sign * m) <= 0:
                a = m
            else:
                b = m
        return sign * a

    c_neg, c_pos = boundary(-1), boundary(1)
    h1 = 2 * math.cos((l + c_pos) * math.pi / (p + 1))
    h2 = 2 * math.cos((l + c_neg) * math.pi / (p + 1))
    return (min(h1, h2), max(h1, h2))


@functools.lru_cache(maxsize=512)
def _child_slots(parent_type: str, a: int):
    """Hull slots for the children of a II/III parent with next digit a.

    Returns a list of (child_type, hull) sorted by hull position in
    [-2,2].  II parent: I children sit in I_{a+1,l}, III children in
    I_{a,l}; III parent: I children in I_{a,l}, III children in
    I_{a-1,l} (one Chebyshev family lower since t_{(n,0)} is the small
    trace there rather than t_{(n,-1)}).
    """
    if parent_type == "II":
        fam_I, fam_III = a + 1, a
    elif parent_type == "III":
        fam_I, fam_III = a, a - 1
    else:
        raise ValueError("slots only defined for II/III parents")
    slots = [("I", chebyshev_intervals(fam_I, l)) for l in range(1, fam_I + 1)]
    slots += [("III", chebyshev_intervals(fam_III, l))
              for l in range(1, fam_III + 1)]
    slots.sort(key=lambda s: s[1][0])
    return tuple(slots)


def expected_child_types(parent_type: str, a: int):
    """x-ordered child type sequence (alternating, I at both ends)."""
    if parent_type == "I":
        return ["II"]
    n_I = a + 1 if parent_type == "II" else a
    out = []
    for j in range(n_I - 1):
        out += ["I", "III"]
    out.append("I")
    return out


def _trip_close(a, b, rtol=1e-13):
    return all(abs(x - y) <= rtol * (1 + abs(x)) for x, y in zip(a, b))


def _tf(v):
    """Sign-symmetric log compression; secant steps on tf(g) behave well
    even where the trace grows exponentially outside the band.

    Computed in double precision: trace values on a parent band are bounded
    (|t| stays of order V), and residuals are only driven to f_tol >= 1e-12,
    so the double rounding of ~1e-16 near |g| = 2 is harmless and the big
    float log is dead weight.
    """
    v = float(v)
    if v >= 0:
        return math.log1p(v)
    return -math.log1p(-v)


class _TraceModel:
    """Interpolated trace-triple checkpoint over one band.

    Stores Newton-form interpolants of (t0, t1, h) at a fixed level in the
    scaled coordinate u = (x - lo)/wid of the band the nodes were sampled
    on.  The trace functions vary by O(1) over that band while remaining
    analytic on the far wider scale of the enclosing level-j band, so the
    divided differences decay geometrically and a handful of terms
    reproduce the triple to well below the working f_tol; the trailing
    negligible coefficients are dropped.  Downstream solves then replace a
    full recursion pass by eval() plus a short resume.
    """

    __slots__ = ("level", "lo", "wid", "us", "coefs")

    def __init__(self, level, lo, wid, us, trips, drop_tol=2.0 ** -64):
        self.level = level
        self.lo = lo
        self.wid = wid
        self.us = us
        m = len(us)
        coefs = []
        keep = 1
        for c in range(3):
            dd = [t[c] for t in trips]
            col = [dd[0]]
            for k in range(1, m):
                for i in range(m - k):
                    dd[i] = (dd[i + 1] - dd[i]) / (us[i + k] - us[i])
                col.append(dd[0])
            scale = max(abs(v) for v in col) * drop_tol
            k_need = 1
            for k, v in enumerate(col):
                if abs(v) > scale:
                    k_need = k + 1
            keep = max(keep, k_need)
            coefs.append(col)
        self.coefs = [col[:keep] for col in coefs]

    def eval(self, x):
        u = (x - self.lo) / self.wid
        us = self.us
        out = []
        for col in self.coefs:
            k = len(col) - 1
            acc = col[k]
            for i in range(k - 1, -1, -1):
                acc = acc * (u - us[i]) + col[i]
            out.append(acc)
        return tuple(out)


class _FloatPredictor:
    """Double-precision twin of _TraceModel used only for edge prediction.

    Trace values on a band are bounded (order V), so a float interpolant
    of the level-j triple localizes a child edge to a small fraction of
    the band width at negligible cost; certified endpoints still come
    from full-precision evaluations on the predicted micro-bracket, with
    the wide bracket as fallback when the prediction misses.
    """

    __slots__ = ("level", "lo", "wid", "us", "coefs")

    def __init__(self, level, lo, wid, us_f, trips):
        self.level = level
        self.lo = lo  # kept at full precision for the u map
        self.wid = wid
        self.us = us_f
        m = len(us_f)
        self.coefs = []
        for c in range(3):
            dd = [float(t[c]) for t in trips]
            col = [dd[0]]
            for k in range(1, m):
                for i in range(m - k):
                    dd[i] = (dd[i + 1] - dd[i]) / (us_f[i + k] - us_f[i])
                col.append(dd[0])
            self.coefs.append(col)

    def trip(self, u):
        us = self.us
        out = []
        for col in self.coefs:
            k = len(col) - 1
            acc = col[k]
            for i in range(k - 1, -1, -1):
                acc = acc * (u - us[i]) + col[i]
            out.append(acc)
        return out


def _froot(f, ul, uh, fl, fh, f_tol=1e-5, max_iter=60):
    """Small float-only bracketed secant (Illinois); returns the root or
    None.  Good enough for prediction: |f| <= f_tol, not certification."""
    if fl == 0:
        return ul
    if fh == 0:
        return uh
    if (fl > 0) == (fh > 0):
        return None
    side = 0
    for _ in range(max_iter):
        denom = fh - fl
        um = (ul * fh - uh * fl) / denom if denom != 0 else 0.5 * (ul + uh)
        if not ul < um < uh:
            um = 0.5 * (ul + uh)
        fm = f(um)
        if abs(fm) <= f_tol:
            return um
        if (fm > 0) == (fl > 0):
            ul, fl = um, fm
            if side == -1:
                fh *= 0.5
            side = -1
        else:
            uh, fh = um, fm
            if side == 1:
                fl *= 0.5
            side = 1
        if uh - ul <= 1e-17 * max(1.0, abs(ul)):
            return 0.5 * (ul + uh)
    return 0.5 * (ul + uh)


class _ChildSolver:
    """Workhorse for locating the children of one parent band."""

    def __init__(self, ev: LevelEvaluator, band: Band, ctx: PrecisionContext,
                 f_tol=1e-12):
        self.ev = ev
        self.band = band
        self.ctx = ctx
        self.n = band.order
        self.a = ev.digit(band.order + 1)
        self.f_tol = f_tol
        # bracket-width floor near the mantissa resolution; the context
        # abs/rel tolerances are far too coarse for deep band edges
        scale = max(abs(band.lo), abs(band.hi), ctx.real(1))
        self.x_tol = scale * ctx.real(math.ldexp(1.0, -(ctx.mantissa_bits - 8)))
        self._tf2 = _tf(ctx.real(2))
        # inherited checkpoints (extended precision only; double passes are
        # numba-cheap and need no shortcut)
        self.model = None if ctx.is_double else band.model
        self.new_model = None
        self.fpred = None if ctx.is_double else band.fpred
        self.new_fpred = None

    # -- pass helpers ----------------------------------------------------
    def passes(self, x):
        m = self.model
        if m is not None:
            return self.ev.resume(m.eval(x), m.level, self.n)
        return self.ev.pass_(self.n, x)

    def passes_capture(self, x, mid):
        """(level-mid triple, level-n triple) at x."""
        m = self.model
        if m is not None:
            tm = self.ev.resume(m.eval(x), m.level, mid)
            return tm, self.ev.resume(tm, mid, self.n)
        return self.ev.pass_capture(mid, self.n, x)

    def child_poly(self, ctype: str, tup):
        t0, t1, h = tup
        p = self.a + 1 if ctype == "I" else self.a
        s0, s1 = 0 * h, 1 + 0 * h  # S_{p-1}, S_p chain
        for _ in range(p - 1):
            s0, s1 = s1, h * s1 - s0
        return s1 * t1 - s0 * t0

    def _gfloat(self, ctype: str, u: float) -> float:
        """Predicted child trace at coordinate u of the fpred band (float)."""
        fp = self.fpred
        t0, t1, h = fp.trip(u)
        digits = self.ev.digits
        for k in range(fp.level, self.n):
            a = digits[k]
            s0, s1 = 0.0, 1.0
            for _ in range(a - 1):
                s0, s1 = s1, h * s1 - s0
            hn = s1 * t1 - s0 * t0
            t1 = (h * s1 - s0) * t1 - s1 * t0
            t0, h = h, hn
        p = self.a + 1 if ctype == "I" else self.a
        s0, s1 = 0.0, 1.0
        for _ in range(p - 1):
            s0, s1 = s1, h * s1 - s0
        return s1 * t1 - s0 * t0

    # -- coordinate inversion -------------------------------------------
    def invert_parent(self, target, xlo, xhi, f_tol):
        """Solve parent_poly(x) = target on [xlo, xhi] (monotone there)."""
        if self.band.btype == "I":
            f = lambda x: self.passes(x)[1] - target
        else:
            f = lambda x: self.passes(x)[2] - target
        root, _, _ = bisect_root(f, xlo, xhi, self.ctx, f_tol=f_tol,
                                 max_iter=6 * self.ctx.mantissa_bits,
                                 x_tol=self.x_tol)
        return root

    # -- edge solving ----------------------------------------------------
    def solve_edges(self, ctype, xl, tl, xh, th):
        """Edges of the single child band of type ctype inside [xl, xh].

        tl, th are the pass triples at the bracket ends; the child trace g
        must exceed 2 in modulus there with opposite signs (checked).  The
        trace enters above s*2 at xl (s = sign at xl), traverses the band
        once and leaves below -s*2, so s*g - 2 and s*g + 2 each have
        exactly one sign change on [xl, xh].  After the first edge the
        local slope gives a band-width guess which shrinks the second
        edge's bracket from gap scale to band scale.
        """
        ctx = self.ctx
        gl = self.child_poly(ctype, tl)
        gh = self.child_poly(ctype, th)
        if abs(gl) <= 2 or abs(gh) <= 2 or (gl > 0) == (gh > 0):
            raise _LocateFailure("edge bracket lacks the sign structure")
        s = 1 if gl > 0 else -1
        tol = self.f_tol / 3
        tf2 = self._tf2
        if self.fpred is not None:
            out = self._predicted_edges(ctype, s, xl, xh, tol, tf2)
            if out is not None:
                return out
        evals = []

        def res1(x):
            v = _tf(s * self.child_poly(ctype, self.passes(x))) - tf2
            evals.append((x, v))
            return v

        e1, l1o, l1i = bisect_root(
            res1, xl, xh, ctx, f_tol=tol, x_tol=self.x_tol,
            max_iter=8 * ctx.mantissa_bits,
            f_lo=_tf(s * gl) - tf2, f_hi=_tf(s * gh) - tf2)

        def res2(x):
            return _tf(s * self.child_poly(ctype, self.passes(x))) + tf2

        # width guess from the tf-slope of the evaluations nearest e1
        width = None
        near = sorted(evals, key=lambda p: abs(p[0] - e1))[:3]
        for (xa, fa), (xb, fb) in zip(near, near[1:]):
            if xa != xb:
                slope = abs((fb - fa) / (xb - xa))
                if slope > 0:
                    width = 2 * tf2 / slope
                    break
        e2 = None
        if width is not None:
            xr = e1 + 8 * width
            for _ in range(3):
                if not xr < xh:
                    break
                fr = res2(xr)
                if fr < 0:
                    e2, l2i, l2o = bisect_root(
                        res2, e1, xr, ctx, f_tol=tol, x_tol=self.x_tol,
                        max_iter=8 * ctx.mantissa_bits,
                        f_lo=2 * tf2, f_hi=fr)
                    break
                xr = e1 + 8 * (xr - e1)
        if e2 is None:
            e2, l2i, l2o = bisect_root(
                res2, e1, xh, ctx, f_tol=tol, x_tol=self.x_tol,
                max_iter=8 * ctx.mantissa_bits,
                f_lo=2 * tf2, f_hi=_tf(s * gh) + tf2)
        # e1 is where s*g = +2 (first edge in x), e2 where s*g = -2;
        # bracket inner points are the sides where |g| < 2
        cert = ((l1o, l1i), (l2i, l2o))
        return e1, e2, -s, cert

    def _predicted_edges(self, ctype, s, xl, xh, tol, tf2):
        """Edge solve seeded by the float predictor; None on any miss."""
        fp, ctx = self.fpred, self.ctx
        ul = float((xl - fp.lo) / fp.wid)
        uh = float((xh - fp.lo) / fp.wid)

        def g(u):
            return s * self._gfloat(ctype, u)

        gl_f, gh_f = g(ul), g(uh)
        if not (gl_f > 2.0 and gh_f < -2.0):
            return None
        u1 = _froot(lambda u: g(u) - 2.0, ul, uh, gl_f - 2.0, gh_f - 2.0)
        if u1 is None:
            return None
        u2 = _froot(lambda u: g(u) + 2.0, u1, uh, g(u1) + 2.0, gh_f + 2.0)
        if u2 is None or not u2 > u1:
            return None
        wu = u2 - u1

        def res1(x):
            return _tf(s * self.child_poly(ctype, self.passes(x))) - tf2

        def res2(x):
            return _tf(s * self.child_poly(ctype, self.passes(x))) + tf2

        first = self._polish(res1, u1, wu, xl, xh, tol)
        if first is None:
            return None
        second = self._polish(res2, u2, wu, xl, xh, tol)
        if second is None:
            return None
        e1, l1o, l1i = first
        e2, l2i, l2o = second
        if not e1 < e2:
            return None
        return e1, e2, -s, ((l1o, l1i), (l2i, l2o))

    def _polish(self, res, u_e, wu, xl, xh, tol):
        """Certified solve on a micro-bracket around the predicted edge.

        The residual decreases through the crossing, so a sign-correct
        probe pair is a genuine bracket; the probe radius starts at 1e-4
        of the predicted band width and widens x64 on a miss.
        """
        fp, ctx = self.fpred, self.ctx
        xc = fp.lo + fp.wid * ctx.real(u_e)
        d = fp.wid * ctx.real(wu * 1e-4)
        for _ in range(3):
            xa = xc - d
            xb = xc + d
            if xa < xl:
                xa = xl
            if xb > xh:
                xb = xh
            fa, fb = res(xa), res(xb)
            if fa > 0 > fb:
                return bisect_root(res, xa, xb, ctx, f_tol=tol,
                                   x_tol=self.x_tol,
                                   max_iter=8 * ctx.mantissa_bits,
                                   f_lo=fa, f_hi=fb)
            d = d * 64
        return None

    # -- fast path: separator points from one shared sweep ----------------
    def locate_fast(self):
        """Bracket all children at once from a coarse sweep of the parent.

        The parent polynomial h maps the band monotonically onto [-2,2]
        and each child's h-image is confined to its Chebyshev interval, so
        any point whose h-value lies strictly between consecutive
        intervals separates two children.  Separator x-positions are
        predicted by inverse interpolation of the sweep and certified by
        one re-evaluation each, so the cost beyond the edge solves is
        roughly one pass per child.
        """
        band, ctx, o = self.band, self.ctx, self.band.sign_hi
        if band.btype == "I":
            return self._locate_I_parent()
        slots = _child_slots(band.btype, self.a)
        m = len(slots) + 4
        us = [i / (m - 1) for i in range(m)]
        wid = band.hi - band.lo
        xs = [band.lo + wid * ctx.real(u) for u in us[:-1]] + [band.hi]
        mid = self.n - 2
        if not ctx.is_double and mid >= 1:
            # record level-mid triples along the sweep and fit a fresh
            # checkpoint for this parent's subtree; one full pass verifies
            # the inherited checkpoint before anything depends on it
            pairs = [self.passes_capture(x, mid) for x in xs]
            if self.model is not None and not _trip_close(
                    self.ev.pass_(self.n, xs[1]), pairs[1][1]):
                self.model = None
                pairs = [self.passes_capture(x, mid) for x in xs]
            trips = [p[1] for p in pairs]
            us_r = [ctx.real(i) / (m - 1) for i in range(m)]
            self.new_model = _TraceModel(mid, band.lo, wid, us_r,
                                         [p[0] for p in pairs])
            # the fresh checkpoint is two levels below n: cheapest resumes
            self.model = self.new_model
            self.new_fpred = _FloatPredictor(self.n, band.lo, wid, us, trips)
            self.fpred = self.new_fpred
        else:
            trips = [self.passes(x) for x in xs]
        hs = [float(t[2]) for t in trips]
        # inverse interpolation runs in the scaled coordinate u = (x-lo)/w,
        # where double precision is ample even when the band itself is far
        # narrower than double resolution
        tab_h = hs if o > 0 else hs[::-1]
        tab_u = us if o > 0 else us[::-1]
        if any(not a < b for a, b in zip(tab_h, tab_h[1:])):
            raise _LocateFailure("h sweep not monotone")

        def predict(h_target):
            i = _bisect.bisect_left(tab_h, h_target, 1, len(tab_h) - 1)
            h0, h1 = tab_h[i - 1], tab_h[i]
            u = tab_u[i - 1] + (tab_u[i] - tab_u[i - 1]) \
                * (h_target - h0) / (h1 - h0)
            return band.lo + wid * ctx.real(u)

        bounds = [(xs[0], trips[0]) if o > 0 else (xs[-1], trips[-1])]
        for k in range(len(slots) - 1):
            g_lo, g_hi = slots[k][1][1], slots[k + 1][1][0]  # inter-hull gap
            hb = 0.5 * (g_lo + g_hi)
            for attempt in range(2):
                x = predict(hb)
                trip = self.passes(x)
                if g_lo < trip[2] < g_hi:
                    break
                # refine the table with the fresh sample and retry once
                u_new = float((x - band.lo) / wid)
                j = _bisect.bisect_left(tab_h, float(trip[2]))
                tab_h.insert(j, float(trip[2]))
                tab_u.insert(j, u_new)
                if any(not a < b for a, b in zip(tab_h, tab_h[1:])):
                    raise _LocateFailure("h sweep not monotone")
            else:
                raise _LocateFailure("separator missed the inter-hull gap")
            bounds.append((x, trip))
        bounds.append((xs[-1], trips[-1]) if o > 0 else (xs[0], trips[0]))

        kids = []
        for i, (ctype, _hull) in enumerate(slots):
            (xa, ta), (xb, tb) = bounds[i], bounds[i + 1]
            if o < 0:
                xa, ta, xb, tb = xb, tb, xa, ta
            lo, hi, sign_hi, cert = self.solve_edges(ctype, xa, ta, xb, tb)
            kids.append((ctype, lo, hi, sign_hi, cert))
        if o < 0:
            kids.reverse()
        return kids

    # -- warm-start paths -------------------------------------------------
    def locate_warm(self):
        band = self.band
        if band.btype == "I":
            return self._locate_I_parent()
        slots = _child_slots(band.btype, self.a)
        o = band.sign_hi  # +1: parent poly increasing in x
        if o < 0:
            slots = [s for s in reversed(slots)]
        kids = []
        x_left = band.lo
        for ctype, hull in slots:
            t_first, t_second = (hull[0], hull[1]) if o > 0 else (hull[1], hull[0])
            x1 = self.invert_parent(self.ctx.real(t_first), x_left, band.hi,
                                    f_tol=1e-3)
            x2 = self.invert_parent(self.ctx.real(t_second), x1, band.hi,
                                    f_tol=1e-3)
            lo, hi, sign_hi, cert = self.solve_edges(
                ctype, x1, self.passes(x1), x2, self.passes(x2))
            kids.append((ctype, lo, hi, sign_hi, cert))
            x_left = x2
        return kids

    def _locate_I_parent(self):
        """The single type-II child of a type-I parent.

        For a_{n+1} = 1 the child polynomial t_{(n,1)} equals the parent's,
        so the child is the parent interval itself.  Otherwise the child
        trace t_{(n,a)} has modulus > 2 with opposite signs at the parent's
        own endpoints, so the parent band is already a certified bracket.
        """
        band = self.band
        if self.a == 1:
            return [("II", band.lo, band.hi, band.sign_hi, band.cert)]
        lo, hi, sign_hi, cert = self.solve_edges(
            "III", band.lo, self.passes(band.lo),  # "III" selects p = a
            band.hi, self.passes(band.hi))
        return [("II", lo, hi, sign_hi, cert)]

    # -- safe grid fallback ----------------------------------------------
    def locate_safe(self):
        # independent cross-check: never reuse inherited checkpoints here
        self.model = None
        self.new_model = None
        self.fpred = None
        self.new_fpred = None
        band = self.band
        if band.btype == "I":
            if self.a == 1:
                # t_{(n+2,0)} = t_{(n,1)}: the child coincides with the parent
                return [("II", band.lo, band.hi, band.sign_hi, band.cert)]
            groups = [("II", "III", 1)]  # child poly index p = a
        else:
            seq = expected_child_types(band.btype, self.a)
            groups = [("I", "I", seq.count("I")),
                      ("III", "III", seq.count("III"))]
        found = []
        for child_label, poly_key, expect in groups:
            if expect == 0:
                continue
            found += [(child_label,) + edge
                      for edge in self._grid_bands(poly_key, expect)]
        found.sort(key=lambda k: k[1])
        return found

    def _grid_bands(self, poly_key, expect):
        band, ctx = self.band, self.ctx
        m = 16 * (expect + 1)
        while True:
            if ctx.is_double:
                xs = np.linspace(float(band.lo), float(band.hi), m)
                t0s, t1s, hs = kernels.level_pass_grid(
                    self.ev.digits_arr[:self.n], self.ev.Vf, xs)
                p = self.a + 1 if poly_key == "I" else self.a
                sp = np.zeros_like(hs)
                sc = np.ones_like(hs)
                for _ in range(p - 1):
                    sp, sc = sc, hs * sc - sp
                gs = sc * t1s - sp * t0s
                xs_list, gs_list = xs, gs
                trips = list(zip(t0s, t1s, hs))
            else:
                xs_list = [band.lo + (band.hi - band.lo) * i / (m - 1)
                           for i in range(m)]
                trips = [self.passes(x) for x in xs_list]
                gs_list = [self.child_poly(poly_key, t) for t in trips]
            inside = [abs(g) <= 2 for g in gs_list]
            runs = []
            i = 0
            while i < m:
                if inside[i]:
                    j = i
                    while j + 1 < m and inside[j + 1]:
                        j += 1
                    runs.append((i, j))
                    i = j + 1
                else:
                    i += 1
            ok = (len(runs) == expect
                  and all(r[0] > 0 and r[1] < m - 1 for r in runs))
            if ok:
                out = []
                for i0, j0 in runs:
                    xl, xh = xs_list[i0 - 1], xs_list[j0 + 1]
                    out.append(self.solve_edges(poly_key, ctx.real(xl),
                                                trips[i0 - 1], ctx.real(xh),
                                                trips[j0 + 1]))
                return out
            m *= 2
            if m > 2 ** 20:
                raise ChildCountMismatch(
                    f"grid cap hit: found {len(runs)} of {expect} "
                    f"{poly_key}-children at order {self.n}")


def locate_children(ev: LevelEvaluator, band: Band, ctx: PrecisionContext,
                    f_tol=1e-12, locator="warm"):
    """Children of one band as a x-sorted list of Band objects."""
    solver = _ChildSolver(ev, band, ctx, f_tol=f_tol)
    if locator == "warm":
        try:
            kids = solver.locate_fast()
        except _LocateFailure:
            try:
                kids = solver.locate_warm()
            except _LocateFailure:
                kids = solver.locate_safe()
    elif locator == "safe":
        kids = solver.locate_safe()
    else:
        raise ValueError(f"unknown locator {locator!r}")
    a = solver.a
    expected = expected_child_types(band.btype, a)
    types = [k[0] for k in kids]
    if types != expected:
        raise ChildCountMismatch(
            f"order {band.order} {band.btype}: got {types}, want {expected}")
    out = []
    counts = {"I": 0, "II": 0, "III": 0}
    n1 = band.order + 1
    handoff = solver.new_model if solver.new_model is not None else solver.model
    handoff_f = solver.new_fpred if solver.new_fpred is not None else solver.fpred
    for ctype, lo, hi, sign_hi, cert in kids:
        counts[ctype] += 1
        j = counts[ctype]
        ordinal0 = _letter_ordinal0(ctype, j, a)
        tindex = (n1, 1) if ctype == "I" else (n1 + 1, 0)
        out.append(Band(band.word + (ordinal0,), n1, ctype, lo, hi, sign_hi,
                        tindex, cert, model=handoff, fpred=handoff_f))
    return out


def _letter_ordinal0(ctype, j, a):
    if ctype == "I":
        return j - 1
    if ctype == "II":
        return a + 1
    return a + 1 + j


def locate_child(ev: LevelEvaluator, band: Band, ordinal0: int,
                 ctx: PrecisionContext, f_tol=1e-12):
    """Locate a single child (by 0-based letter ordinal) without solving
    its siblings; used for single-branch descent."""
    a = ev.digit(band.order + 1)
    letter = alphabet(a)[ordinal0]
    solver = _ChildSolver(ev, band, ctx, f_tol=f_tol)
    if band.btype == "I":
        if letter.band_type != "II":
            raise MissingBand(f"I parent has no child letter {letter}")
        kids = locate_children(ev, band, ctx, f_tol=f_tol)
        return kids[0]
    fam = {"II": {"I": a + 1, "III": a}, "III": {"I": a, "III": a - 1}}
    ctype, j = letter.band_type, letter.index
    if ctype not in ("I", "III") or j > fam[band.btype].get(ctype, 0):
        raise MissingBand(f"{band.btype} parent has no child letter {letter}")
    p_fam = fam[band.btype][ctype]
    # j-th child of this type in x order; hull centers decrease in l
    l = p_fam + 1 - j if band.sign_hi > 0 else j
    hull = chebyshev_intervals(p_fam, l)
    o = band.sign_hi
    t_first, t_second = (hull[0], hull[1]) if o > 0 else (hull[1], hull[0])
    try:
        x1 = solver.invert_parent(ctx.real(t_first), band.lo, band.hi, 1e-3)
        x2 = solver.invert_parent(ctx.real(t_second), x1, band.hi, 1e-3)
        lo, hi, sign_hi, cert = solver.solve_edges(
            ctype, x1, solver.passes(x1), x2, solver.passes(x2))
    except _LocateFailure:
        kids = locate_children(ev, band, ctx, f_tol=f_tol, locator="safe")
        for k in kids:
            if k.word[-1] == ordinal0:
                return k
        raise MissingBand(f"child {letter} not found")
    n1 = band.order + 1
    tindex = (n1, 1) if ctype == "I" else (n1 + 1, 0)
    return Band(band.word + (ordinal0,), n1, ctype, lo, hi, sign_hi, tindex,
                cert)


# ---------------------------------------------------------------------------
# the tree


class BandTree:
    """Complete band hierarchy to a fixed depth."""

    def __init__(self, spec, V, ctx, depth, levels, locator="warm"):
        self.spec = spec
        self.V = float(V)
        self.ctx = ctx
        self.depth = depth
        self.levels = levels  # list of x-sorted lists of Band
        self.locator = locator
        self._index = {b.word: b for lvl in levels for b in lvl}

    def bands(self, n):
        return self.levels[n]

    def band(self, word):
        return self._index[tuple(word)]

    def children(self, band):
        nxt = band.order + 1
        if nxt > self.depth:
            raise MissingBand("tree too shallow")
        w = band.word
        return [b for b in self.levels[nxt] if b.word[:-1] == w]

    def children_map(self, n):
        """dict parent word -> x-sorted child list at level n+1."""
        out = {}
        for b in self.levels[n + 1]:
            out.setdefault(b.word[:-1], []).append(b)
        return out

    def word_obj(self, band) -> coding.Word:
        params = [0] + [self.spec.digit(i) for i in range(1, band.order + 1)]
        letters = tuple(alphabet(N)[o] for N, o in zip(params, band.word))
        return coding.Word(letters, "rooted")

    # -- serialization ----------------------------------------------------
    def _fmt(self, x) -> str:
        if self.ctx.is_double:
            return repr(float(x))
        d = int(self.ctx.mantissa_bits * 0.30103) + 3
        return f"{x:.{d}e}"

    def to_json_dict(self):
        return {
            "format_version": TREE_FORMAT_VERSION,
            "prefix": list(self.spec.prefix),
            "kappa": self.spec.kappa,
            "V": repr(self.V),
            "depth": self.depth,
            "mantissa_bits": self.ctx.mantissa_bits,
            "levels": [
                [
                    {
                        "word": str(self.word_obj(b)),
                        "code": list(b.word),
                        "type": b.btype,
                        "order": b.order,
                        "lo": self._fmt(b.lo),
                        "hi": self._fmt(b.hi),
                        "sign_hi": b.sign_hi,
                        "trace_index": list(b.trace_index),
                    }
                    for b in lvl
                ]
                for lvl in self.levels
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=1)

    @classmethod
    def from_json_dict(cls, doc):
        if doc.get("format_version") != TREE_FORMAT_VERSION:
            raise ValueError("cache format version mismatch")
        spec = FrequencySpec(tuple(doc["prefix"]), doc["kappa"])
        ctx = (DOUBLE if doc["mantissa_bits"] == 53
               else PrecisionContext(doc["mantissa_bits"], 1e-30, 1e-30))
        with ctx.workprec():
            levels = []
            for lvl in doc["levels"]:
                bands = []
                for d in lvl:
                    bands.append(Band(tuple(d["code"]), d["order"], d["type"],
                                      ctx.real(d["lo"]), ctx.real(d["hi"]),
                                      d["sign_hi"], tuple(d["trace_index"])))
                levels.append(bands)
        return cls(spec, float(doc["V"]), ctx, doc["depth"], levels)


def build_band_tree(spec: FrequencySpec, V, depth: int,
                    ctx: PrecisionContext = DOUBLE, locator="warm",
                    f_tol=1e-12) -> BandTree:
    """Construct the band hierarchy to the given depth."""
    V = V.V if isinstance(V, Coupling) else float(V)
    Coupling(V)  # validates the floor
    if depth < 0:
        raise ValueError("depth >= 0")
    if ctx.is_double and V > 50 and depth > 14:
        raise PrecisionExhausted(
            "depth > 14 with V > 50 needs extended precision (mantissa_bits)")
    with ctx.workprec():
        ev = LevelEvaluator(spec, V, ctx, max_order=depth + 4)
        levels = [root_bands(V, ctx)]
        for n in range(depth):
            nxt = []
            for b in levels[n]:
                nxt.extend(locate_children(ev, b, ctx, f_tol=f_tol,
                                           locator=locator))
            nxt.sort(key=lambda bb: bb.lo)
            _check_disjoint(nxt)
            levels.append(nxt)
        return BandTree(spec, V, ctx, depth, levels, locator)


def _check_disjoint(bands):
    for a, b in zip(bands, bands[1:]):
        if not a.hi <= b.lo:
            raise ChildCountMismatch(
                f"overlapping sibling bands near x = {float(a.hi)}")


def iter_subtree_levels(ev: LevelEvaluator, roots, rel_depth: int,
                        ctx: PrecisionContext, f_tol=1e-12, locator="warm"):
    """Yield the descendants of `roots` level by level (lists of Band),
    keeping only one level in memory at a time."""
    cur = list(roots)
    for _ in range(rel_depth):
        nxt = []
        for b in cur:
            nxt.extend(locate_children(ev, b, ctx, f_tol=f_tol,
                                       locator=locator))
        yield nxt
        cur = nxt


def band_for_word(spec: FrequencySpec, V, word, ctx: PrecisionContext,
                  f_tol=1e-12) -> Band:
    """Band of a rooted word by single-branch descent (no sibling solves).

    word may be a coding.Word or a tuple of 0-based ordinals.
    """
    V = V.V if isinstance(V, Coupling) else float(V)
    code = tuple(l.ordinal - 1 for l in word) if isinstance(word, coding.Word) \
        else tuple(word)
    with ctx.workprec():
        ev = LevelEvaluator(spec, V, ctx, max_order=len(code) + 3)
        roots = {b.word[0]: b for b in root_bands(V, ctx)}
        if code[0] not in roots:
            raise MissingBand("rooted word must start with I or III")
        b = roots[code[0]]
        for o in code[1:]:
            b = locate_child(ev, b, o, ctx, f_tol=f_tol)
        return b


def spectrum_point(spec: FrequencySpec, V, word, target_width: float,
                   ctx: PrecisionContext = DOUBLE) -> Band:
    """Deepest band along the branch of `word` with width <= target_width
    (the full-word band if the target is not reached)."""
    V = V.V if isinstance(V, Coupling) else float(V)
    code = tuple(l.ordinal - 1 for l in word) if isinstance(word, coding.Word) \
        else tuple(word)
    with ctx.workprec():
        ev = LevelEvaluator(spec, V, ctx, max_order=len(code) + 3)
        roots = {b.word[0]: b for b in root_bands(V, ctx)}
        b = roots[code[0]]
        if float(b.width) <= target_width:
            return b
        for o in code[1:]:
            b = locate_child(ev, b, o, ctx)
            if float(b.width) <= target_width:
                return b
        return b


# ---------------------------------------------------------------------------
# gaps and empirical bounds


@dataclass
class Gap:
    order: int
    parent_word: tuple
    lo: object
    hi: object

    @property
    def width(self):
        return self.hi - self.lo


def gaps(tree: BandTree, n: int):
    """Order-n gaps (intervals between consecutive children inside each
    level-n band) and the minimal |G|/|B_G| ratio at this level.

    Segments touching a parent boundary belong to lower-order gaps of the
    surrounding spectrum and are not counted, matching the 2q / 2q-2 gap
    counts of the covering structure.
    """
    if n + 1 > tree.depth:
        raise MissingBand("tree too shallow for gaps at this level")
    cm = tree.children_map(n)
    out = []
    min_ratio = None
    for b in tree.bands(n):
        kids = cm.get(b.word, [])
        for k1, k2 in zip(kids, kids[1:]):
            g = Gap(n, b.word, k1.hi, k2.lo)
            out.append(g)
            r = float(g.width / b.width)
            if min_ratio is None or r < min_ratio:
                min_ratio = r
    return out, (0.0 if min_ratio is None else min_ratio)


@dataclass
class BoundsProfile:
    xi: float
    eta: float
    c3: float
    n0: int
    gap_C: float
    t1: float
    t2: float
    c_kappa: float
    c1: float
    c2: float


def _band_e_count(tree: BandTree, band: Band) -> int:
    """Number of II letters among positions 1..n of the band's word."""
    cnt = 0
    for i, o in enumerate(band.word):
        if i == 0:
            continue
        a = tree.spec.digit(i)
        if o == a + 1:  # ordinal of (II,1) in A_a
            cnt += 1
    return cnt


def estimate_bounds_profile(tree: BandTree, V=None,
                            check_sandwich=True) -> BoundsProfile:
    """Empirical constants: derivative distortion xi, covariation eta, the
    band-length constants c3/c1/c2, minimal gap ratio C, the sandwich
    constants t1/t2 and the fitted c of the V-power length law.

    Raises BoundViolation if the (V-8)/3, 2(V+5) sandwich fails on a
    constant-type tree.
    """
    if tree.depth < 4:
        raise ValueError("tree depth >= 4 required")
    V = tree.V if V is None else (V.V if isinstance(V, Coupling) else V)
    spec, ctx = tree.spec, tree.ctx
    kappa = spec.kappa
    with ctx.workprec():
        ev = LevelEvaluator(spec, V, ctx, max_order=tree.depth + 4)

        # xi: distortion of the generating polynomial over each band
        xi = 1.0
        rng = np.random.default_rng(1234)
        for n in range(1, tree.depth + 1):
            lvl = tree.bands(n)
            sample = lvl if len(lvl) <= 64 else \
                [lvl[i] for i in rng.choice(len(lvl), 64, replace=False)]
            for b in sample:
                w = b.width
                step = w / 128
                ds = []
                for i in range(8):
                    x = b.lo + w * ctx.real(2 * i + 1) / 16
                    d = (ev.gen_poly(b, x + step) - ev.gen_poly(b, x - step))
                    ds.append(abs(d))
                ds = [float(d) for d in ds]
                if min(ds) > 0:
                    xi = max(xi, max(ds) / min(ds))

        # eta: covariation of extension ratios across prefixes sharing a
        # terminal letter (same-frequency form of the covariation bound)
        eta = 1.0
        k = max(1, tree.depth - 3)
        cm = {}
        for b in tree.levels[tree.depth]:
            anc = b.word[:k + 1]
            ext = b.word[k + 1:]
            cm.setdefault((tree.band(anc).word[-1], ext), []).append(
                float(gmpy2.log(b.width / tree.band(anc).width))
                if not ctx.is_double else
                math.log(float(b.width) / float(tree.band(anc).width)))
            # key groups same extension word + same last ancestor letter
        for (_, _), logs in cm.items():
            if len(logs) >= 2:
                eta = max(eta, math.exp(max(logs) - min(logs)))

        # band-length constants
        c3 = 1.0
        c_kappa = 1.0
        log_v = math.log(V)
        for n in range(1, tree.depth + 1):
            for b in tree.bands(n):
                lw = float(gmpy2.log(b.width)) if not ctx.is_double \
                    else math.log(float(b.width))
                c3 = min(c3, math.exp(lw / n))
                e = (kappa - 2) * _band_e_count(tree, b) + n
                r = lw + e * log_v
                c_kappa = max(c_kappa, math.exp(abs(r) / n))

        # c1/c2: one-level length ratios (n0 = 1)
        c1, c2 = 1.0, 0.0
        for n in range(1, tree.depth + 1):
            cmn = tree.children_map(n - 1)
            for parent_word, kids in cmn.items():
                pw = tree.band(parent_word).width
                for kb in kids:
                    r = float(kb.width / pw)
                    c1, c2 = min(c1, r), max(c2, r)

        gap_C = None
        for n in range(tree.depth):
            _, mr = gaps(tree, n)
            if mr > 0:
                gap_C = mr if gap_C is None else min(gap_C, mr)
        gap_C = gap_C or 0.0

        t1 = (V - 8) / 3
        t2 = 2 * (V + 5)
        if check_sandwich and spec.n_hat == 0 and spec.prefix == (0,):
            lt1, lt2, lk = math.log(t1), math.log(t2), math.log(kappa)
            for n in range(0, tree.depth + 1):
                for b in tree.bands(n):
                    cnt = _band_e_count(tree, b)
                    lw = float(gmpy2.log(b.width)) if not ctx.is_double \
                        else math.log(float(b.width))
                    lo_bound = (1 - kappa) * cnt * lt2 + (cnt - n) * (lt2 + 3 * lk)
                    hi_bound = math.log(4) + (1 - kappa) * cnt * lt1 \
                        + (cnt - n) * (lt1 + lk)
                    if lw < lo_bound - 1e-9 or lw > hi_bound + 1e-9:
                        raise BoundViolation(
                            f"length sandwich fails at order {n}, "
                            f"word {b.word}: ln|B|={lw:.6f}, "
                            f"bounds [{lo_bound:.6f}, {hi_bound:.6f}]")

    return BoundsProfile(xi=xi, eta=eta, c3=c3, n0=1, gap_C=gap_C,
                         t1=t1, t2=t2, c_kappa=c_kappa, c1=c1, c2=c2)
