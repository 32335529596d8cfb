"""Band-length and Markov potentials, pressure, and the spectral exponents.

Free words u over the constant-tail alphabet are attached to the spectrum
through a prefix vector: psi_n(u) = ln |B_{w^{u0} * u}| is the log length
of the band indexed by the rooted word that extends the prefix of the
first letter by u.  Together with the Markov weights of the DOS measure
these potentials drive everything dimensional:

  s_hat  -- root of the Moran / pressure equation sum |B|^s = 1,
  d_hat  -- ln(alpha) / (-mean of psi under the Markov measure),
  gamma_hat -- ln(alpha) / (-min of psi), the optimal Hoelder exponent.

Each finite-depth estimate carries an O(1/n) offset from the fixed-length
prefix, so the reported exponents use a two-point Richardson step (for the
weighted and min estimators this telescopes to a depth difference); the
raw per-depth sequences are kept as diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import gmpy2
import numpy as np

from . import coding
from .bands import Coupling, LevelEvaluator, band_for_word, locate_children
from .coding import PrefixVector
from .errors import MissingBand, NoRootInUnitInterval, PrecisionExhausted
from .frequency import FrequencySpec
from .precision import DOUBLE, PrecisionContext, bisect_root

__all__ = [
    "PotentialTable",
    "PressureCurve",
    "ExponentEstimates",
    "build_potentials",
    "build_potentials_streaming",
    "pressure",
    "pressure_diff_root",
    "bowen_root",
    "gibbs_weights",
    "holder_exponent",
    "exponent_estimates",
    "compare_prefix_vectors",
    "measure_separation_diagnostic",
]


def _logsumexp(a):
    m = float(np.max(a))
    return m + math.log(float(np.sum(np.exp(a - m))))


def _ln_width(band) -> float:
    w = band.hi - band.lo
    if not w > 0:
        raise PrecisionExhausted(
            f"band width vanishes at order {band.order} at this precision; "
            "increase mantissa_bits")
    if isinstance(w, float):
        return math.log(w)
    return float(gmpy2.log(w))


class PotentialTable:
    """Per-depth arrays of band-length and Markov potentials.

    Entries at depth m correspond to the free words of length m+1 in
    traversal order; parent/last/first index arrays keep the tree
    structure without storing Word objects, so the full word of any entry
    can be reconstructed on demand.
    """

    def __init__(self, spec, V, prefix_vector: PrefixVector, depth: int,
                 ctx: PrecisionContext, psi, log_mu, parent, last, first,
                 log_p, f_tol):
        self.spec = spec
        self.V = float(V)
        self.prefix_vector = prefix_vector
        self.depth = depth
        self.ctx = ctx
        self.f_tol = f_tol
        self._psi = psi
        self._log_mu = log_mu
        self._parent = parent
        self._last = last
        self._first = first
        self._log_p = log_p

    @property
    def alpha(self) -> float:
        return self.spec.alpha_kappa

    @property
    def n_alpha(self) -> int:
        return self.prefix_vector.n_alpha

    def count(self, m: int) -> int:
        return len(self._psi[m])

    def psi(self, m: int) -> np.ndarray:
        return self._psi[m]

    def log_mu(self, m: int) -> np.ndarray:
        return self._log_mu[m]

    def phi(self, m: int) -> np.ndarray:
        """Transition part of the Markov log weight (head term removed)."""
        return self._log_mu[m] - self._log_p[self._first[m]]

    def parent_index(self, m: int) -> np.ndarray:
        return self._parent[m]

    def norm_depth(self, m: int) -> int:
        return m

    def word_code(self, m: int, i: int) -> tuple:
        """Free word of entry i at depth m as 0-based ordinals over A_kappa."""
        out = []
        for d in range(m, 0, -1):
            out.append(int(self._last[d][i]))
            i = int(self._parent[d][i])
        out.append(int(self._last[0][i]))
        return tuple(reversed(out))


class _Recorder:
    def __init__(self, depth):
        self.psi = [[] for _ in range(depth + 1)]
        self.log_mu = [[] for _ in range(depth + 1)]
        self.parent = [[] for _ in range(depth + 1)]
        self.last = [[] for _ in range(depth + 1)]
        self.first = [[] for _ in range(depth + 1)]

    def add(self, m, psi, log_mu, parent, last, first) -> int:
        self.psi[m].append(psi)
        self.log_mu[m].append(log_mu)
        self.parent[m].append(parent)
        self.last[m].append(last)
        self.first[m].append(first)
        return len(self.psi[m]) - 1

    def arrays(self):
        psi = [np.array(v, dtype=float) for v in self.psi]
        log_mu = [np.array(v, dtype=float) for v in self.log_mu]
        parent = [np.array(v, dtype=np.int64) for v in self.parent]
        last = [np.array(v, dtype=np.int8) for v in self.last]
        first = [np.array(v, dtype=np.int8) for v in self.first]
        return psi, log_mu, parent, last, first


def _log_Q(Q) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.where(Q.Q > 0, np.log(np.where(Q.Q > 0, Q.Q, 1.0)), -np.inf)


def build_potentials_streaming(spec: FrequencySpec, V, pv: PrefixVector,
                               Q, p, depth: int,
                               ctx: PrecisionContext = DOUBLE,
                               f_tol: float = 1e-12) -> PotentialTable:
    """PotentialTable by depth-first band descent, one branch in memory.

    Equivalent to build_potentials on a full tree of depth n_alpha + depth,
    but never materializes a level: at the deep couplings and depths of
    the exponent runs a full tree would hold millions of extended-precision
    bands at once.
    """
    V = V.V if isinstance(V, Coupling) else float(V)
    Coupling(V)
    logQ = _log_Q(Q)
    log_p = np.log(p.p)
    rec = _Recorder(depth)
    with ctx.workprec():
        ev = LevelEvaluator(spec, V, ctx, max_order=pv.n_alpha + depth + 4)
        for i0, w in enumerate(pv.words):
            band = band_for_word(spec, V, w, ctx, f_tol=f_tol)
            lm0 = float(log_p[i0])
            idx0 = rec.add(0, _ln_width(band), lm0, -1, i0, i0)
            stack = [(band, 0, idx0, lm0)]
            while stack:
                b, m, pi, lm = stack.pop()
                if m == depth:
                    continue
                i = b.word[-1]
                for ch in locate_children(ev, b, ctx, f_tol=f_tol):
                    j = ch.word[-1]
                    lmc = lm + float(logQ[i, j])
                    ci = rec.add(m + 1, _ln_width(ch), lmc, pi, j, i0)
                    stack.append((ch, m + 1, ci, lmc))
    psi, log_mu, parent, last, first = rec.arrays()
    return PotentialTable(spec, V, pv, depth, ctx, psi, log_mu, parent,
                          last, first, log_p, f_tol)


def build_potentials(tree, pv: PrefixVector, Q, p, depth: int) -> PotentialTable:
    """PotentialTable from an already-built band tree.

    psi values are read off the band lengths of the rooted words
    w^{u0} * u; the Markov part comes from Q.  The tree must reach order
    n_alpha + depth.
    """
    if tree.depth < pv.n_alpha + depth:
        raise MissingBand(
            f"tree depth {tree.depth} < n_alpha + depth = {pv.n_alpha + depth}")
    spec = tree.spec
    logQ = _log_Q(Q)
    log_p = np.log(p.p)
    cmaps = {
        n: tree.children_map(n)
        for n in range(pv.n_alpha, pv.n_alpha + depth)
    }
    rec = _Recorder(depth)
    for i0, w in enumerate(pv.words):
        code = tuple(l.ordinal - 1 for l in w)
        try:
            band = tree.band(code)
        except KeyError:
            raise MissingBand(f"tree lacks the prefix branch {w}") from None
        lm0 = float(log_p[i0])
        idx0 = rec.add(0, _ln_width(band), lm0, -1, i0, i0)
        stack = [(band, 0, idx0, lm0)]
        while stack:
            b, m, pi, lm = stack.pop()
            if m == depth:
                continue
            i = b.word[-1]
            for ch in cmaps[b.order][b.word]:
                j = ch.word[-1]
                lmc = lm + float(logQ[i, j])
                ci = rec.add(m + 1, _ln_width(ch), lmc, pi, j, i0)
                stack.append((ch, m + 1, ci, lmc))
    psi, log_mu, parent, last, first = rec.arrays()
    return PotentialTable(spec, tree.V, pv, depth, tree.ctx, psi, log_mu,
                          parent, last, first, log_p,
                          getattr(tree, "f_tol", 1e-12))


# ---------------------------------------------------------------------------
# pressure, Bowen root, Gibbs weights


def pressure(pt: PotentialTable, s: float, depth: int) -> float:
    """Finite-level pressure P_n(s) = (1/n) ln sum exp(s * psi_n)."""
    return _logsumexp(s * pt.psi(depth)) / depth


class PressureCurve:
    """Memoized s -> P_n(s) at a fixed depth."""

    def __init__(self, pt: PotentialTable, depth: int):
        self.pt = pt
        self.depth = depth
        self.samples = {}

    def __call__(self, s: float) -> float:
        s = float(s)
        if s not in self.samples:
            self.samples[s] = pressure(self.pt, s, self.depth)
        return self.samples[s]


def _partition_root(psi: np.ndarray, head=None, lo=0.0, hi=1.0,
                    expand=False, tol=1e-12):
    """Root in t of ln sum exp(head + t*psi) = 0; strictly decreasing
    since psi < 0.  With expand=True the bracket is grown geometrically."""
    if head is None:
        head = 0.0

    def F(t):
        return _logsumexp(head + float(t) * psi)

    f_lo, f_hi = F(lo), F(hi)
    if expand:
        step = hi - lo
        while f_lo < 0:
            lo, f_lo = lo - step, F(lo - step)
            step *= 2
            if lo < -64:
                raise NoRootInUnitInterval("no bracket below")
        step = hi - lo
        while f_hi > 0:
            hi, f_hi = hi + step, F(hi + step)
            step *= 2
            if hi > 64:
                raise NoRootInUnitInterval("no bracket above")
    elif not (f_lo > 0 > f_hi):
        raise NoRootInUnitInterval(
            f"partition function has no root in [{lo}, {hi}]: "
            f"F({lo})={f_lo:.3g}, F({hi})={f_hi:.3g}")
    root, _, _ = bisect_root(F, lo, hi, DOUBLE, x_tol=tol,
                             f_lo=f_lo, f_hi=f_hi)
    return float(root)


def pressure_diff_root(pt: PotentialTable, depth: int, q: float = 0.0,
                       tol: float = 1e-12) -> float:
    """Root in t of ln Z_n(q,t) - ln Z_{n-1}(q,t) = 0 at n = depth, where
    Z_m(q,t) = sum_u mu_Q([u])^q exp(t*psi_m(u)).

    ln Z_m grows like m*P(q,t) + const, so the difference root tracks the
    zero of the pressure with the prefix constant cancelled: it converges
    geometrically where the plain partition root drifts like 1/m, and it
    is exactly invariant under a common rescaling of all band lengths
    (psi -> psi + c shifts both levels by t*c).  The equation is strictly
    decreasing in t since psi_n - psi_{n-1} is uniformly negative; for
    q != 0 the root can leave [0, 1] and the bracket is expanded.
    """
    if depth < 2:
        raise ValueError("depth >= 2 required")
    q = float(q)
    psi_a, psi_b = pt.psi(depth), pt.psi(depth - 1)
    if q == 0.0:
        head_a = head_b = 0.0
    else:
        head_a = q * pt.log_mu(depth)
        head_b = q * pt.log_mu(depth - 1)

    def F(t):
        t = float(t)
        return _logsumexp(head_a + t * psi_a) - _logsumexp(head_b + t * psi_b)

    lo, hi = 0.0, 1.0
    f_lo, f_hi = F(lo), F(hi)
    if q == 0.0 and not (f_lo > 0 > f_hi):
        raise NoRootInUnitInterval(
            f"pressure difference has no root in [0,1] at depth {depth}: "
            f"F(0)={f_lo:.3g}, F(1)={f_hi:.3g}")
    step = 1.0
    while f_lo < 0:
        lo, f_lo = lo - step, F(lo - step)
        step *= 2
        if lo < -64:
            raise NoRootInUnitInterval("no bracket below")
    step = 1.0
    while f_hi > 0:
        hi, f_hi = hi + step, F(hi + step)
        step *= 2
        if hi > 64:
            raise NoRootInUnitInterval("no bracket above")
    root, _, _ = bisect_root(F, lo, hi, DOUBLE, x_tol=tol,
                             f_lo=f_lo, f_hi=f_hi)
    return float(root)


def bowen_root(pt: PotentialTable, depth: int,
               ctx: PrecisionContext = DOUBLE) -> float:
    """Finite-level Bowen root: the dimension-like s with the level-depth
    partition sum of |B|^s stationary across the last depth step.

    This is the pressure-difference root at q = 0; see pressure_diff_root
    for why the ratio form is used rather than sum |B|^s = 1 directly.
    """
    tol = min(1e-12, ctx.abs_tol)
    return pressure_diff_root(pt, depth, 0.0, tol)


def gibbs_weights(pt: PotentialTable, s: float, depth: int) -> np.ndarray:
    """Normalized weights exp(s*psi)/Z — the finite-level Gibbs surrogate."""
    a = s * pt.psi(depth)
    return np.exp(a - _logsumexp(a))


def holder_exponent(pt: PotentialTable, depth: int):
    """Optimal Hoelder exponent estimate with its depth trend.

    Returns (gamma, report): gamma = ln(alpha)/(-min_u psi_n(u)/n) at the
    requested depth; report rows carry the plain estimate at each depth
    4..n plus the prefix-free telescoped value (min psi_n - min psi_{n-1}),
    whose limit is the same but whose depth bias is geometric.
    """
    if depth < 4:
        raise ValueError("depth >= 4 required")
    ln_a = math.log(pt.alpha)
    mins = {m: float(pt.psi(m).min()) for m in range(1, depth + 1)}
    report = []
    for m in range(4, depth + 1):
        plain = ln_a / (-(mins[m] / m))
        tele = ln_a / (-(mins[m] - mins[m - 1]))
        report.append({"depth": m, "gamma_plain": plain, "gamma_tele": tele})
    return report[-1]["gamma_plain"], report


# ---------------------------------------------------------------------------
# exponent estimates


@dataclass
class ExponentEstimates:
    """The three spectral exponents with Cauchy diagnostics.

    s_hat, d_hat and gamma_hat are Richardson-extrapolated across the two
    deepest levels; diagnostics hold the raw per-depth sequences and the
    change of each extrapolated value over the last depth step.
    """

    kappa: int
    V: float
    depth: int
    s_hat: float
    d_hat: float
    gamma_hat: float
    diagnostics: dict = field(default_factory=dict)

    def to_json_dict(self):
        return {
            "kappa": self.kappa,
            "V": self.V,
            "depth": self.depth,
            "s_hat": self.s_hat,
            "d_hat": self.d_hat,
            "gamma_hat": self.gamma_hat,
            "diagnostics": self.diagnostics,
        }


def _aitken(x3):
    """Aitken delta-squared step on three consecutive iterates."""
    a, b, c = x3
    den = (c - b) - (b - a)
    if abs(den) < 1e-15 * max(1.0, abs(c)):
        return c
    return c - (c - b) ** 2 / den


def exponent_estimates(pt: PotentialTable) -> ExponentEstimates:
    """s_hat, d_hat, gamma_hat from a potential table.

    All raw depth-m values carry an O(1/m) offset from the fixed-length
    prefix (an additive constant in psi), so each exponent is read off a
    prefix-cancelling difference instead:

      d_hat   -- ln(alpha) / -(A_m - A_{m-1}), A_m the mu_Q-mean of psi_m;
      s_hat   -- Aitken-accelerated roots of ln Z_m - ln Z_{m-1} = 0
                 (the ratio roots oscillate with decaying amplitude);
      gamma_hat -- ln(alpha) / -((min psi_m - min psi_{m-p})/p) with the
                 period p <= 4 chosen by the smallest same-phase change
                 (the min-attaining word is eventually periodic, so
                 one-step differences of the min cycle rather than
                 converge).

    Cauchy diagnostics compare each final value against the previous
    same-phase depth.
    """
    n = pt.depth
    if n < 6:
        raise ValueError("depth >= 6 required")
    ln_a = math.log(pt.alpha)
    A, mins = {}, {}
    for m in range(1, n + 1):
        psi = pt.psi(m)
        A[m] = float(np.exp(pt.log_mu(m)) @ psi)
        mins[m] = float(psi.min())

    d_tel = {m: ln_a / (-(A[m] - A[m - 1])) for m in range(2, n + 1)}

    s_ratio = {m: pressure_diff_root(pt, m) for m in range(2, n + 1)}
    s_acc = {
        m: _aitken((s_ratio[m - 2], s_ratio[m - 1], s_ratio[m]))
        for m in range(4, n + 1)
    }

    p_max = min(4, (n - 1) // 2)
    gamma_by_p, diag_by_p = {}, {}
    for pp in range(1, p_max + 1):
        delta = (mins[n] - mins[n - pp]) / pp
        prev = (mins[n - pp] - mins[n - 2 * pp]) / pp
        gamma_by_p[pp] = ln_a / (-delta)
        diag_by_p[pp] = abs(ln_a / (-delta) - ln_a / (-prev))
    p_star = min(diag_by_p, key=diag_by_p.get)

    diag = {
        "d_raw": {m: ln_a / (-(A[m] / m)) for m in range(1, n + 1)},
        "gamma_raw": {m: ln_a / (-(mins[m] / m)) for m in range(1, n + 1)},
        "s_ratio_roots": s_ratio,
        "s_accelerated": s_acc,
        "d_telescoped": d_tel,
        "gamma_period": p_star,
        "gamma_by_period": gamma_by_p,
        "s_cauchy": abs(s_acc[n] - s_acc[n - 1]),
        "d_cauchy": abs(d_tel[n] - d_tel[n - 1]),
        "gamma_cauchy": diag_by_p[p_star],
    }
    return ExponentEstimates(pt.spec.kappa, pt.V, n, s_acc[n], d_tel[n],
                             gamma_by_p[p_star], diag)


def compare_prefix_vectors(spec: FrequencySpec, V, pv1: PrefixVector,
                           pv2: PrefixVector, depth: int, Q, p,
                           ctx: PrecisionContext = DOUBLE,
                           f_tol: float = 1e-12) -> dict:
    """Componentwise |difference| of (s_hat, d_hat, gamma_hat) computed
    under two prefix vectors; the limits are prefix-independent, so the
    deviations measure finite-depth error only."""
    out = {}
    ests = []
    for pv in (pv1, pv2):
        pt = build_potentials_streaming(spec, V, pv, Q, p, depth, ctx,
                                        f_tol=f_tol)
        ests.append(exponent_estimates(pt))
    a, b = ests
    return {
        "s_hat": abs(a.s_hat - b.s_hat),
        "d_hat": abs(a.d_hat - b.d_hat),
        "gamma_hat": abs(a.gamma_hat - b.gamma_hat),
    }


# ---------------------------------------------------------------------------
# the two-measure diagnostic


def _repeat_word_codes(kappa: int, n: int):
    """0-based A_kappa ordinal codes of e1 u^n and e1 utilde^n, where
    u^n = ((II,1)(I,1))^{3n} and utilde^n = ((II,1)(III,1)(I,1))^{2n}."""
    I1, II1, III1 = 0, kappa + 1, kappa + 2
    u = (I1,) + (II1, I1) * (3 * n)
    ut = (I1,) + (II1, III1, I1) * (2 * n)
    return u, ut


def measure_separation_diagnostic(kappa: int, V, pt: PotentialTable, Q, p,
                        n_max: int) -> list:
    """Ratio table separating the DOS measure from the Gibbs measure.

    Compares two families of words of equal length (6n+1): under mu_Q
    their weights stay comparable, while the Gibbs-surrogate weights
    exp(s*psi)/Z drift monotonically (upward for kappa=1, downward for
    kappa >= 3) — evidence that the two measures differ.  For kappa=2 no
    direction is asserted and the rows carry no flag.
    """
    if V is None:
        V = pt.V
    V = V.V if isinstance(V, Coupling) else float(V)
    from .dosmeasure import cylinder_weight

    spec = pt.spec
    s = bowen_root(pt, pt.depth)
    prefix = pt.prefix_vector.words[0]  # the (I,1) component
    pcode = tuple(l.ordinal - 1 for l in prefix.letters)
    rows = []
    for n in range(1, n_max + 1):
        u, ut = _repeat_word_codes(kappa, n)
        lmu_u = cylinder_weight(Q, p, u)
        lmu_ut = cylinder_weight(Q, p, ut)
        bu = band_for_word(spec, V, pcode + u[1:], pt.ctx, f_tol=pt.f_tol)
        but = band_for_word(spec, V, pcode + ut[1:], pt.ctx, f_tol=pt.f_tol)
        mu_ratio = math.exp(lmu_u - lmu_ut)
        m_ratio = math.exp(s * (_ln_width(bu) - _ln_width(but)))
        rows.append({"n": n, "word_length": 6 * n + 1,
                     "mu_ratio": mu_ratio, "m_ratio": m_ratio})
    if kappa == 1:
        direction = "increasing"
    elif kappa >= 3:
        direction = "decreasing"
    else:
        direction = None
    if direction is not None:
        vals = [r["m_ratio"] for r in rows]
        monotone = all(
            (b > a) if direction == "increasing" else (b < a)
            for a, b in zip(vals, vals[1:])
        )
        for r in rows:
            r["flag"] = direction if monotone else "not monotone"
    return rows
