"""Density-of-states measure of the Sturm Hamiltonian.

The weak limit of the periodic-approximant eigenvalue counting measures is
a Markov measure on the band coding: an explicit stochastic matrix Q over
the constant-tail alphabet, its stationary vector, and per-band weights
that depend only on the band type and order.  This module builds those
objects, evaluates cylinder weights in log space, and provides the
periodic-approximant eigenvalue oracle used to cross-check the band
construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coding import Letter, Word, admissible, alphabet
from .errors import (
    CapExceeded,
    DepthMismatch,
    InadmissibleWord,
    OrderTooSmall,
)
from .frequency import FrequencySpec
from .precision import DOUBLE, PrecisionContext, perron_eigen

__all__ = [
    "TransitionMatrix",
    "StationaryVector",
    "build_Q",
    "type_constant",
    "cylinder_weight",
    "dos_of_band",
    "level_weights",
    "periodic_eigenvalues",
    "dos_dimension_estimate",
    "sample_letter_frequency",
    "verify_continuant_form",
]


def type_constant(btype: str, alpha: float) -> float:
    """Per-type weight constant: C_I = a/(1+a^2), C_II = a^2/(1+a^2),
    C_III = a(a-1)/(1+a^2) with a the golden-like growth constant."""
    den = 1.0 + alpha * alpha
    if btype == "I":
        return alpha / den
    if btype == "II":
        return alpha * alpha / den
    if btype == "III":
        return alpha * (alpha - 1.0) / den
    raise ValueError(f"unknown band type {btype!r}")


@dataclass(frozen=True)
class TransitionMatrix:
    """Stochastic transition matrix of the DOS Markov measure."""

    kappa: int
    alpha: float
    letters: tuple
    Q: np.ndarray

    def index(self, letter: Letter) -> int:
        return letter.ordinal - 1


@dataclass(frozen=True)
class StationaryVector:
    kappa: int
    letters: tuple
    p: np.ndarray


def build_Q(kappa: int, ctx: PrecisionContext = DOUBLE):
    """(TransitionMatrix, StationaryVector) for the constant-tail alphabet.

    Q(i, j) = (C_{type(j)} / C_{type(i)}) / alpha on admissible pairs and 0
    elsewhere; the row-sum identity sum_j C_{type(j)} = alpha * C_{type(i)}
    over successors of i makes Q stochastic without any normalization step.
    The stationary vector is the sum-normalized left Perron vector; both
    the row sums and the closed form p_{II} = alpha/(kappa*alpha + 2) are
    verified to 1e-12 before returning.
    """
    if kappa < 1:
        raise ValueError("kappa >= 1 required")
    alpha = (kappa + math.sqrt(kappa * kappa + 4)) / 2.0
    letters = tuple(alphabet(kappa))
    d = len(letters)
    C = np.array([type_constant(l.band_type, alpha) for l in letters])
    Q = np.zeros((d, d))
    for i, a in enumerate(letters):
        for j, b in enumerate(letters):
            if admissible(a, b):
                Q[i, j] = C[j] / (C[i] * alpha)
    rows = Q.sum(axis=1)
    if np.abs(rows - 1.0).max() > 1e-12:
        raise RuntimeError("transition matrix rows do not sum to 1")
    _, left, _ = perron_eigen(Q, ctx)
    p = np.array([float(x) for x in left])
    p /= p.sum()
    if np.abs(p @ Q - p).max() > 1e-12:
        raise RuntimeError("stationary vector fails pQ = p")
    i_II = next(i for i, l in enumerate(letters) if l.band_type == "II")
    if abs(p[i_II] - alpha / (kappa * alpha + 2)) > 1e-12:
        raise RuntimeError("stationary weight of the II letter is off")
    return (TransitionMatrix(kappa, alpha, letters, Q),
            StationaryVector(kappa, letters, p))


def _free_ordinals(Q: TransitionMatrix, u) -> list:
    if isinstance(u, Word):
        for l in u.letters:
            if l.alphabet_param != Q.kappa:
                raise InadmissibleWord(
                    f"letter {l} is not in the constant-tail alphabet")
        return [l.ordinal - 1 for l in u.letters]
    return [int(o) for o in u]


def cylinder_weight(Q: TransitionMatrix, p: StationaryVector, u) -> float:
    """ln mu_Q([u]) = ln p_{u0} + sum ln q_{u_i u_{i+1}} for a free word u
    (a Word over the constant-tail alphabet, or 0-based ordinals)."""
    code = _free_ordinals(Q, u)
    if not code:
        raise InadmissibleWord("empty word has no cylinder")
    w = math.log(p.p[code[0]])
    for i, j in zip(code, code[1:]):
        q = Q.Q[i, j]
        if q <= 0:
            raise InadmissibleWord(
                f"inadmissible step {Q.letters[i]} -> {Q.letters[j]}")
        w += math.log(q)
    return w


def level_weights(spec: FrequencySpec, tree, n: int) -> np.ndarray:
    """Relative DOS weights of the order-n bands of the tree (sum = 1).

    The weight of a band is proportional to the type constant C_{t};
    the power alpha^{-n} is shared by the whole level and cancels in the
    normalization, which also fixes the overall constant of the measure.
    """
    if n <= spec.n_hat:
        raise OrderTooSmall(
            f"the type/weight formula needs order n > {spec.n_hat}")
    alpha = spec.alpha_kappa
    cs = np.array([type_constant(b.btype, alpha) for b in tree.bands(n)])
    return cs / cs.sum()


def dos_of_band(spec: FrequencySpec, V, tree, w) -> float:
    """Relative DOS weight of one band, addressed by rooted word.

    w may be a coding.Word, a tuple of 0-based ordinals, or a Band.
    """
    if hasattr(w, "word"):
        code = tuple(w.word)
    elif isinstance(w, Word):
        code = tuple(l.ordinal - 1 for l in w.letters)
    else:
        code = tuple(w)
    band = tree.band(code)
    n = band.order
    weights = level_weights(spec, tree, n)
    for i, b in enumerate(tree.bands(n)):
        if b.word == code:
            return float(weights[i])
    raise KeyError(f"band {code} not at level {n}")


def periodic_eigenvalues(spec: FrequencySpec, V, k: int,
                         ctx: PrecisionContext = DOUBLE, cap: int = 1000):
    """Sorted eigenvalues of the order-k periodic restriction H_k.

    The q_k x q_k matrix is tridiagonal with hopping 1 plus the two corner
    wrap entries; the diagonal is the Sturm potential at phase 0, produced
    in exact integer arithmetic so no entry is misclassified near the
    circle-partition boundary.  For q_k = 1 both hoppings wrap onto the
    single site, giving the scalar v_1 + 2.
    """
    V = float(V.V) if hasattr(V, "V") else float(V)
    qk = spec.q(k)
    if qk > cap:
        raise CapExceeded(f"q_{k} = {qk} exceeds the eigenvalue cap {cap}")
    vs = np.array([float(spec.potential(i, 1)) * V for i in range(1, qk + 1)])
    if qk == 1:
        return np.array([vs[0] + 2.0])
    H = np.diag(vs)
    idx = np.arange(qk - 1)
    H[idx, idx + 1] = 1.0
    H[idx + 1, idx] = 1.0
    H[0, qk - 1] += 1.0
    H[qk - 1, 0] += 1.0
    return np.sort(np.linalg.eigvalsh(H))


def dos_dimension_estimate(weights, potentials, n: int):
    """Finite-depth DOS dimension ln(alpha)/(-L_n) with a Cauchy diagnostic.

    L_m = (1/m') * sum_u mu_Q([u]) * psi_m(u), where m' is the depth
    normalization of the potential table (the band orders underlying psi,
    which exceed the free depth m by the prefix length).  weights and
    potentials may be the same PotentialTable; they must agree on word
    counts at each depth used.  Returns (estimate, |L_n - L_{n-1}|).
    """
    def L(m):
        lw = weights.log_mu(m)
        psi = potentials.psi(m)
        if len(lw) != len(psi):
            raise DepthMismatch(
                f"weight and potential tables disagree at depth {m}")
        return float(np.exp(lw) @ psi) / potentials.norm_depth(m)

    ln_alpha = math.log(potentials.alpha)
    ln_ = L(n)
    diag = abs(ln_ - L(n - 1)) if n - 1 >= 1 else math.inf
    return ln_alpha / (-ln_), diag


def sample_letter_frequency(Q: TransitionMatrix, p: StationaryVector,
                            letter_type: str = "II", steps: int = 100_000,
                            seed: int = 0):
    """Empirical visit frequency of a letter type along a mu_Q path.

    Returns (frequency, standard_error) for the seeded chain started in
    the stationary distribution.
    """
    rng = np.random.default_rng(seed)
    d = len(p.p)
    cum = np.cumsum(Q.Q, axis=1)
    mask = np.array([l.band_type == letter_type for l in Q.letters])
    state = int(rng.choice(d, p=p.p))
    hits = 0
    us = rng.random(steps)
    for t in range(steps):
        if mask[state]:
            hits += 1
        state = int(np.searchsorted(cum[state], us[t]))
    freq = hits / steps
    se = math.sqrt(max(freq * (1 - freq), 1e-12) / steps)
    return freq, se


def verify_continuant_form(spec: FrequencySpec, l_extra: int = 12) -> float:
    """Max relative error of q_l = c*alpha^l + d*(-alpha)^(-l) beyond the
    prefix, with (c, d) fitted from the first two tail continuants.

    The continuants themselves are exact integers; the closed form is
    evaluated in double precision, so agreement to ~1e-12 confirms the
    two-term growth law.
    """
    nh = spec.n_hat
    alpha = spec.alpha_kappa
    l1, l2 = nh + 1, nh + 2
    # solve [alpha^l, (-alpha)^{-l}] @ (c, d) = q_l at l = l1, l2
    M = np.array([[alpha ** l1, (-alpha) ** (-l1)],
                  [alpha ** l2, (-alpha) ** (-l2)]])
    rhs = np.array([float(spec.q(l1)), float(spec.q(l2))], dtype=float)
    c, d = np.linalg.solve(M, rhs)
    worst = 0.0
    for l in range(nh + 1, nh + l_extra + 1):
        exact = spec.q(l)
        approx = c * alpha ** l + d * (-alpha) ** (-l)
        worst = max(worst, abs(approx - exact) / max(1.0, exact))
    return worst
