"""Continued-fraction frequency specs of eventually constant type.

A frequency is given by a finite digit prefix a_0, ..., a_nhat followed by
the constant tail kappa, kappa, ...  The fractional part beta = {alpha} is a
quadratic irrational (A + B*sqrt(D))/C with D = kappa^2 + 4, which lets the
rotation sequence floor(n*beta) — and hence the Sturm potential — be
generated in exact integer arithmetic.  Misclassifying a single potential
entry near the circle-partition boundary would break the periodic
eigenvalue oracle, so no floating point is involved there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import gmpy2

__all__ = ["FrequencySpec"]


@dataclass(frozen=True)
class FrequencySpec:
    prefix: tuple = (0,)
    kappa: int = 1
    _q: list = field(default_factory=list, repr=False, compare=False)
    _p: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        if self.kappa < 1:
            raise ValueError("kappa >= 1 required")
        pref = tuple(int(a) for a in self.prefix)
        if len(pref) == 0 or pref[0] < 0:
            raise ValueError("prefix must start with a_0 >= 0")
        if any(a < 1 for a in pref[1:]):
            raise ValueError("partial quotients a_i >= 1 required for i >= 1")
        object.__setattr__(self, "prefix", pref)
        # q_{-1} = 0, q_0 = 1 stored at offset 1
        object.__setattr__(self, "_q", [0, 1])
        object.__setattr__(self, "_p", [1, pref[0]])

    @property
    def n_hat(self) -> int:
        return len(self.prefix) - 1

    def digit(self, n: int) -> int:
        """Partial quotient a_n (constant tail beyond the prefix)."""
        if n < 0:
            raise ValueError("n >= 0")
        if n <= self.n_hat:
            return self.prefix[n]
        return self.kappa

    def q(self, n: int) -> int:
        """Continuant q_n (q_{-1} = 0, q_0 = 1, q_{n+1} = a_{n+1} q_n + q_{n-1})."""
        if n < -1:
            raise ValueError("n >= -1")
        while len(self._q) < n + 2:
            m = len(self._q) - 1  # next index to fill
            self._q.append(self.digit(m) * self._q[-1] + self._q[-2])
            self._p.append(self.digit(m) * self._p[-1] + self._p[-2])
        return self._q[n + 1]

    def p(self, n: int) -> int:
        self.q(n)
        return self._p[n + 1]

    # --- exact quadratic-irrational representation of beta = {alpha} ---

    @property
    def D(self) -> int:
        return self.kappa * self.kappa + 4

    def _beta_ABC(self):
        """beta = {alpha} = (A + B*sqrt(D))/C with integers A, B, C, C > 0."""
        m = self.n_hat
        pm, pm1 = self.p(m), self.p(m - 1)
        qm, qm1 = self.q(m), self.q(m - 1)
        k, D = self.kappa, self.D
        # alpha = (pm*w + pm1)/(qm*w + qm1), w = (k + sqrt(D))/2
        n1, n2 = pm * k + 2 * pm1, pm
        e, f = qm * k + 2 * qm1, qm
        A = n1 * e - n2 * f * D
        B = n2 * e - n1 * f
        C = e * e - f * f * D
        if C < 0:
            A, B, C = -A, -B, -C
        A -= self.prefix[0] * C  # subtract integer part
        g = math.gcd(math.gcd(abs(A), abs(B)), C)
        return A // g, B // g, C // g

    def _floor_quad(self, A: int, B: int, C: int) -> int:
        """floor((A + B*sqrt(D))/C) exactly, C > 0, D not a square."""
        D = self.D
        # float guess, then exact correction (guess is off by at most 1 here,
        # but the loop tolerates any starting point below the answer)
        k = int(math.floor((A + B * math.sqrt(D)) / C)) - 2

        def _ge(T):  # A + B*sqrt(D) >= T ?
            R = T - A
            if B >= 0:
                if R <= 0:
                    return True
                return B * B * D >= R * R
            if R > 0:
                return False
            return B * B * D <= R * R

        while _ge((k + 1) * C):
            k += 1
        return k

    def floor_n_beta(self, n: int) -> int:
        """floor(n * beta) in exact integer arithmetic."""
        A, B, C = self._beta_ABC()
        return self._floor_quad(n * A, n * B, C)

    def potential(self, n: int, V) -> object:
        """Sturm potential v_n = V * chi_[1-beta,1)(n*alpha mod 1), phase 0."""
        hit = self.floor_n_beta(n + 1) - self.floor_n_beta(n)
        return V * hit

    # --- real values ---

    @property
    def alpha_kappa(self) -> float:
        """Growth constant (kappa + sqrt(kappa^2+4))/2 (double precision)."""
        return (self.kappa + math.sqrt(self.D)) / 2.0

    def alpha_kappa_real(self, ctx):
        with ctx.workprec():
            if ctx.is_double:
                return self.alpha_kappa
            return (self.kappa + gmpy2.sqrt(gmpy2.mpfr(self.D))) / 2

    def alpha_real(self, ctx):
        """Value of the continued fraction at the context precision."""
        with ctx.workprec():
            A, B, C = self._beta_ABC()
            if ctx.is_double:
                return self.prefix[0] + (A + B * math.sqrt(self.D)) / C
            s = gmpy2.sqrt(gmpy2.mpfr(self.D))
            return self.prefix[0] + (A + B * s) / C

    @property
    def alpha(self) -> float:
        A, B, C = self._beta_ABC()
        return self.prefix[0] + (A + B * math.sqrt(self.D)) / C
