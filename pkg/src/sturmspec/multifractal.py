"""Multifractal analysis of the DOS measure: tau(q) and its Legendre dual.

tau(q) at depth n solves sum_u mu_Q([u])^q |B_u|^t = 1, the finite-level
form of the pressure equation P(q Phi + t Psi) = 0.  Using the full Markov
weight (head factor included) makes the q=1 solution exactly 0 at every
depth, pinning the curve where the limit pins it.  The Legendre transform
tau*(beta) = inf_q (tau(q) + beta q) is the dimension of the level set of
points with local dimension beta; its domain endpoints beta_*, beta^* are
the extreme slopes of the computed curve (one-sided finite differences at
the grid boundary, i.e. extrapolations of the true q -> +-infinity limits).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridTooCoarse
from .precision import DOUBLE, PrecisionContext
from .thermo import PotentialTable, pressure_diff_root

__all__ = [
    "TauCurve",
    "LegendreSpectrum",
    "tau",
    "build_tau_curve",
    "legendre",
    "legendre_inverse",
]


def tau(pt: PotentialTable, q: float, depth: int,
        ctx: PrecisionContext = DOUBLE) -> float:
    """Unique t with the weighted partition sum sum_u mu_Q([u])^q |B_u|^t
    stationary across the last depth step (pressure-difference form).

    Strictly decreasing in t; t < 0 for q > 1 and t > 1 for strongly
    negative q, handled by bracket expansion.  q = 1 gives exactly 0 at
    every depth (both partition sums are 1), and q = 0 reduces to the
    Bowen root through the identical solver path.
    """
    tol = min(1e-12, ctx.abs_tol)
    return pressure_diff_root(pt, depth, q, tol)


@dataclass
class TauCurve:
    """Sampled tau(q) at one depth."""

    depth: int
    qs: np.ndarray
    taus: np.ndarray

    def convexity_defect(self) -> float:
        """Smallest second difference of tau over the q grid (>= 0 up to
        solver noise when the curve is convex)."""
        return float(np.diff(self.taus, 2).min())

    def slopes(self) -> np.ndarray:
        return np.diff(self.taus) / np.diff(self.qs)

    def value(self, q: float) -> float:
        i = int(np.argmin(np.abs(self.qs - q)))
        if abs(self.qs[i] - q) > 1e-9:
            raise KeyError(f"q = {q} not on the grid")
        return float(self.taus[i])


def build_tau_curve(pt: PotentialTable, depth: int, q_min: float = -5.0,
                    q_max: float = 5.0, step: float = 0.1,
                    ctx: PrecisionContext = DOUBLE) -> TauCurve:
    """tau(q) on a uniform grid; solves are independent per q."""
    m = int(round((q_max - q_min) / step))
    qs = q_min + step * np.arange(m + 1)
    taus = np.array([tau(pt, q, depth, ctx) for q in qs])
    return TauCurve(depth, qs, taus)


@dataclass
class LegendreSpectrum:
    """Discrete Legendre transform tau*(beta) = inf_q (tau(q) + beta q)."""

    betas: np.ndarray
    tau_star: np.ndarray
    beta_star: float  # smallest local dimension (slope at the q_max end)
    beta_sup: float  # largest local dimension (slope at the q_min end)
    tangency_beta: float  # -tau'(1): where tau*(beta) = beta
    depth: int = 0

    def value(self, beta: float) -> float:
        i = int(np.argmin(np.abs(self.betas - beta)))
        return float(self.tau_star[i])


def legendre(curve: TauCurve) -> LegendreSpectrum:
    """Legendre transform of a computed tau curve.

    The beta grid is the (sorted) set of chord slopes of tau with sign
    flipped, so every grid point is attained as a subgradient.  Raises
    GridTooCoarse when adjacent chord slopes jump by more than 0.2 —
    the transform would alias whole slope ranges onto single betas.
    """
    sl = curve.slopes()
    if np.abs(np.diff(sl)).max() > 0.2:
        raise GridTooCoarse(
            f"adjacent tau slopes differ by {np.abs(np.diff(sl)).max():.3f}"
            " > 0.2; refine the q grid")
    betas = np.sort(-sl)
    tau_star = np.array([
        float(np.min(curve.taus + b * curve.qs)) for b in betas
    ])
    # tangency: tau* touches the diagonal at beta = -tau'(1)
    i1 = int(np.argmin(np.abs(curve.qs - 1.0)))
    j = min(max(i1, 1), len(curve.qs) - 1)
    tprime1 = (curve.taus[j] - curve.taus[j - 1]) / (curve.qs[j] - curve.qs[j - 1])
    return LegendreSpectrum(betas, tau_star, float(betas[0]), float(betas[-1]),
                            float(-tprime1), curve.depth)


def legendre_inverse(spectrum: LegendreSpectrum, qs: np.ndarray) -> np.ndarray:
    """Double transform: tau(q) = sup_beta (tau*(beta) - beta q); returns
    the reconstruction on the given q grid (equals the original convex
    curve up to grid resolution)."""
    return np.array([
        float(np.max(spectrum.tau_star - spectrum.betas * q)) for q in qs
    ])
