"""Closed-form large-coupling constants and the strict-inequality chain.

As V grows, the three spectral exponents vanish like 1/ln V with limits

    gamma_V * ln V -> rho_hat_kappa = (3/2) ln alpha_1     (kappa = 1)
                                    = (2/kappa) ln alpha_kappa  (kappa >= 2)
    d_V * ln V     -> varrho_kappa = (kappa*a+2)/(2a(a-1)) * ln a,  a = alpha_kappa
    s_V * ln V     -> rho_kappa   = ln y_kappa,

with y_kappa the unique root in (1, oo) of
F(y) = y^(kappa+1) - (kappa-1) y^kappa - (kappa+1) y - 1.  The chain
rho_hat <= varrho <= rho is strict except at kappa = 2, where all three
collapse to ln(1+sqrt(2)) — the silver-type degeneracy.  The root is
cross-checked through the matrix family R(x): the spectral radius of
R(1/y_kappa) must be 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .precision import DOUBLE, EXTENDED, PrecisionContext, bisect_root, perron_eigen

__all__ = [
    "AsymptoticConstants",
    "constants",
    "F_poly",
    "R_matrix",
    "spectral_radius_R",
    "delta_coefficient",
    "inequality_table",
    "asymptotic_convergence_report",
]


def F_poly(kappa: int, y):
    """F(y) = y^(kappa+1) - (kappa-1) y^kappa - (kappa+1) y - 1."""
    return y ** (kappa + 1) - (kappa - 1) * y ** kappa - (kappa + 1) * y - 1


def R_matrix(kappa: int, x: float) -> np.ndarray:
    """The 3x3 family whose unit-spectral-radius point encodes y_kappa."""
    return np.array([
        [0.0, x ** (kappa - 1), 0.0],
        [(kappa + 1) * x, 0.0, kappa * x],
        [kappa * x, 0.0, (kappa - 1) * x],
    ])


def spectral_radius_R(kappa: int, x: float,
                      ctx: PrecisionContext = DOUBLE) -> float:
    """Perron eigenvalue of R(x) for x > 0 (the matrix is primitive)."""
    lam, _, _ = perron_eigen(R_matrix(kappa, x), ctx)
    return float(lam)


def delta_coefficient(kappa: int) -> float:
    """delta_kappa = (kappa*a + 2)/(2a(a-1)), the varrho/ln(alpha) ratio."""
    a = (kappa + math.sqrt(kappa * kappa + 4)) / 2.0
    return (kappa * a + 2) / (2 * a * (a - 1))


@dataclass(frozen=True)
class AsymptoticConstants:
    """Large-V constants of one frequency class; scalars are backend reals
    of the construction context (floats in double mode)."""

    kappa: int
    alpha: object
    rho_hat: object
    varrho: object
    rho: object
    y: object
    x: object

    def to_json_dict(self):
        return {
            "kappa": self.kappa,
            "alpha": float(self.alpha),
            "rho_hat": float(self.rho_hat),
            "varrho": float(self.varrho),
            "rho": float(self.rho),
            "y": float(self.y),
            "x": float(self.x),
        }


def constants(kappa: int, ctx: PrecisionContext = EXTENDED) -> AsymptoticConstants:
    """All asymptotic constants of the class, with the R(x) cross-check.

    y_kappa is found by bracketed root solving of F on
    (max(1, kappa-1), kappa+2); the spectral radius of R(1/y_kappa) is
    verified to equal 1 within 1e-10 before returning.
    """
    if kappa < 1:
        raise ValueError("kappa >= 1 required")
    import gmpy2

    with ctx.workprec():
        sq = ctx.real(kappa * kappa + 4)
        if not ctx.is_double:
            sq = gmpy2.sqrt(sq)
        else:
            sq = math.sqrt(sq)
        alpha = (kappa + sq) / 2
        ln_a = gmpy2.log(alpha) if not ctx.is_double else math.log(alpha)
        if kappa == 1:
            rho_hat = ln_a * 3 / 2
        else:
            rho_hat = ln_a * 2 / kappa
        varrho = (kappa * alpha + 2) / (2 * alpha * (alpha - 1)) * ln_a

        lo = max(1, kappa - 1) + ctx.real("1e-9")
        hi = ctx.real(kappa + 2)
        y, _, _ = bisect_root(lambda t: F_poly(kappa, t), lo, hi, ctx,
                              x_tol=ctx.real(ctx.abs_tol))
        rho = gmpy2.log(y) if not ctx.is_double else math.log(y)
        x = 1 / y

    radius = spectral_radius_R(kappa, float(x))
    if abs(radius - 1.0) > 1e-10:
        raise RuntimeError(
            f"R(x_{kappa}) spectral radius {radius} != 1; root solve suspect")
    return AsymptoticConstants(kappa, alpha, rho_hat, varrho, rho, y, x)


def inequality_table(kappa_max: int, ctx: PrecisionContext = EXTENDED,
                     strict_gap: float = 1e-10, tie_tol: float = 1e-12):
    """Per-kappa constants with strict/tie flags for the ordering chain.

    Strict inequalities are flagged only beyond strict_gap; kappa = 2 is
    checked for exact ties instead.
    """
    if kappa_max < 2:
        raise ValueError("kappa_max >= 2 required")
    rows = []
    for kappa in range(1, kappa_max + 1):
        c = constants(kappa, ctx)
        rh, vr, r = float(c.rho_hat), float(c.varrho), float(c.rho)
        row = {
            "kappa": kappa,
            "rho_hat": rh,
            "varrho": vr,
            "rho": r,
            "strict_first": vr - rh > strict_gap,
            "strict_second": r - vr > strict_gap,
            "tie": abs(vr - rh) <= tie_tol and abs(r - vr) <= tie_tol,
        }
        rows.append(row)
    return rows


def asymptotic_convergence_report(kappa: int, V_list, depth: int,
                                  ctx: PrecisionContext = EXTENDED,
                                  f_tol: float = 1e-9, prefix=(0,)):
    """Products (s_hat, d_hat, gamma_hat) * ln V against their limits.

    Runs the full pipeline per coupling; the approach to the constants is
    reported, not asserted (no rate is available).
    """
    from .coding import prefix_vectors
    from .dosmeasure import build_Q
    from .frequency import FrequencySpec
    from .thermo import build_potentials_streaming, exponent_estimates

    if any(V <= 20 for V in V_list):
        raise ValueError("all couplings must exceed 20")
    c = constants(kappa)
    spec = FrequencySpec(tuple(prefix), kappa)
    Q, p = build_Q(kappa)
    pv = prefix_vectors(spec)[0]
    rows = []
    for V in V_list:
        pt = build_potentials_streaming(spec, float(V), pv, Q, p, depth,
                                        ctx, f_tol=f_tol)
        est = exponent_estimates(pt)
        lv = math.log(V)
        rows.append({
            "V": float(V),
            "s_product": est.s_hat * lv,
            "d_product": est.d_hat * lv,
            "gamma_product": est.gamma_hat * lv,
            "target_rho": float(c.rho),
            "target_varrho": float(c.varrho),
            "target_rho_hat": float(c.rho_hat),
            "err_s": abs(est.s_hat * lv - float(c.rho)),
            "err_d": abs(est.d_hat * lv - float(c.varrho)),
            "err_gamma": abs(est.gamma_hat * lv - float(c.rho_hat)),
        })
    return rows
