"""Spectral band hierarchy, density of states and dimension theory of the
Sturm Hamiltonian at frequencies of eventually constant type."""

from .bands import (
    Band,
    BandTree,
    Coupling,
    band_for_word,
    build_band_tree,
    estimate_bounds_profile,
    eval_trace,
    gaps,
    spectrum_point,
)
from .asymptotics import AsymptoticConstants, constants, inequality_table
from .coding import PrefixVector, Word, alphabet, minimal_n_alpha, prefix_vectors
from .dosmeasure import build_Q, cylinder_weight, level_weights, periodic_eigenvalues
from .frequency import FrequencySpec
from .multifractal import build_tau_curve, legendre
from .precision import DOUBLE, EXTENDED, PrecisionContext
from .thermo import (
    ExponentEstimates,
    PotentialTable,
    bowen_root,
    build_potentials,
    build_potentials_streaming,
    exponent_estimates,
)

__version__ = "0.1.0"

__all__ = [
    "AsymptoticConstants",
    "ExponentEstimates",
    "PotentialTable",
    "bowen_root",
    "build_Q",
    "build_potentials",
    "build_potentials_streaming",
    "build_tau_curve",
    "constants",
    "cylinder_weight",
    "exponent_estimates",
    "inequality_table",
    "legendre",
    "level_weights",
    "periodic_eigenvalues",
    "FrequencySpec",
    "Coupling",
    "Band",
    "BandTree",
    "Word",
    "PrefixVector",
    "PrecisionContext",
    "DOUBLE",
    "EXTENDED",
    "alphabet",
    "band_for_word",
    "build_band_tree",
    "estimate_bounds_profile",
    "eval_trace",
    "gaps",
    "minimal_n_alpha",
    "prefix_vectors",
    "spectrum_point",
    "__version__",
]
