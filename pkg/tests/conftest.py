import pytest

from sturmspec import DOUBLE, FrequencySpec, build_band_tree
from sturmspec.coding import prefix_vectors
from sturmspec.dosmeasure import build_Q
from sturmspec.precision import PrecisionContext
from sturmspec.thermo import build_potentials_streaming

EXT192 = PrecisionContext(192, 1e-30, 1e-30)


@pytest.fixture(scope="session")
def golden_spec():
    return FrequencySpec((0,), 1)


@pytest.fixture(scope="session")
def golden_tree(golden_spec):
    """Golden-mean tree, V = 24, depth 8, double precision."""
    return build_band_tree(golden_spec, 24.0, 8, DOUBLE)


@pytest.fixture(scope="session")
def golden_Q():
    return build_Q(1)


@pytest.fixture(scope="session")
def golden_pt(golden_spec, golden_Q):
    """Potential/weight table for the golden-mean class, V = 24, free
    depth 8, 192-bit arithmetic (double underflows past order ~11)."""
    Q, p = golden_Q
    pv = prefix_vectors(golden_spec)[0]
    return build_potentials_streaming(golden_spec, 24.0, pv, Q, p, 8, EXT192)
