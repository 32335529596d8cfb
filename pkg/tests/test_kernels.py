import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sturmspec.frequency import FrequencySpec
from sturmspec.kernels import HAS_NUMBA, direct_transfer, level_pass, level_pass_grid
from sturmspec.kernels import reference


def _digits(spec, n):
    return np.array([spec.digit(i) for i in range(1, n + 1)], dtype=np.int64)


def test_trace_map_matches_direct_product():
    spec = FrequencySpec((0,), 1)
    V = 24.0
    for n in (1, 3, 6):
        qn = spec.q(n)
        vs = [float(spec.potential(i, 1)) * V for i in range(1, qn + 1)]
        for x in (-1.0, 0.5, 23.7):
            a, b, c, d = direct_transfer(vs, x)
            _, _, h = level_pass(_digits(spec, n), V, x)
            assert h == pytest.approx(a + d, rel=1e-10, abs=1e-8)


def test_trace_triple_shift():
    # t0 at level n equals h at level n-1
    spec = FrequencySpec((0, 2), 3)
    V = 30.0
    for n in (2, 4, 6):
        t0, _, _ = level_pass(_digits(spec, n), V, 0.3)
        _, _, h = level_pass(_digits(spec, n - 1), V, 0.3)
        assert t0 == pytest.approx(h, rel=1e-12)


def test_grid_matches_scalar():
    spec = FrequencySpec((0,), 2)
    d = _digits(spec, 5)
    xs = np.linspace(-2, 2, 17)
    g0, g1, gh = level_pass_grid(d, 24.0, xs)
    for i, x in enumerate(xs):
        t0, t1, h = level_pass(d, 24.0, float(x))
        assert g0[i] == t0 and g1[i] == t1 and gh[i] == h


def test_accel_agrees_with_reference():
    if not HAS_NUMBA:
        pytest.skip("numba disabled via STURMSPEC_NO_NUMBA")
    from sturmspec.kernels import accel
    spec = FrequencySpec((0, 4), 2)
    d = _digits(spec, 7)
    # off-spectrum points overflow to inf/nan identically in both paths
    xs = np.linspace(-2.0, 26.0, 101)
    with np.errstate(over="ignore", invalid="ignore"):
        a0, a1, ah = accel.level_pass_grid(d, 24.0, xs)
        r0, r1, rh = reference.level_pass_grid(d, 24.0, xs)
    assert np.array_equal(a0, r0, equal_nan=True)
    assert np.array_equal(a1, r1, equal_nan=True)
    assert np.array_equal(ah, rh, equal_nan=True)


def test_fricke_invariant_conserved():
    # x^2 + y^2 + z^2 - xyz = V^2 + 4 along the digit-1 trace map orbit
    # (checked at small level: off-spectrum traces grow doubly
    # exponentially and the invariant drowns in cancellation beyond that)
    spec = FrequencySpec((0,), 1)
    V = 24.0

    def fricke(t0, t1, h):
        return t0 * t0 + t1 * t1 + h * h - t0 * t1 * h

    for x in (-1.5, 0.0, 1.2, 23.0):
        for n in range(1, 4):
            val = fricke(*level_pass(_digits(spec, n), V, x))
            assert val == pytest.approx(V * V + 4, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(1, 4),
       st.floats(-2.0, 2.0, allow_nan=False))
def test_reference_determinant_one(kappa, n, x):
    # the transfer product is in SL(2, R): det == 1 up to roundoff
    spec = FrequencySpec((0,), kappa)
    qn = spec.q(n)
    vs = [float(spec.potential(i, 1)) * 24.0 for i in range(1, qn + 1)]
    a, b, c, d = direct_transfer(vs, x)
    scale = max(1.0, abs(a * d), abs(b * c))
    assert abs(a * d - b * c - 1.0) < 1e-9 * scale
