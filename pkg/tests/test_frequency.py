import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sturmspec.frequency import FrequencySpec


def test_digits_and_n_hat():
    s = FrequencySpec((0, 2, 7), 3)
    assert s.n_hat == 2
    assert [s.digit(n) for n in (1, 2, 3, 4, 10)] == [2, 7, 3, 3, 3]


def test_continuant_recurrence():
    for prefix, kappa in (((0,), 1), ((0, 3, 1), 2), ((0,), 4)):
        s = FrequencySpec(prefix, kappa)
        assert s.q(0) == 1 and s.p(0) == 0
        for n in range(2, 15):
            a = s.digit(n)
            assert s.q(n) == a * s.q(n - 1) + s.q(n - 2)
            assert s.p(n) == a * s.p(n - 1) + s.p(n - 2)


def test_convergents_approach_beta():
    s = FrequencySpec((0,), 1)
    beta = (math.sqrt(5) - 1) / 2
    for n in range(3, 12):
        assert abs(s.p(n) / s.q(n) - beta) < 1 / s.q(n) ** 2


def test_potential_is_zero_one():
    s = FrequencySpec((0, 2), 2)
    vals = [s.potential(n, 1) for n in range(1, 200)]
    assert set(vals) <= {0, 1}
    # density of ones is beta
    beta = s.p(20) / s.q(20)
    assert abs(sum(vals) / len(vals) - beta) < 0.02


def test_potential_periodic_sums():
    # over one period q_k of the order-k rational approximant the exact
    # potential picks up p_k ones
    s = FrequencySpec((0,), 1)
    for k in range(2, 10):
        qk, pk = s.q(k), s.p(k)
        total = sum(s.potential(n, 1) for n in range(1, qk + 1))
        assert abs(total - pk) <= 1


def test_alpha_closed_form():
    for kappa in range(1, 7):
        s = FrequencySpec((0,), kappa)
        a = s.alpha_kappa
        assert abs(a * a - kappa * a - 1) < 1e-12


def test_bad_inputs():
    with pytest.raises(Exception):
        FrequencySpec((0,), 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 500))
def test_floor_quadratic_matches_float(kappa, n):
    # exact integer floor(n*beta) against high-precision float evaluation
    s = FrequencySpec((0,), kappa)
    beta = Fraction(s.p(40), s.q(40))  # error ~ q_40^{-2}, far below 1/n
    assert s.floor_n_beta(n) == (n * beta).numerator // (n * beta).denominator
