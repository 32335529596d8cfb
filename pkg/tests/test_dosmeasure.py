import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sturmspec import DOUBLE, FrequencySpec
from sturmspec.dosmeasure import (
    build_Q,
    cylinder_weight,
    dos_of_band,
    level_weights,
    periodic_eigenvalues,
    sample_letter_frequency,
    type_constant,
    verify_continuant_form,
)
from sturmspec.errors import CapExceeded, InadmissibleWord, OrderTooSmall


def test_type_constants_sum_rule():
    # sum over the alphabet of C_type = (N+1) C_I + C_II + N C_III must
    # equal alpha * C_I + alpha * C_III (row identity of the measure)
    for kappa in range(1, 8):
        a = (kappa + math.sqrt(kappa * kappa + 4)) / 2
        cI = type_constant("I", a)
        cII = type_constant("II", a)
        cIII = type_constant("III", a)
        # successor masses: I -> II; II -> (kappa+1) I + kappa III;
        # III -> kappa I + (kappa-1) III
        assert cII == pytest.approx(a * cI, rel=1e-14)
        assert (kappa + 1) * cI + kappa * cIII == pytest.approx(a * cII, rel=1e-13)
        assert kappa * cI + (kappa - 1) * cIII == pytest.approx(a * cIII, rel=1e-13)


@pytest.mark.parametrize("kappa", range(1, 9))
def test_Q_rows_and_stationary(kappa):
    Q, p = build_Q(kappa)
    assert np.abs(Q.Q.sum(axis=1) - 1).max() < 1e-13
    assert np.abs(p.p @ Q.Q - p.p).max() < 1e-12
    a = Q.alpha
    i_II = next(i for i, l in enumerate(Q.letters) if l.band_type == "II")
    assert p.p[i_II] == pytest.approx(a / (kappa * a + 2), abs=1e-13)
    # primitivity: some small power strictly positive
    P = (Q.Q > 0).astype(int)
    acc = P.copy()
    for _ in range(10):
        acc = acc @ P
    assert (acc > 0).all()


def test_cylinder_weights_sum_to_one(golden_Q):
    Q, p = golden_Q
    from sturmspec.coding import iter_word_codes
    spec = FrequencySpec((0,), 1)
    for n in (1, 2, 4):
        total = sum(
            math.exp(cylinder_weight(Q, p, w))
            for w in iter_word_codes(spec, n, rooted=False)
        )
        assert total == pytest.approx(1.0, abs=1e-12)


def test_cylinder_weight_rejects_bad_step(golden_Q):
    Q, p = golden_Q
    # I -> I is never admissible
    with pytest.raises(InadmissibleWord):
        cylinder_weight(Q, p, (0, 0))


def test_level_weights_normalized(golden_spec, golden_tree):
    for n in range(1, golden_tree.depth + 1):
        w = level_weights(golden_spec, golden_tree, n)
        assert w.sum() == pytest.approx(1.0, abs=1e-12)
        assert (w > 0).all()


def test_level_weights_refine_consistently(golden_spec, golden_tree):
    # parent weight = sum of child weights, level by level
    for n in range(1, golden_tree.depth):
        wn = level_weights(golden_spec, golden_tree, n)
        wn1 = level_weights(golden_spec, golden_tree, n + 1)
        idx = {b.word: i for i, b in enumerate(golden_tree.bands(n + 1))}
        cm = golden_tree.children_map(n)
        for i, b in enumerate(golden_tree.bands(n)):
            s = sum(wn1[idx[k.word]] for k in cm[b.word])
            assert s == pytest.approx(wn[i], abs=1e-10)


def test_level_weights_need_stationary_order():
    spec = FrequencySpec((0, 2, 2), 1)  # n_hat = 2
    from sturmspec import build_band_tree
    tree = build_band_tree(spec, 24.0, 4, DOUBLE)
    with pytest.raises(OrderTooSmall):
        level_weights(spec, tree, 2)
    level_weights(spec, tree, 3)


def test_dos_of_band_matches_level(golden_spec, golden_tree):
    n = 5
    w = level_weights(golden_spec, golden_tree, n)
    for i, b in enumerate(golden_tree.bands(n)[::4]):
        assert dos_of_band(golden_spec, 24.0, golden_tree, b) == \
            pytest.approx(w[4 * i], abs=1e-14)


def test_periodic_scalar_case(golden_spec):
    evs = periodic_eigenvalues(golden_spec, 30.0, 1, DOUBLE)
    assert evs.tolist() == [32.0]


def test_periodic_eigenvalue_counts(golden_spec):
    for k in range(8):
        evs = periodic_eigenvalues(golden_spec, 24.0, k, DOUBLE)
        assert len(evs) == golden_spec.q(k)


def test_periodic_cap(golden_spec):
    with pytest.raises(CapExceeded):
        periodic_eigenvalues(golden_spec, 24.0, 30, DOUBLE, cap=100)


def test_letter_frequency_matches_stationary(golden_Q):
    Q, p = golden_Q
    i_II = next(i for i, l in enumerate(Q.letters) if l.band_type == "II")
    freq, se = sample_letter_frequency(Q, p, "II", steps=40_000, seed=5)
    assert abs(freq - p.p[i_II]) < 4 * se + 1e-3


def test_continuant_growth_law():
    for prefix, kappa in (((0,), 1), ((0, 3), 2)):
        assert verify_continuant_form(FrequencySpec(prefix, kappa)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(1, 5), st.integers(0, 10 ** 6))
def test_cylinder_weight_telescopes(kappa, n, pick):
    # mu[u] = sum over admissible extensions mu[u j]
    Q, p = build_Q(kappa)
    from sturmspec.coding import iter_word_codes, successor_table
    spec = FrequencySpec((0,), kappa)
    words = list(iter_word_codes(spec, n - 1, rooted=False))
    u = words[pick % len(words)]
    succ = successor_table(kappa, kappa)
    total = sum(
        math.exp(cylinder_weight(Q, p, u + (j,))) for j in succ[u[-1]]
    )
    assert total == pytest.approx(math.exp(cylinder_weight(Q, p, u)), rel=1e-12)
