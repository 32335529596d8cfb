import math

import numpy as np
import pytest

from sturmspec import FrequencySpec
from sturmspec.coding import count_words, letter_from_ordinal, prefix_vectors
from sturmspec.dosmeasure import build_Q, dos_dimension_estimate
from sturmspec.errors import MissingBand
from sturmspec.thermo import (
    PotentialTable,
    PressureCurve,
    measure_separation_diagnostic,
    bowen_root,
    build_potentials,
    build_potentials_streaming,
    exponent_estimates,
    gibbs_weights,
    holder_exponent,
    pressure,
    pressure_diff_root,
)

from conftest import EXT192


def test_counts_match_free_words(golden_spec, golden_pt):
    for m in range(golden_pt.depth + 1):
        assert golden_pt.count(m) == count_words(golden_spec, m, rooted=False)


def test_psi_negative_and_decreasing_in_depth(golden_pt):
    for m in range(golden_pt.depth + 1):
        assert (golden_pt.psi(m) < 0).all()
    # band lengths never grow along a branch (a digit-1 type-I step keeps
    # the band, so equality does occur)
    for m in range(1, golden_pt.depth + 1):
        par = golden_pt.parent_index(m)
        assert (golden_pt.psi(m) <= golden_pt.psi(m - 1)[par] + 1e-12).all()


def test_log_mu_is_markov(golden_pt, golden_Q):
    Q, p = golden_Q
    from sturmspec.dosmeasure import cylinder_weight
    for m in (0, 2, 4):
        lw = golden_pt.log_mu(m)
        assert math.exp(max(
            abs(lw[i] - cylinder_weight(Q, p, golden_pt.word_code(m, i)))
            for i in range(len(lw))
        )) == pytest.approx(1.0, abs=1e-12)
        assert np.exp(lw).sum() == pytest.approx(1.0, abs=1e-12)


def test_word_code_is_admissible(golden_pt):
    from sturmspec.coding import admissible
    m = 5
    for i in (0, 7, golden_pt.count(m) - 1):
        code = golden_pt.word_code(m, i)
        assert len(code) == m + 1
        ls = [letter_from_ordinal(1, o + 1) for o in code]
        assert all(admissible(a, b) for a, b in zip(ls, ls[1:]))


def test_pressure_at_zero_counts_words(golden_pt):
    n = golden_pt.depth
    assert pressure(golden_pt, 0.0, n) == \
        pytest.approx(math.log(golden_pt.count(n)) / n, abs=1e-12)


def test_pressure_decreasing_in_s(golden_pt):
    curve = PressureCurve(golden_pt, golden_pt.depth)
    vals = [curve(s) for s in (0.0, 0.1, 0.2, 0.5)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_bowen_root_is_q0_pressure_diff(golden_pt):
    n = golden_pt.depth
    assert bowen_root(golden_pt, n) == pressure_diff_root(golden_pt, n, 0.0)


def test_bowen_root_in_unit_interval(golden_pt):
    s = bowen_root(golden_pt, golden_pt.depth)
    assert 0 < s < 1


def test_q1_root_is_zero(golden_pt):
    # at q = 1 both partition sums are the full measure of the level: the
    # pressure difference vanishes at t = 0 at every depth
    for n in (4, golden_pt.depth):
        assert abs(pressure_diff_root(golden_pt, n, 1.0)) < 1e-9


def test_root_invariant_under_length_rescaling(golden_pt):
    # |B| -> c|B| shifts every psi by ln c; the difference root is exact
    pt = golden_pt
    shifted = PotentialTable(
        pt.spec, pt.V, pt.prefix_vector, pt.depth, pt.ctx,
        [a - 7.25 for a in pt._psi], pt._log_mu, pt._parent, pt._last,
        pt._first, pt._log_p, pt.f_tol)
    for q in (0.0, 0.5, 2.0):
        a = pressure_diff_root(pt, pt.depth, q)
        b = pressure_diff_root(shifted, pt.depth, q)
        assert a == pytest.approx(b, abs=1e-10)


def test_gibbs_weights_normalized(golden_pt):
    w = gibbs_weights(golden_pt, 0.3, golden_pt.depth)
    assert w.sum() == pytest.approx(1.0, abs=1e-12)
    assert (w > 0).all()


def test_holder_exponent_report(golden_pt):
    gamma, report = holder_exponent(golden_pt, golden_pt.depth)
    assert report[-1]["depth"] == golden_pt.depth
    n = golden_pt.depth
    expect = math.log(golden_pt.alpha) / (-(float(golden_pt.psi(n).min()) / n))
    assert gamma == pytest.approx(expect, rel=1e-12)


def test_exponent_estimates_structure(golden_pt):
    est = exponent_estimates(golden_pt)
    assert est.kappa == 1 and est.V == 24.0
    d = est.diagnostics
    assert set(d) >= {"s_ratio_roots", "s_accelerated", "d_telescoped",
                      "gamma_by_period", "s_cauchy", "d_cauchy",
                      "gamma_cauchy"}
    assert 0 < est.gamma_hat < 1 and 0 < est.d_hat < 1 and 0 < est.s_hat < 1
    # the three exponents all live within a factor of ~2 at this coupling
    assert est.gamma_hat <= est.s_hat * 1.5


def test_streaming_matches_tree_builder(golden_spec, golden_Q):
    from sturmspec import build_band_tree
    Q, p = golden_Q
    pv = prefix_vectors(golden_spec)[0]
    depth = 3
    tree = build_band_tree(golden_spec, 24.0, pv.n_alpha + depth, EXT192)
    a = build_potentials(tree, pv, Q, p, depth)
    b = build_potentials_streaming(golden_spec, 24.0, pv, Q, p, depth, EXT192)
    for m in range(depth + 1):
        assert a.count(m) == b.count(m)
        assert np.abs(np.sort(a.psi(m)) - np.sort(b.psi(m))).max() < 1e-9
        assert np.abs(np.sort(a.log_mu(m)) - np.sort(b.log_mu(m))).max() < 1e-12


def test_tree_builder_needs_depth(golden_spec, golden_tree, golden_Q):
    Q, p = golden_Q
    pv = prefix_vectors(golden_spec)[0]
    with pytest.raises(MissingBand):
        build_potentials(golden_tree, pv, Q, p, golden_tree.depth)


def test_dos_dimension_estimate_agrees_with_raw(golden_pt):
    n = golden_pt.depth
    est, diag = dos_dimension_estimate(golden_pt, golden_pt, n)
    raw = exponent_estimates(golden_pt).diagnostics["d_raw"][n]
    assert est == pytest.approx(raw, rel=1e-12)
    assert diag < 1.0


def test_measure_separation_diagnostic_golden(golden_pt, golden_Q):
    Q, p = golden_Q
    rows = measure_separation_diagnostic(1, 24.0, golden_pt, Q, p, 3)
    assert len(rows) == 3
    for r in rows:
        assert 0.25 < r["mu_ratio"] < 4.0
        assert r["flag"] == "increasing"
