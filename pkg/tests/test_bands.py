import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sturmspec import DOUBLE, FrequencySpec, build_band_tree
from sturmspec.bands import (
    Coupling,
    band_for_word,
    estimate_bounds_profile,
    gaps,
    root_bands,
    spectrum_point,
)
from sturmspec.coding import count_words, iter_word_codes
from sturmspec.dosmeasure import periodic_eigenvalues
from sturmspec.errors import PrecisionExhausted


def test_coupling_floor():
    Coupling(24.0)
    with pytest.raises(Exception):
        Coupling(4.0)


def test_root_bands_are_type_I_III():
    rb = root_bands(24.0, DOUBLE)
    assert [b.btype for b in rb] == ["III", "I"]
    assert [b.order for b in rb] == [0, 0]
    # the free-particle window [-2, 2] and the shifted copy [V-2, V+2]
    assert (float(rb[0].lo), float(rb[0].hi)) == (-2.0, 2.0)
    assert (float(rb[1].lo), float(rb[1].hi)) == (22.0, 26.0)
    # sigma(H_1) = {V + 2} lies on the closure of the type-I band
    assert float(rb[1].lo) - 1e-12 <= 26.0 <= float(rb[1].hi) + 1e-12


def test_level_counts(golden_spec, golden_tree):
    for n in range(golden_tree.depth + 1):
        assert len(golden_tree.bands(n)) == count_words(
            golden_spec, n, rooted=True)


def test_levels_sorted_disjoint(golden_tree):
    for n in range(golden_tree.depth + 1):
        lvl = golden_tree.bands(n)
        for a, b in zip(lvl, lvl[1:]):
            assert float(a.hi) <= float(b.lo)


def test_children_nested_in_parent(golden_tree):
    for n in range(golden_tree.depth):
        cm = golden_tree.children_map(n)
        for pw, kids in cm.items():
            p = golden_tree.band(pw)
            for k in kids:
                assert float(k.lo) >= float(p.lo) - 1e-12
                assert float(k.hi) <= float(p.hi) + 1e-12


def test_type_II_III_count_is_continuant(golden_spec, golden_tree):
    for k in range(golden_tree.depth + 1):
        n = sum(1 for b in golden_tree.bands(k) if b.btype in ("II", "III"))
        assert n == golden_spec.q(k)


def test_one_periodic_eigenvalue_per_band(golden_spec, golden_tree):
    for k in range(7):
        evs = periodic_eigenvalues(golden_spec, 24.0, k, DOUBLE)
        counts = []
        for b in golden_tree.bands(k):
            inside = [e for e in evs if float(b.lo) - 1e-9 <= e <= float(b.hi) + 1e-9]
            counts.append(len(inside))
        assert sum(counts) == len(evs)
        assert max(counts) == 1


def test_band_for_word_matches_tree(golden_spec, golden_tree):
    for b in golden_tree.bands(5)[::3]:
        bb = band_for_word(golden_spec, 24.0, b.word, DOUBLE)
        assert abs(float(bb.lo) - float(b.lo)) < 1e-9
        assert abs(float(bb.hi) - float(b.hi)) < 1e-9


def test_spectrum_point_shrinks(golden_spec, golden_tree):
    b8 = golden_tree.bands(8)[0]
    pt = spectrum_point(golden_spec, 24.0, b8.word, 1e-4)
    assert float(pt.width) <= 1e-4
    assert float(b8.lo) - 1e-9 <= float(pt.hi) and float(pt.lo) <= float(b8.hi) + 1e-9


def test_gaps_positive_and_interior(golden_tree):
    for n in range(1, golden_tree.depth):
        gs, mr = gaps(golden_tree, n)
        assert mr > 0
        for g in gs:
            p = golden_tree.band(g.parent_word)
            assert float(p.lo) < float(g.lo) < float(g.hi) < float(p.hi)


def test_gap_count_matches_child_count(golden_tree):
    # a band with c children contains exactly c - 1 interior gaps
    for n in range(1, golden_tree.depth):
        cm = golden_tree.children_map(n)
        gs, _ = gaps(golden_tree, n)
        assert len(gs) == sum(len(k) - 1 for k in cm.values())


def test_bounds_profile_sandwich(golden_tree):
    prof = estimate_bounds_profile(golden_tree)
    assert prof.t1 == pytest.approx((24.0 - 8) / 3)
    assert prof.t2 == pytest.approx(2 * (24.0 + 5))
    # c2 can reach 1: a digit-1 type-I parent passes its band unchanged
    assert 0 < prof.c1 <= prof.c2 <= 1
    assert prof.gap_C > 0
    assert prof.xi >= 1 and prof.eta >= 1


def test_json_roundtrip(golden_tree):
    from sturmspec.bands import BandTree
    doc = golden_tree.to_json_dict()
    t2 = BandTree.from_json_dict(doc)
    assert t2.depth == golden_tree.depth
    for n in range(t2.depth + 1):
        for a, b in zip(golden_tree.bands(n), t2.bands(n)):
            assert a.word == b.word and a.btype == b.btype
            assert float(a.lo) == pytest.approx(float(b.lo), abs=1e-15)


def test_json_version_mismatch(golden_tree):
    from sturmspec.bands import BandTree
    doc = golden_tree.to_json_dict()
    doc["format_version"] = -1
    with pytest.raises(ValueError):
        BandTree.from_json_dict(doc)


def test_deep_double_high_V_refused():
    spec = FrequencySpec((0,), 1)
    with pytest.raises(PrecisionExhausted):
        build_band_tree(spec, 100.0, 15, DOUBLE)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 200))
def test_band_types_follow_word(golden_tree, idx):
    lvl = golden_tree.bands(6)
    b = lvl[idx % len(lvl)]
    w = golden_tree.word_obj(b)
    assert w.letters[-1].band_type == b.btype
    assert len(w) == b.order + 1
