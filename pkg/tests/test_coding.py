import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sturmspec.coding import (
    admissible,
    alphabet,
    count_words,
    enumerate_words,
    hat_matrix,
    incidence_matrix,
    letter_from_ordinal,
    minimal_n_alpha,
    parse_word,
    prefix_vectors,
    successor_table,
)
from sturmspec.frequency import FrequencySpec


def test_alphabet_size_and_order():
    for N in (1, 2, 5):
        ls = list(alphabet(N))
        assert len(ls) == 2 * N + 2
        types = [l.band_type for l in ls]
        assert types == ["I"] * (N + 1) + ["II"] + ["III"] * N
        assert [l.ordinal for l in ls] == list(range(1, 2 * N + 3))


def test_letter_roundtrip():
    for N in (1, 3):
        for l in alphabet(N):
            assert letter_from_ordinal(N, l.ordinal) == l


def test_hat_matrix_values():
    for N in (1, 2, 4):
        A = hat_matrix(N)
        assert A.tolist() == [[0, 1, 0], [N + 1, 0, N], [N, 0, N - 1]]


def test_incidence_consistent_with_admissibility():
    N = 2
    A = incidence_matrix(N, N)
    ls = list(alphabet(N))
    for i, a in enumerate(ls):
        for j, b in enumerate(ls):
            assert A[i, j] == (1 if admissible(a, b) else 0)


def test_row_sums_collapse_to_hat_matrix():
    # summing incidence columns by target type must reproduce hat_matrix
    for N in (1, 3):
        A = incidence_matrix(N, N)
        ls = list(alphabet(N))
        tidx = {"I": 0, "II": 1, "III": 2}
        H = np.zeros((3, 3), dtype=int)
        for t in ("I", "II", "III"):
            i = next(k for k, l in enumerate(ls) if l.band_type == t)
            for j, l in enumerate(ls):
                H[tidx[t], tidx[l.band_type]] += A[i, j]
        assert (H == hat_matrix(N)).all()


def test_enumeration_matches_count():
    spec = FrequencySpec((0,), 1)
    for n in range(7):
        ws = list(enumerate_words(spec, n, rooted=True))
        assert len(ws) == count_words(spec, n, rooted=True)
        assert len(set(str(w) for w in ws)) == len(ws)


def test_golden_counts_are_fibonacci_like():
    spec = FrequencySpec((0,), 1)
    counts = [count_words(spec, n, rooted=True) for n in range(9)]
    assert counts[0] == 2
    for n in range(2, 9):
        assert counts[n] == counts[n - 1] + counts[n - 2]
    # the II/III words at order k are in bijection with Z/q_k
    for k in range(9):
        assert count_words(spec, k, rooted=True,
                           last_types=("II", "III")) == spec.q(k)


def test_parse_word_roundtrip():
    spec = FrequencySpec((0,), 1)
    for w in enumerate_words(spec, 4, rooted=True):
        w2 = parse_word(str(w), [l.alphabet_param for l in w.letters])
        assert str(w2) == str(w)


def test_minimal_n_alpha():
    assert minimal_n_alpha(FrequencySpec((0,), 1)) == 5
    assert minimal_n_alpha(FrequencySpec((0,), 3)) == 4


def test_prefix_vector_shape():
    spec = FrequencySpec((0,), 1)
    pv = prefix_vectors(spec)[0]
    letters = list(alphabet(1))
    assert len(pv.words) == len(letters)
    for w, l in zip(pv.words, letters):
        assert w.letters[-1] == l


def test_prefix_vector_sampling_is_seeded():
    spec = FrequencySpec((0,), 1)
    a = prefix_vectors(spec, policy=("sample", 2), seed=7)
    b = prefix_vectors(spec, policy=("sample", 2), seed=7)
    assert [str(w) for pv in a for w in pv.words] == \
        [str(w) for pv in b for w in pv.words]


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(2, 7), st.data())
def test_random_walks_stay_admissible(N, steps, data):
    succ = successor_table(N, N)
    ls = list(alphabet(N))
    cur = data.draw(st.integers(0, len(ls) - 1))
    for _ in range(steps):
        assert succ[cur], f"letter {ls[cur]} has no successor"
        nxt = data.draw(st.sampled_from(succ[cur]))
        assert admissible(ls[cur], ls[nxt])
        cur = nxt


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 6))
def test_counts_by_last_type_partition(n):
    spec = FrequencySpec((0,), 1)
    total = count_words(spec, n, rooted=True)
    parts = sum(
        count_words(spec, n, rooted=True, last_types=(t,))
        for t in ("I", "II", "III")
    )
    assert parts == total
