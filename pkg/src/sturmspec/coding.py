"""Alphabets, admissibility, incidence matrices and word enumeration.

The alphabet A_N has 2N+2 letters ordered (I,1) < ... < (I,N+1) < (II,1) <
(III,1) < ... < (III,N).  The order-0 alphabet A_0 = {I, III} has bare
letters.  Rooted words start in A_0 and the letter at position i lives in
A_{a_i}; free words use the constant-tail alphabet A_kappa at every
position and code the subshift of finite type behind all dimension
computations.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

import numpy as np

from .errors import DepthOverflow, InadmissibleWord
from .frequency import FrequencySpec

__all__ = [
    "Letter",
    "Word",
    "PrefixVector",
    "alphabet",
    "letter_from_ordinal",
    "admissible",
    "incidence_matrix",
    "hat_matrix",
    "enumerate_words",
    "count_words",
    "prefix_vectors",
    "minimal_n_alpha",
    "parse_word",
]


@dataclass(frozen=True, order=False)
class Letter:
    band_type: str  # "I", "II" or "III"
    index: int  # 1-based; fixed to 1 for the order-0 alphabet
    alphabet_param: int  # N for A_N; 0 for A_0

    def __post_init__(self):
        N = self.alphabet_param
        t, j = self.band_type, self.index
        if N == 0:
            if t not in ("I", "III") or j != 1:
                raise ValueError("A_0 letters are I and III")
            return
        if t == "I":
            ok = 1 <= j <= N + 1
        elif t == "II":
            ok = j == 1
        elif t == "III":
            ok = 1 <= j <= N
        else:
            ok = False
        if not ok:
            raise ValueError(f"invalid letter ({t},{j}) in A_{N}")

    @property
    def ordinal(self) -> int:
        """1-based position in the total order of its alphabet."""
        N = self.alphabet_param
        if N == 0:
            return 1 if self.band_type == "I" else 2
        if self.band_type == "I":
            return self.index
        if self.band_type == "II":
            return N + 2
        return N + 2 + self.index

    def __str__(self):
        if self.alphabet_param == 0:
            return self.band_type
        return f"({self.band_type},{self.index})"

    def __lt__(self, other):
        return self.ordinal < other.ordinal


def alphabet(N: int):
    """Letters of A_N in their total order (A_0 for N == 0)."""
    if N == 0:
        return [Letter("I", 1, 0), Letter("III", 1, 0)]
    out = [Letter("I", j, N) for j in range(1, N + 2)]
    out.append(Letter("II", 1, N))
    out += [Letter("III", j, N) for j in range(1, N + 1)]
    return out


def letter_from_ordinal(N: int, ordinal: int) -> Letter:
    return alphabet(N)[ordinal - 1]


def admissible(a: Letter, b: Letter) -> bool:
    """Transition relation e -> f between letters of consecutive levels."""
    M = b.alphabet_param
    if M == 0:
        return False  # nothing maps into the order-0 alphabet
    ta, tb, l = a.band_type, b.band_type, b.index
    if ta == "I":
        return tb == "II"
    if ta == "II":
        if tb == "I":
            return 1 <= l <= M + 1
        if tb == "III":
            return 1 <= l <= M
        return False
    # ta == "III"
    if tb == "I":
        return 1 <= l <= M
    if tb == "III":
        return 1 <= l <= M - 1
    return False


def incidence_matrix(N: int, M: int) -> np.ndarray:
    """0/1 incidence matrix A_{NM}; rows letters of A_N, cols of A_M."""
    rows = alphabet(N)
    cols = alphabet(M)
    A = np.zeros((len(rows), len(cols)), dtype=np.int64)
    for i, a in enumerate(rows):
        for j, b in enumerate(cols):
            if admissible(a, b):
                A[i, j] = 1
    return A


def hat_matrix(N: int) -> np.ndarray:
    """Collapsed 3x3 incidence matrix over the types (I, II, III)."""
    return np.array([[0, 1, 0], [N + 1, 0, N], [N, 0, N - 1]], dtype=np.int64)


@dataclass(frozen=True)
class Word:
    letters: tuple
    origin: str = "rooted"  # "rooted" (starts in A_0) or "free" (all in A_kappa)

    def __post_init__(self):
        if self.origin not in ("rooted", "free"):
            raise ValueError("origin must be 'rooted' or 'free'")
        ls = tuple(self.letters)
        object.__setattr__(self, "letters", ls)
        if self.origin == "rooted" and ls and ls[0].alphabet_param != 0:
            raise InadmissibleWord("rooted word must start in A_0")
        for a, b in zip(ls, ls[1:]):
            if not admissible(a, b):
                raise InadmissibleWord(f"{a} -/-> {b}")

    def __len__(self):
        return len(self.letters)

    def __str__(self):
        return ".".join(str(l) for l in self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __getitem__(self, i):
        return self.letters[i]


def parse_word(s: str, alphabet_params) -> Word:
    """Parse "III.(I,2).(II,1)" given the per-position alphabet parameters."""
    parts = s.split(".")
    if len(parts) != len(alphabet_params):
        raise ValueError("alphabet parameter list does not match word length")
    letters = []
    for tok, N in zip(parts, alphabet_params):
        tok = tok.strip()
        if tok.startswith("("):
            t, j = tok.strip("()").split(",")
            letters.append(Letter(t.strip(), int(j), N))
        else:
            letters.append(Letter(tok, 1, N))
    origin = "rooted" if alphabet_params[0] == 0 else "free"
    return Word(tuple(letters), origin)


# --- fast integer-coded enumeration -------------------------------------

def successor_table(N: int, M: int):
    """For each 0-based ordinal of A_N, sorted 0-based successors in A_M."""
    A = incidence_matrix(N, M)
    return [np.nonzero(A[i])[0].tolist() for i in range(A.shape[0])]


def iter_word_codes(spec: FrequencySpec, n: int, rooted: bool):
    """Yield admissible words of length n+1 as tuples of 0-based ordinals.

    Rooted words use the per-position alphabets A_0, A_{a_1}, ...; free
    words use A_kappa throughout.  Output is in lexicographic order.
    """
    params = _alphabet_params(spec, n, rooted)
    succ = [successor_table(params[i], params[i + 1]) for i in range(n)]
    start_count = 2 if rooted else 2 * spec.kappa + 2

    word = [0] * (n + 1)

    def rec(pos):
        if pos == n:
            yield tuple(word)
            return
        for s in succ[pos][word[pos]]:
            word[pos + 1] = s
            yield from rec(pos + 1)

    for first in range(start_count):
        word[0] = first
        yield from rec(0)


def _alphabet_params(spec, n, rooted):
    if rooted:
        return [0] + [spec.digit(i) for i in range(1, n + 1)]
    return [spec.kappa] * (n + 1)


def enumerate_words(spec: FrequencySpec, n: int, rooted: bool):
    """Stream of Word objects of length n+1 in lexicographic order."""
    params = _alphabet_params(spec, n, rooted)
    alphas = [alphabet(N) for N in params]
    origin = "rooted" if rooted else "free"
    for code in iter_word_codes(spec, n, rooted):
        letters = tuple(alphas[i][c] for i, c in enumerate(code))
        yield Word(letters, origin)


def count_words(spec: FrequencySpec, n: int, rooted: bool,
                last_types=("I", "II", "III")) -> int:
    """Number of admissible length-(n+1) words, optionally filtered by the
    type of the last letter, via incidence-matrix products."""
    params = _alphabet_params(spec, n, rooted)
    v = np.ones(2 if rooted else 2 * spec.kappa + 2, dtype=object)
    for i in range(n):
        v = v @ incidence_matrix(params[i], params[i + 1]).astype(object)
    mask = np.array(
        [l.band_type in last_types for l in alphabet(params[-1])], dtype=object
    )
    return int((v * mask).sum())


# --- prefix vectors (dynamical-subset index set) -------------------------

@dataclass(frozen=True)
class PrefixVector:
    """One rooted word of length n_alpha+1 per letter of A_kappa, the i-th
    ending in the i-th letter."""

    words: tuple  # tuple of Word
    n_alpha: int


def minimal_n_alpha(spec: FrequencySpec) -> int:
    """Smallest N >= 4 + n_hat with A_kappa^(N - n_hat) entrywise positive."""
    A = incidence_matrix(spec.kappa, spec.kappa)
    N = 4 + spec.n_hat
    while True:
        P = np.linalg.matrix_power((A > 0).astype(np.int8), N - spec.n_hat)
        if (P > 0).all():
            return N
        N += 1
        if N > spec.n_hat + 64:
            raise RuntimeError("incidence matrix appears imprimitive")


def _rooted_words_by_last_letter(spec, n_alpha, cap):
    total = count_words(spec, n_alpha, rooted=True)
    if total > cap:
        raise DepthOverflow(f"|Omega_{n_alpha}| = {total} exceeds cap {cap}")
    buckets = {}
    for w in enumerate_words(spec, n_alpha, rooted=True):
        buckets.setdefault(w.letters[-1].ordinal, []).append(w)
    return buckets


def prefix_vectors(spec: FrequencySpec, policy="canonical", n_alpha=None,
                   cap=2_000_000, seed=0):
    """Prefix vectors per the chosen policy.

    policy: "canonical" (lexicographic minimum per terminal letter),
    "all" (full product of candidate lists, capped), or ("sample", k).
    Returns a list of PrefixVector.
    """
    if n_alpha is None:
        n_alpha = minimal_n_alpha(spec)
    elif n_alpha < 4 + spec.n_hat:
        raise ValueError("n_alpha must be >= 4 + n_hat")
    terminal = alphabet(spec.kappa)
    buckets = _rooted_words_by_last_letter(spec, n_alpha, cap)
    cands = []
    for l in terminal:
        ws = buckets.get(l.ordinal)
        if not ws:
            raise DepthOverflow(f"no rooted word of length {n_alpha + 1} ends in {l}")
        cands.append(ws)  # already lexicographically sorted by enumeration

    if policy == "canonical":
        return [PrefixVector(tuple(ws[0] for ws in cands), n_alpha)]
    if policy == "all":
        size = 1
        for ws in cands:
            size *= len(ws)
            if size > cap:
                raise DepthOverflow(f"|D(alpha)| exceeds cap {cap}")
        return [
            PrefixVector(tuple(combo), n_alpha)
            for combo in itertools.product(*cands)
        ]
    if isinstance(policy, tuple) and policy[0] == "sample":
        k = policy[1]
        rng = random.Random(seed)
        seen = set()
        out = []
        attempts = 0
        while len(out) < k and attempts < 1000 * k:
            combo = tuple(rng.choice(ws) for ws in cands)
            key = tuple(str(w) for w in combo)
            if key not in seen:
                seen.add(key)
                out.append(PrefixVector(combo, n_alpha))
            attempts += 1
        if len(out) < k:
            raise DepthOverflow("could not sample enough distinct prefix vectors")
        return out
    raise ValueError(f"unknown policy {policy!r}")
