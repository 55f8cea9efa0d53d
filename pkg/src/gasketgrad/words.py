"""Finite and infinite words over ``S_N = {0, ..., N-1}``.

Letters are stored 0-based; in docstrings the word ``w`` reads ``w_1 w_2 ... w_m``.
Infinite words are never materialized, only their prefixes ``[w]_n``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .measure import MeasureSpec

MIN_N = 3
MAX_N = 10


class WordError(ValueError):
    pass


def check_alphabet(N: int) -> None:
    if not MIN_N <= N <= MAX_N:
        raise WordError(f"alphabet size N={N} outside supported range {MIN_N}..{MAX_N}")


@dataclass(frozen=True)
class Word:
    letters: tuple[int, ...]
    alphabet_size: int

    def __post_init__(self):
        check_alphabet(self.alphabet_size)
        object.__setattr__(self, "letters", tuple(int(c) for c in self.letters))
        bad = [c for c in self.letters if not 0 <= c < self.alphabet_size]
        if bad:
            raise WordError(f"letters {bad} not in S_{self.alphabet_size}")

    @classmethod
    def parse(cls, text: str, N: int) -> "Word":
        return cls(tuple(int(c) for c in text), N)

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        return "".join(map(str, self.letters))

    def prefix(self, n: int) -> "Word":
        return truncate(self, n)

    def array(self) -> np.ndarray:
        return np.asarray(self.letters, dtype=np.int64)


class PeriodicWord:
    """The infinite word ``(period)^inf``."""

    def __init__(self, period: Sequence[int], N: int):
        self.period = Word(tuple(period), N).letters
        if not self.period:
            raise WordError("period must be nonempty")
        self.alphabet_size = N

    def prefix(self, n: int) -> Word:
        reps = -(-n // len(self.period))
        return Word((self.period * reps)[:n], self.alphabet_size)

    def __repr__(self) -> str:
        return f"PeriodicWord({''.join(map(str, self.period))!r}, N={self.alphabet_size})"


class RandomWord:
    """I.i.d. block stream drawn from a Bernoulli measure.

    Prefixes are consistent: ``prefix(n)`` is always the first ``n`` letters
    of ``prefix(n')`` for ``n' > n``.
    """

    def __init__(self, spec: MeasureSpec, seed: int):
        self.spec = spec
        self.seed = int(seed)
        self.alphabet_size = spec.N

    def prefix(self, n: int) -> Word:
        return sample_word(self.spec, n, self.seed)

    def __repr__(self) -> str:
        return f"RandomWord(seed={self.seed}, measure={self.spec.name})"


def parse_word_spec(text: str, N: int, spec: MeasureSpec | None = None):
    """Parse ``per:012``, ``w:00121`` or ``rand:<seed>``.

    Explicit words are finite; the other two forms are infinite.
    """
    kind, _, body = text.partition(":")
    if not body:
        raise WordError(f"word spec must look like 'per:012', 'w:0121' or 'rand:7', got {text!r}")
    if kind == "per":
        return PeriodicWord([int(c) for c in body], N)
    if kind == "w":
        return Word.parse(body, N)
    if kind == "rand":
        return RandomWord(spec or MeasureSpec.standard(N), int(body))
    raise WordError(f"unknown word spec kind {kind!r}")


def truncate(w, n: int) -> Word:
    """Return ``[w]_n = w_1 ... w_n``."""
    if n < 0:
        raise WordError(f"negative truncation length {n}")
    if isinstance(w, Word):
        if n > len(w):
            raise WordError(f"cannot truncate word of length {len(w)} to {n}")
        return Word(w.letters[:n], w.alphabet_size)
    return w.prefix(n)


def is_block(w: Word | Sequence[int]) -> bool:
    letters = w.letters if isinstance(w, Word) else tuple(w)
    if not letters:
        raise WordError("is_block needs a nonempty word")
    return len(set(letters)) == len(letters)


def block_flags(letters: np.ndarray, N: int) -> np.ndarray:
    """Flag every length-(N-1) sliding window of ``letters`` that is an (N-1)-block.

    Works on the last axis, so a ``(samples, n)`` array gives ``(samples, n-N+2)``.
    """
    k = N - 1
    letters = np.asarray(letters)
    if letters.shape[-1] < k:
        return np.zeros(letters.shape[:-1] + (0,), dtype=bool)
    windows = np.sort(sliding_window_view(letters, k, axis=-1), axis=-1)
    return np.all(np.diff(windows, axis=-1) != 0, axis=-1)


@dataclass(frozen=True)
class BlockReport:
    n: int
    count: np.ndarray  # count[m-1] = C_N(w, m)
    density_ratio: np.ndarray  # C_N(w, m) / log m, NaN at m = 1

    def at(self, m: int) -> int:
        return int(self.count[m - 1])


def block_counts(letters: np.ndarray, N: int, n: int) -> np.ndarray:
    """``C_N(w, m)`` for ``m = 1..n`` along the last axis (overlapping windows)."""
    letters = np.asarray(letters)[..., :n]
    flags = block_flags(letters, N).astype(np.int64)
    cum = np.concatenate([np.zeros(flags.shape[:-1] + (1,), dtype=np.int64),
                          np.cumsum(flags, axis=-1)], axis=-1)
    # windows starting at 1-based i <= m-(N-2) are those fully inside [w]_m
    starts = np.clip(np.arange(1, n + 1) - (N - 2), 0, None)
    return cum[..., starts]


def count_blocks(w, n: int) -> BlockReport:
    """Block counting function ``C_N(w, m)`` for every level ``m <= n``."""
    prefix = truncate(w, n)
    N = prefix.alphabet_size
    counts = block_counts(prefix.array(), N, n)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = counts / np.log(np.arange(1, n + 1))
    if n >= 1:
        ratio[0] = np.nan
    return BlockReport(n=n, count=counts, density_ratio=ratio)


def enumerate_blocks(N: int) -> list[Word]:
    """All (N-1)-blocks over ``S_N`` in lexicographic order; there are ``N!`` of them."""
    check_alphabet(N)
    return [Word(p, N) for p in itertools.permutations(range(N), N - 1)]


def sample_word(spec: MeasureSpec, length: int, seed: int) -> Word:
    """Draw ``length`` letters as i.i.d. blocks from ``spec``; deterministic in ``seed``."""
    if length < 0:
        raise WordError("length must be non-negative")
    letters = sample_letters(spec, (length,), np.random.default_rng(seed))
    return Word(tuple(letters.tolist()), spec.N)


def sample_letters(spec: MeasureSpec, shape: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
    """Array of letters whose last axis is a concatenation of i.i.d. blocks from ``spec``."""
    *lead, length = shape
    ell = spec.block_len
    nblocks = -(-length // ell)
    cdf = np.cumsum(spec.weights)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(tuple(lead) + (nblocks,)), side="right")
    if ell == 1:
        letters = idx
    else:
        letters = np.stack([idx // spec.N, idx % spec.N], axis=-1).reshape(tuple(lead) + (nblocks * ell,))
    return letters[..., :length].astype(np.int64)


def words_from(strings: Iterable[str], N: int) -> list[Word]:
    return [Word.parse(s, N) for s in strings]
