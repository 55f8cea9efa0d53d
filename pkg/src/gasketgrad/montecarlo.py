"""Monte Carlo checks of the block statistics behind almost-everywhere differentiability.

Only the standard (uniform) Bernoulli measure is sampled here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .harmonic_algebra import beta, build_family
from .words import block_counts, block_flags, check_alphabet

CHUNK = 200_000


def block_lower_probability(N: int) -> float:
    """``N! N^-N``: chance that N uniform letters are all distinct."""
    return math.factorial(N) / N**N


def window_block_probability(N: int) -> float:
    """``N! / N^(N-1)``: chance that N-1 uniform letters are all distinct."""
    return math.factorial(N) / N ** (N - 1)


def binomial_ci(successes: int, trials: int, z: float = 3.0) -> tuple[float, float, float]:
    p = successes / trials
    sigma = math.sqrt(p * (1 - p) / trials)
    return p, max(0.0, p - z * sigma), min(1.0, p + z * sigma)


@dataclass
class BlockProbability:
    N: int
    samples: int
    estimate: float
    ci_low: float
    ci_high: float
    lower_value: float  # N! N^-N, used by the disjoint-trial bound
    window_value: float  # exact probability for a length N-1 window


def block_probability(N: int, samples: int, seed: int) -> BlockProbability:
    """Fraction of uniform length-(N-1) windows that are (N-1)-blocks, with a 3 sigma interval."""
    check_alphabet(N)
    if samples < 10_000:
        raise ValueError("block_probability needs at least 10^4 samples")
    rng = np.random.default_rng(seed)
    hits = 0
    for start in range(0, samples, CHUNK):
        size = min(CHUNK, samples - start)
        windows = rng.integers(0, N, size=(size, N - 1))
        hits += int(block_flags(windows, N).sum())
    p, lo, hi = binomial_ci(hits, samples)
    return BlockProbability(N, samples, p, lo, hi, block_lower_probability(N), window_block_probability(N))


def _beta_norm(N: int, beta_norm: float | None) -> float:
    return beta(build_family(N)).beta_norm if beta_norm is None else beta_norm


@dataclass
class TrialBound:
    N: int
    n: int
    k: int
    l: float
    kp: float
    bound: float | None  # None when k p_N <= l


def disjoint_trial_bound(N: int, n: int, beta_norm: float | None = None) -> TrialBound:
    """Chernoff estimate for ``C_N(w, n) < log n / |log beta_N|`` via disjoint windows.

    ``k = floor(n/(N-1)) - 2`` disjoint windows, each a block with probability at
    least ``N! N^-N``; the bound ``exp(-(k p - l)^2 / (2 k p))`` is only valid
    when ``k p > l``.
    """
    check_alphabet(N)
    if n < 3 * (N - 1):
        raise ValueError(f"need n >= {3 * (N - 1)} for at least one disjoint window")
    b = _beta_norm(N, beta_norm)
    k = n // (N - 1) - 2
    l = math.log(n) / abs(math.log(b))
    kp = k * block_lower_probability(N)
    bound = math.exp(-((kp - l) ** 2) / (2 * kp)) if kp > l else None
    return TrialBound(N, n, k, l, kp, bound)


@dataclass
class FailureRow:
    n: int
    fraction: float
    ci_low: float
    ci_high: float
    threshold: float
    chernoff_bound: float | None


def failure_fraction(
    N: int,
    lengths: Sequence[int],
    samples: int,
    seed: int,
    beta_norm: float | None = None,
) -> list[FailureRow]:
    """For each n, the fraction of uniform words with ``C_N(w, n) < log n / |log beta_N|``.

    Each length gets an independent stream spawned from ``seed``.
    """
    check_alphabet(N)
    lengths = [int(n) for n in lengths]
    if any(b <= a for a, b in zip(lengths, lengths[1:])):
        raise ValueError("lengths must be strictly increasing")
    b = _beta_norm(N, beta_norm)
    streams = np.random.SeedSequence(seed).spawn(len(lengths))
    rows = []
    for n, ss in zip(lengths, streams):
        rng = np.random.default_rng(ss)
        threshold = math.log(n) / abs(math.log(b))
        fails = 0
        per_chunk = max(1, CHUNK // max(n, 1))
        for start in range(0, samples, per_chunk):
            size = min(per_chunk, samples - start)
            letters = rng.integers(0, N, size=(size, n), dtype=np.int8)
            fails += int(np.sum(block_counts(letters, N, n)[:, -1] < threshold))
        p, lo, hi = binomial_ci(fails, samples)
        bound = disjoint_trial_bound(N, n, b).bound if n >= 3 * (N - 1) else None
        rows.append(FailureRow(n, p, lo, hi, threshold, bound))
    return rows
