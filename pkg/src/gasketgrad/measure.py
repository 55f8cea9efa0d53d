"""Self-similar Bernoulli measures on SG_N, indexed by letter blocks of length 1 or 2."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

WEIGHT_SUM_TOL = 1e-12


class MeasureError(ValueError):
    """Raised for weights that do not form a valid Bernoulli measure."""


def _block_key(key) -> tuple[int, ...]:
    if isinstance(key, str):
        return tuple(int(c) for c in key.strip())
    return tuple(int(c) for c in key)


@dataclass(frozen=True)
class MeasureSpec:
    """Bernoulli weights over the length-``block_len`` words of ``S_N``.

    ``weights`` is stored as a tuple ordered lexicographically by block, so
    ``weights[k]`` belongs to the block whose base-N digits spell ``k``.
    """

    N: int
    block_len: int
    weights: tuple[float, ...]
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        if not 3 <= self.N <= 10:
            raise MeasureError(f"alphabet size N={self.N} outside supported range 3..10")
        if self.block_len not in (1, 2):
            raise MeasureError(f"block_len must be 1 or 2, got {self.block_len}")
        expected = self.N ** self.block_len
        if len(self.weights) != expected:
            raise MeasureError(f"expected {expected} weights, got {len(self.weights)}")
        w = np.asarray(self.weights, dtype=float)
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise MeasureError("weights must be strictly positive")
        if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise MeasureError(f"weights sum to {w.sum()!r}, not 1")

    @classmethod
    def standard(cls, N: int) -> "MeasureSpec":
        return cls(N, 1, tuple([1.0 / N] * N), name="standard")

    @classmethod
    def two_level(cls, N: int, diagonal: float, off_diagonal: float) -> "MeasureSpec":
        """Level-2 measure with weight ``diagonal`` on blocks ``ii`` and ``off_diagonal`` elsewhere."""
        w = [diagonal if i == j else off_diagonal for i in range(N) for j in range(N)]
        return cls(N, 2, tuple(w), name="two-level")

    @classmethod
    def from_mapping(cls, N: int, mapping: Mapping) -> "MeasureSpec":
        blocks = {_block_key(k): float(v) for k, v in mapping.items()}
        lengths = {len(k) for k in blocks}
        if len(lengths) != 1:
            raise MeasureError("all weight keys must have the same length")
        ell = lengths.pop()
        order = list(itertools.product(range(N), repeat=ell))
        missing = [b for b in order if b not in blocks]
        extra = [b for b in blocks if b not in set(order)]
        if missing or extra:
            raise MeasureError(f"weight keys do not cover S_{N}^{ell} exactly")
        return cls(N, ell, tuple(blocks[b] for b in order))

    @property
    def resistance_factor(self) -> float:
        """Energy renormalization ``r`` for one block step, ``(N/(N+2))**block_len``."""
        return (self.N / (self.N + 2)) ** self.block_len

    def blocks(self) -> list[tuple[int, ...]]:
        return list(itertools.product(range(self.N), repeat=self.block_len))

    def weight_of(self, block: Sequence[int]) -> float:
        idx = 0
        for c in block:
            idx = idx * self.N + int(c)
        return self.weights[idx]

    def as_mapping(self) -> dict[str, float]:
        return {"".join(map(str, b)): w for b, w in zip(self.blocks(), self.weights)}

    def letter_marginals(self) -> np.ndarray:
        """Weight of the first letter of a block, i.e. the measure of the level-1 cells."""
        w = np.asarray(self.weights).reshape((self.N,) * self.block_len)
        return w if self.block_len == 1 else w.sum(axis=1)

    def cell_measure(self, word: Sequence[int]) -> float:
        """Measure of the cell ``F_w(SG_N)``.

        A trailing partial block contributes the total weight of its completions.
        """
        word = list(word)
        ell = self.block_len
        full, rest = divmod(len(word), ell)
        mass = 1.0
        for b in range(full):
            mass *= self.weight_of(word[b * ell:(b + 1) * ell])
        if rest:
            w = np.asarray(self.weights).reshape((self.N,) * ell)
            mass *= float(w[tuple(word[full * ell:])].sum())
        return mass

    def cell_resistance(self, length: int) -> float:
        """Resistance scaling ``r_w`` of any cell of the given word length."""
        return (self.N / (self.N + 2)) ** length

    def cell_measures(self, m: int) -> np.ndarray:
        """Measures of all ``N**m`` level-m cells in lexicographic word order."""
        if m % self.block_len:
            raise MeasureError(f"level {m} is not a multiple of block length {self.block_len}")
        base = np.asarray(self.weights, dtype=float)
        out = np.ones(1)
        for _ in range(m // self.block_len):
            out = np.kron(out, base)
        return out


def parse_weights(text: str, N: int) -> MeasureSpec:
    """Parse a preset name or a JSON map of block -> weight.

    Presets: ``standard`` (level 1, uniform), ``uniform`` (level 2, uniform),
    ``uneven`` (level 2 on SG_3, diagonal 0.10 and off-diagonal 0.7/6).
    """
    text = text.strip()
    if text == "standard":
        return MeasureSpec.standard(N)
    if text == "uniform":
        return MeasureSpec(N, 2, tuple([1.0 / N**2] * N**2), name="uniform")
    if text == "uneven":
        if N != 3:
            raise MeasureError("the 'uneven' preset is defined on SG_3 only")
        spec = MeasureSpec.two_level(3, 0.10, 0.7 / 6)
        return MeasureSpec(spec.N, spec.block_len, spec.weights, name="uneven")
    try:
        mapping = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MeasureError(f"weights are neither a preset nor JSON: {text!r}") from exc
    if isinstance(mapping, list):
        ell = round(math.log(len(mapping), N)) if len(mapping) > 1 else 1
        return MeasureSpec(N, ell, tuple(float(x) for x in mapping))
    if not isinstance(mapping, dict):
        raise MeasureError("weights JSON must be an object or an array")
    return MeasureSpec.from_mapping(N, mapping)
