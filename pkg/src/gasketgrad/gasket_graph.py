"""Level-m approximating graphs of SG_N.

Vertices are keyed by integer barycentric coordinates with common denominator
``2**m``; the contraction ``F_j(x) = (x + p_j)/2`` keeps those coordinates
dyadic, so deduplication is exact. Cells are stored in lexicographic word order:
cell ``c`` is the word whose base-N digits (most significant first) spell ``c``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import combinations
from typing import Sequence

import numpy as np

from .measure import MeasureSpec
from .words import Word, check_alphabet

MAX_LEVEL = 12
MAX_CELLS = 2_000_000


class GraphSizeError(ValueError):
    pass


def simplex_vertices(N: int) -> np.ndarray:
    """Regular unit-edge simplex in ``R^(N-1)``, one row per vertex ``p_i``."""
    centered = np.eye(N) - 1.0 / N
    # orthonormal basis of the sum-zero hyperplane
    q, _ = np.linalg.qr(centered[:, : N - 1])
    return centered @ q / math.sqrt(2.0)


def word_digits(N: int, m: int) -> np.ndarray:
    """All words of length m as rows, lexicographic order."""
    idx = np.arange(N**m, dtype=np.int64)
    out = np.empty((N**m, m), dtype=np.int64)
    for t in range(m - 1, -1, -1):
        out[:, t] = idx % N
        idx //= N
    return out


def encode_bary(bary: np.ndarray, N: int, m: int) -> np.ndarray:
    """Mixed-radix integer key of barycentric numerators (the last one is implied)."""
    radix = (1 << m) + 1
    bary = np.asarray(bary, dtype=np.int64)
    key = np.zeros(bary.shape[:-1], dtype=np.int64)
    for k in range(N - 1):
        key = key * radix + bary[..., k]
    return key


@dataclass(frozen=True, eq=False)
class GasketGraph:
    N: int
    m: int
    bary: np.ndarray = field(repr=False)  # (V, N) integer numerators over 2**m
    keys: np.ndarray = field(repr=False)  # sorted encoding of bary, position = vertex id
    cells: np.ndarray = field(repr=False)  # (N**m, N): ids of F_w(p_0), ..., F_w(p_{N-1})

    @property
    def num_vertices(self) -> int:
        return len(self.bary)

    @property
    def scale(self) -> int:
        return 1 << self.m

    @cached_property
    def edges(self) -> np.ndarray:
        """Unordered pairs ``x ~_m y``, each listed once with the smaller id first."""
        pairs = [np.sort(self.cells[:, [a, b]], axis=1) for a, b in combinations(range(self.N), 2)]
        return np.concatenate(pairs, axis=0)

    @cached_property
    def boundary_ids(self) -> np.ndarray:
        return self.lookup(self.scale * np.eye(self.N, dtype=np.int64))

    @cached_property
    def boundary(self) -> np.ndarray:
        flags = np.zeros(self.num_vertices, dtype=bool)
        flags[self.boundary_ids] = True
        return flags

    @cached_property
    def interior_ids(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)

    @cached_property
    def coords(self) -> np.ndarray:
        return (self.bary / self.scale) @ simplex_vertices(self.N)

    def lookup(self, bary: np.ndarray) -> np.ndarray:
        """Vertex ids for rows of integer barycentric coordinates (denominator ``2**m``)."""
        key = encode_bary(bary, self.N, self.m)
        pos = np.searchsorted(self.keys, key)
        pos = np.clip(pos, 0, len(self.keys) - 1)
        if not np.all(self.keys[pos] == key):
            raise KeyError("point is not a vertex of this graph")
        return pos

    def cell_vertex_ids(self, word) -> np.ndarray:
        """Ids of ``F_w(p_0), ..., F_w(p_{N-1})`` for a word of length at most m."""
        letters = word.letters if isinstance(word, Word) else tuple(word)
        n = len(letters)
        if n > self.m:
            raise GraphSizeError(f"cell of level {n} is finer than the graph level {self.m}")
        base = np.zeros(self.N, dtype=np.int64)
        for t, c in enumerate(letters, start=1):
            base[c] += 1 << (self.m - t)
        pts = base[None, :] + (1 << (self.m - n)) * np.eye(self.N, dtype=np.int64)
        return self.lookup(pts)

    def compose_ids(self, i: int, coarse: "GasketGraph") -> np.ndarray:
        """For each vertex x of the level-(m-1) graph, the id of ``F_i(x)`` here."""
        if coarse.m != self.m - 1 or coarse.N != self.N:
            raise GraphSizeError("compose_ids needs the graph one level coarser")
        shift = np.zeros(self.N, dtype=np.int64)
        shift[i] = coarse.scale
        return self.lookup(coarse.bary + shift)

    def embed_ids(self, coarse: "GasketGraph") -> np.ndarray:
        """Ids here of the vertices of a coarser graph (``V_k`` is a subset of ``V_m``)."""
        if coarse.m > self.m:
            raise GraphSizeError("embed_ids needs a coarser graph")
        return self.lookup(coarse.bary << (self.m - coarse.m))

    def cells_containing(self) -> np.ndarray:
        return np.bincount(self.cells.ravel(), minlength=self.num_vertices)


@lru_cache(maxsize=16)
def build_graph(N: int, m: int) -> GasketGraph:
    check_alphabet(N)
    if not 0 <= m <= MAX_LEVEL:
        raise GraphSizeError(f"level m={m} outside 0..{MAX_LEVEL}")
    if N**m > MAX_CELLS:
        raise GraphSizeError(f"{N}**{m} cells exceed the limit of {MAX_CELLS}")
    scale = 1 << m
    digits = word_digits(N, m)
    base = np.zeros((N**m, N), dtype=np.int64)
    rows = np.arange(N**m)
    for t in range(m):
        np.add.at(base, (rows, digits[:, t]), 1 << (m - 1 - t))
    if (N - 1) * math.log2(scale + 1) >= 62:
        raise GraphSizeError("vertex keys would overflow 64 bits")
    flat = (base[:, None, :] + np.eye(N, dtype=np.int64)[None]).reshape(-1, N)
    keys, first, inverse = np.unique(encode_bary(flat, N, m), return_index=True, return_inverse=True)
    cells = inverse.reshape(N**m, N)
    return GasketGraph(N, m, flat[first], keys, cells)


def graph_energy(g: GasketGraph, u: np.ndarray, v: np.ndarray | None = None) -> float:
    """``((N+2)/N)^m * sum over x ~_m y of (u(x)-u(y))(v(x)-v(y))``."""
    u = np.asarray(u, dtype=float)
    v = u if v is None else np.asarray(v, dtype=float)
    if u.shape[0] != g.num_vertices or v.shape[0] != g.num_vertices:
        raise ValueError(f"expected values on all {g.num_vertices} vertices")
    a, b = g.edges[:, 0], g.edges[:, 1]
    return ((g.N + 2) / g.N) ** g.m * float(np.sum((u[a] - u[b]) * (v[a] - v[b])))


def mass_lumping(g: GasketGraph, spec: MeasureSpec) -> np.ndarray:
    """Vertex weights: each cell hands ``1/N`` of its measure to each of its vertices."""
    if spec.N != g.N:
        raise ValueError("measure and graph have different alphabets")
    cell_mass = spec.cell_measures(g.m) / g.N
    return np.bincount(g.cells.ravel(), weights=np.repeat(cell_mass, g.N), minlength=g.num_vertices)


@dataclass
class SelfSimilarityReport:
    fine: float
    coarse_sum: float
    deviation: float
    ok: bool


def energy_selfsimilarity_check(g: GasketGraph, u: np.ndarray, tol: float = 1e-10) -> SelfSimilarityReport:
    """Compare ``E_m(u)`` with ``((N+2)/N) * sum_i E_{m-1}(u o F_i)``."""
    if g.m < 1:
        raise GraphSizeError("self-similarity needs m >= 1")
    u = np.asarray(u, dtype=float)
    coarse = build_graph(g.N, g.m - 1)
    fine = graph_energy(g, u)
    parts = sum(graph_energy(coarse, u[g.compose_ids(i, coarse)]) for i in range(g.N))
    coarse_sum = (g.N + 2) / g.N * parts
    dev = abs(fine - coarse_sum)
    return SelfSimilarityReport(fine, coarse_sum, dev, dev <= tol * max(1.0, abs(fine)))


def graph_json(g: GasketGraph) -> dict:
    digits = word_digits(g.N, g.m)
    return {
        "N": g.N,
        "m": g.m,
        "vertices": [
            {
                "id": int(i),
                "barycentric": [str(Fraction(int(x), g.scale)) for x in g.bary[i]],
                "boundary": bool(g.boundary[i]),
            }
            for i in range(g.num_vertices)
        ],
        "cells": [
            {"word": "".join(map(str, digits[c])), "vertices": [int(x) for x in g.cells[c]]}
            for c in range(len(g.cells))
        ],
        "edges": g.edges.tolist(),
    }


def values_to_csv(values: Sequence[float]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["vertex_id", "value"])
    for i, x in enumerate(values):
        writer.writerow([i, format(float(x), ".15g")])
    return buf.getvalue()


def values_from_csv(text: str, num_vertices: int) -> np.ndarray:
    out = np.full(num_vertices, np.nan)
    for row in csv.DictReader(io.StringIO(text)):
        out[int(row["vertex_id"])] = float(row["value"])
    if np.isnan(out).any():
        raise ValueError("CSV does not give a value on every vertex")
    return out
