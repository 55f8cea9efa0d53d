"""Harmonic gradients along addresses and the sufficient criteria for their existence.

``nabla_n f(w) = inv(A~_{[w]_n}) P(f on the cell [w]_n)``: the secant of ``f``
on the level-n cell, transported back to boundary scale. All verdicts drawn
from finitely many levels are labelled as evidence; none is a proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .gasket_graph import GasketGraph
from .harmonic_algebra import (
    ConsistencyError,
    ExtensionFamily,
    beta,
    build_family,
    energy_norm,
    extension_product_exact,
    frac_matvec,
    inverse_product,
    inverse_product_exact,
    prefix_norms,
    project,
)
from .measure import WEIGHT_SUM_TOL, MeasureError, MeasureSpec
from .words import Word, block_counts, truncate

SG3_DIAGONAL_LIMIT = 1.0 / 9.0
SG3_OFF_DIAGONAL_LIMIT = 1.0 / math.sqrt(17.0 + 4.0 * math.sqrt(13.0))
# a fitted ratio must clear 1 by more than rounding noise to count as decay
RATIO_MARGIN = 1e-6
# values equal to 1 in exact arithmetic may round either way; strict "< 1" must not pass them
BOUNDARY_TOL = 1e-12


def project_cell(values: Sequence) -> np.ndarray:
    """Quotient coordinates of the harmonic function with these values on ``V_0``."""
    return project(values)


def cell_values(g: GasketGraph, f: np.ndarray, word) -> np.ndarray:
    return np.asarray(f, dtype=float)[g.cell_vertex_ids(word)]


def harmonic_cell_values(fam: ExtensionFamily, boundary: Sequence, word) -> tuple[Fraction, ...]:
    """Exact values of a harmonic function on ``F_w(V_0)``, from float or rational boundary data."""
    b = [Fraction(x) for x in boundary]
    return frac_matvec(extension_product_exact(fam, word), b)


def nabla_from_cell(fam: ExtensionFamily, word, values: Sequence) -> np.ndarray:
    """``inv(A~_w)`` applied to the projected cell values.

    Rational input is handled exactly and only rounded at the end.
    """
    if len(values) and isinstance(values[0], Fraction):
        return _exact_gradient(inverse_product_exact(fam, word), values)
    return inverse_product(fam, word) @ project_cell(values)


def _exact_gradient(inv, values) -> np.ndarray:
    q = [values[k] - values[-1] for k in range(len(values) - 1)]
    return np.array([float(x) for x in frac_matvec(inv, q)])


def harmonic_gradients_exact(fam: ExtensionFamily, word, boundaries) -> np.ndarray:
    """``nabla`` on the cell ``word`` for many harmonic functions, in rational arithmetic.

    Row ``j`` is the gradient of the harmonic function with boundary values
    ``boundaries[j]``; the word matrices are formed once.
    """
    ext = extension_product_exact(fam, word)
    inv = inverse_product_exact(fam, word)
    rows = [_exact_gradient(inv, frac_matvec(ext, [Fraction(x) for x in b])) for b in boundaries]
    return np.array(rows).reshape(-1, fam.N - 1)


def nabla_n(fam: ExtensionFamily, g: GasketGraph, f: np.ndarray, omega, n: int) -> np.ndarray:
    """n-level harmonic approximation of ``f`` (given on V_m) at the address ``omega``."""
    if n > g.m:
        raise ValueError(f"level n={n} exceeds graph level m={g.m}")
    prefix = truncate(omega, n)
    return nabla_from_cell(fam, prefix, cell_values(g, f, prefix))


def summability_terms(fam: ExtensionFamily, spec: MeasureSpec, letters: Sequence[int]) -> np.ndarray:
    """``r_{[w]_k} mu_{[w]_k} ||inv(A~_{[w]_k})||_E`` for ``k = 1..len(letters)``."""
    if spec.N != fam.N:
        raise ValueError("measure and family have different alphabets")
    norms = prefix_norms(fam, letters)
    terms = np.array([
        spec.cell_resistance(k) * spec.cell_measure(letters[:k]) * norms[k - 1]
        for k in range(1, len(letters) + 1)
    ])
    return terms


@dataclass
class GradientTrace:
    word: Word
    levels: np.ndarray
    gradients: np.ndarray  # (levels, N-1) quotient coordinates
    norms: np.ndarray
    increments: np.ndarray  # ||nabla_{n+1} - nabla_n||_E, aligned with levels[:-1]
    partial_sums: np.ndarray

    @property
    def estimate(self) -> np.ndarray:
        return self.gradients[-1]

    @property
    def error_proxy(self) -> float:
        return float(self.increments[-1]) if len(self.increments) else float("nan")


def _enorm_vec(fam: ExtensionFamily, x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(x)
    return np.sqrt(np.einsum("ni,ij,nj->n", x, fam.gram, x))


def gradient_trace(
    fam: ExtensionFamily,
    g: GasketGraph,
    f: np.ndarray,
    omega,
    spec: MeasureSpec,
    n_max: int | None = None,
) -> GradientTrace:
    n_max = g.m if n_max is None else n_max
    prefix = truncate(omega, n_max)
    levels = np.arange(1, n_max + 1)
    grads = np.array([nabla_n(fam, g, f, prefix, n) for n in levels]).reshape(n_max, fam.N - 1)
    terms = summability_terms(fam, spec, prefix.letters)
    return GradientTrace(
        word=prefix,
        levels=levels,
        gradients=grads,
        norms=_enorm_vec(fam, grads) if n_max else np.zeros(0),
        increments=_enorm_vec(fam, np.diff(grads, axis=0)) if n_max > 1 else np.zeros(0),
        partial_sums=np.cumsum(terms),
    )


def fit_geometric_ratio(values: Sequence[float]) -> float:
    """Least-squares ratio ``q`` in ``values[k] ~ c q^k``; ``values`` must be positive."""
    v = np.asarray(values, dtype=float)
    if len(v) < 2 or np.any(v <= 0):
        return float("nan")
    slope = np.polyfit(np.arange(len(v)), np.log(v), 1)[0]
    return float(math.exp(slope))


@dataclass
class SummabilityReport:
    word: Word
    terms: np.ndarray
    partial_sums: np.ndarray
    fitted_ratio: float
    verdict: str


def criterion_thm1(omega, spec: MeasureSpec, fam: ExtensionFamily, n_max: int) -> SummabilityReport:
    """Partial sums of ``r mu ||inv(A~)||`` along ``omega``; decay over the last half is evidence of summability."""
    prefix = truncate(omega, n_max)
    terms = summability_terms(fam, spec, prefix.letters)
    ratio = fit_geometric_ratio(terms[n_max // 2:])
    verdict = "summable-evidence" if ratio < 1.0 - RATIO_MARGIN else "inconclusive"
    return SummabilityReport(prefix, terms, np.cumsum(terms), ratio, verdict)


@dataclass
class UniformBoundReport:
    blocks: list[Word]
    values: np.ndarray
    max_value: float
    verdict: str


def criterion_cor51(spec: MeasureSpec, fam: ExtensionFamily) -> UniformBoundReport:
    """``r_w mu_w ||inv(A~_w)||_E < 1`` for every length-``block_len`` block ``w``."""
    if spec.N != fam.N:
        raise ValueError("measure and family have different alphabets")
    blocks = [Word(b, spec.N) for b in spec.blocks()]
    norms = np.array([energy_norm(fam, inverse_product(fam, b)) for b in blocks])
    values = spec.resistance_factor * np.asarray(spec.weights) * norms
    vmax = float(values.max())
    return UniformBoundReport(blocks, values, vmax, "PASS" if vmax < 1.0 - BOUNDARY_TOL else "FAIL")


@dataclass
class SG3MeasureReport:
    weights: np.ndarray  # 3x3, row i column j is mu_ij
    diagonal_limit: float
    off_diagonal_limit: float
    verdict: str
    uniform_bound: UniformBoundReport = field(repr=False)


def check_sg3_measure(weights: Sequence[float] | MeasureSpec, fam: ExtensionFamily | None = None) -> SG3MeasureReport:
    """Threshold test for a level-2 measure on SG_3: ``mu_ii < 1/9`` and ``mu_ij < 1/sqrt(17+4 sqrt 13)``."""
    if isinstance(weights, MeasureSpec):
        if weights.N != 3 or weights.block_len != 2:
            raise MeasureError("SG_3 measure check needs a level-2 measure on three letters")
        w = np.asarray(weights.weights, dtype=float)
    else:
        w = np.asarray(weights, dtype=float).ravel()
    if w.shape != (9,):
        raise MeasureError(f"expected 9 weights, got {w.size}")
    if np.any(w <= 0) or abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
        raise MeasureError("weights must be positive and sum to 1")
    W = w.reshape(3, 3)
    diag_ok = np.all(np.diag(W) < SG3_DIAGONAL_LIMIT)
    off = W[~np.eye(3, dtype=bool)]
    off_ok = np.all(off < SG3_OFF_DIAGONAL_LIMIT)
    verdict = "PASS" if diag_ok and off_ok else "FAIL"
    fam = fam or build_family(3)
    uniform = criterion_cor51(MeasureSpec(3, 2, tuple(w.tolist())), fam)
    if verdict == "PASS" and uniform.verdict != "PASS":
        raise ConsistencyError("threshold test passed but the uniform norm bound failed")
    return SG3MeasureReport(W, SG3_DIAGONAL_LIMIT, SG3_OFF_DIAGONAL_LIMIT, verdict, uniform)


@dataclass
class DensityReport:
    word: Word
    levels: np.ndarray  # 2..n_max
    counts: np.ndarray
    ratios: np.ndarray
    threshold: float
    threshold_rho: float
    liminf_estimate: float
    verdict: str


def criterion_thm2(omega, fam: ExtensionFamily, n_max: int, beta_report=None) -> DensityReport:
    """Compare ``C_N(w,n)/log n`` with ``1/|log beta_N|`` (norm variant).

    The liminf is estimated by the minimum ratio over the last half of levels.
    """
    if n_max < 4:
        raise ValueError("need at least 4 levels for a density estimate")
    prefix = truncate(omega, n_max)
    rep = beta_report or beta(fam)
    counts = block_counts(prefix.array(), fam.N, n_max)
    levels = np.arange(2, n_max + 1)
    ratios = counts[1:] / np.log(levels)
    threshold = 1.0 / abs(math.log(rep.beta_norm))
    tail = ratios[len(ratios) // 2:]
    liminf = float(tail.min())
    verdict = "PASS-evidence" if liminf > threshold else "inconclusive"
    return DensityReport(
        prefix, levels, counts[1:], ratios, threshold, 1.0 / abs(math.log(rep.beta_rho)), liminf, verdict
    )
