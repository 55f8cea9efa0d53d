"""Harmonic extension matrices of SG_N and their action modulo constants.

Quotient basis: ``f_k = 1_{p_k} mod constants`` for ``k = 0..N-2``. Boundary
values ``v`` project to ``(v_0 - v_{N-1}, ..., v_{N-2} - v_{N-1})``.

Word products follow the cell-restriction convention
``A_w = A_{w_m} ... A_{w_1}``, which maps boundary values of ``h`` to the
values of ``h`` on ``F_w(V_0)``; hence ``inv(A~_w) = inv(A~_{w_1}) ... inv(A~_{w_m})``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np
import sympy

from .words import Word, block_counts, check_alphabet, enumerate_blocks

EXACT_TOL = 1e-10
NORM_TOL = 1e-9
BOUND_SLACK = 1e-9
EXHAUSTIVE_BETA_MAX_N = 8


class ConsistencyError(RuntimeError):
    """An identity that must hold exactly was violated numerically."""


FracMatrix = tuple[tuple[Fraction, ...], ...]


def _to_frac(M: sympy.Matrix) -> FracMatrix:
    return tuple(
        tuple(Fraction(int(M[i, j].p), int(M[i, j].q)) for j in range(M.cols))
        for i in range(M.rows)
    )


def _to_float(M: FracMatrix) -> np.ndarray:
    return np.array([[float(x) for x in row] for row in M])


def frac_matmul(A: FracMatrix, B: FracMatrix) -> FracMatrix:
    cols = list(zip(*B))
    return tuple(tuple(sum((a * b for a, b in zip(row, col)), Fraction(0)) for col in cols) for row in A)


def frac_matvec(A: FracMatrix, v: Sequence[Fraction]) -> tuple[Fraction, ...]:
    return tuple(sum((a * x for a, x in zip(row, v)), Fraction(0)) for row in A)


def _frac_identity(n: int) -> FracMatrix:
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


def first_extension_matrix(N: int) -> sympy.Matrix:
    """``A_0 = (1/(N+2)) [[N+2, 0], [2, I + J]]``."""
    A = sympy.zeros(N, N)
    A[0, 0] = N + 2
    for a in range(1, N):
        A[a, 0] = 2
        for b in range(1, N):
            A[a, b] = 2 if a == b else 1
    return A / (N + 2)


def cyclic_conjugate(A0: sympy.Matrix, i: int) -> sympy.Matrix:
    N = A0.rows
    A = sympy.zeros(N, N)
    for a in range(N):
        for b in range(N):
            A[(a + i) % N, (b + i) % N] = A0[a, b]
    return A


def quotient_maps(N: int) -> tuple[sympy.Matrix, sympy.Matrix]:
    """``(Q, L)``: projection ``R^N -> R^(N-1)`` and the lift ``c -> (c, 0)``."""
    Q = sympy.zeros(N - 1, N)
    L = sympy.zeros(N, N - 1)
    for k in range(N - 1):
        Q[k, k] = 1
        Q[k, N - 1] = -1
        L[k, k] = 1
    return Q, L


@dataclass(frozen=True)
class ExtensionFamily:
    N: int
    full: tuple[FracMatrix, ...]
    reduced: tuple[FracMatrix, ...]
    reduced_inv: tuple[FracMatrix, ...]
    gram: np.ndarray = field(repr=False)

    @cached_property
    def full_f(self) -> np.ndarray:
        return np.stack([_to_float(A) for A in self.full])

    @cached_property
    def reduced_f(self) -> np.ndarray:
        return np.stack([_to_float(A) for A in self.reduced])

    @cached_property
    def inv_f(self) -> np.ndarray:
        return np.stack([_to_float(A) for A in self.reduced_inv])

    @cached_property
    def chol(self) -> np.ndarray:
        try:
            return np.linalg.cholesky(self.gram)
        except np.linalg.LinAlgError as exc:
            raise ConsistencyError("energy Gram matrix is not positive definite") from exc

    @cached_property
    def chol_inv_t(self) -> np.ndarray:
        return np.linalg.inv(self.chol.T)

    @property
    def dim(self) -> int:
        return self.N - 1


def build_family(N: int) -> ExtensionFamily:
    check_alphabet(N)
    A0 = first_extension_matrix(N)
    Q, L = quotient_maps(N)
    full, reduced, reduced_inv = [], [], []
    for i in range(N):
        A = cyclic_conjugate(A0, i)
        R = Q * A * L
        full.append(_to_frac(A))
        reduced.append(_to_frac(R))
        reduced_inv.append(_to_frac(R.inv()))
    # level-0 energy on indicator functions: the complete-graph Laplacian N*I - J
    gram = N * np.eye(N - 1) - np.ones((N - 1, N - 1))
    return ExtensionFamily(N, tuple(full), tuple(reduced), tuple(reduced_inv), gram)


def project(values: Sequence) -> np.ndarray:
    """Quotient coordinates of boundary data: ``v_k - v_{N-1}``."""
    v = np.asarray(values, dtype=float)
    return v[..., :-1] - v[..., -1:]


def energy_inner(fam: ExtensionFamily, x: np.ndarray, y: np.ndarray) -> float:
    return float(np.asarray(x) @ fam.gram @ np.asarray(y))


def energy_norm(fam: ExtensionFamily, M: np.ndarray) -> float | np.ndarray:
    """Operator norm of ``M`` on the quotient space with the energy inner product.

    Equal to ``sqrt(lambda_max(G^-1 M^T G M))``; evaluated through the Cholesky
    factor ``G = C C^T`` as the largest singular value of ``C^T M C^-T``.
    Accepts a stack of matrices on the leading axes.
    """
    M = np.asarray(M, dtype=float)
    if M.shape[-2:] != (fam.dim, fam.dim):
        raise ValueError(f"expected {(fam.dim, fam.dim)} matrices, got shape {M.shape}")
    X = fam.chol.T @ M @ fam.chol_inv_t
    top = np.linalg.eigvalsh(np.swapaxes(X, -1, -2) @ X)[..., -1]
    out = np.sqrt(np.clip(top, 0.0, None))
    return float(out) if out.ndim == 0 else out


def spectral_radius(M: np.ndarray) -> float | np.ndarray:
    out = np.max(np.abs(np.linalg.eigvals(np.asarray(M, dtype=float))), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class WordMatrix:
    word: Word
    matrix: np.ndarray
    energy_norm: float
    spectral_radius: float


def _letters(w) -> tuple[int, ...]:
    return w.letters if isinstance(w, Word) else tuple(int(c) for c in w)


def inverse_product(fam: ExtensionFamily, w) -> np.ndarray:
    """``inv(A~_w) = inv(A~_{w_1}) ... inv(A~_{w_m})`` in floating point."""
    M = np.eye(fam.dim)
    for c in _letters(w):
        M = M @ fam.inv_f[c]
    return M


def inverse_product_exact(fam: ExtensionFamily, w) -> FracMatrix:
    M = _frac_identity(fam.dim)
    for c in _letters(w):
        M = frac_matmul(M, fam.reduced_inv[c])
    return M


def extension_product_exact(fam: ExtensionFamily, w) -> FracMatrix:
    """Full ``A_w = A_{w_m} ... A_{w_1}`` (boundary values to values on ``F_w(V_0)``)."""
    M = _frac_identity(fam.N)
    for c in _letters(w):
        M = frac_matmul(fam.full[c], M)
    return M


def word_matrix(fam: ExtensionFamily, w, exact: bool = False) -> WordMatrix:
    if not isinstance(w, Word):
        w = Word(tuple(w), fam.N)
    M = _to_float(inverse_product_exact(fam, w)) if exact else inverse_product(fam, w)
    return WordMatrix(w, M, energy_norm(fam, M), spectral_radius(M))


def prefix_norms(fam: ExtensionFamily, letters: Sequence[int]) -> np.ndarray:
    """Energy norms of ``inv(A~_{[w]_n})`` for ``n = 1..len(letters)``."""
    M = np.eye(fam.dim)
    mats = []
    for c in letters:
        M = M @ fam.inv_f[c]
        mats.append(M)
    if not mats:
        return np.zeros(0)
    return np.atleast_1d(energy_norm(fam, np.stack(mats)))


# ---------------------------------------------------------------------------
# eigenstructure


@dataclass
class EigenReport:
    N: int
    full_spectrum: list[float]
    inverse_spectrum: list[float]
    max_deviation: float
    self_adjoint_deviation: float
    ok: bool


def _spectrum_deviation(M: np.ndarray, expected: list[tuple[float, int]]) -> float:
    got = np.sort(np.linalg.eigvals(M).real)
    want = np.sort(np.concatenate([[v] * k for v, k in expected]))
    dev = float(np.max(np.abs(got - want)))
    dev = max(dev, float(np.max(np.abs(np.linalg.eigvals(M).imag))))
    # geometric multiplicities: dim ker(M - v I) must equal the algebraic count
    n = M.shape[0]
    for v, k in expected:
        s = np.linalg.svd(M - v * np.eye(n), compute_uv=False)
        kernel = int(np.sum(s < 1e-8 * max(1.0, abs(v))))
        if kernel != k:
            dev = max(dev, float("inf"))
    return dev


def eigencheck(fam: ExtensionFamily, tol: float = EXACT_TOL) -> EigenReport:
    """Check the spectra of every ``A_i`` and every ``inv(A~_i)`` with multiplicities."""
    N = fam.N
    full_expected = [(1.0, 1), (N / (N + 2), 1), (1.0 / (N + 2), N - 2)]
    inv_expected = [((N + 2) / N, 1), (float(N + 2), N - 2)]
    dev = 0.0
    sa_dev = 0.0
    Ginv = np.linalg.inv(fam.gram)
    for i in range(N):
        dev = max(dev, _spectrum_deviation(fam.full_f[i], full_expected))
        dev = max(dev, _spectrum_deviation(fam.inv_f[i], inv_expected))
        adj = Ginv @ fam.inv_f[i].T @ fam.gram
        sa_dev = max(sa_dev, float(np.max(np.abs(adj - fam.inv_f[i]))))
    ok = dev <= tol and sa_dev <= tol
    report = EigenReport(
        N,
        [v for v, k in full_expected for _ in range(k)],
        [v for v, k in inv_expected for _ in range(k)],
        dev,
        sa_dev,
        ok,
    )
    if not ok:
        raise ConsistencyError(f"eigenstructure deviates by {max(dev, sa_dev):.3g} for N={N}")
    return report


# ---------------------------------------------------------------------------
# beta_N


@dataclass
class BetaReport:
    N: int
    beta_norm: float
    beta_rho: float
    argmax_norm: list[Word]
    argmax_rho: list[Word]
    exhaustive: bool
    block_norms: np.ndarray = field(repr=False)


def block_products(fam: ExtensionFamily, blocks: Sequence[Word]) -> np.ndarray:
    idx = np.array([b.letters for b in blocks], dtype=np.int64)
    M = fam.inv_f[idx[:, 0]]
    for t in range(1, idx.shape[1]):
        M = M @ fam.inv_f[idx[:, t]]
    return M


def beta(fam: ExtensionFamily, exhaustive: bool | None = None, chunk: int = 50_000) -> BetaReport:
    """Per-letter contraction over (N-1)-blocks, in norm and spectral-radius form.

    ``beta_norm = max_w (||inv(A~_w)||_E / (N+2)^(N-1))^(1/(N-1))`` and
    ``beta_rho`` is the same with the spectral radius. Every (N-1)-block is the
    image of ``01...(N-2)`` under a letter permutation, and permutations act by
    energy isometries, so a single block already attains both maxima; the
    exhaustive sweep (default for ``N <= 8``) confirms that instead of assuming it.
    """
    N = fam.N
    if exhaustive is None:
        exhaustive = N <= EXHAUSTIVE_BETA_MAX_N
    blocks = enumerate_blocks(N) if exhaustive else [Word(tuple(range(N - 1)), N)]
    norms, rhos = [], []
    for start in range(0, len(blocks), chunk):
        M = block_products(fam, blocks[start:start + chunk])
        norms.append(np.atleast_1d(energy_norm(fam, M)))
        rhos.append(np.atleast_1d(spectral_radius(M)))
    norms = np.concatenate(norms)
    rhos = np.concatenate(rhos)
    scale = float(N + 2) ** (N - 1)
    k = N - 1
    nmax, rmax = float(norms.max()), float(rhos.max())
    report = BetaReport(
        N=N,
        beta_norm=(nmax / scale) ** (1.0 / k),
        beta_rho=(rmax / scale) ** (1.0 / k),
        argmax_norm=[b for b, v in zip(blocks, norms) if v >= nmax * (1 - 1e-12)],
        argmax_rho=[b for b, v in zip(blocks, rhos) if v >= rmax * (1 - 1e-12)],
        exhaustive=exhaustive,
        block_norms=norms,
    )
    if not report.beta_rho <= report.beta_norm * (1 + 1e-12):
        raise ConsistencyError("spectral-radius beta exceeds norm beta")
    if report.beta_norm >= 1.0:
        raise ConsistencyError(f"beta_norm={report.beta_norm} is not below 1 for N={N}")
    return report


# ---------------------------------------------------------------------------
# product bound


@dataclass
class BoundReport:
    word: Word
    n: int
    norms: np.ndarray
    bounds: np.ndarray
    counts: np.ndarray
    max_ratio: float
    ok: bool


def product_bound_check(
    fam: ExtensionFamily,
    w,
    n: int,
    beta_norm: float | None = None,
    raise_on_failure: bool = True,
) -> BoundReport:
    """Check ``||inv(A~_{[w]_k})||_E <= (N+2)^k beta^{C_N(w,k)}`` for every ``k <= n``."""
    from .words import truncate

    prefix = truncate(w, n)
    if beta_norm is None:
        beta_norm = beta(fam).beta_norm
    N = fam.N
    norms = prefix_norms(fam, prefix.letters)
    counts = block_counts(prefix.array(), N, n)
    levels = np.arange(1, n + 1)
    bounds = float(N + 2) ** levels * beta_norm ** counts
    ratios = norms / bounds if n else np.zeros(0)
    max_ratio = float(ratios.max()) if n else 0.0
    report = BoundReport(prefix, n, norms, bounds, counts, max_ratio, max_ratio <= 1 + BOUND_SLACK)
    if raise_on_failure and not report.ok:
        raise ConsistencyError(f"product bound violated for {prefix}: ratio {max_ratio}")
    return report


def common_top_eigenvector_gap(fam: ExtensionFamily) -> float:
    """Smallest ``1 - ||inv(A~_w)||_E / (N+2)^(N-1)`` over all (N-1)-blocks.

    Strictly positive exactly when no vector is a top eigenvector for every letter of a block.
    """
    rep = beta(fam)
    return 1.0 - float(rep.block_norms.max()) / float(fam.N + 2) ** (fam.N - 1)


def matrix_json(M: FracMatrix) -> dict:
    return {
        "fraction": [[str(x) for x in row] for row in M],
        "decimal": [[format(float(x), ".15g") for x in row] for row in M],
    }


def family_json(fam: ExtensionFamily) -> dict:
    return {
        "N": fam.N,
        "full": [matrix_json(A) for A in fam.full],
        "reduced": [matrix_json(A) for A in fam.reduced],
        "reduced_inverse": [matrix_json(A) for A in fam.reduced_inv],
        "gram": [[format(float(x), ".15g") for x in row] for row in fam.gram],
        "quotient_basis": [f"1_p{k} mod constants" for k in range(fam.N - 1)],
    }
