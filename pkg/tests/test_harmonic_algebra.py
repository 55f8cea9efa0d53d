import math
from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from gasketgrad.harmonic_algebra import (
    ConsistencyError,
    beta,
    build_family,
    common_top_eigenvector_gap,
    eigencheck,
    energy_norm,
    family_json,
    inverse_product,
    product_bound_check,
    spectral_radius,
    word_matrix,
)
from gasketgrad.measure import MeasureSpec
from gasketgrad.words import PeriodicWord, Word, WordError, enumerate_blocks, sample_word

SQ = math.sqrt(17 + 4 * math.sqrt(13))


def norm_oracle(fam, M):
    """sqrt of the top generalized eigenvalue of (M^T G M, G)."""
    vals = scipy.linalg.eigh(M.T @ fam.gram @ M, fam.gram, eigvals_only=True)
    return math.sqrt(vals[-1])


def level1_minimizer(N, boundary):
    """Values on V_1 minimizing the level-1 energy, by a dense solve of the graph Laplacian.

    V_1 vertices are indexed as p_0..p_{N-1} followed by midpoints m_{jk}, j < k.
    """
    mids = [(j, k) for j in range(N) for k in range(j + 1, N)]
    index = {("p", j): j for j in range(N)}
    index.update({("m", jk): N + t for t, jk in enumerate(mids)})
    cells = []
    for i in range(N):
        cells.append([index[("p", i)] if a == i else index[("m", tuple(sorted((i, a))))] for a in range(N)])
    V = N + len(mids)
    L = np.zeros((V, V))
    for cell in cells:
        for a in range(N):
            for b in range(a + 1, N):
                x, y = cell[a], cell[b]
                L[x, x] += 1
                L[y, y] += 1
                L[x, y] -= 1
                L[y, x] -= 1
    u = np.zeros(V)
    u[:N] = boundary
    inner = np.arange(N, V)
    u[inner] = np.linalg.solve(L[np.ix_(inner, inner)], -L[np.ix_(inner, np.arange(N))] @ boundary)
    return u, cells


def test_a0_for_sg3():
    fam = build_family(3)
    F = Fraction
    assert fam.full[0] == (
        (F(1), F(0), F(0)),
        (F(2, 5), F(2, 5), F(1, 5)),
        (F(2, 5), F(1, 5), F(2, 5)),
    )


@pytest.mark.parametrize("N", [3, 4, 5, 6])
def test_matrices_are_level1_harmonic_extension(N):
    fam = build_family(N)
    rng = np.random.default_rng(N)
    for _ in range(5):
        b = rng.normal(size=N)
        u, cells = level1_minimizer(N, b)
        for i in range(N):
            np.testing.assert_allclose(fam.full_f[i] @ b, u[cells[i]], atol=1e-12)


@pytest.mark.parametrize("N", range(3, 11))
def test_row_sums_exact(N):
    fam = build_family(N)
    for A in fam.full:
        assert all(sum(row) == 1 for row in A)


def test_gram_sg3_by_pair_sum():
    def energy0(u, v):
        return sum((u[j] - u[k]) * (v[j] - v[k]) for j in range(3) for k in range(j + 1, 3))

    basis = [np.array([1.0, 0, 0]), np.array([0, 1.0, 0])]
    G = np.array([[energy0(a, b) for b in basis] for a in basis])
    np.testing.assert_array_equal(G, [[2, -1], [-1, 2]])
    np.testing.assert_array_equal(build_family(3).gram, G)


@pytest.mark.parametrize("N", [3, 4, 5])
def test_spectra_exact_sympy(N):
    fam = build_family(N)
    for i in range(N):
        A = sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in row] for row in fam.full[i]])
        assert A.eigenvals() == {1: 1, sympy.Rational(N, N + 2): 1, sympy.Rational(1, N + 2): N - 2}
        Ri = sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in row] for row in fam.reduced_inv[i]])
        assert Ri.eigenvals() == {sympy.Rational(N + 2, N): 1, N + 2: N - 2}


def test_eigencheck_sg3_and_sg6():
    rep = eigencheck(build_family(3))
    assert rep.full_spectrum == pytest.approx([1, 3 / 5, 1 / 5])
    assert rep.inverse_spectrum == pytest.approx([5 / 3, 5])
    rep6 = eigencheck(build_family(6))
    assert rep6.full_spectrum.count(1 / 8) == 4


def test_eigencheck_detects_corruption():
    fam = build_family(4)
    fam.full_f  # populate cache, then corrupt it
    fam.__dict__["full_f"] = fam.full_f + 1e-6
    with pytest.raises(ConsistencyError):
        eigencheck(fam)


@pytest.mark.parametrize("N", range(3, 9))
def test_single_letter_norm_and_self_adjoint(N):
    fam = build_family(N)
    Ginv = np.linalg.inv(fam.gram)
    for i in range(N):
        assert energy_norm(fam, fam.inv_f[i]) == pytest.approx(N + 2, abs=1e-10)
        np.testing.assert_allclose(Ginv @ fam.inv_f[i].T @ fam.gram, fam.inv_f[i], atol=1e-10)


def test_eigenspaces_orthogonal_in_energy():
    fam = build_family(5)
    for i in range(5):
        vals, vecs = np.linalg.eig(fam.inv_f[i])
        top = vecs[:, np.isclose(vals.real, 7)].real
        low = vecs[:, np.isclose(vals.real, 7 / 5)].real
        np.testing.assert_allclose(top.T @ fam.gram @ low, 0, atol=1e-10)


def test_word_matrix_examples(fam3):
    empty = word_matrix(fam3, Word((), 3))
    np.testing.assert_array_equal(empty.matrix, np.eye(2))
    assert empty.energy_norm == pytest.approx(1.0)
    for i in range(3):
        assert word_matrix(fam3, (i, i)).energy_norm == pytest.approx(25, abs=1e-9)
        for j in range(3):
            if i != j:
                assert word_matrix(fam3, (i, j)).energy_norm == pytest.approx(25 / 9 * SQ, abs=1e-9)


def test_word_matrix_exact_matches_float(fam4):
    w = Word((0, 1, 3, 3, 2, 1, 0), 4)
    np.testing.assert_allclose(word_matrix(fam4, w, exact=True).matrix, word_matrix(fam4, w).matrix, rtol=1e-12)


def test_energy_norm_matches_oracle(fam4):
    rng = np.random.default_rng(0)
    for _ in range(30):
        M = rng.normal(size=(3, 3))
        assert energy_norm(fam4, M) == pytest.approx(norm_oracle(fam4, M), rel=1e-10)
    assert energy_norm(fam4, np.eye(3)) == pytest.approx(1.0)


def test_energy_norm_rayleigh_sweep(fam3):
    """Brute-force Rayleigh quotient over the circle for the mixed two-letter product."""
    M = inverse_product(fam3, (0, 1))
    t = np.linspace(0, np.pi, 200001)
    x = np.stack([np.cos(t), np.sin(t)])
    num = np.einsum("in,ij,jn->n", M @ x, fam3.gram, M @ x)
    den = np.einsum("in,ij,jn->n", x, fam3.gram, x)
    assert math.sqrt((num / den).max()) == pytest.approx(25 / 9 * SQ, rel=1e-8)


def test_energy_norm_shape_check(fam3):
    with pytest.raises(ValueError):
        energy_norm(fam3, np.eye(3))


def beta3_norm_oracle(fam):
    """Exhaustive max over two-blocks with a closed-form 2x2 symmetric eigenvalue."""
    w, V = np.linalg.eigh(fam.gram)
    root = V @ np.diag(np.sqrt(w)) @ V.T
    root_inv = V @ np.diag(1 / np.sqrt(w)) @ V.T
    best = 0.0
    for a, b in [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]:
        X = root @ fam.inv_f[a] @ fam.inv_f[b] @ root_inv
        S = X.T @ X
        tr, det = S[0, 0] + S[1, 1], S[0, 0] * S[1, 1] - S[0, 1] * S[1, 0]
        lam = (tr + math.sqrt(tr * tr - 4 * det)) / 2
        best = max(best, math.sqrt(lam))
    return math.sqrt(best / 25)


def test_beta_sg3(fam3):
    rep = beta(fam3)
    assert rep.beta_rho == pytest.approx(math.sqrt((7 + math.sqrt(13)) / 18), abs=1e-12)
    assert rep.beta_norm == pytest.approx(beta3_norm_oracle(fam3), abs=1e-12)
    assert rep.beta_norm == pytest.approx((17 + 4 * math.sqrt(13)) ** 0.25 / 3, abs=1e-12)


@pytest.mark.parametrize("N", range(3, 9))
def test_beta_ordering(N):
    rep = beta(build_family(N))
    assert rep.beta_rho <= rep.beta_norm < 1


@pytest.mark.parametrize("N", [3, 4, 5, 6])
def test_all_blocks_share_norm(N):
    rep = beta(build_family(N))
    np.testing.assert_allclose(rep.block_norms, rep.block_norms[0], rtol=1e-10)
    assert len(rep.argmax_norm) == math.factorial(N)


@pytest.mark.parametrize("N", [9, 10])
def test_beta_representative_for_large_n(N):
    rep = beta(build_family(N))
    assert not rep.exhaustive
    assert rep.beta_rho <= rep.beta_norm < 1


@pytest.mark.parametrize("N", range(3, 9))
def test_no_common_top_eigenvector(N):
    assert common_top_eigenvector_gap(build_family(N)) > 1e-3


def test_product_bound_constant_word(fam3):
    rep = product_bound_check(fam3, Word((0,) * 5, 3), 5)
    assert rep.norms[-1] == pytest.approx(5**5, rel=1e-12)
    assert rep.max_ratio == pytest.approx(1.0, abs=1e-12)


def test_product_bound_cyclic_word(fam3):
    rep = product_bound_check(fam3, PeriodicWord([0, 1, 2], 3), 3)
    b = beta(fam3).beta_norm
    assert rep.bounds[-1] == pytest.approx(125 * b**2)
    assert rep.bounds[-1] == pytest.approx(77.86, abs=0.01)
    assert rep.norms[-1] <= rep.bounds[-1]


def test_product_bound_random_n4(fam4):
    b = beta(fam4).beta_norm
    spec = MeasureSpec.standard(4)
    for seed in range(100):
        assert product_bound_check(fam4, sample_word(spec, 12, seed), 12, b).ok


def test_product_bound_detects_bad_beta(fam3):
    with pytest.raises(ConsistencyError):
        product_bound_check(fam3, PeriodicWord([0, 1, 2], 3), 12, beta_norm=0.5)


def test_product_bound_needs_letters(fam3):
    with pytest.raises(WordError):
        product_bound_check(fam3, Word((0, 1), 3), 3)


@given(
    st.lists(st.integers(0, 3), max_size=8),
    st.lists(st.integers(0, 3), max_size=8),
)
@settings(max_examples=200, deadline=None)
def test_submultiplicative(u, v):
    fam = build_family(4)
    uv = energy_norm(fam, inverse_product(fam, u + v))
    assert uv <= energy_norm(fam, inverse_product(fam, u)) * energy_norm(fam, inverse_product(fam, v)) * (1 + 1e-12)


@given(st.lists(st.integers(0, 2), min_size=1, max_size=10))
@settings(max_examples=100, deadline=None)
def test_norm_dominates_spectral_radius(w):
    fam = build_family(3)
    M = inverse_product(fam, w)
    assert energy_norm(fam, M) >= spectral_radius(M) * (1 - 1e-12)


def test_family_json():
    doc = family_json(build_family(3))
    assert doc["full"][0]["fraction"] == [["1", "0", "0"], ["2/5", "2/5", "1/5"], ["2/5", "1/5", "2/5"]]
    assert doc["full"][0]["decimal"][1] == ["0.4", "0.4", "0.2"]
    assert len(doc["reduced_inverse"]) == 3


def test_enumerate_and_beta_agree():
    fam = build_family(4)
    assert len(beta(fam).block_norms) == len(enumerate_blocks(4))
