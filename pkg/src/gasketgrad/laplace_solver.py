"""Harmonic extension and the discrete Dirichlet problem for the mu-Laplacian.

The weak form ``E(u, v) = -int f v dmu`` is discretized on V_m with the
level-m graph energy and mass-lumped vertex weights, so for ``f = 0`` the
solution coincides with matrix harmonic extension.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .gasket_graph import GasketGraph, mass_lumping
from .harmonic_algebra import ConsistencyError, ExtensionFamily
from .measure import MeasureSpec


def harmonic_extend(fam: ExtensionFamily, boundary, g: GasketGraph) -> np.ndarray:
    """Values on V_m of the harmonic function with the given values at ``p_0..p_{N-1}``.

    Cell ``w`` receives ``A_{w_m} ... A_{w_1} boundary``.
    """
    boundary = np.asarray(boundary, dtype=float)
    if boundary.shape != (fam.N,) or fam.N != g.N:
        raise ValueError(f"need {g.N} boundary values for SG_{g.N}")
    vals = boundary[None, :]
    for _ in range(g.m):
        vals = np.einsum("wk,ijk->wij", vals, fam.full_f).reshape(-1, fam.N)
    u = np.empty(g.num_vertices)
    u[g.cells] = vals
    return u


def stiffness_matrix(g: GasketGraph) -> sp.csr_matrix:
    """Sparse matrix ``K`` with ``E_m(u, v) = v^T K u``."""
    a, b = g.edges[:, 0], g.edges[:, 1]
    n = g.num_vertices
    ones = np.ones(len(a))
    adj = sp.coo_matrix((ones, (a, b)), shape=(n, n))
    adj = (adj + adj.T).tocsr()
    lap = sp.diags(np.asarray(adj.sum(axis=1)).ravel()) - adj
    return (((g.N + 2) / g.N) ** g.m * lap).tocsr()


@dataclass(eq=False)
class DirichletProblem:
    graph: GasketGraph
    spec: MeasureSpec
    rhs: np.ndarray
    boundary: np.ndarray = field(default=None)

    def __post_init__(self):
        self.rhs = np.asarray(self.rhs, dtype=float)
        if self.boundary is None:
            self.boundary = np.zeros(self.graph.N)
        self.boundary = np.asarray(self.boundary, dtype=float)
        if self.rhs.shape != (self.graph.num_vertices,) or not np.all(np.isfinite(self.rhs)):
            raise ValueError("rhs must be finite on every vertex of V_m")
        if self.boundary.shape != (self.graph.N,):
            raise ValueError(f"boundary needs exactly {self.graph.N} values")
        if self.spec.N != self.graph.N:
            raise ValueError("measure and graph have different alphabets")

    @cached_property
    def stiffness(self) -> sp.csr_matrix:
        return stiffness_matrix(self.graph)

    @cached_property
    def mass(self) -> np.ndarray:
        return mass_lumping(self.graph, self.spec)


def solve_dirichlet(p: DirichletProblem) -> np.ndarray:
    """Solve ``E_m(u, v) = -sum_x f(x) v(x) mu_m(x)`` for all interior-supported ``v``."""
    g = p.graph
    K = p.stiffness
    interior, bdry = g.interior_ids, g.boundary_ids
    u = np.zeros(g.num_vertices)
    u[bdry] = p.boundary
    if len(interior):
        K_ii = K[interior][:, interior].tocsc()
        K_ib = K[interior][:, bdry]
        load = -p.mass[interior] * p.rhs[interior] - K_ib @ p.boundary
        try:
            u[interior] = spla.splu(K_ii).solve(load)
        except RuntimeError as exc:
            raise ConsistencyError("interior stiffness matrix is singular") from exc
        if not np.all(np.isfinite(u)):
            raise ConsistencyError("non-finite Dirichlet solution")
    return u


def laplacian_residual(u: np.ndarray, p: DirichletProblem) -> float:
    """``max_x |E_m(u, psi_x) + f(x) mu_m(x)|`` over interior hat functions ``psi_x``."""
    r = p.stiffness @ np.asarray(u, dtype=float) + p.mass * p.rhs
    interior = p.graph.interior_ids
    return float(np.max(np.abs(r[interior]))) if len(interior) else 0.0


def rhs_preset(text: str, g: GasketGraph) -> np.ndarray:
    """``f:const:<c>`` or ``f:coord:<k>`` (k-th Euclidean coordinate of the simplex embedding)."""
    parts = text.split(":")
    if len(parts) != 3 or parts[0] != "f":
        raise ValueError(f"rhs preset must be 'f:const:<c>' or 'f:coord:<k>', got {text!r}")
    kind, arg = parts[1], parts[2]
    if kind == "const":
        return np.full(g.num_vertices, float(arg))
    if kind == "coord":
        k = int(arg)
        if not 0 <= k < g.N - 1:
            raise ValueError(f"coordinate index {k} outside 0..{g.N - 2}")
        return g.coords[:, k].copy()
    raise ValueError(f"unknown rhs preset kind {kind!r}")
