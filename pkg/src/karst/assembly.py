"""Assembly of the coupled matrix/conduit system.

The bilinear form is

    a_h(u, v) = sum_K int_K K grad u . grad v + int D u_c' v_c'
                + alpha int (u_m(x,0) - u_c)(v_m(x,0) - v_c) dx
                [+ sum_E h_E / h_min,E^2 int_E [u][v]]

with the matrix trace on y=0 taken as the average of the two one-sided
traces, and the load is ``(f_m, v_m) + (f_c, v_c)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.io
import scipy.sparse as sp

from .elements.dofmap import FeSpace
from .quadrature import gauss_interval, quadrature


class AssemblyError(ValueError):
    pass


def _zero_m(x, y):
    return np.zeros(np.broadcast(x, y).shape)


def _zero_c(x):
    return np.zeros(np.shape(x))


@dataclass(frozen=True)
class ProblemData:
    """Coefficients and sources; homogeneous Dirichlet data throughout."""

    K: float = 1.0
    D: float = 1.0
    alpha: float = 0.0
    f_m: Callable = field(default=_zero_m, compare=False)
    f_c: Callable = field(default=_zero_c, compare=False)
    smooth_data: bool = True

    def __post_init__(self):
        if not self.K > 0:
            raise AssemblyError(f"matrix conductivity must be positive, got {self.K}")
        if not self.D > 0:
            raise AssemblyError(f"conduit conductivity must be positive, got {self.D}")
        if not self.alpha >= 0:
            raise AssemblyError(f"exchange coefficient must be nonnegative, got {self.alpha}")

    @classmethod
    def from_physical(cls, k: float, mu: float, g: float, d: float, alpha: float = 0.0, **kw):
        """K = k g / mu and D = d^3 g / (12 mu)."""
        if min(k, mu, g, d) <= 0:
            raise AssemblyError("physical inputs must be positive")
        return cls(K=k * g / mu, D=d ** 3 * g / (12.0 * mu), alpha=alpha, **kw)

    def scaled(self, s: float) -> "ProblemData":
        fm, fc = self.f_m, self.f_c
        return ProblemData(self.K, self.D, self.alpha, lambda x, y: s * fm(x, y), lambda x: s * fc(x),
                           self.smooth_data)


@dataclass
class SparseSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    free: np.ndarray
    n_dofs: int

    @property
    def constrained(self) -> np.ndarray:
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.free] = False
        return np.flatnonzero(mask)

    def extend(self, x_free) -> np.ndarray:
        x = np.zeros(self.n_dofs)
        x[self.free] = x_free
        return x

    def symmetry_error(self) -> float:
        d = self.matrix - self.matrix.T
        return float(abs(d).max()) if d.nnz else 0.0

    def export_matrix_market(self, path):
        scipy.io.mmwrite(str(path), self.matrix, symmetry="general")


def default_degree(space: FeSpace) -> int:
    return 2 * space.degree + 2


def _scatter(rows_local, vals, n) -> sp.csr_matrix:
    """Sum (ncells, nloc, nloc) local matrices into a sparse matrix."""
    nl = rows_local.shape[1]
    I = np.repeat(rows_local, nl, axis=1).ravel()
    J = np.tile(rows_local, (1, nl)).ravel()
    return sp.coo_matrix((vals.ravel(), (I, J)), shape=(n, n)).tocsr()


def stiffness_matrix(space: FeSpace, K: float = 1.0, degree: int | None = None) -> sp.csr_matrix:
    rule = quadrature(space.mesh.shape, degree or default_degree(space))
    cells = np.arange(space.mesh.n_cells)
    G = space.physical_gradients(cells, rule.points)
    local = K * np.einsum("q,c,cqld,cqmd->clm", rule.weights, space.detB, G, G)
    return _scatter(space.cell_dofs, local, space.n_dofs)


def mass_matrix(space: FeSpace, degree: int | None = None) -> sp.csr_matrix:
    rule = quadrature(space.mesh.shape, degree or default_degree(space))
    phi = space.element.values(rule.points)
    local = np.einsum("q,c,ql,qm->clm", rule.weights, space.detB, phi, phi)
    return _scatter(space.cell_dofs, local, space.n_dofs)


def conduit_matrices(space: FeSpace, degree: int | None = None) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """1D stiffness and mass matrices of the conduit space."""
    line = gauss_interval(degree or 2 * space.conduit_degree + 2)
    phi, dphi = space.conduit_basis(line.points[:, 0])
    h = np.diff(space.conduit_breaks)
    Ks = np.einsum("q,ql,qm->lm", line.weights, dphi, dphi)[None] / h[:, None, None]
    Ms = np.einsum("q,ql,qm->lm", line.weights, phi, phi)[None] * h[:, None, None]
    dofs = space.conduit_cell_dofs
    return _scatter(dofs, Ks, space.n_dofs), _scatter(dofs, Ms, space.n_dofs)


def _conduit_coupling_vectors(space: FeSpace, s):
    """Local dofs and values of (v_m(x,0) averaged) - v_c at parameters s."""
    ce = space.conduit_edge_ids
    lower, upper = space.conduit_adjacent.T
    x = space.conduit_breaks[:-1, None] + np.outer(np.diff(space.conduit_breaks), s)
    pts = np.stack([x, np.zeros_like(x)], axis=-1)
    phi_lo = space.element.values(space.to_reference(lower, pts))
    phi_up = space.element.values(space.to_reference(upper, pts))
    psi, _ = space.conduit_basis(s)
    ne = len(ce)
    vals = np.concatenate([0.5 * phi_lo, 0.5 * phi_up, -np.broadcast_to(psi, (ne,) + psi.shape)], axis=2)
    dofs = np.concatenate([space.cell_dofs[lower], space.cell_dofs[upper], space.conduit_cell_dofs], axis=1)
    return dofs, vals


def exchange_matrix(space: FeSpace, alpha: float, degree: int | None = None) -> sp.csr_matrix:
    line = gauss_interval(degree or default_degree(space))
    dofs, t = _conduit_coupling_vectors(space, line.points[:, 0])
    h = np.diff(space.conduit_breaks)
    local = alpha * np.einsum("q,e,eql,eqm->elm", line.weights, h, t, t)
    return _scatter(dofs, local, space.n_dofs)


def penalty_edges(space: FeSpace) -> np.ndarray:
    """Edges carrying the jump penalty: all edges shared by two cells (y=0 included)."""
    return np.flatnonzero(space.mesh.edge_cells[:, 1] >= 0)


def penalty_matrix(space: FeSpace, degree: int | None = None) -> sp.csr_matrix:
    mesh = space.mesh
    line = gauss_interval(degree or default_degree(space))
    edges = penalty_edges(space)
    pts = space.edge_points(edges, line.points[:, 0])
    k1, k2 = mesh.edge_cells[edges].T
    phi1 = space.element.values(space.to_reference(k1, pts))
    phi2 = space.element.values(space.to_reference(k2, pts))
    t = np.concatenate([phi2, -phi1], axis=2)
    dofs = np.concatenate([space.cell_dofs[k2], space.cell_dofs[k1]], axis=1)
    w = mesh.h_E[edges] / mesh.h_min_E[edges] ** 2 * mesh.edge_lengths[edges]
    local = np.einsum("q,e,eql,eqm->elm", line.weights, w, t, t)
    return _scatter(dofs, local, space.n_dofs)


def load_vector(space: FeSpace, data: ProblemData, degree: int | None = None) -> np.ndarray:
    deg = degree or default_degree(space) + (4 if data.smooth_data else 0)
    deg = min(deg, 15)
    rule = quadrature(space.mesh.shape, deg)
    cells = np.arange(space.mesh.n_cells)
    X = space.to_physical(cells, rule.points)
    f = np.asarray(data.f_m(X[..., 0], X[..., 1]), dtype=float) * np.ones(X.shape[:2])
    if not np.all(np.isfinite(f)):
        raise AssemblyError("matrix source is not finite at quadrature points")
    phi = space.element.values(rule.points)
    local = np.einsum("q,c,cq,ql->cl", rule.weights, space.detB, f, phi)
    b = np.bincount(space.cell_dofs.ravel(), local.ravel(), minlength=space.n_dofs)
    line = gauss_interval(min(2 * space.conduit_degree + 6, 15))
    s = line.points[:, 0]
    h = np.diff(space.conduit_breaks)
    x = space.conduit_breaks[:-1, None] + np.outer(h, s)
    fc = np.asarray(data.f_c(x), dtype=float) * np.ones(x.shape)
    if not np.all(np.isfinite(fc)):
        raise AssemblyError("conduit source is not finite at quadrature points")
    psi, _ = space.conduit_basis(s)
    lc = np.einsum("q,e,eq,ql->el", line.weights, h, fc, psi)
    b += np.bincount(space.conduit_cell_dofs.ravel(), lc.ravel(), minlength=space.n_dofs)
    return b


def bilinear_matrix(space: FeSpace, data: ProblemData, penalty: bool | None = None) -> sp.csr_matrix:
    if penalty is None:
        penalty = not space.conforming
    if not space.conforming and not penalty:
        raise AssemblyError(f"nonconforming family {space.tag} requires the jump penalty")
    A = stiffness_matrix(space, data.K)
    Kc, _ = conduit_matrices(space)
    A = A + data.D * Kc
    if data.alpha > 0:
        A = A + exchange_matrix(space, data.alpha)
    if penalty:
        A = A + penalty_matrix(space)
    A = 0.5 * (A + A.T)
    return A.tocsr()


def assemble_system(space: FeSpace, data: ProblemData, penalty: bool | None = None) -> SparseSystem:
    """Full (unconstrained) system; call :func:`apply_dirichlet` to reduce."""
    A = bilinear_matrix(space, data, penalty)
    b = load_vector(space, data)
    return SparseSystem(A, b, np.arange(space.n_dofs), space.n_dofs)


def apply_dirichlet(system: SparseSystem, space: FeSpace) -> SparseSystem:
    """Drop constrained rows and columns symmetrically (homogeneous data)."""
    free = np.intersect1d(system.free, space.free_dofs)
    A = system.matrix[free][:, free].tocsr()
    return SparseSystem(A, system.rhs[free], free, system.n_dofs)


def norm_matrix(space: FeSpace, penalty: bool | None = None) -> sp.csr_matrix:
    """Gram matrix of the discrete norm: broken H1 seminorm + conduit H1 + J."""
    if penalty is None:
        penalty = not space.conforming
    S = stiffness_matrix(space)
    Kc, Mc = conduit_matrices(space)
    N = S + Kc + Mc
    if penalty:
        N = N + penalty_matrix(space)
    return N.tocsr()
