"""The exact solution substituted into the discrete weak form."""

from __future__ import annotations

import numpy as np

from ..assembly import _conduit_coupling_vectors, load_vector
from ..elements import FeFunction, FeSpace
from ..quadrature import gauss_interval, quadrature
from .cases import ManufacturedCase

_DEG = 15


def exact_action(space: FeSpace, case: ManufacturedCase) -> np.ndarray:
    """a(u, phi_i) for every basis function, with u the exact solution.

    The jump penalty drops out because u is continuous.
    """
    mesh = space.mesh
    data = case.data
    rule = quadrature(mesh.shape, _DEG)
    cells = np.arange(mesh.n_cells)
    X = space.to_physical(cells, rule.points)
    side = np.where(mesh.subdomain == 1, 1.0, -1.0)[:, None] * np.ones(X.shape[1])
    g = case.grad_m(X[..., 0], X[..., 1], side)
    G = space.physical_gradients(cells, rule.points)
    local = data.K * np.einsum("q,c,cqd,cqld->cl", rule.weights, space.detB, g, G)
    out = np.bincount(space.cell_dofs.ravel(), local.ravel(), minlength=space.n_dofs)

    line = gauss_interval(_DEG)
    s = line.points[:, 0]
    h = np.diff(space.conduit_breaks)
    x = space.conduit_breaks[:-1, None] + np.outer(h, s)
    _, dpsi = space.conduit_basis(s)
    lc = data.D * np.einsum("q,eq,ql->el", line.weights, case.du_c(x), dpsi)
    out += np.bincount(space.conduit_cell_dofs.ravel(), lc.ravel(), minlength=space.n_dofs)
    if data.alpha > 0:
        dofs, t = _conduit_coupling_vectors(space, s)
        gap = case.u_m(x, np.zeros_like(x)) - case.u_c(x)
        le = data.alpha * np.einsum("q,e,eq,eql->el", line.weights, h, gap, t)
        out += np.bincount(dofs.ravel(), le.ravel(), minlength=space.n_dofs)
    return out


def weak_residual(space: FeSpace, case: ManufacturedCase) -> np.ndarray:
    """a(u, phi_i) - F(phi_i) on the free DOFs; zero up to quadrature for conforming spaces."""
    r = exact_action(space, case) - load_vector(space, case.data)
    return r[space.free_dofs]


def galerkin_defect(u_h: FeFunction, case: ManufacturedCase, penalty: bool | None = None) -> np.ndarray:
    """a_h(u - u_h, phi_i) on the free DOFs."""
    from ..assembly import bilinear_matrix

    A = bilinear_matrix(u_h.space, case.data, penalty)
    return (exact_action(u_h.space, case) - A @ u_h.coefficients)[u_h.space.free_dofs]
