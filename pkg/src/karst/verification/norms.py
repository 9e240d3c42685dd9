"""Error norms of discrete solutions against manufactured solutions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..elements.functions import FeFunction
from ..mesh import BOUNDARY
from ..quadrature import gauss_interval, quadrature
from .cases import ManufacturedCase


@dataclass
class ErrorParts:
    """Squared error contributions split by where they live."""

    cell_h1: np.ndarray      # |e|_{1,K}^2 per cell
    conduit_h1: np.ndarray   # ||e_c||_{1,E}^2 per conduit edge (x order)
    conduit_l2: np.ndarray   # ||e_c||_{0,E}^2 per conduit edge
    jump: np.ndarray         # J_E(e, e) per edge (zero on boundary edges)
    conforming: bool

    @property
    def matrix_seminorm(self) -> float:
        return float(np.sqrt(self.cell_h1.sum()))

    @property
    def conduit_norm(self) -> float:
        return float(np.sqrt(self.conduit_h1.sum()))

    @property
    def jump_norm(self) -> float:
        return float(np.sqrt(self.jump.sum()))

    def norm(self, mode: str | None = None) -> float:
        mode = mode or ("conforming" if self.conforming else "nonconforming")
        if mode == "conforming":
            return self.matrix_seminorm + self.conduit_norm
        if mode == "nonconforming":
            return float(np.sqrt(self.cell_h1.sum() + self.conduit_h1.sum() + self.jump.sum()))
        raise ValueError(f"unknown norm mode {mode!r}")


def _quad_degree(u_h: FeFunction) -> int:
    return min(2 * u_h.space.degree + 4, 15)


def error_parts(u_h: FeFunction, case: ManufacturedCase) -> ErrorParts:
    space = u_h.space
    mesh = space.mesh
    rule = quadrature(mesh.shape, _quad_degree(u_h))
    cells = np.arange(mesh.n_cells)
    x0, B = mesh.affine_maps
    X = x0[:, None, :] + np.einsum("cij,pj->cpi", B, rule.points)
    side = np.where(mesh.subdomain == 1, 1.0, -1.0)[:, None] * np.ones(X.shape[1])
    ge = case.grad_m(X[..., 0], X[..., 1], side) - u_h.gradients_at(cells, X)
    cell_h1 = mesh.areas * (np.sum(ge ** 2, axis=-1) @ rule.weights)

    line = gauss_interval(min(2 * space.conduit_degree + 6, 15))
    s = line.points[:, 0]
    h = np.diff(space.conduit_breaks)
    x = space.conduit_breaks[:-1, None] + np.outer(h, s)
    ev = case.u_c(x) - u_h.conduit_values(s)
    ed = case.du_c(x) - u_h.conduit_derivatives(s)
    c_l2 = h * (ev ** 2 @ line.weights)
    c_h1 = c_l2 + h * (ed ** 2 @ line.weights)

    jump = np.zeros(mesh.n_edges)
    if not space.conforming:
        eline = gauss_interval(min(2 * space.degree + 2, 15))
        shared = np.flatnonzero(mesh.edge_location != BOUNDARY)
        jv = u_h.edge_jump(shared, eline.points[:, 0])
        w = mesh.h_E[shared] / mesh.h_min_E[shared] ** 2
        jump[shared] = w * mesh.edge_lengths[shared] * (jv ** 2 @ eline.weights)
    return ErrorParts(cell_h1, c_h1, c_l2, jump, space.conforming)


def error_norm(u_h: FeFunction, case: ManufacturedCase, mode: str | None = None) -> float:
    """||u - u_h|| in the conforming (sum) or discrete (root of squares) norm."""
    return error_parts(u_h, case).norm(mode)


def local_error_norms(parts: ErrorParts, mesh) -> np.ndarray:
    """||e||_{h, W_K} for every cell K, with W_K the face-neighbour patch.

    Collects |e|_1 on the patch cells, the conduit H1 error on conduit edges
    of those cells and the jump penalty on their shared edges.
    """
    cond = np.zeros(mesh.n_edges)
    cond[mesh.conduit_edges] = parts.conduit_h1
    edge_q = cond + parts.jump
    out = np.empty(mesh.n_cells)
    for k, patch in enumerate(mesh.cell_patches):
        edges = np.unique(mesh.cell_edges[patch])
        out[k] = parts.cell_h1[patch].sum() + edge_q[edges].sum()
    return np.sqrt(out)


def local_error_norm(u_h: FeFunction, case: ManufacturedCase, cells) -> float:
    """||e||_h restricted to a set of cells and their edges."""
    parts = error_parts(u_h, case)
    mesh = u_h.space.mesh
    cells = np.asarray(cells)
    cond = np.zeros(mesh.n_edges)
    cond[mesh.conduit_edges] = parts.conduit_h1
    edges = np.unique(mesh.cell_edges[cells])
    return float(np.sqrt(parts.cell_h1[cells].sum() + cond[edges].sum() + parts.jump[edges].sum()))


def discrete_norm(v: FeFunction) -> float:
    """||v||_h of a discrete function (broken seminorm, conduit H1, jumps)."""
    from ..assembly import norm_matrix

    N = norm_matrix(v.space, penalty=not v.space.conforming)
    return float(np.sqrt(max(v.coefficients @ (N @ v.coefficients), 0.0)))
