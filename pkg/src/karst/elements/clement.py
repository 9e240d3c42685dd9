"""Clement quasi-interpolation onto continuous P1/Q1 with zero boundary values."""

from __future__ import annotations

import numpy as np

from ..mesh import Mesh
from ..quadrature import quadrature
from .dofmap import FeSpace
from .families import clement_tag
from .functions import FeFunction


class ClementError(ValueError):
    pass


def clement_space(mesh: Mesh) -> FeSpace:
    return FeSpace(mesh, clement_tag(mesh.shape), conduit_degree=1)


def interior_nodes(mesh: Mesh) -> np.ndarray:
    """Vertices not on the outer boundary; nodes on y=0 count as interior."""
    return np.flatnonzero(~mesh.boundary_vertices)


def cell_integrals(mesh: Mesh, v, degree: int = 6) -> np.ndarray:
    """Integral of a callable ``v(x, y)`` over every cell."""
    rule = quadrature(mesh.shape, degree)
    x0, B = mesh.affine_maps
    X = x0[:, None, :] + np.einsum("cij,pj->cpi", B, rule.points)
    vals = np.asarray(v(X[..., 0], X[..., 1]), dtype=float) * np.ones(X.shape[:2])
    if not np.all(np.isfinite(vals)):
        raise ClementError("non-finite samples while integrating over node patches")
    return (vals @ rule.weights) * np.abs(np.linalg.det(B))


def patch_means(mesh: Mesh, integrals: np.ndarray) -> np.ndarray:
    """Mean over each vertex patch W_x, given per-cell integrals."""
    num = np.zeros(mesh.n_vertices)
    den = np.zeros(mesh.n_vertices)
    for j in range(mesh.cells.shape[1]):
        np.add.at(num, mesh.cells[:, j], integrals)
        np.add.at(den, mesh.cells[:, j], mesh.areas)
    return num / den


def clement_interpolate(v=None, mesh: Mesh | None = None, *, integrals=None, degree: int = 6) -> FeFunction:
    """I_Cl v = sum over interior nodes of (patch mean of v) * phi_j.

    ``v`` is a callable ``v(x, y)``; alternatively pass precomputed cell
    integrals (useful when v is piecewise polynomial on a finer mesh).
    """
    if mesh is None:
        raise ClementError("a mesh is required")
    if integrals is None:
        if v is None:
            raise ClementError("need a function or its cell integrals")
        integrals = cell_integrals(mesh, v, degree)
    integrals = np.asarray(integrals, dtype=float)
    if not np.all(np.isfinite(integrals)):
        raise ClementError("non-finite cell integrals")
    space = clement_space(mesh)
    means = patch_means(mesh, integrals)
    coef = np.zeros(space.n_dofs)
    nodes = interior_nodes(mesh)
    # vertex DOFs of P1/Q1 are keyed ("v", id)
    vid = np.array([k[1] for k in space.dof_keys])
    coef[: space.n_matrix_dofs] = np.where(mesh.boundary_vertices[vid], 0.0, means[vid])
    out = FeFunction(space, coef)
    out.interior_nodes = nodes
    return out


def clement_basis_function(mesh: Mesh, vertex: int) -> FeFunction:
    """Nodal basis function phi_j of an interior vertex."""
    if mesh.boundary_vertices[vertex]:
        raise ClementError(f"vertex {vertex} is on the boundary")
    space = clement_space(mesh)
    coef = np.zeros(space.n_dofs)
    coef[space.dof_keys.index(("v", int(vertex)))] = 1.0
    return FeFunction(space, coef)
