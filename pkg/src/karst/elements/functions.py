"""Finite element functions: evaluation, gradients, traces and edge jumps."""

from __future__ import annotations

import json

import numpy as np

from .dofmap import FeSpace

_REF_TOL = 1e-12


class OutsideReferenceElement(ValueError):
    pass


def inside_reference(shape: str, pts, tol: float = _REF_TOL) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    x, y = pts[..., 0], pts[..., 1]
    ok = (x >= -tol) & (y >= -tol)
    if shape == "triangle":
        return ok & (x + y <= 1 + tol)
    return ok & (x <= 1 + tol) & (y <= 1 + tol)


class FeFunction:
    """Coefficient vector over a :class:`FeSpace` (matrix and conduit parts)."""

    def __init__(self, space: FeSpace, coefficients=None):
        self.space = space
        if coefficients is None:
            coefficients = np.zeros(space.n_dofs)
        self.coefficients = np.asarray(coefficients, dtype=float)
        if self.coefficients.shape != (space.n_dofs,):
            raise ValueError(f"expected {space.n_dofs} coefficients, got {self.coefficients.shape}")

    @property
    def matrix_coefficients(self) -> np.ndarray:
        return self.coefficients[: self.space.n_matrix_dofs]

    @property
    def conduit_coefficients(self) -> np.ndarray:
        return self.coefficients[self.space.conduit_offset:]

    def local(self, cells) -> np.ndarray:
        return self.coefficients[self.space.cell_dofs[np.asarray(cells)]]

    # ---------------------------------------------------------- matrix part
    def values(self, cells, ref_pts) -> np.ndarray:
        """(ncells, npts) values at reference points (shared or per cell)."""
        phi = self.space.element.values(ref_pts)
        c = self.local(cells)
        if np.ndim(ref_pts) == 2:
            return c @ phi.T
        return np.einsum("cpl,cl->cp", phi, c)

    def gradients(self, cells, ref_pts) -> np.ndarray:
        G = self.space.physical_gradients(cells, ref_pts)
        return np.einsum("cpld,cl->cpd", G, self.local(cells))

    def hessians(self, cells, ref_pts) -> np.ndarray:
        H = self.space.physical_hessians(cells, ref_pts)
        return np.einsum("cplab,cl->cpab", H, self.local(cells))

    def laplacian(self, cells, ref_pts) -> np.ndarray:
        H = self.hessians(cells, ref_pts)
        return H[..., 0, 0] + H[..., 1, 1]

    def evaluate(self, cell: int, point) -> float:
        """Value at a local (reference) point of one element."""
        p = np.asarray(point, dtype=float).reshape(1, 2)
        if not inside_reference(self.space.element.shape, p).all():
            raise OutsideReferenceElement(f"{tuple(p[0])} is outside the reference {self.space.element.shape}")
        return float(self.values([cell], p)[0, 0])

    def gradient(self, cell: int, point) -> np.ndarray:
        p = np.asarray(point, dtype=float).reshape(1, 2)
        if not inside_reference(self.space.element.shape, p).all():
            raise OutsideReferenceElement(f"{tuple(p[0])} is outside the reference {self.space.element.shape}")
        return self.gradients([cell], p)[0, 0]

    def values_at(self, cells, phys_pts) -> np.ndarray:
        """Values at physical points (ncells, npts, 2) of the given cells."""
        return self.values(cells, self.space.to_reference(cells, phys_pts))

    def gradients_at(self, cells, phys_pts) -> np.ndarray:
        return self.gradients(cells, self.space.to_reference(cells, phys_pts))

    # ------------------------------------------------------------- traces
    def edge_traces(self, edges, s) -> tuple[np.ndarray, np.ndarray]:
        """One-sided traces on edges at parameters ``s``.

        Returns (first, second) with shape (nedges, npts); the second trace
        is NaN on boundary edges.
        """
        edges = np.atleast_1d(edges)
        pts = self.space.edge_points(edges, s)
        ec = self.space.mesh.edge_cells[edges]
        first = self.values_at(ec[:, 0], pts)
        second = np.full_like(first, np.nan)
        inner = ec[:, 1] >= 0
        if inner.any():
            second[inner] = self.values_at(ec[inner, 1], pts[inner])
        return first, second

    def edge_jump(self, edges, s) -> np.ndarray:
        """Jump ``v|K2 - v|K1`` across edges (``-v|K1`` on the boundary).

        K1 is the first incident cell, whose outward normal is ``n_E``.
        """
        first, second = self.edge_traces(edges, s)
        return np.where(np.isnan(second), 0.0, second) - first

    def edge_flux_traces(self, edges, s) -> tuple[np.ndarray, np.ndarray]:
        """Normal derivatives ``grad v . n_E`` from both sides."""
        edges = np.atleast_1d(edges)
        pts = self.space.edge_points(edges, s)
        ec = self.space.mesh.edge_cells[edges]
        n = self.space.mesh.edge_normals[edges]
        first = np.einsum("epd,ed->ep", self.gradients_at(ec[:, 0], pts), n)
        second = np.full_like(first, np.nan)
        inner = ec[:, 1] >= 0
        if inner.any():
            g = self.gradients_at(ec[inner, 1], pts[inner])
            second[inner] = np.einsum("epd,ed->ep", g, n[inner])
        return first, second

    # -------------------------------------------------------- conduit part
    def conduit_values(self, s) -> np.ndarray:
        """(n_conduit_edges, npts) values of u^c at parameters s along each edge."""
        phi, _ = self.space.conduit_basis(s)
        c = self.coefficients[self.space.conduit_cell_dofs]
        return c @ phi.T

    def conduit_derivatives(self, s) -> np.ndarray:
        _, dphi = self.space.conduit_basis(s)
        c = self.coefficients[self.space.conduit_cell_dofs]
        h = np.diff(self.space.conduit_breaks)
        return (c @ dphi.T) / h[:, None]

    def conduit_matrix_trace(self, s) -> np.ndarray:
        """Matrix trace on y=0 along the conduit edges (average of both sides)."""
        first, second = self.edge_traces(self.space.conduit_edge_ids, self._conduit_edge_s(s))
        return 0.5 * (first + second)

    def conduit_one_sided(self, s) -> tuple[np.ndarray, np.ndarray]:
        """(lower, upper) matrix traces along the conduit edges."""
        return self.edge_traces(self.space.conduit_edge_ids, self._conduit_edge_s(s))

    def _conduit_edge_s(self, s):
        # edge parameter runs from the lower vertex id; conduit s runs in x
        ev = self.space.mesh.edge_vertices[self.space.conduit_edge_ids]
        xa = self.space.mesh.vertices[ev[:, 0], 0]
        xb = self.space.mesh.vertices[ev[:, 1], 0]
        s = np.asarray(s, dtype=float)
        return np.where((xb > xa)[:, None], s[None, :], 1.0 - s[None, :])

    # ------------------------------------------------------- serialization
    def to_dict(self, space_id: str = "") -> dict:
        return {
            "space": {"family": self.space.tag, "id": space_id, "n_dofs": self.space.n_dofs,
                      "n_matrix_dofs": self.space.n_matrix_dofs,
                      "conduit_degree": self.space.conduit_degree},
            "matrix": self.matrix_coefficients.tolist(),
            "conduit": self.conduit_coefficients.tolist(),
        }

    def to_json(self, space_id: str = "") -> str:
        return json.dumps(self.to_dict(space_id))

    @classmethod
    def from_dict(cls, space: FeSpace, d: dict) -> "FeFunction":
        if d["space"]["family"] != space.tag or d["space"]["n_dofs"] != space.n_dofs:
            raise ValueError("stored coefficients belong to a different space")
        return cls(space, np.concatenate([d["matrix"], d["conduit"]]))

    def __add__(self, other):
        return FeFunction(self.space, self.coefficients + other.coefficients)

    def __sub__(self, other):
        return FeFunction(self.space, self.coefficients - other.coefficients)

    def __mul__(self, s: float):
        return FeFunction(self.space, s * self.coefficients)

    __rmul__ = __mul__


def interpolate(space: FeSpace, fun_m=None, fun_c=None) -> FeFunction:
    """Canonical interpolant via the DOF functionals of each element.

    ``fun_m(x, y)`` and ``fun_c(x)`` must accept numpy arrays.  For CR
    families the edge-mean DOFs of a continuous function agree between
    neighbours, so the result is well defined.
    """
    coef = np.zeros(space.n_dofs)
    if fun_m is not None:
        pts, W = space.element.stacked_rules
        cells = np.arange(space.mesh.n_cells)
        X = space.to_physical(cells, pts)
        vals = np.asarray(fun_m(X[..., 0], X[..., 1]), dtype=float) * np.ones(X.shape[:2])
        local = vals @ W.T  # (ncells, nloc)
        coef[space.cell_dofs.ravel()] = local.ravel()
    if fun_c is not None:
        coef[space.conduit_offset:] = np.asarray(fun_c(space.conduit_node_x), dtype=float)
    return FeFunction(space, coef)
