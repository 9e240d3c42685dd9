"""Global numbering of degrees of freedom and the per-cell reference maps."""

from __future__ import annotations

from functools import cached_property

import numpy as np

from ..mesh import BOUNDARY, RECTANGLE, Mesh
from .families import REF_EDGES, ReferenceElement, canonical_tag, reference_basis


class DofMapError(ValueError):
    pass


def lagrange_1d(k: int):
    """Nodes on [0,1] (ordered) and coefficient matrix over 1, s, ..., s^k."""
    nodes = np.linspace(0.0, 1.0, k + 1)
    V = nodes[:, None] ** np.arange(k + 1)
    return nodes, np.linalg.inv(V).T


class FeSpace:
    """Finite element space on a mesh: matrix unknowns plus a conduit space.

    Matrix DOFs come first; the conforming conduit unknowns (piecewise
    Lagrange of degree ``conduit_degree`` on the conduit edges) are appended.
    """

    def __init__(self, mesh: Mesh, family: str, conduit_degree: int | None = None):
        self.tag = canonical_tag(family)
        self.element: ReferenceElement = reference_basis(self.tag)
        if self.element.shape != mesh.shape:
            raise DofMapError(f"family {self.tag} needs {self.element.shape}s, mesh has {mesh.shape}s")
        self.mesh = mesh
        if conduit_degree is None:
            conduit_degree = self.element.order
        if conduit_degree < 1:
            raise DofMapError("conduit degree must be at least 1")
        self.conduit_degree = int(conduit_degree)
        self._build_maps()
        self._number_matrix_dofs()
        self._number_conduit_dofs()

    # ------------------------------------------------------------- maps
    def _build_maps(self):
        mesh = self.mesh
        x0, B = mesh.affine_maps
        nv = mesh.cells.shape[1]
        vperm = np.tile(np.arange(nv), (mesh.n_cells, 1))
        B = B.copy()
        if self.element.stretch_aligned:
            # reference y-axis follows the longer side; ties keep y
            hx = B[:, 0, 0].copy()
            hy = B[:, 1, 1].copy()
            swap = hx > hy
            B[swap] = 0.0
            B[swap, 0, 1] = hx[swap]
            B[swap, 1, 0] = hy[swap]
            vperm[swap] = [0, 3, 2, 1]
        self.x0 = x0
        self.B = B
        self.Binv = np.linalg.inv(B)
        self.detB = np.abs(np.linalg.det(B))
        self.vperm = vperm

    def to_physical(self, cells, ref_pts) -> np.ndarray:
        """Map reference points (npts,2) or (ncells,npts,2) to physical points."""
        cells = np.asarray(cells)
        ref = np.asarray(ref_pts, dtype=float)
        if ref.ndim == 2:
            return self.x0[cells][:, None, :] + np.einsum("cij,pj->cpi", self.B[cells], ref)
        return self.x0[cells][:, None, :] + np.einsum("cij,cpj->cpi", self.B[cells], ref)

    def to_reference(self, cells, phys_pts) -> np.ndarray:
        """Inverse map of (ncells, npts, 2) physical points."""
        cells = np.asarray(cells)
        d = np.asarray(phys_pts, dtype=float) - self.x0[cells][:, None, :]
        return np.einsum("cij,cpj->cpi", self.Binv[cells], d)

    # --------------------------------------------------------- numbering
    def _number_matrix_dofs(self):
        mesh = self.mesh
        edge_of = {tuple(v): i for i, v in enumerate(mesh.edge_vertices.tolist())}
        ref_edges = REF_EDGES[self.element.shape]
        keys: dict = {}
        cell_dofs = np.empty((mesh.n_cells, self.element.n_basis), dtype=np.int64)
        boundary = []
        bverts = mesh.boundary_vertices
        for k in range(mesh.n_cells):
            gv = mesh.cells[k, self.vperm[k]]
            for i, d in enumerate(self.element.dofs):
                kind = d.entity[0]
                on_boundary = False
                if kind == "vertex":
                    key = ("v", int(gv[d.entity[1]]))
                    on_boundary = bool(bverts[key[1]])
                elif kind == "edge":
                    a, b = ref_edges[d.entity[1]]
                    ga, gb = int(gv[a]), int(gv[b])
                    eid = edge_of[(min(ga, gb), max(ga, gb))]
                    t = d.entity[2] if ga < gb else 1.0 - d.entity[2]
                    key = ("e", eid, round(t, 9))
                    on_boundary = mesh.edge_location[eid] == BOUNDARY
                else:
                    key = ("c", k, d.entity[1])
                idx = keys.get(key)
                if idx is None:
                    idx = keys[key] = len(keys)
                    boundary.append(on_boundary)
                cell_dofs[k, i] = idx
        self.cell_dofs = cell_dofs
        self.n_matrix_dofs = len(keys)
        self.dof_keys = list(keys)
        self._matrix_boundary = np.array(boundary, dtype=bool)

    def _number_conduit_dofs(self):
        mesh = self.mesh
        kc = self.conduit_degree
        ce = mesh.conduit_edges
        xv = mesh.vertices[mesh.conduit_vertices, 0]
        self.conduit_breaks = xv
        n = len(ce)
        self.n_conduit_dofs = n * kc + 1
        self.conduit_offset = self.n_matrix_dofs
        base = self.conduit_offset + kc * np.arange(n)
        self.conduit_cell_dofs = base[:, None] + np.arange(kc + 1)
        # conduit edge j spans [xv[j], xv[j+1]]; the matching 2D edge is ce[j]
        self.conduit_edge_ids = ce
        lower = mesh.edge_cells[ce, 0]
        upper = mesh.edge_cells[ce, 1]
        self.conduit_adjacent = np.column_stack([lower, upper])
        self.conduit_nodes_s, self.conduit_coef = lagrange_1d(kc)

    # ---------------------------------------------------------- queries
    @property
    def n_dofs(self) -> int:
        return self.n_matrix_dofs + self.n_conduit_dofs

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_dofs, dtype=bool)
        mask[: self.n_matrix_dofs] = self._matrix_boundary
        mask[self.conduit_offset] = True
        mask[-1] = True
        return mask

    @property
    def boundary_dofs(self) -> np.ndarray:
        return np.flatnonzero(self.boundary_mask)

    @property
    def free_dofs(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_mask)

    @property
    def conduit_dofs(self) -> np.ndarray:
        return np.arange(self.conduit_offset, self.n_dofs)

    @property
    def conforming(self) -> bool:
        return self.element.conforming

    @property
    def degree(self) -> int:
        return self.element.degree

    @cached_property
    def conduit_node_x(self) -> np.ndarray:
        """x-coordinate of every conduit DOF, in global order."""
        kc = self.conduit_degree
        xv = self.conduit_breaks
        x = np.empty(self.n_conduit_dofs)
        h = np.diff(xv)
        for m in range(kc):
            x[m:-1:kc] = xv[:-1] + h * (m / kc)
        x[-1] = xv[-1]
        return x

    # ------------------------------------------------------- tabulation
    def physical_gradients(self, cells, ref_pts) -> np.ndarray:
        """(ncells, npts, nloc, 2) basis gradients in physical coordinates."""
        cells = np.asarray(cells)
        g = self.element.gradients(ref_pts)
        Binv = self.Binv[cells]
        if np.ndim(ref_pts) == 2:
            return np.einsum("pld,cde->cple", g, Binv)
        return np.einsum("cpld,cde->cple", g, Binv)

    def physical_hessians(self, cells, ref_pts) -> np.ndarray:
        cells = np.asarray(cells)
        H = self.element.hessians(ref_pts)
        Binv = self.Binv[cells]
        if np.ndim(ref_pts) == 2:
            return np.einsum("cda,plde,ceb->cplab", Binv, H, Binv)
        return np.einsum("cda,cplde,ceb->cplab", Binv, H, Binv)

    def conduit_basis(self, s) -> tuple[np.ndarray, np.ndarray]:
        """Values and s-derivatives of the 1D reference basis at s in [0,1]."""
        s = np.asarray(s, dtype=float)
        k = self.conduit_degree
        P = s[..., None] ** np.arange(k + 1)
        dP = np.zeros_like(P)
        dP[..., 1:] = np.arange(1, k + 1) * s[..., None] ** np.arange(k)
        return P @ self.conduit_coef.T, dP @ self.conduit_coef.T

    def edge_points(self, e, s) -> np.ndarray:
        """Physical points at parameters s along edge e (first to second vertex)."""
        v = self.mesh.vertices[self.mesh.edge_vertices[e]]
        s = np.asarray(s, dtype=float)
        return v[..., 0, None, :] + s[..., None] * (v[..., 1, None, :] - v[..., 0, None, :])

    def __repr__(self):
        return f"FeSpace({self.tag}, {self.n_matrix_dofs}+{self.n_conduit_dofs} dofs)"


DofMap = FeSpace
