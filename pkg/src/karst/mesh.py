"""Anisotropic tensor-product meshes of the karst aquifer domain.

The domain is ``(0, L) x (-H_m, H_m)`` with the conduit on ``y = 0``.  Meshes
are axis-aligned rectangles, optionally split into triangles along the SW-NE
diagonal.  Every mesh carries the anisotropic element data (anisotropy
vectors, ``h_min``, ``C_K``, edge heights) used by the estimator.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

RECTANGLE = "rectangle"
TRIANGLE = "triangle"

UPPER = 1
LOWER = -1

# location tags of edges
INTERIOR = "interior"
CONDUIT = "conduit"
BOUNDARY = "boundary"

# local edges as pairs of local vertex indices (counterclockwise)
LOCAL_EDGES = {
    RECTANGLE: ((0, 1), (1, 2), (2, 3), (3, 0)),
    TRIANGLE: ((0, 1), (1, 2), (2, 0)),
}


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class DomainGeometry:
    L: float = 1.0
    H_m: float = 1.0

    def __post_init__(self):
        if not (self.L > 0 and self.H_m > 0):
            raise MeshError(f"domain dimensions must be positive, got L={self.L}, H_m={self.H_m}")

    @property
    def area(self) -> float:
        return 2.0 * self.L * self.H_m


@dataclass(frozen=True)
class AnisotropyData:
    """Anisotropy vectors of a single element, longest first."""

    p1: np.ndarray
    p2: np.ndarray

    @property
    def h1(self) -> float:
        return float(np.hypot(*self.p1))

    @property
    def h2(self) -> float:
        return float(np.hypot(*self.p2))

    @property
    def h_min(self) -> float:
        return self.h2

    @property
    def C(self) -> np.ndarray:
        return np.column_stack([self.p1, self.p2])


@dataclass(frozen=True)
class Edge:
    vertices: tuple[int, int]
    cells: tuple[int, ...]
    normal: np.ndarray
    tangent: np.ndarray
    length: float
    h_E: float
    h_min_E: float
    location: str


class Mesh:
    """Conforming mesh of rectangles or triangles (no mixed meshes).

    ``cells`` lists vertex ids counterclockwise; rectangles start at the
    south-west corner.  Derived quantities are computed lazily and cached;
    the mesh is never mutated after construction.
    """

    def __init__(
        self,
        vertices,
        cells,
        shape: str,
        geometry: DomainGeometry,
        subdomain=None,
        grid: tuple[np.ndarray, np.ndarray] | None = None,
        parent=None,
        base: "Mesh | None" = None,
    ):
        if shape not in LOCAL_EDGES:
            raise MeshError(f"unknown element shape {shape!r}")
        self.vertices = np.asarray(vertices, dtype=float).reshape(-1, 2)
        self.cells = np.asarray(cells, dtype=np.int64)
        nloc = 4 if shape == RECTANGLE else 3
        if self.cells.ndim != 2 or self.cells.shape[1] != nloc:
            raise MeshError(f"{shape} cells need {nloc} vertices each")
        self.shape = shape
        self.geometry = geometry
        centers = self.vertices[self.cells].mean(axis=1)
        if subdomain is None:
            subdomain = np.where(centers[:, 1] > 0, UPPER, LOWER)
        self.subdomain = np.asarray(subdomain, dtype=np.int64)
        self.grid = grid
        self.parent = None if parent is None else np.asarray(parent, dtype=np.int64)
        self.base = base
        self._validate()

    # ------------------------------------------------------------------ basics
    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edge_vertices)

    @property
    def local_edges(self):
        return LOCAL_EDGES[self.shape]

    def _validate(self):
        if self.cells.min() < 0 or self.cells.max() >= self.n_vertices:
            raise MeshError("cell refers to a missing vertex")
        if np.any(self.areas <= 0):
            raise MeshError("cells must be counterclockwise with positive area")
        tol = 1e-12 * max(self.geometry.L, self.geometry.H_m)
        ys = self.vertices[self.cells][:, :, 1]
        if np.any((ys.max(axis=1) > tol) & (ys.min(axis=1) < -tol)):
            raise MeshError("an element crosses the conduit line y=0")
        if self.shape == RECTANGLE:
            p = self.vertices[self.cells]
            ok = (
                np.isclose(p[:, 0, 1], p[:, 1, 1]) & np.isclose(p[:, 2, 1], p[:, 3, 1])
                & np.isclose(p[:, 0, 0], p[:, 3, 0]) & np.isclose(p[:, 1, 0], p[:, 2, 0])
            )
            if not ok.all():
                raise MeshError("rectangles must be axis-aligned and start at the SW corner")

    @cached_property
    def areas(self) -> np.ndarray:
        p = self.vertices[self.cells]
        x, y = p[..., 0], p[..., 1]
        return 0.5 * np.sum(x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y, axis=1)

    @cached_property
    def diameters(self) -> np.ndarray:
        p = self.vertices[self.cells]
        d = p[:, :, None, :] - p[:, None, :, :]
        return np.sqrt((d ** 2).sum(-1)).max(axis=(1, 2))

    # ------------------------------------------------------------------- edges
    @cached_property
    def _topology(self):
        nloc = len(self.local_edges)
        pairs = np.stack([self.cells[:, list(e)] for e in self.local_edges], axis=1)  # (ne, nloc, 2)
        keys = np.sort(pairs.reshape(-1, 2), axis=1)
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        cell_edges = inverse.reshape(self.n_cells, nloc)
        edge_cells = -np.ones((len(uniq), 2), dtype=np.int64)
        edge_local = -np.ones((len(uniq), 2), dtype=np.int64)
        count = np.zeros(len(uniq), dtype=np.int64)
        for k in range(self.n_cells):
            for i, e in enumerate(cell_edges[k]):
                if count[e] >= 2:
                    raise MeshError("edge shared by more than two cells")
                edge_cells[e, count[e]] = k
                edge_local[e, count[e]] = i
                count[e] += 1
        # conduit edges: first incident cell is the lower one so n_E = (0, 1)
        mid = self.vertices[uniq].mean(axis=1)
        tol = 1e-12 * max(self.geometry.L, self.geometry.H_m)
        on_conduit = (np.abs(mid[:, 1]) < tol) & (count == 2)
        swap = on_conduit & (self.subdomain[np.maximum(edge_cells[:, 0], 0)] == UPPER)
        edge_cells[swap] = edge_cells[swap][:, ::-1]
        edge_local[swap] = edge_local[swap][:, ::-1]
        location = np.full(len(uniq), INTERIOR, dtype=object)
        location[count == 1] = BOUNDARY
        location[on_conduit] = CONDUIT
        return uniq, cell_edges, edge_cells, edge_local, location

    @property
    def edge_vertices(self) -> np.ndarray:
        return self._topology[0]

    @property
    def cell_edges(self) -> np.ndarray:
        return self._topology[1]

    @property
    def edge_cells(self) -> np.ndarray:
        """(n_edges, 2) incident cells; -1 marks a missing second cell."""
        return self._topology[2]

    @property
    def edge_local_index(self) -> np.ndarray:
        return self._topology[3]

    @property
    def edge_location(self) -> np.ndarray:
        return self._topology[4]

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        p = self.vertices[self.edge_vertices]
        return np.hypot(*(p[:, 1] - p[:, 0]).T)

    @cached_property
    def edge_normals(self) -> np.ndarray:
        """Fixed unit normal n_E: outward normal of the first incident cell."""
        p = self.vertices[self.edge_vertices]
        t = (p[:, 1] - p[:, 0]) / self.edge_lengths[:, None]
        n = np.column_stack([t[:, 1], -t[:, 0]])
        mid = p.mean(axis=1)
        center = self.vertices[self.cells[self.edge_cells[:, 0]]].mean(axis=1)
        flip = np.einsum("ij,ij->i", n, mid - center) < 0
        n[flip] *= -1
        return n

    @cached_property
    def edge_tangents(self) -> np.ndarray:
        n = self.edge_normals
        return np.column_stack([-n[:, 1], n[:, 0]])

    @cached_property
    def h_EK(self) -> np.ndarray:
        """(n_cells, n_local_edges) heights |K| / |E|."""
        return self.areas[:, None] / self.edge_lengths[self.cell_edges]

    @cached_property
    def h_E(self) -> np.ndarray:
        vals = np.zeros(self.n_edges)
        cnt = np.zeros(self.n_edges)
        np.add.at(vals, self.cell_edges.ravel(), self.h_EK.ravel())
        np.add.at(cnt, self.cell_edges.ravel(), 1)
        return vals / cnt

    @cached_property
    def h_min_E(self) -> np.ndarray:
        vals = np.zeros(self.n_edges)
        cnt = np.zeros(self.n_edges)
        hk = np.repeat(self.h_min[:, None], self.cell_edges.shape[1], axis=1)
        np.add.at(vals, self.cell_edges.ravel(), hk.ravel())
        np.add.at(cnt, self.cell_edges.ravel(), 1)
        return vals / cnt

    def edge(self, e: int) -> Edge:
        cells = tuple(int(k) for k in self.edge_cells[e] if k >= 0)
        return Edge(
            vertices=tuple(int(v) for v in self.edge_vertices[e]),
            cells=cells,
            normal=self.edge_normals[e].copy(),
            tangent=self.edge_tangents[e].copy(),
            length=float(self.edge_lengths[e]),
            h_E=float(self.h_E[e]),
            h_min_E=float(self.h_min_E[e]),
            location=str(self.edge_location[e]),
        )

    @cached_property
    def conduit_edges(self) -> np.ndarray:
        """Edges on y=0 ordered by x."""
        ids = np.flatnonzero(self.edge_location == CONDUIT)
        mid = self.vertices[self.edge_vertices[ids]].mean(axis=1)
        return ids[np.argsort(mid[:, 0])]

    @cached_property
    def interior_matrix_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_location == INTERIOR)

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_location == BOUNDARY)

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        """Boolean mask of vertices on the outer boundary of the matrix domain."""
        g = self.geometry
        x, y = self.vertices.T
        tol = 1e-12 * max(g.L, g.H_m)
        return (
            (np.abs(x) < tol) | (np.abs(x - g.L) < tol)
            | (np.abs(y - g.H_m) < tol) | (np.abs(y + g.H_m) < tol)
        )

    @cached_property
    def conduit_vertices(self) -> np.ndarray:
        """Vertex ids on y=0 ordered by x."""
        ids = np.unique(self.edge_vertices[self.conduit_edges])
        return ids[np.argsort(self.vertices[ids, 0])]

    # -------------------------------------------------------------- anisotropy
    @cached_property
    def _anisotropy(self):
        p = self.vertices[self.cells]
        if self.shape == RECTANGLE:
            ex = p[:, 1] - p[:, 0]
            ey = p[:, 3] - p[:, 0]
            lx = np.hypot(*ex.T)
            ly = np.hypot(*ey.T)
            x_first = lx >= ly
            p1 = np.where(x_first[:, None], ex, ey)
            p2 = np.where(x_first[:, None], ey, ex)
        else:
            vecs = np.stack([p[:, (i + 1) % 3] - p[:, i] for i in range(3)], axis=1)
            lens = np.hypot(vecs[..., 0], vecs[..., 1])
            i0 = np.argmax(lens, axis=1)
            idx = np.arange(self.n_cells)
            P0 = p[idx, i0]
            P2 = p[idx, (i0 + 2) % 3]
            p1 = vecs[idx, i0]
            t = p1 / lens[idx, i0][:, None]
            foot = P0 + np.einsum("ij,ij->i", P2 - P0, t)[:, None] * t
            p2 = P2 - foot
        return p1, p2

    @property
    def p1(self) -> np.ndarray:
        return self._anisotropy[0]

    @property
    def p2(self) -> np.ndarray:
        return self._anisotropy[1]

    @cached_property
    def h1(self) -> np.ndarray:
        return np.hypot(*self.p1.T)

    @cached_property
    def h2(self) -> np.ndarray:
        return np.hypot(*self.p2.T)

    @property
    def h_min(self) -> np.ndarray:
        return self.h2

    @cached_property
    def C(self) -> np.ndarray:
        """(n_cells, 2, 2) matrices with columns p1, p2."""
        return np.stack([self.p1, self.p2], axis=2)

    @cached_property
    def aspect_ratios(self) -> np.ndarray:
        return self.h1 / self.h2

    def anisotropy(self, k: int) -> AnisotropyData:
        return AnisotropyData(self.p1[k].copy(), self.p2[k].copy())

    # ------------------------------------------------------------ affine maps
    @cached_property
    def affine_maps(self) -> tuple[np.ndarray, np.ndarray]:
        """Default reference maps F_K(xi) = x0 + B xi.

        Rectangles map (0,1)^2 with x along x; triangles map the unit
        triangle onto (v0, v1, v2).
        """
        p = self.vertices[self.cells]
        x0 = p[:, 0].copy()
        if self.shape == RECTANGLE:
            B = np.zeros((self.n_cells, 2, 2))
            B[:, 0, 0] = p[:, 1, 0] - p[:, 0, 0]
            B[:, 1, 1] = p[:, 3, 1] - p[:, 0, 1]
        else:
            B = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)
        return x0, B

    # ----------------------------------------------------------------- patches
    @cached_property
    def vertex_cells(self) -> list[np.ndarray]:
        """Node patches W_x as arrays of cell ids."""
        order = np.argsort(self.cells.ravel(), kind="stable")
        verts = self.cells.ravel()[order]
        cells = order // self.cells.shape[1]
        bounds = np.searchsorted(verts, np.arange(self.n_vertices + 1))
        return [cells[bounds[v]:bounds[v + 1]] for v in range(self.n_vertices)]

    @cached_property
    def cell_patches(self) -> list[np.ndarray]:
        """Face-neighbour patches W_K (K included)."""
        out = []
        for k in range(self.n_cells):
            nb = self.edge_cells[self.cell_edges[k]].ravel()
            out.append(np.unique(np.append(nb[nb >= 0], k)))
        return out

    def edge_patch(self, e: int) -> np.ndarray:
        c = self.edge_cells[e]
        return c[c >= 0]

    # -------------------------------------------------------------- location
    def is_tensor(self) -> bool:
        return self.grid is not None

    def locate(self, points) -> np.ndarray:
        """Cell ids containing the given points (tensor meshes only)."""
        if self.grid is None:
            raise MeshError("point location needs a tensor-product mesh")
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        xs, ys = self.grid
        i = np.clip(np.searchsorted(xs, pts[:, 0], side="right") - 1, 0, len(xs) - 2)
        j = np.clip(np.searchsorted(ys, pts[:, 1], side="right") - 1, 0, len(ys) - 2)
        rect = j * (len(xs) - 1) + i
        if self.shape == RECTANGLE:
            return rect
        # lower-right triangle (SW, SE, NE) below the diagonal
        sx = (pts[:, 0] - xs[i]) / (xs[i + 1] - xs[i])
        sy = (pts[:, 1] - ys[j]) / (ys[j + 1] - ys[j])
        return 2 * rect + (sy > sx)

    # ------------------------------------------------------------------ export
    def to_dict(self) -> dict:
        d = {
            "format": "karst-mesh",
            "version": 1,
            "shape": self.shape,
            "geometry": {"L": self.geometry.L, "H_m": self.geometry.H_m},
            "vertices": {"x": self.vertices[:, 0].tolist(), "y": self.vertices[:, 1].tolist()},
            "cells": self.cells.tolist(),
            "subdomain": ["upper" if s == UPPER else "lower" for s in self.subdomain],
        }
        if self.grid is not None:
            d["grid"] = {"xs": self.grid[0].tolist(), "ys": self.grid[1].tolist()}
        return d

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=1)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_dict(cls, d: dict) -> "Mesh":
        if d.get("format") != "karst-mesh":
            raise MeshError("not a karst mesh document")
        geom = DomainGeometry(**d["geometry"])
        grid = d.get("grid")
        if grid is not None:
            xs, ys = np.asarray(grid["xs"]), np.asarray(grid["ys"])
            mesh = tensor_mesh(geom, xs, ys)
            if d["shape"] == TRIANGLE:
                mesh = split_to_triangles(mesh)
            if mesh.n_cells != len(d["cells"]) or not np.array_equal(mesh.cells, np.asarray(d["cells"])):
                raise MeshError("grid lines do not reproduce the stored connectivity")
            return mesh
        verts = np.column_stack([d["vertices"]["x"], d["vertices"]["y"]])
        sub = [UPPER if s == "upper" else LOWER for s in d["subdomain"]]
        return cls(verts, d["cells"], d["shape"], geom, subdomain=sub)

    @classmethod
    def from_json(cls, path) -> "Mesh":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def __repr__(self):
        return f"Mesh({self.n_cells} {self.shape}s, {self.n_vertices} vertices)"


# ---------------------------------------------------------------- generation
def tensor_mesh(geom: DomainGeometry, xs, ys) -> Mesh:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
        raise MeshError("grid lines must be strictly increasing")
    if not np.any(ys == 0.0):
        raise MeshError("grid must contain the conduit line y=0")
    nx, ny = len(xs) - 1, len(ys) - 1
    X, Y = np.meshgrid(xs, ys)
    verts = np.column_stack([X.ravel(), Y.ravel()])
    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    sw = (j * (nx + 1) + i).ravel()
    cells = np.column_stack([sw, sw + 1, sw + nx + 2, sw + nx + 1])
    return Mesh(verts, cells, RECTANGLE, geom, grid=(xs, ys))


def graded_layers(H: float, ny: int, q: float) -> np.ndarray:
    """Layer thicknesses of one half, outermost first, shrinking by ``q``."""
    if q == 1.0:
        return np.full(ny, H / ny)
    t0 = H * (1 - q) / (1 - q ** ny)
    return t0 * q ** np.arange(ny)


def build_graded_mesh(geom: DomainGeometry, nx: int, ny: int, grading: float = 1.0) -> Mesh:
    """Rectangle mesh with uniform x-spacing and geometric y-layers toward y=0.

    ``grading`` is the ratio ``q`` between consecutive layer thicknesses
    going toward the conduit; ``q = 1`` gives a uniform mesh.
    """
    if nx < 1 or ny < 1:
        raise MeshError("nx and ny must be at least 1")
    q = float(grading)
    if not 0 < q <= 1:
        raise MeshError(f"grading ratio must lie in (0, 1], got {q}")
    xs = np.linspace(0.0, geom.L, nx + 1)
    t = graded_layers(geom.H_m, ny, q)[::-1]  # conduit layer first
    upper = np.concatenate([[0.0], np.cumsum(t)])
    upper[-1] = geom.H_m
    ys = np.concatenate([-upper[:0:-1], upper])
    return tensor_mesh(geom, xs, ys)


def grading_for_aspect(geom: DomainGeometry, nx: int, aspect: float, q_min: float = 0.5):
    """Pick (ny, q) so the conduit layer has aspect ratio ``aspect``.

    Uses the fewest layers for which a grading ratio ``q >= q_min`` reaches
    the target first-layer thickness ``(L/nx)/aspect``.
    """
    hx = geom.L / nx
    target = hx / aspect
    if aspect <= 1:
        ny = max(1, int(round(geom.H_m / target)))
        return ny, 1.0
    ny = 1
    while graded_layers(geom.H_m, ny, q_min)[-1] > target:
        ny += 1
    if graded_layers(geom.H_m, ny, 1.0)[-1] <= target:
        return ny, 1.0
    lo, hi = q_min, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if graded_layers(geom.H_m, ny, mid)[-1] > target:
            hi = mid
        else:
            lo = mid
    return ny, 0.5 * (lo + hi)


def split_to_triangles(mesh: Mesh) -> Mesh:
    """Split every rectangle along its SW-NE diagonal."""
    if mesh.shape != RECTANGLE:
        raise MeshError("split_to_triangles needs an all-rectangle mesh")
    c = mesh.cells
    tris = np.empty((2 * mesh.n_cells, 3), dtype=np.int64)
    tris[0::2] = c[:, [0, 1, 2]]
    tris[1::2] = c[:, [0, 2, 3]]
    sub = np.repeat(mesh.subdomain, 2)
    parent = np.repeat(np.arange(mesh.n_cells), 2)
    return Mesh(mesh.vertices, tris, TRIANGLE, mesh.geometry, subdomain=sub,
                grid=mesh.grid, parent=parent, base=mesh)


def refine(mesh: Mesh, marked) -> Mesh:
    """Red refinement of marked cells with conformity closure.

    Each marked rectangle is bisected in both directions.  On a conforming
    rectangle mesh the only way to remove the resulting hanging nodes is to
    continue the cut lines through the neighbours until they reach the
    boundary, so the closure amounts to inserting the cut lines into the
    tensor grid.  Triangle meshes refine their parent rectangles and are
    split again.
    """
    marked = np.unique(np.asarray(list(marked), dtype=np.int64))
    if marked.size and (marked.min() < 0 or marked.max() >= mesh.n_cells):
        raise MeshError("marked cell id out of range")
    if mesh.shape == TRIANGLE:
        if mesh.base is None:
            raise MeshError("triangle refinement needs the parent rectangle mesh")
        return split_to_triangles(refine(mesh.base, np.unique(mesh.parent[marked])))
    if mesh.grid is None:
        raise MeshError("refinement needs a tensor-product mesh")
    if marked.size == 0:
        return mesh
    xs, ys = mesh.grid
    p = mesh.vertices[mesh.cells[marked]]
    mx = 0.5 * (p[:, 0, 0] + p[:, 1, 0])
    my = 0.5 * (p[:, 0, 1] + p[:, 3, 1])
    return tensor_mesh(mesh.geometry, np.union1d(xs, mx), np.union1d(ys, my))


def hanging_nodes(mesh: Mesh) -> np.ndarray:
    """Vertices that lie strictly inside some edge (should be empty)."""
    a = mesh.vertices[mesh.edge_vertices[:, 0]]
    b = mesh.vertices[mesh.edge_vertices[:, 1]]
    out = []
    scale = max(mesh.geometry.L, mesh.geometry.H_m)
    for v, x in enumerate(mesh.vertices):
        d = b - a
        s = np.einsum("ij,ij->i", x - a, d) / np.einsum("ij,ij->i", d, d)
        dist = np.abs(d[:, 0] * (x - a)[:, 1] - d[:, 1] * (x - a)[:, 0]) / np.hypot(*d.T)
        inside = (s > 1e-12) & (s < 1 - 1e-12) & (dist < 1e-12 * scale)
        if inside.any():
            out.append(v)
    return np.asarray(out, dtype=np.int64)


# --------------------------------------------------------------- diagnostics
@dataclass
class MeshDiagnostics:
    max_valence: int
    max_ratio_h1: float
    max_ratio_h2: float
    max_ratio_x: float
    max_ratio_y: float
    max_edge_height_discrepancy: float
    max_aspect_ratio: float
    threshold: float
    valence_threshold: int
    warnings: list[str] = field(default_factory=list)

    @property
    def max_size_ratio(self) -> float:
        return max(self.max_ratio_h1, self.max_ratio_h2)

    @property
    def ok(self) -> bool:
        return not self.warnings


def _max_pair_ratio(values, pairs):
    if len(pairs) == 0:
        return 1.0
    r = values[pairs[:, 0]] / values[pairs[:, 1]]
    return float(np.max(np.maximum(r, 1 / r)))


def touching_pairs(mesh: Mesh) -> np.ndarray:
    pairs = set()
    for patch in mesh.vertex_cells:
        for i in range(len(patch)):
            for j in range(i + 1, len(patch)):
                pairs.add((int(patch[i]), int(patch[j])))
    return np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)


def check_mesh_assumptions(mesh: Mesh, threshold: float = 4.0, valence_threshold: int | None = None) -> MeshDiagnostics:
    """Report how far the mesh is from the shape-regularity assumptions.

    Size ratios are taken over all pairs of cells sharing at least a vertex.
    """
    if valence_threshold is None:
        valence_threshold = 4 if mesh.shape == RECTANGLE else 8
    valence = max(len(p) for p in mesh.vertex_cells)
    pairs = touching_pairs(mesh)
    p = mesh.vertices[mesh.cells]
    ext = p.max(axis=1) - p.min(axis=1)
    inner = mesh.edge_cells[:, 1] >= 0
    ec = mesh.edge_cells[inner]
    he = mesh.h_E[inner]
    hme = mesh.h_min_E[inner]
    disc = 1.0
    for side in range(2):
        k = ec[:, side]
        loc = mesh.edge_local_index[inner, side]
        for a, b in ((he, mesh.h_EK[k, loc]), (hme, mesh.h_min[k])):
            r = a / b
            disc = max(disc, float(np.max(np.maximum(r, 1 / r))) if len(r) else 1.0)
    diag = MeshDiagnostics(
        max_valence=int(valence),
        max_ratio_h1=_max_pair_ratio(mesh.h1, pairs),
        max_ratio_h2=_max_pair_ratio(mesh.h2, pairs),
        max_ratio_x=_max_pair_ratio(ext[:, 0], pairs),
        max_ratio_y=_max_pair_ratio(ext[:, 1], pairs),
        max_edge_height_discrepancy=disc,
        max_aspect_ratio=float(mesh.aspect_ratios.max()),
        threshold=threshold,
        valence_threshold=valence_threshold,
    )
    if diag.max_valence > valence_threshold:
        diag.warnings.append(f"vertex valence {diag.max_valence} exceeds {valence_threshold}")
    if diag.max_size_ratio > threshold:
        diag.warnings.append(f"adjacent size ratio {diag.max_size_ratio:.3g} exceeds {threshold}")
    for w in diag.warnings:
        log.warning("mesh assumption: %s", w)
    return diag


def mesh_family(geom: DomainGeometry, nx: int, ny: int, grading: float = 1.0, triangles: bool = False) -> Mesh:
    mesh = build_graded_mesh(geom, nx, ny, grading)
    return split_to_triangles(mesh) if triangles else mesh


def conduit_layer_cells(mesh: Mesh) -> np.ndarray:
    """Boolean mask of cells touching y=0."""
    tol = 1e-12 * max(mesh.geometry.L, mesh.geometry.H_m)
    return np.any(np.abs(mesh.vertices[mesh.cells][:, :, 1]) < tol, axis=1)


__all__: Sequence[str] = [
    "DomainGeometry", "AnisotropyData", "Edge", "Mesh", "MeshError", "MeshDiagnostics",
    "build_graded_mesh", "split_to_triangles", "refine", "check_mesh_assumptions",
    "hanging_nodes", "tensor_mesh", "grading_for_aspect", "graded_layers", "mesh_family",
    "conduit_layer_cells", "RECTANGLE", "TRIANGLE", "UPPER", "LOWER",
    "INTERIOR", "CONDUIT", "BOUNDARY",
]
