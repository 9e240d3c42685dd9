"""Element and edge bubbles and the edge extension operator.

Each incident element of an edge gets an edge-adapted affine map that sends
the edge to the reference edge on the x-axis, starting from the edge's first
vertex, so both sides of the edge share the same parametrisation.
"""

from __future__ import annotations

import numpy as np

from ..mesh import RECTANGLE, Mesh


class BubbleError(ValueError):
    pass


# ------------------------------------------------------------ reference level
def ref_element_bubble(shape: str, pts) -> np.ndarray:
    x, y = np.moveaxis(np.asarray(pts, dtype=float), -1, 0)
    if shape == RECTANGLE:
        return 16.0 * x * (1 - x) * y * (1 - y)
    return 27.0 * x * y * (1 - x - y)


def ref_element_bubble_grad(shape: str, pts) -> np.ndarray:
    x, y = np.moveaxis(np.asarray(pts, dtype=float), -1, 0)
    if shape == RECTANGLE:
        gx = 16.0 * (1 - 2 * x) * y * (1 - y)
        gy = 16.0 * x * (1 - x) * (1 - 2 * y)
    else:
        gx = 27.0 * y * (1 - 2 * x - y)
        gy = 27.0 * x * (1 - x - 2 * y)
    return np.stack([gx, gy], axis=-1)


def ref_edge_bubble(shape: str, pts) -> np.ndarray:
    x, y = np.moveaxis(np.asarray(pts, dtype=float), -1, 0)
    if shape == RECTANGLE:
        return 4.0 * x * (1 - x) * (1 - y)
    return 4.0 * x * (1 - x - y)


def ref_edge_bubble_grad(shape: str, pts) -> np.ndarray:
    x, y = np.moveaxis(np.asarray(pts, dtype=float), -1, 0)
    if shape == RECTANGLE:
        gx = 4.0 * (1 - 2 * x) * (1 - y)
        gy = -4.0 * x * (1 - x)
    else:
        gx = 4.0 * (1 - 2 * x - y)
        gy = -4.0 * x
    return np.stack([gx, gy], axis=-1)


# ---------------------------------------------------------------- mapping
def element_map(mesh: Mesh, k: int) -> tuple[np.ndarray, np.ndarray]:
    x0, B = mesh.affine_maps
    return x0[k], B[k]


def edge_adapted_map(mesh: Mesh, e: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Affine map of cell ``k`` sending the reference x-axis edge onto edge ``e``."""
    if k not in mesh.edge_cells[e]:
        raise BubbleError(f"edge {e} is not an edge of element {k}")
    a, b = mesh.vertices[mesh.edge_vertices[e]]
    verts = mesh.vertices[mesh.cells[k]]
    if mesh.shape == RECTANGLE:
        # second column: the cell's side leaving vertex a, not along the edge
        n_in = verts.mean(axis=0) - 0.5 * (a + b)
        t = b - a
        perp = np.array([-t[1], t[0]])
        side = np.abs(n_in @ perp) / np.hypot(*perp) * 2.0
        col2 = perp / np.hypot(*perp) * side * np.sign(n_in @ perp)
    else:
        ids = set(mesh.cells[k].tolist()) - set(mesh.edge_vertices[e].tolist())
        col2 = mesh.vertices[ids.pop()] - a
    return a, np.column_stack([b - a, col2])


def _to_ref(x0, B, x, y):
    p = np.stack([np.asarray(x, dtype=float) - x0[0], np.asarray(y, dtype=float) - x0[1]], axis=-1)
    return p @ np.linalg.inv(B).T


class ElementBubble:
    """b_K mapped to element ``k``; zero outside it."""

    def __init__(self, mesh: Mesh, k: int):
        self.mesh, self.k = mesh, int(k)
        self.x0, self.B = element_map(mesh, self.k)

    def reference_points(self, x, y):
        return _to_ref(self.x0, self.B, x, y)

    def __call__(self, x, y):
        return ref_element_bubble(self.mesh.shape, self.reference_points(x, y))

    def gradient(self, x, y):
        g = ref_element_bubble_grad(self.mesh.shape, self.reference_points(x, y))
        return g @ np.linalg.inv(self.B)


class EdgeBubble:
    """b_E on the patch W_E, piecewise through the edge-adapted maps."""

    def __init__(self, mesh: Mesh, e: int):
        self.mesh, self.e = mesh, int(e)
        self.cells = tuple(int(c) for c in mesh.edge_cells[e] if c >= 0)
        self.maps = {k: edge_adapted_map(mesh, e, k) for k in self.cells}

    def reference_points(self, k, x, y):
        if k not in self.maps:
            raise BubbleError(f"edge {self.e} is not an edge of element {k}")
        x0, B = self.maps[k]
        return _to_ref(x0, B, x, y)

    def value(self, k, x, y):
        return ref_edge_bubble(self.mesh.shape, self.reference_points(k, x, y))

    def gradient(self, k, x, y):
        g = ref_edge_bubble_grad(self.mesh.shape, self.reference_points(k, x, y))
        return g @ np.linalg.inv(self.maps[k][1])


class EdgeExtension:
    """F_ext(g): constant along the second reference direction."""

    def __init__(self, g, mesh: Mesh, e: int, dg=None):
        self.g, self.dg = g, dg
        self.bubble = EdgeBubble(mesh, e)

    def value(self, k, x, y):
        xi = self.bubble.reference_points(k, x, y)
        return self.g(xi[..., 0])

    def gradient(self, k, x, y):
        if self.dg is None:
            raise BubbleError("gradient of the extension needs the derivative of g")
        xi = self.bubble.reference_points(k, x, y)
        gref = np.stack([self.dg(xi[..., 0]), np.zeros_like(xi[..., 0])], axis=-1)
        return gref @ np.linalg.inv(self.bubble.maps[k][1])


def bubble_element(mesh: Mesh, k: int) -> ElementBubble:
    return ElementBubble(mesh, k)


def bubble_edge(mesh: Mesh, e: int) -> EdgeBubble:
    return EdgeBubble(mesh, e)


def extend_from_edge(g, mesh: Mesh, e: int, dg=None) -> EdgeExtension:
    """Extend a function of the edge parameter in [0,1] to W_E."""
    return EdgeExtension(g, mesh, e, dg)
