"""Reference elements: polynomial bases and their degrees of freedom.

Polynomials on the reference cell are stored as coefficient rows over a list
of monomial exponents ``x^i y^j``.  Lagrange bases are obtained by inverting
the nodal Vandermonde matrix; the two rectangular Crouzeix-Raviart variants
use hand-written bases, and every family checks unisolvence on construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from ..quadrature import gauss_interval, gauss_square, gauss_triangle

UNISOLVENCE_TOL = 1e-12

REF_VERTICES = {
    "rectangle": np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]),
    "triangle": np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
}

# reference edges as (start vertex, end vertex); the rectangle order is
# bottom, top, left, right
REF_EDGES = {
    "rectangle": ((0, 1), (3, 2), (0, 3), (1, 2)),
    "triangle": ((0, 1), (1, 2), (2, 0)),
}


class UnknownFamily(KeyError):
    pass


class UnisolvenceError(ValueError):
    pass


@dataclass(frozen=True)
class Dof:
    """A degree of freedom functional on the reference cell.

    kind is ``point`` (evaluation), ``edge`` (integral over a unit-length
    reference edge, i.e. the edge mean) or ``moment`` (integral against a
    weight polynomial over the cell).  ``entity`` records where the DOF
    lives so global numbering can share it between neighbours:
    ``("vertex", i)``, ``("edge", e, t)`` with ``t`` the position along the
    reference edge, or ``("cell", slot)``.
    """

    kind: str
    entity: tuple
    point: tuple[float, float] | None = None
    edge: int | None = None
    weight: tuple | None = None  # (exps, coefs) for moments


def lattice_exponents(shape: str, k: int) -> np.ndarray:
    if shape == "triangle":
        return np.array([(i, j) for j in range(k + 1) for i in range(k + 1 - j)])
    return np.array([(i, j) for j in range(k + 1) for i in range(k + 1)])


def eval_monomials(exps: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """(..., nmono) values of x^i y^j."""
    pts = np.asarray(pts, dtype=float)
    x = pts[..., 0, None]
    y = pts[..., 1, None]
    return x ** exps[:, 0] * y ** exps[:, 1]


def _power(base, e):
    # derivative factors produce x^(-1) times a zero coefficient; avoid 0*inf
    return np.where(e >= 0, base ** np.maximum(e, 0), 0.0)


def eval_monomial_derivs(exps: np.ndarray, pts: np.ndarray, dx: int, dy: int) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    x = pts[..., 0, None]
    y = pts[..., 1, None]
    ex, ey = exps[:, 0], exps[:, 1]
    cx = np.ones(len(exps))
    cy = np.ones(len(exps))
    for m in range(dx):
        cx = cx * (ex - m)
    for m in range(dy):
        cy = cy * (ey - m)
    return cx * cy * _power(x, ex - dx) * _power(y, ey - dy)


class ReferenceElement:
    """Basis ``q_j = sum_m coef[j, m] x^exps[m,0] y^exps[m,1]`` with DOFs."""

    def __init__(self, tag, shape, exps, coef, dofs, degree, conforming, stretch_aligned=False,
                 long_name="", order=None):
        self.tag = tag
        self.long_name = long_name
        self.shape = shape
        self.exps = np.asarray(exps, dtype=np.int64)
        self.coef = np.asarray(coef, dtype=float)
        self.dofs = tuple(dofs)
        self.degree = int(degree)
        # largest k with P_k contained in the local space
        self.order = int(degree if order is None else order)
        self.conforming = bool(conforming)
        self.stretch_aligned = bool(stretch_aligned)
        err = self.unisolvence_error()
        if err > UNISOLVENCE_TOL:
            raise UnisolvenceError(f"{tag}: functional matrix differs from identity by {err:.3e}")

    @property
    def n_basis(self) -> int:
        return len(self.coef)

    @property
    def n_vertices(self) -> int:
        return len(REF_VERTICES[self.shape])

    # ---------------------------------------------------------- tabulation
    def values(self, pts) -> np.ndarray:
        return eval_monomials(self.exps, pts) @ self.coef.T

    def gradients(self, pts) -> np.ndarray:
        gx = eval_monomial_derivs(self.exps, pts, 1, 0) @ self.coef.T
        gy = eval_monomial_derivs(self.exps, pts, 0, 1) @ self.coef.T
        return np.stack([gx, gy], axis=-1)

    def hessians(self, pts) -> np.ndarray:
        hxx = eval_monomial_derivs(self.exps, pts, 2, 0) @ self.coef.T
        hxy = eval_monomial_derivs(self.exps, pts, 1, 1) @ self.coef.T
        hyy = eval_monomial_derivs(self.exps, pts, 0, 2) @ self.coef.T
        return np.stack([np.stack([hxx, hxy], -1), np.stack([hxy, hyy], -1)], -2)

    # ------------------------------------------------------------- DOFs
    @cached_property
    def functional_rules(self) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
        """Each DOF written as a weighted point sum (exact for the basis)."""
        cell_rule = (gauss_square if self.shape == "rectangle" else gauss_triangle)(12)
        line = gauss_interval(12)
        verts = REF_VERTICES[self.shape]
        rules = []
        for d in self.dofs:
            if d.kind == "point":
                rules.append((np.array([d.point], dtype=float), np.ones(1)))
            elif d.kind == "edge":
                a, b = (verts[v] for v in REF_EDGES[self.shape][d.edge])
                rules.append((a + line.points * (b - a), line.weights.copy()))
            elif d.kind == "moment":
                wexps, wcoef = d.weight
                w = eval_monomials(np.asarray(wexps), cell_rule.points) @ np.asarray(wcoef)
                rules.append((cell_rule.points, cell_rule.weights * w))
            else:
                raise ValueError(f"unknown DOF kind {d.kind!r}")
        return tuple(rules)

    @cached_property
    def stacked_rules(self) -> tuple[np.ndarray, np.ndarray]:
        """All functional points stacked, with a (ndofs, npts) weight matrix."""
        pts = np.concatenate([p for p, _ in self.functional_rules])
        W = np.zeros((len(self.dofs), len(pts)))
        start = 0
        for i, (p, w) in enumerate(self.functional_rules):
            W[i, start:start + len(p)] = w
            start += len(p)
        return pts, W

    def apply_functionals(self, exps, coef) -> np.ndarray:
        """theta_i applied to polynomials given as coefficient rows."""
        pts, W = self.stacked_rules
        return W @ (eval_monomials(np.asarray(exps), pts) @ np.atleast_2d(coef).T)

    def functional_matrix(self) -> np.ndarray:
        """Matrix theta_i(q_j)."""
        return self.apply_functionals(self.exps, self.coef)

    def unisolvence_error(self) -> float:
        return float(np.abs(self.functional_matrix() - np.eye(len(self.dofs))).max())

    def __repr__(self):
        return f"ReferenceElement({self.tag}, {self.n_basis} dofs)"


# ------------------------------------------------------------------ Lagrange
def _lagrange_nodes(shape: str, k: int) -> list[Dof]:
    verts = REF_VERTICES[shape]
    dofs = [Dof("point", ("vertex", i), point=tuple(v)) for i, v in enumerate(verts)]
    for e, (a, b) in enumerate(REF_EDGES[shape]):
        for m in range(1, k):
            t = m / k
            p = verts[a] + t * (verts[b] - verts[a])
            dofs.append(Dof("point", ("edge", e, t), point=tuple(p)))
    slot = 0
    if shape == "triangle":
        for j in range(1, k):
            for i in range(1, k - j):
                dofs.append(Dof("point", ("cell", slot), point=(i / k, j / k)))
                slot += 1
    else:
        for j in range(1, k):
            for i in range(1, k):
                dofs.append(Dof("point", ("cell", slot), point=(i / k, j / k)))
                slot += 1
    return dofs


def _lagrange(tag, shape, k, long_name):
    exps = lattice_exponents(shape, k)
    dofs = _lagrange_nodes(shape, k)
    V = np.array([eval_monomials(exps, np.array(d.point)) for d in dofs])
    coef = np.linalg.inv(V).T
    coef[np.abs(coef) < 1e-13] = 0.0
    return ReferenceElement(tag, shape, exps, coef, dofs, degree=k, conforming=True, long_name=long_name)


# ---------------------------------------------------------- Crouzeix-Raviart
def _cr1():
    exps = lattice_exponents("triangle", 1)  # 1, x, y
    verts = REF_VERTICES["triangle"]
    dofs = []
    for e, (a, b) in enumerate(REF_EDGES["triangle"]):
        dofs.append(Dof("point", ("edge", e, 0.5), point=tuple(0.5 * (verts[a] + verts[b]))))
    # midpoints (1/2,0), (1/2,1/2), (0,1/2)
    coef = np.array([
        [1.0, 0.0, -2.0],
        [-1.0, 2.0, 2.0],
        [1.0, -2.0, 0.0],
    ])
    return ReferenceElement("CR1", "triangle", exps, coef, dofs, degree=1, conforming=False,
                            long_name="CR1-tri")


# monomial order for the rectangular CR elements
_CR_EXPS = np.array([(0, 0), (1, 0), (0, 1), (1, 1), (0, 2), (2, 0)])
_Q5_WEIGHT = (((0, 0), (1, 0), (0, 1), (1, 1)), (3.0, -6.0, -6.0, 12.0))  # 3(2x-1)(2y-1)


def _cr_edge_dofs():
    return [Dof("edge", ("edge", e, 0.5), edge=e) for e in range(4)]


def _cr2():
    #            1     x     y    xy   y^2   x^2
    coef = np.array([
        [1.0, 0.0, -4.0, 0.0, 3.0, 0.0],   # 1 - 4y + 3y^2
        [0.0, 0.0, -2.0, 0.0, 3.0, 0.0],   # -2y + 3y^2
        [0.5, -1.0, 3.0, 0.0, -3.0, 0.0],  # 1/2 - x + 3y - 3y^2
        [-0.5, 1.0, 3.0, 0.0, -3.0, 0.0],  # -1/2 + x + 3y - 3y^2
        [3.0, -6.0, -6.0, 12.0, 0.0, 0.0],  # 3(2x-1)(2y-1)
    ])
    dofs = _cr_edge_dofs() + [Dof("moment", ("cell", 0), weight=_Q5_WEIGHT)]
    return ReferenceElement("CR2", "rectangle", _CR_EXPS, coef, dofs, degree=2, conforming=False,
                            stretch_aligned=True, long_name="CR2-rect-Q1plus", order=1)


def _cr3():
    coef = np.array([
        [1.0, 0.0, -4.0, 0.0, 3.0, 0.0],     # 1 - 4y + 3y^2
        [0.0, 0.0, -2.0, 0.0, 3.0, 0.0],     # -2y + 3y^2
        [1.0, -4.0, 0.0, 0.0, 0.0, 3.0],     # 1 - 4x + 3x^2
        [0.0, -2.0, 0.0, 0.0, 0.0, 3.0],     # -2x + 3x^2
        [3.0, -6.0, -6.0, 12.0, 0.0, 0.0],   # 3(2x-1)(2y-1), scaled for theta_5 = 1
        [-1.0, 6.0, 6.0, 0.0, -6.0, -6.0],   # 6(x - x^2 + y - y^2) - 1
    ])
    dofs = _cr_edge_dofs() + [
        Dof("moment", ("cell", 0), weight=_Q5_WEIGHT),
        Dof("moment", ("cell", 1), weight=(((0, 0),), (1.0,))),
    ]
    return ReferenceElement("CR3", "rectangle", _CR_EXPS, coef, dofs, degree=2, conforming=False,
                            long_name="CR3-rect-P2", order=1)


ALIASES = {
    "P1-conforming-tri": "P1", "P2-conforming-tri": "P2", "P3-conforming-tri": "P3",
    "Pk-conforming-tri": "P2",
    "Q1-conforming-rect": "Q1", "Q2-conforming-rect": "Q2", "Q3-conforming-rect": "Q3",
    "Qk-conforming-rect": "Q2",
    "CR1-tri": "CR1", "CR2-rect-Q1plus": "CR2", "CR3-rect-P2": "CR3",
}

FAMILY_TAGS = ("P1", "P2", "P3", "Q1", "Q2", "Q3", "CR1", "CR2", "CR3")


def canonical_tag(tag: str) -> str:
    t = ALIASES.get(tag, tag)
    if t not in FAMILY_TAGS:
        raise UnknownFamily(f"unknown element family {tag!r}; choose from {', '.join(FAMILY_TAGS)}")
    return t


@lru_cache(maxsize=None)
def reference_basis(tag: str) -> ReferenceElement:
    t = canonical_tag(tag)
    if t[0] in "PQ":
        k = int(t[1])
        shape = "triangle" if t[0] == "P" else "rectangle"
        return _lagrange(t, shape, k, f"{t}-conforming-{'tri' if shape == 'triangle' else 'rect'}")
    return {"CR1": _cr1, "CR2": _cr2, "CR3": _cr3}[t]()


def family_shape(tag: str) -> str:
    return reference_basis(tag).shape


def clement_tag(shape: str) -> str:
    return "P1" if shape == "triangle" else "Q1"
