"""Residual a posteriori error estimator on anisotropic meshes.

Per element K the squared indicator is a sum of weighted terms:

    volume         w_vol ||f_K + K lap(u_h)||_K^2
    flux_jump      sum_E w_edge ||[K grad u_h . n_E]||_E^2   (edges inside the matrix, off y=0)
    conduit        sum_E w_edge ||r_E||_E^2                  (edges on y=0)
    interface      sum_E w_edge ||[K d_y u_h] - alpha (u_h^m - u_h^c)||_E^2   (edges on y=0)
    nonconformity  sum_E w_jump ||[u_h]||_E^2                (nonconforming modes only)

Anisotropic weights are ``h_min,K^2``, ``h_min,K^2 / h_E`` and ``h_E / h_min,K^2``;
the isotropic variant uses ``h_K^2``, ``|E|`` and ``1 / |E|``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .assembly import ProblemData
from .elements.families import reference_basis
from .elements.functions import FeFunction
from .mesh import BOUNDARY, CONDUIT, INTERIOR, Mesh
from .quadrature import gauss_interval, quadrature

MODES = (
    "anisotropic-conforming",
    "anisotropic-nonconforming",
    "isotropic-conforming",
    "isotropic-nonconforming",
)
TERMS = ("volume", "flux_jump", "conduit", "interface", "nonconformity")

DATA_DEGREE = 10


class EstimatorError(ValueError):
    pass


def check_mode(mode: str) -> tuple[bool, bool]:
    """(anisotropic, nonconforming) flags of a mode string."""
    if mode not in MODES:
        raise EstimatorError(f"unknown estimator mode {mode!r}; choose from {', '.join(MODES)}")
    return mode.startswith("anisotropic"), mode.endswith("nonconforming")


def default_mode(u_h: FeFunction, anisotropic: bool = True) -> str:
    kind = "conforming" if u_h.space.conforming else "nonconforming"
    return f"{'anisotropic' if anisotropic else 'isotropic'}-{kind}"


# ------------------------------------------------------------ data projection
@dataclass
class ProjectedData:
    """Piecewise P1/Q1 matrix source and edgewise constant conduit source."""

    mesh: Mesh
    fm_coef: np.ndarray  # (ncells, nloc) nodal values of f_K in the mesh's default map
    fc_mean: np.ndarray  # (n conduit edges,) ordered by x

    @property
    def basis(self):
        return reference_basis("P1" if self.mesh.shape == "triangle" else "Q1")

    def fm_values(self, cells, ref_pts) -> np.ndarray:
        """f_K at reference points of the mesh's default affine map."""
        phi = self.basis.values(ref_pts)
        c = self.fm_coef[np.asarray(cells)]
        if np.ndim(ref_pts) == 2:
            return c @ phi.T
        return np.einsum("cpl,cl->cp", phi, c)


def _default_physical(mesh: Mesh, cells, ref_pts):
    x0, B = mesh.affine_maps
    cells = np.asarray(cells)
    return x0[cells][:, None, :] + np.einsum("cij,pj->cpi", B[cells], ref_pts)


def _eval_fm(data: ProblemData, X):
    f = np.asarray(data.f_m(X[..., 0], X[..., 1]), dtype=float) * np.ones(X.shape[:-1])
    if not np.all(np.isfinite(f)):
        raise EstimatorError("matrix source is not finite at quadrature points")
    return f


def _eval_fc(data: ProblemData, x):
    f = np.asarray(data.f_c(x), dtype=float) * np.ones(np.shape(x))
    if not np.all(np.isfinite(f)):
        raise EstimatorError("conduit source is not finite at quadrature points")
    return f


def _conduit_x(mesh: Mesh, s):
    xv = mesh.vertices[mesh.conduit_vertices, 0]
    return xv[:-1, None] + np.outer(np.diff(xv), s)


def project_data(data: ProblemData, mesh: Mesh, degree: int = DATA_DEGREE) -> ProjectedData:
    basis = reference_basis("P1" if mesh.shape == "triangle" else "Q1")
    rule = quadrature(mesh.shape, degree)
    phi = basis.values(rule.points)
    M = np.einsum("q,ql,qm->lm", rule.weights, phi, phi)
    if np.linalg.cond(M) > 1e12:
        raise EstimatorError("singular local mass matrix")
    X = _default_physical(mesh, np.arange(mesh.n_cells), rule.points)
    f = _eval_fm(data, X)
    rhs = np.einsum("q,cq,ql->cl", rule.weights, f, phi)
    coef = np.linalg.solve(M, rhs.T).T
    line = gauss_interval(degree)
    x = _conduit_x(mesh, line.points[:, 0])
    fc = _eval_fc(data, x) @ line.weights
    return ProjectedData(mesh, coef, fc)


# ------------------------------------------------------------------ residuals
def _cell_rule(u_h: FeFunction):
    return quadrature(u_h.space.mesh.shape, min(2 * u_h.space.degree + 2, 15))


def element_residual_values(u_h, data, proj, cells, ref_pts) -> np.ndarray:
    """r_K = f_K + K lap(u_h) at reference points of the mesh's default map."""
    mesh = u_h.space.mesh
    X = _default_physical(mesh, cells, ref_pts)
    lap = u_h.laplacian(cells, u_h.space.to_reference(cells, X))
    return proj.fm_values(cells, ref_pts) + data.K * lap


def element_residual(u_h: FeFunction, element: int, proj: ProjectedData, data: ProblemData):
    """r_K on one element as a callable of physical points (x, y)."""
    mesh = u_h.space.mesh
    x0, B = mesh.affine_maps
    Binv = np.linalg.inv(B[element])

    def r(x, y):
        X = np.stack(np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float)), axis=-1)
        shape = X.shape[:-1]
        ref = (X.reshape(-1, 2) - x0[element]) @ Binv.T
        return element_residual_values(u_h, data, proj, [element], ref)[0].reshape(shape)

    return r


def flux_jump_values(u_h: FeFunction, data: ProblemData, edges, s) -> np.ndarray:
    """[K grad u_h . n_E] = second side minus first side, at parameters s."""
    mesh = u_h.space.mesh
    edges = np.atleast_1d(edges)
    loc = mesh.edge_location[edges]
    if np.any(loc != INTERIOR):
        raise EstimatorError("flux jumps are defined on interior matrix edges off the conduit line")
    first, second = u_h.edge_flux_traces(edges, s)
    return data.K * (second - first)


def flux_jump(u_h: FeFunction, edge: int, data: ProblemData):
    """Flux jump on one interior matrix edge as a function of the edge parameter."""
    return lambda s: flux_jump_values(u_h, data, [edge], np.atleast_1d(s))[0]


def _conduit_second_derivative(u_h: FeFunction, s) -> np.ndarray:
    space = u_h.space
    k = space.conduit_degree
    s = np.asarray(s, dtype=float)
    if k < 2:
        return np.zeros((len(space.conduit_edge_ids), len(s)))
    P2 = np.zeros((len(s), k + 1))
    for m in range(2, k + 1):
        P2[:, m] = m * (m - 1) * s ** (m - 2)
    c = u_h.coefficients[space.conduit_cell_dofs]
    h = np.diff(space.conduit_breaks)
    return (c @ (P2 @ space.conduit_coef.T).T) / h[:, None] ** 2


def conduit_residual_values(u_h, data, proj, s) -> np.ndarray:
    """r_E = f_E + D u_c'' + alpha (mean matrix trace - u_c) on every conduit edge."""
    s = np.asarray(s, dtype=float)
    trace = u_h.conduit_matrix_trace(s)
    uc = u_h.conduit_values(s)
    return proj.fc_mean[:, None] + data.D * _conduit_second_derivative(u_h, s) + data.alpha * (trace - uc)


def conduit_residual(u_h: FeFunction, j: int, proj: ProjectedData, data: ProblemData):
    """r_E on the j-th conduit edge (ordered by x) as a function of s in [0,1]."""
    return lambda s: conduit_residual_values(u_h, data, proj, np.atleast_1d(s))[j]


def interface_residual_values(u_h, data, s) -> np.ndarray:
    """K [d_y u_h] - alpha (mean matrix trace - u_c) on every conduit edge."""
    space = u_h.space
    s = np.asarray(s, dtype=float)
    es = u_h._conduit_edge_s(s)
    lower, upper = u_h.edge_flux_traces(space.conduit_edge_ids, es)
    trace = u_h.conduit_matrix_trace(s)
    uc = u_h.conduit_values(s)
    return data.K * (upper - lower) - data.alpha * (trace - uc)


# ------------------------------------------------------------------ weights
def _weights(mesh: Mesh, anisotropic: bool):
    """Per (cell, local edge) weights and the volume weight."""
    ce = mesh.cell_edges
    if anisotropic:
        hmin2 = mesh.h_min ** 2
        w_vol = hmin2
        w_edge = hmin2[:, None] / mesh.h_E[ce]
        w_jump = mesh.h_E[ce] / hmin2[:, None]
    else:
        w_vol = mesh.diameters ** 2
        w_edge = mesh.edge_lengths[ce]
        w_jump = 1.0 / mesh.edge_lengths[ce]
    return w_vol, w_edge, w_jump


def _edge_norms2(vals, lengths, weights):
    return lengths * (vals ** 2 @ weights)


# ------------------------------------------------------------------ report
@dataclass
class EstimatorReport:
    mode: str
    theta_K: np.ndarray
    zeta_K: np.ndarray
    breakdown: dict[str, np.ndarray]
    m1: float | None = None
    m1_field: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def theta(self) -> float:
        return float(np.sqrt(np.sum(self.theta_K ** 2)))

    @property
    def zeta(self) -> float:
        return float(np.sqrt(np.sum(self.zeta_K ** 2)))

    @property
    def n_elements(self) -> int:
        return len(self.theta_K)

    def term_totals(self) -> dict[str, float]:
        return {k: float(v.sum()) for k, v in self.breakdown.items()}

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "theta": self.theta,
            "zeta": self.zeta,
            "m1": self.m1,
            "m1_field": self.m1_field,
            "term_totals": self.term_totals(),
            "theta_K": self.theta_K.tolist(),
            "zeta_K": self.zeta_K.tolist(),
            "breakdown": {k: v.tolist() for k, v in self.breakdown.items()},
            **self.extra,
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=1)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["element", "theta_K", "zeta_K", *TERMS])
        for k in range(self.n_elements):
            w.writerow([k, repr(float(self.theta_K[k])), repr(float(self.zeta_K[k]))]
                       + [repr(float(self.breakdown[t][k])) for t in TERMS])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def estimate(u_h: FeFunction, data: ProblemData, mode: str | None = None,
             proj: ProjectedData | None = None) -> EstimatorReport:
    """Local indicators, their breakdown and the approximation terms."""
    space = u_h.space
    mesh = space.mesh
    if mode is None:
        mode = default_mode(u_h)
    anisotropic, nonconforming = check_mode(mode)
    if proj is None:
        proj = project_data(data, mesh)
    w_vol, w_edge, w_jump = _weights(mesh, anisotropic)
    nc = mesh.n_cells
    cells = np.arange(nc)
    ce = mesh.cell_edges

    # volume residual
    rule = _cell_rule(u_h)
    rK = element_residual_values(u_h, data, proj, cells, rule.points)
    vol = w_vol * mesh.areas * (rK ** 2 @ rule.weights)

    line = gauss_interval(min(2 * space.degree + 2, 15))
    s = line.points[:, 0]
    lengths = mesh.edge_lengths

    # flux jumps on interior matrix edges
    edge_term = np.zeros(mesh.n_edges)
    inner = mesh.interior_matrix_edges
    if len(inner):
        jv = flux_jump_values(u_h, data, inner, s)
        edge_term[inner] = _edge_norms2(jv, lengths[inner], line.weights)
    flux = np.sum(np.where(mesh.edge_location[ce] == INTERIOR, w_edge * edge_term[ce], 0.0), axis=1)

    # conduit and interface residuals on y=0
    cedges = space.conduit_edge_ids
    cond_e = np.zeros(mesh.n_edges)
    intf_e = np.zeros(mesh.n_edges)
    rE = conduit_residual_values(u_h, data, proj, s)
    cond_e[cedges] = _edge_norms2(rE, lengths[cedges], line.weights)
    iE = interface_residual_values(u_h, data, s)
    intf_e[cedges] = _edge_norms2(iE, lengths[cedges], line.weights)
    on_c = mesh.edge_location[ce] == CONDUIT
    conduit = np.sum(np.where(on_c, w_edge * cond_e[ce], 0.0), axis=1)
    interface = np.sum(np.where(on_c, w_edge * intf_e[ce], 0.0), axis=1)

    # nonconformity jumps on matrix edges (interior, including y=0)
    nonconf = np.zeros(nc)
    if nonconforming:
        shared = np.flatnonzero(mesh.edge_location != BOUNDARY)
        jmp = np.zeros(mesh.n_edges)
        jmp[shared] = _edge_norms2(u_h.edge_jump(shared, s), lengths[shared], line.weights)
        nonconf = np.sum(np.where(mesh.edge_location[ce] != BOUNDARY, w_jump * jmp[ce], 0.0), axis=1)

    breakdown = {"volume": vol, "flux_jump": flux, "conduit": conduit, "interface": interface,
                 "nonconformity": nonconf}
    theta_K = np.sqrt(sum(breakdown.values()))
    zeta_K = approximation_terms(data, proj, mode)
    return EstimatorReport(mode, theta_K, zeta_K, breakdown)


def approximation_terms(data: ProblemData, proj: ProjectedData, mode: str,
                        degree: int = DATA_DEGREE) -> np.ndarray:
    """zeta_K from the data-projection errors."""
    mesh = proj.mesh
    anisotropic, _ = check_mode(mode)
    w_vol, w_edge, _ = _weights(mesh, anisotropic)
    rule = quadrature(mesh.shape, degree)
    cells = np.arange(mesh.n_cells)
    X = _default_physical(mesh, cells, rule.points)
    d = _eval_fm(data, X) - proj.fm_values(cells, rule.points)
    z2 = w_vol * mesh.areas * (d ** 2 @ rule.weights)
    line = gauss_interval(degree)
    x = _conduit_x(mesh, line.points[:, 0])
    dc = _eval_fc(data, x) - proj.fc_mean[:, None]
    osc = np.zeros(mesh.n_edges)
    ced = mesh.conduit_edges
    osc[ced] = mesh.edge_lengths[ced] * (dc ** 2 @ line.weights)
    on_c = mesh.edge_location[mesh.cell_edges] == CONDUIT
    z2 = z2 + np.sum(np.where(on_c, w_edge * osc[mesh.cell_edges], 0.0), axis=1)
    return np.sqrt(z2)


def local_indicator(u_h: FeFunction, element: int, data: ProblemData, mode: str | None = None,
                    proj: ProjectedData | None = None) -> tuple[float, dict[str, float]]:
    rep = estimate(u_h, data, mode, proj)
    return float(rep.theta_K[element]), {k: float(v[element]) for k, v in rep.breakdown.items()}


# ---------------------------------------------------------- alignment measure
def gradient_field(grad):
    """Wrap ``grad(x, y) -> (..., 2)`` as a per-cell sampler."""
    def sample(cells, X):
        return np.asarray(grad(X[..., 0], X[..., 1]), dtype=float)
    return sample


def alignment_measure(grad_sampler, mesh: Mesh, degree: int = 8) -> float:
    """m1 = (sum_K h_min^-2 ||C_K^T grad v||_K^2)^(1/2) / ||grad v||.

    ``grad_sampler(cells, X)`` returns gradients (ncells, npts, 2) at physical
    points X of the given cells; use :func:`gradient_field` for plain
    callables.
    """
    rule = quadrature(mesh.shape, degree)
    cells = np.arange(mesh.n_cells)
    X = _default_physical(mesh, cells, rule.points)
    g = grad_sampler(cells, X)
    Cg = np.einsum("cij,cqi->cqj", mesh.C, g)
    num = np.sum(mesh.areas * (np.sum(Cg ** 2, axis=-1) @ rule.weights) / mesh.h_min ** 2)
    den = np.sum(mesh.areas * (np.sum(g ** 2, axis=-1) @ rule.weights))
    if not den > 0:
        raise EstimatorError("alignment measure needs a field with nonzero gradient")
    return float(np.sqrt(num / den))


def fe_gradient_sampler(u_h: FeFunction):
    def sample(cells, X):
        return u_h.gradients_at(cells, X)
    return sample


def error_gradient_sampler(grad_exact, u_h: FeFunction):
    """Gradient of u - u_h for an exact gradient callable ``grad(x, y)``."""
    def sample(cells, X):
        return np.asarray(grad_exact(X[..., 0], X[..., 1]), dtype=float) - u_h.gradients_at(cells, X)
    return sample
