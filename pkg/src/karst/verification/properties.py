"""Randomised property suites with measured constants.

Each suite returns a :class:`SuiteResult`; failures are recorded, never
raised, so a single report covers every check.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from ..assembly import (ProblemData, apply_dirichlet, assemble_system, bilinear_matrix, load_vector,
                        norm_matrix)
from ..elements import FAMILY_TAGS, FeFunction, FeSpace, interpolate, reference_basis
from ..elements.bubbles import (edge_adapted_map, ref_edge_bubble, ref_edge_bubble_grad,
                                ref_element_bubble, ref_element_bubble_grad)
from ..elements.clement import clement_basis_function, clement_interpolate, clement_space, interior_nodes
from ..estimator import alignment_measure, fe_gradient_sampler, gradient_field
from ..mesh import (RECTANGLE, TRIANGLE, DomainGeometry, Mesh, grading_for_aspect, mesh_family,
                    split_to_triangles, tensor_mesh)
from ..quadrature import gauss_interval, quadrature
from ..solver import SolverConfig, solve_linear, solve_problem
from .cases import make_layered_case
from .consistency import galerkin_defect
from .norms import discrete_norm

log = logging.getLogger(__name__)

SUITES = ("unisolvence", "cr_property", "inverse_inequalities", "clement", "clement_subspace",
          "coercivity", "alignment", "galerkin", "solver_equivalence")


@dataclass
class PropertyConfig:
    seed: int = 0
    aspects: tuple = (1, 10, 100, 1000)
    n_polynomials: int = 100
    n_clement_fields: int = 50
    n_alignment_fields: int = 200
    stability_factor: float = 10.0


@dataclass
class SuiteResult:
    name: str
    passed: bool
    constants: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    seconds: float = 0.0


@dataclass
class PropertyReport:
    seed: int
    suites: list[SuiteResult]

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.suites)

    @property
    def failures(self) -> list[str]:
        return [f"{s.name}: {f}" for s in self.suites for f in s.failures]

    def suite(self, name: str) -> SuiteResult:
        for s in self.suites:
            if s.name == name:
                return s
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"seed": self.seed, "passed": self.passed, "failures": self.failures,
                "suites": [asdict(s) for s in self.suites]}

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, default=float)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _spread(values) -> float:
    v = np.asarray(values, dtype=float)
    return float(v.max() / v.min())


# --------------------------------------------------------------- unisolvence
def suite_unisolvence(cfg: PropertyConfig) -> SuiteResult:
    res = SuiteResult("unisolvence", True)
    for tag in FAMILY_TAGS:
        err = reference_basis(tag).unisolvence_error()
        res.constants[tag] = err
        if not err <= 1e-12:
            res.passed = False
            res.failures.append(f"{tag}: max |theta_i(q_j) - delta_ij| = {err:.3e}")
    return res


# ------------------------------------------------------------ CR property
def edge_jump_means(space: FeSpace, edges=None) -> sp.csr_matrix:
    """Row e holds the edge mean of [phi_j] for every global basis function j."""
    mesh = space.mesh
    if edges is None:
        edges = np.arange(mesh.n_edges)
    edges = np.asarray(edges)
    line = gauss_interval(2 * space.degree + 2)
    pts = space.edge_points(edges, line.points[:, 0])
    k1, k2 = mesh.edge_cells[edges].T
    phi1 = np.einsum("q,eql->el", line.weights, space.element.values(space.to_reference(k1, pts)))
    rows = np.repeat(np.arange(len(edges)), phi1.shape[1])
    data = [-phi1.ravel()]
    cols = [space.cell_dofs[k1].ravel()]
    inner = k2 >= 0
    if np.any(inner):
        phi2 = np.einsum("q,eql->el", line.weights,
                         space.element.values(space.to_reference(k2[inner], pts[inner])))
        data.append(phi2.ravel())
        cols.append(space.cell_dofs[k2[inner]].ravel())
        rows = np.concatenate([rows, np.repeat(np.flatnonzero(inner), phi2.shape[1])])
    return sp.coo_matrix((np.concatenate(data), (rows, np.concatenate(cols))),
                         shape=(len(edges), space.n_dofs)).tocsr()


def suite_cr_property(cfg: PropertyConfig) -> SuiteResult:
    """Basis-function and solved-solution forms of the zero-mean-jump property."""
    res = SuiteResult("cr_property", True)
    geom = DomainGeometry()
    case = make_layered_case(geom, alpha=1.0, a=2.0 / geom.H_m)
    for tag, tri in (("CR1", True), ("CR2", False), ("CR3", False)):
        mesh = mesh_family(geom, 6, 4, 0.5, tri)
        space = FeSpace(mesh, tag)
        T = edge_jump_means(space)[:, space.free_dofs]
        basis = float(abs(T).max()) if T.nnz else 0.0
        u_h, _ = solve_problem(space, case.data, SolverConfig("direct"))
        means = edge_jump_means(space) @ u_h.coefficients
        sol = float(np.max(np.abs(means)) / discrete_norm(u_h))
        res.constants[tag] = {"basis_max_mean_jump": basis, "solution_max_mean_jump_rel": sol}
        if not basis <= 1e-12:
            res.passed = False
            res.failures.append(f"{tag}: basis function edge-mean jump {basis:.3e}")
        if not sol <= 1e-10:
            res.passed = False
            res.failures.append(f"{tag}: solution edge-mean jump {sol:.3e} (relative)")
    return res


# ------------------------------------------------------ inverse inequalities
_P2_EXPS = np.array([(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)])


def _random_poly(rng, n: int, degree: int, dim: int = 2) -> np.ndarray:
    """Coefficients (n, nmon) of random polynomials of exact total degree <= ``degree``."""
    if dim == 1:
        c = rng.standard_normal((n, 3))
        c[:, degree + 1:] = 0.0
        return c
    c = rng.standard_normal((n, len(_P2_EXPS)))
    c[:, _P2_EXPS.sum(axis=1) > degree] = 0.0
    return c


def _poly2(c, xi):
    x, y = xi[..., 0], xi[..., 1]
    mon = np.stack([x ** i * y ** j for i, j in _P2_EXPS], axis=-1)
    dx = np.stack([i * x ** max(i - 1, 0) * y ** j for i, j in _P2_EXPS], axis=-1)
    dy = np.stack([j * x ** i * y ** max(j - 1, 0) for i, j in _P2_EXPS], axis=-1)
    return mon @ c.T, np.stack([dx @ c.T, dy @ c.T], axis=-1)


def _poly1(c, s):
    P = s[:, None] ** np.arange(3)
    dP = np.zeros_like(P)
    dP[:, 1:] = np.arange(1, 3) * s[:, None] ** np.arange(2)
    return P @ c.T, dP @ c.T


def single_element_mesh(shape: str, aspect: float) -> Mesh:
    """[0,1] x [0,1/aspect] (split along its diagonal for triangles)."""
    geom = DomainGeometry(1.0, 1.0 / aspect)
    mesh = tensor_mesh(geom, np.array([0.0, 1.0]), np.array([-1.0 / aspect, 0.0, 1.0 / aspect]))
    return split_to_triangles(mesh) if shape == TRIANGLE else mesh


def inverse_ratios(mesh: Mesh, k: int, coef2, coef1) -> dict[str, np.ndarray]:
    """r1..r5 on cell ``k`` for the random polynomials; edges stacked along axis 0.

    r2 uses the bubble b_K itself: the gradient of b_K^{1/2} is not square
    integrable up to the boundary.
    """
    shape = mesh.shape
    rule = quadrature(shape, 12)
    x0, B = mesh.affine_maps
    Binv = np.linalg.inv(B[k])
    area = mesh.areas[k]
    v, dv = _poly2(coef2, rule.points)  # (q, n), (q, n, 2)
    b = ref_element_bubble(shape, rule.points)[:, None]
    db = ref_element_bubble_grad(shape, rule.points)
    nv = np.sqrt(area * (rule.weights @ v ** 2))
    r1 = np.sqrt(area * (rule.weights @ (v ** 2 * b))) / nv
    g = (dv * b[..., None] + v[..., None] * db[:, None, :]) @ Binv
    r2 = np.sqrt(area * (rule.weights @ np.sum(g ** 2, axis=-1))) * mesh.h_min[k] / nv

    line = gauss_interval(12)
    s = line.points[:, 0]
    r3, r4, r5 = [], [], []
    for j, e in enumerate(mesh.cell_edges[k]):
        le = mesh.edge_lengths[e]
        hEK = mesh.h_EK[k, j]
        ve, _ = _poly1(coef1, s)
        be = ref_edge_bubble(shape, np.stack([s, np.zeros_like(s)], axis=-1))[:, None]
        nve = np.sqrt(le * (line.weights @ ve ** 2))
        r3.append(np.sqrt(le * (line.weights @ (ve ** 2 * be))) / nve)
        _, Be = edge_adapted_map(mesh, int(e), k)
        ve_q, dve_q = _poly1(coef1, rule.points[:, 0])
        bq = ref_edge_bubble(shape, rule.points)[:, None]
        dbq = ref_edge_bubble_grad(shape, rule.points)
        w = ve_q * bq
        gref = np.stack([dve_q * bq + ve_q * dbq[:, None, 0], ve_q * dbq[:, None, 1]], axis=-1)
        gphys = gref @ np.linalg.inv(Be)
        r4.append(np.sqrt(area * (rule.weights @ w ** 2)) / (np.sqrt(hEK) * nve))
        r5.append(np.sqrt(area * (rule.weights @ np.sum(gphys ** 2, axis=-1))) * mesh.h_min[k]
                  / (np.sqrt(hEK) * nve))
    return {"r1": r1, "r2": r2, "r3": np.concatenate(r3), "r4": np.concatenate(r4), "r5": np.concatenate(r5)}


def suite_inverse_inequalities(cfg: PropertyConfig) -> SuiteResult:
    res = SuiteResult("inverse_inequalities", True)
    rng = np.random.default_rng(cfg.seed)
    for shape in (TRIANGLE, RECTANGLE):
        per_aspect = {}
        for a in cfg.aspects:
            mesh = single_element_mesh(shape, a)
            k = mesh.n_cells - 1  # a cell of the upper half
            acc: dict[str, list] = {}
            for deg in (0, 1, 2):
                c2 = _random_poly(rng, cfg.n_polynomials, deg)
                c1 = _random_poly(rng, cfg.n_polynomials, deg, dim=1)
                for key, val in inverse_ratios(mesh, k, c2, c1).items():
                    acc.setdefault(key, []).append(val)
            per_aspect[a] = {key: np.concatenate(v) for key, v in acc.items()}
        consts = {}
        for key in ("r1", "r2", "r3", "r4", "r5"):
            hi = [float(per_aspect[a][key].max()) for a in cfg.aspects]
            lo = [float(per_aspect[a][key].min()) for a in cfg.aspects]
            consts[key] = {"max": dict(zip(map(str, cfg.aspects), hi)),
                           "min": dict(zip(map(str, cfg.aspects), lo)),
                           "spread_max": _spread(hi)}
            if _spread(hi) > cfg.stability_factor:
                res.passed = False
                res.failures.append(f"{shape} {key}: upper constant varies by {_spread(hi):.2f}")
            if key in ("r1", "r3"):
                consts[key]["spread_min"] = _spread(lo)
                if not (min(lo) > 0 and _spread(lo) <= cfg.stability_factor and max(hi) <= 1 + 1e-12):
                    res.passed = False
                    res.failures.append(f"{shape} {key}: lower bound {min(lo):.3e}, upper {max(hi):.6f}")
        res.constants[shape] = consts
    return res


# ------------------------------------------------------------------- Clement
def _nested_fine_mesh(coarse: Mesh, r: int) -> Mesh:
    xs, ys = coarse.grid
    t = np.linspace(0.0, 1.0, r + 1)[:-1]
    fx = (xs[:-1, None] + np.outer(np.diff(xs), t)).ravel()
    fy = (ys[:-1, None] + np.outer(np.diff(ys), t)).ravel()
    fine = tensor_mesh(coarse.geometry, np.append(fx, xs[-1]), np.append(fy, ys[-1]))
    return split_to_triangles(fine) if coarse.shape == TRIANGLE else fine


def clement_ratios(coarse: Mesh, fine: Mesh, fields: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(cle1, cle2) LHS / (m1^2 ||grad v||^2) for fine-mesh P1/Q1 fields (rows of ``fields``)."""
    fspace = clement_space(fine)
    rule = quadrature(fine.shape, 6)
    fcells = np.arange(fine.n_cells)
    X = fspace.to_physical(fcells, rule.points)
    centroid = X.mean(axis=1)
    parent = coarse.locate(centroid)
    cspace = clement_space(coarse)
    Xc = X.reshape(-1, 2)
    par_q = np.repeat(parent, X.shape[1])
    # coarse edges: composite Gauss over pieces cut at the fine grid lines
    line = gauss_interval(6)
    fxs, fys = fine.grid
    edge_pts, edge_w, edge_id = [], [], []
    for e in range(coarse.n_edges):
        a, b = coarse.vertices[coarse.edge_vertices[e]]
        coord = 0 if abs(b[1] - a[1]) < 1e-14 else 1
        grid = fxs if coord == 0 else fys
        lo, hi = sorted((a[coord], b[coord]))
        cuts = grid[(grid >= lo - 1e-14) & (grid <= hi + 1e-14)]
        for c0, c1 in zip(cuts[:-1], cuts[1:]):
            p = np.repeat(a[None], len(line.weights), axis=0).astype(float)
            p[:, coord] = c0 + (c1 - c0) * line.points[:, 0]
            edge_pts.append(p)
            edge_w.append((c1 - c0) * line.weights)
            edge_id.append(np.full(len(line.weights), e))
    EP = np.concatenate(edge_pts)
    EW = np.concatenate(edge_w)
    EI = np.concatenate(edge_id)
    # nudge inside the domain so point location picks a neighbour cell
    eps = 1e-12 * np.array([coarse.geometry.L, coarse.geometry.H_m])
    EPin = np.clip(EP, [eps[0], -coarse.geometry.H_m + eps[1]], [coarse.geometry.L - eps[0], coarse.geometry.H_m - eps[1]])
    ef = fine.locate(EPin)
    ec = coarse.locate(EPin)
    wE = coarse.h_E / coarse.h_min_E ** 2

    cle1, cle2 = [], []
    for vals in fields:
        v = FeFunction(fspace, vals)
        vq = v.values(fcells, rule.points)
        ints = np.bincount(parent, (vq @ rule.weights) * fine.areas, minlength=coarse.n_cells)
        Iv = clement_interpolate(mesh=coarse, integrals=ints)
        d = vq.ravel() - Iv.values_at(par_q, Xc[:, None, :])[:, 0]
        lhs1 = np.sum((d.reshape(X.shape[:2]) ** 2 @ rule.weights) * fine.areas / coarse.h_min[parent] ** 2)
        de = v.values_at(ef, EPin[:, None, :])[:, 0] - Iv.values_at(ec, EPin[:, None, :])[:, 0]
        lhs2 = np.sum(wE[EI] * EW * de ** 2)
        g = v.gradients(fcells, rule.points)
        grad2 = np.sum((np.sum(g ** 2, axis=-1) @ rule.weights) * fine.areas)
        Cg = np.einsum("cij,cqi->cqj", coarse.C[parent], g)
        num = np.sum((np.sum(Cg ** 2, axis=-1) @ rule.weights) * fine.areas / coarse.h_min[parent] ** 2)
        m1sq = num / grad2
        cle1.append(lhs1 / (m1sq * grad2))
        cle2.append(lhs2 / (m1sq * grad2))
    return np.array(cle1), np.array(cle2)


def suite_clement(cfg: PropertyConfig) -> SuiteResult:
    res = SuiteResult("clement", True)
    rng = np.random.default_rng(cfg.seed + 1)
    geom = DomainGeometry()
    for shape in (TRIANGLE, RECTANGLE):
        c1s, c2s = {}, {}
        for a in cfg.aspects:
            ny, q = grading_for_aspect(geom, 4, a)
            coarse = mesh_family(geom, 4, ny, q, shape == TRIANGLE)
            fine = _nested_fine_mesh(coarse, 3)
            fspace = clement_space(fine)
            free = ~fspace.boundary_mask[: fspace.n_matrix_dofs]
            F = np.zeros((cfg.n_clement_fields, fspace.n_dofs))
            F[:, : fspace.n_matrix_dofs] = rng.standard_normal((cfg.n_clement_fields, fspace.n_matrix_dofs)) * free
            r1, r2 = clement_ratios(coarse, fine, F)
            c1s[str(a)], c2s[str(a)] = float(r1.max()), float(r2.max())
        s1, s2 = _spread(list(c1s.values())), _spread(list(c2s.values()))
        res.constants[shape] = {"cle1_max": c1s, "cle2_max": c2s, "cle1_spread": s1, "cle2_spread": s2}
        for key, s in (("cle1", s1), ("cle2", s2)):
            if s > cfg.stability_factor:
                res.passed = False
                res.failures.append(f"{shape} {key}: constant varies by {s:.2f} across aspect ratios")
    return res


def suite_clement_subspace(cfg: PropertyConfig) -> SuiteResult:
    """Every Clement basis function is reproduced by interpolation into V_h."""
    res = SuiteResult("clement_subspace", True)
    geom = DomainGeometry()
    for tag in FAMILY_TAGS:
        shape = reference_basis(tag).shape
        mesh = mesh_family(geom, 4, 2, 0.5, shape == TRIANGLE)
        space = FeSpace(mesh, tag)
        rule = quadrature(shape, 6)
        cells = np.arange(mesh.n_cells)
        X = space.to_physical(cells, rule.points)
        worst = 0.0
        for j in interior_nodes(mesh):
            hat = clement_basis_function(mesh, j)

            def fun(x, y, hat=hat):
                P = np.stack([np.ravel(x), np.ravel(y)], axis=-1)
                return hat.values_at(mesh.locate(P), P[:, None, :])[:, 0].reshape(np.shape(x))

            w = interpolate(space, fun)
            worst = max(worst, float(np.max(np.abs(w.values_at(cells, X) - hat.values_at(cells, X)))))
        res.constants[tag] = worst
        if not worst <= 1e-10:
            res.passed = False
            res.failures.append(f"{tag}: Clement basis reproduced only to {worst:.3e}")
    return res


# ---------------------------------------------------------------- coercivity
def suite_coercivity(cfg: PropertyConfig) -> SuiteResult:
    """Smallest eigenvalue of a_h against the discrete norm, plus random Rayleigh quotients."""
    res = SuiteResult("coercivity", True)
    rng = np.random.default_rng(cfg.seed + 2)
    geom = DomainGeometry()
    data = ProblemData(K=1.0, D=1.0, alpha=1.0)
    for tag in FAMILY_TAGS:
        shape = reference_basis(tag).shape
        consts = {}
        for a in (1, 100):
            ny, q = grading_for_aspect(geom, 4, a)
            mesh = mesh_family(geom, 4, ny, q, shape == TRIANGLE)
            space = FeSpace(mesh, tag)
            free = space.free_dofs
            A = bilinear_matrix(space, data)[free][:, free].toarray()
            N = norm_matrix(space)[free][:, free].toarray()
            lam = float(scipy.linalg.eigh(A, N, eigvals_only=True, subset_by_index=[0, 0])[0])
            V = rng.standard_normal((50, len(free)))
            rq = np.einsum("ni,ij,nj->n", V, A, V) / np.einsum("ni,ij,nj->n", V, N, V)
            consts[str(a)] = {"lambda_min": lam, "sampled_min": float(rq.min())}
            if not (lam > 0 and rq.min() >= lam * (1 - 1e-8)):
                res.passed = False
                res.failures.append(f"{tag} AR={a}: lambda_min={lam:.3e}, sampled={rq.min():.3e}")
        res.constants[tag] = consts
    return res


# --------------------------------------------------------- alignment measure
def uniform_aspect_mesh(aspect: float, nx: int = 4, triangles: bool = False) -> Mesh:
    """Tensor mesh on (0,1) x (-1,1) whose every cell has aspect ratio ``aspect``."""
    geom = DomainGeometry()
    hx = geom.L / nx
    ny = int(round(geom.H_m / (hx / aspect)))
    if ny * hx / aspect != geom.H_m:
        geom = DomainGeometry(geom.L, ny * hx / aspect)
    mesh = tensor_mesh(geom, np.linspace(0, geom.L, nx + 1), np.linspace(-geom.H_m, geom.H_m, 2 * ny + 1))
    return split_to_triangles(mesh) if triangles else mesh


def suite_alignment(cfg: PropertyConfig) -> SuiteResult:
    res = SuiteResult("alignment", True)
    exact = {}
    for a in cfg.aspects:
        mesh = uniform_aspect_mesh(a)
        m_short = alignment_measure(gradient_field(lambda x, y: np.stack([0 * x, 1 + 0 * y], -1)), mesh)
        m_long = alignment_measure(gradient_field(lambda x, y: np.stack([1 + 0 * x, 0 * y], -1)), mesh)
        exact[str(a)] = {"short_axis": m_short, "long_axis": m_long}
        if abs(m_short - 1) > 1e-12 or abs(m_long - a) > 1e-12 * a:
            res.passed = False
            res.failures.append(f"AR={a}: m1 = {m_short!r} (expect 1), {m_long!r} (expect {a})")
    res.constants["exact"] = exact
    rng = np.random.default_rng(cfg.seed + 3)
    geom = DomainGeometry()
    ny, q = grading_for_aspect(geom, 8, 100)
    mesh = mesh_family(geom, 8, ny, q, True)
    space = clement_space(mesh)
    bound = float(mesh.aspect_ratios.max())
    vals = []
    for _ in range(cfg.n_alignment_fields):
        c = np.zeros(space.n_dofs)
        c[: space.n_matrix_dofs] = rng.standard_normal(space.n_matrix_dofs)
        vals.append(alignment_measure(fe_gradient_sampler(FeFunction(space, c)), mesh))
    vals = np.array(vals)
    res.constants["random"] = {"min": float(vals.min()), "max": float(vals.max()), "bound": bound}
    if not (vals.min() >= 1 - 1e-12 and vals.max() <= bound * (1 + 1e-12)):
        res.passed = False
        res.failures.append(f"crude bounds violated: m1 in [{vals.min():.6f}, {vals.max():.3f}], bound {bound:.3f}")
    return res


# -------------------------------------------------------------------- Galerkin
def suite_galerkin(cfg: PropertyConfig) -> SuiteResult:
    """a_h(u - u_h, v_h) = 0 for conforming families (up to quadrature)."""
    res = SuiteResult("galerkin", True)
    geom = DomainGeometry()
    case = make_layered_case(geom, alpha=1.0, a=2.0 / geom.H_m)
    for tag in ("P1", "P2", "Q1", "Q2"):
        shape = reference_basis(tag).shape
        mesh = mesh_family(geom, 6, 4, 0.7, shape == TRIANGLE)
        u_h, _ = solve_problem(FeSpace(mesh, tag), case.data, SolverConfig("direct"))
        d = galerkin_defect(u_h, case)
        scale = float(np.abs(load_vector(u_h.space, case.data)).max())
        rel = float(np.abs(d).max() / scale)
        res.constants[tag] = rel
        if not rel <= 1e-8:
            res.passed = False
            res.failures.append(f"{tag}: |a(u - u_h, phi)| / |F| = {rel:.3e}")
    return res


# ------------------------------------------------------------ solver oracle
def suite_solver_equivalence(cfg: PropertyConfig, max_dofs: int = 500) -> SuiteResult:
    """CG against dense Cholesky on every family's system up to ``max_dofs`` unknowns."""
    res = SuiteResult("solver_equivalence", True)
    geom = DomainGeometry()
    case = make_layered_case(geom, alpha=1.0, a=2.0 / geom.H_m)
    for tag in FAMILY_TAGS:
        shape = reference_basis(tag).shape
        worst = 0.0
        for a in (1, 100):
            for nx in (2, 4, 8):
                ny, q = grading_for_aspect(geom, nx, a)
                space = FeSpace(mesh_family(geom, nx, ny, q, shape == TRIANGLE), tag)
                sysm = apply_dirichlet(assemble_system(space, case.data), space)
                if len(sysm.rhs) > max_dofs:
                    continue
                xc, _ = solve_linear(sysm.matrix, sysm.rhs, SolverConfig("cg", tol=1e-12))
                xd, _ = solve_linear(sysm.matrix, sysm.rhs, SolverConfig("dense"))
                worst = max(worst, float(np.linalg.norm(xc - xd) / np.linalg.norm(xd)))
        res.constants[tag] = worst
        if not worst <= 1e-8:
            res.passed = False
            res.failures.append(f"{tag}: CG vs dense relative difference {worst:.3e}")
    return res


_RUNNERS = {
    "unisolvence": suite_unisolvence,
    "cr_property": suite_cr_property,
    "inverse_inequalities": suite_inverse_inequalities,
    "clement": suite_clement,
    "clement_subspace": suite_clement_subspace,
    "coercivity": suite_coercivity,
    "alignment": suite_alignment,
    "galerkin": suite_galerkin,
    "solver_equivalence": suite_solver_equivalence,
}


def property_suites(cfg: PropertyConfig = PropertyConfig(), names=None) -> PropertyReport:
    names = SUITES if names is None else tuple(names)
    out = []
    for name in names:
        if name not in _RUNNERS:
            raise KeyError(f"unknown property suite {name!r}")
        t = time.perf_counter()
        r = _RUNNERS[name](cfg)
        r.seconds = time.perf_counter() - t
        log.info("suite %s: %s (%.2fs)", name, "pass" if r.passed else "FAIL", r.seconds)
        out.append(r)
    return PropertyReport(cfg.seed, out)
