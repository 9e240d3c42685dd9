import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from karst.assembly import ProblemData
from karst.elements import FeFunction, FeSpace, interpolate, reference_basis
from karst.estimator import (MODES, TERMS, EstimatorError, alignment_measure, conduit_residual, element_residual,
                             estimate, fe_gradient_sampler, flux_jump, flux_jump_values, gradient_field,
                             local_indicator, project_data)
from karst.mesh import DomainGeometry, build_graded_mesh, mesh_family, tensor_mesh
from karst.solver import SolverConfig, solve_problem
from karst.verification.cases import make_case

ONE_M = lambda x, y: np.ones(np.broadcast(x, y).shape)  # noqa: E731


def space_for(tag, nx=3, ny=2, q=1.0, geom=DomainGeometry()):
    tri = reference_basis(tag).shape == "triangle"
    return FeSpace(mesh_family(geom, nx, ny, q, tri), tag)


# ---------------------------------------------------------------- projection
@pytest.mark.parametrize("tri", [True, False])
def test_linear_source_reproduced(tri):
    mesh = mesh_family(DomainGeometry(), 3, 2, 0.5, tri)
    data = ProblemData(f_m=lambda x, y: 1 + 2 * x - 3 * y, f_c=lambda x: 2.5 + 0 * x)
    proj = project_data(data, mesh)
    ref = np.array([[0.2, 0.3], [0.1, 0.1]])
    cells = np.arange(mesh.n_cells)
    x0, B = mesh.affine_maps
    X = x0[:, None] + np.einsum("cij,pj->cpi", B, ref)
    np.testing.assert_allclose(proj.fm_values(cells, ref), 1 + 2 * X[..., 0] - 3 * X[..., 1], atol=1e-13)
    np.testing.assert_allclose(proj.fc_mean, 2.5)
    rep = estimate(interpolate(FeSpace(mesh, "P1" if tri else "Q1")), data)
    assert rep.zeta <= 1e-13


def test_conduit_mean_of_x():
    # [DERIVED] mean of x over [0, 1/2]
    proj = project_data(ProblemData(f_c=lambda x: x), build_graded_mesh(DomainGeometry(), 2, 1))
    assert proj.fc_mean[0] == pytest.approx(0.25, abs=1e-15)


# ----------------------------------------------------------------- residuals
def test_element_residual_p1_and_q1_xy():
    data = ProblemData(f_m=lambda x, y: 1 + x)
    for tag, fun in (("P1", lambda x, y: 3 * x - y), ("Q1", lambda x, y: x * y)):
        sp_ = space_for(tag)
        u = interpolate(sp_, fun)
        proj = project_data(data, sp_.mesh)
        r = element_residual(u, 1, proj, data)
        c = sp_.mesh.vertices[sp_.mesh.cells[1]].mean(axis=0)
        assert r(c[0], c[1]) == pytest.approx(1 + c[0], abs=1e-12)


def test_flux_jump_linear_and_kink():
    sp_ = FeSpace(build_graded_mesh(DomainGeometry(), 2, 2), "Q1")
    data = ProblemData()
    lin = interpolate(sp_, lambda x, y: 2 * x + y)
    inner = sp_.mesh.interior_matrix_edges
    assert np.abs(flux_jump_values(lin, data, inner, np.linspace(0, 1, 4))).max() <= 1e-12
    kink = interpolate(sp_, lambda x, y: np.abs(y - 0.5))
    mid = sp_.mesh.vertices[sp_.mesh.edge_vertices[inner]].mean(axis=1)
    e = int(inner[np.flatnonzero(np.isclose(mid[:, 1], 0.5))[0]])
    np.testing.assert_allclose(np.abs(flux_jump(kink, e, data)(np.array([0.3, 0.7]))), 2.0, atol=1e-12)


def test_flux_jump_rejects_boundary_and_conduit():
    sp_ = space_for("Q1")
    u = FeFunction(sp_)
    for e in (sp_.mesh.boundary_edges[0], sp_.mesh.conduit_edges[0]):
        with pytest.raises(EstimatorError):
            flux_jump_values(u, ProblemData(), [e], np.array([0.5]))


def test_flux_jump_two_sided_oracle():
    sp_ = space_for("CR1", 3, 2, 0.5)
    u = FeFunction(sp_, np.random.default_rng(5).normal(size=sp_.n_dofs))
    data = ProblemData(K=1.7)
    mesh = sp_.mesh
    s = np.array([0.5])  # CR1 gradients are constant: the midpoint rule is exact
    for e in mesh.interior_matrix_edges:
        k1, k2 = mesh.edge_cells[e]
        n = mesh.edge_normals[e]
        p = sp_.edge_points([e], s)
        g1 = u.gradients_at([k1], p)[0, 0]
        g2 = u.gradients_at([k2], p)[0, 0]
        assert flux_jump(u, e, data)(0.5)[0] == pytest.approx(1.7 * (g2 - g1) @ n, abs=1e-12)


def test_conduit_residual_examples():
    sp_ = space_for("P1", 4, 2)
    s = np.array([0.0, 0.4, 1.0])
    h = np.diff(sp_.conduit_breaks)
    # all terms vanish
    data = ProblemData(alpha=0.0)
    u = interpolate(sp_, None, lambda x: 0.5 * x)
    proj = project_data(data, sp_.mesh)
    assert np.abs(conduit_residual(u, 1, proj, data)(s)).max() == 0.0
    # data only
    data = ProblemData(f_c=lambda x: 1 + 0 * x)
    proj = project_data(data, sp_.mesh)
    np.testing.assert_allclose(conduit_residual(FeFunction(sp_), 2, proj, data)(s), 1.0)
    # [DERIVED] r_E = alpha x for u_m = x, u_c = 0
    data = ProblemData(alpha=2.0)
    u = interpolate(sp_, lambda x, y: x)
    proj = project_data(data, sp_.mesh)
    for j in range(len(h)):
        x = sp_.conduit_breaks[j] + h[j] * s
        np.testing.assert_allclose(conduit_residual(u, j, proj, data)(s), 2 * x, atol=1e-13)


# ----------------------------------------------------------------- indicator
@pytest.mark.parametrize("tag", ["P2", "Q2", "P3", "Q3"])
def test_exact_polynomial_solution_gives_zero(tag):
    case = make_case("conduit-polynomial", DomainGeometry())
    sp_ = space_for(tag, 3, 2, 0.5)
    u, _ = solve_problem(sp_, case.data, SolverConfig("direct"))
    rep = estimate(u, case.data)
    assert rep.theta <= 1e-12 and rep.zeta <= 1e-12


def test_single_term_weight():
    # unit halves, u_h = 0, f_m = 1: only the volume term, weight h_min^2 = 1
    sp_ = FeSpace(build_graded_mesh(DomainGeometry(), 1, 1), "Q1")
    rep = estimate(FeFunction(sp_), ProblemData(f_m=ONE_M))
    np.testing.assert_allclose(rep.theta_K, 1.0, atol=1e-14)
    assert rep.breakdown["flux_jump"].sum() == 0 and rep.breakdown["conduit"].sum() == 0


def test_conforming_mode_has_no_jump_term():
    sp_ = space_for("Q1")
    u = FeFunction(sp_, np.random.default_rng(0).normal(size=sp_.n_dofs))
    rep = estimate(u, ProblemData(f_m=ONE_M), "anisotropic-conforming")
    assert np.all(rep.breakdown["nonconformity"] == 0)


def test_unknown_mode():
    with pytest.raises(EstimatorError):
        estimate(FeFunction(space_for("P1")), ProblemData(), "sideways")


def test_local_indicator_matches_report():
    case = make_case("layered", DomainGeometry(), a=2.0)
    sp_ = space_for("CR2", 3, 2, 0.5)
    u, _ = solve_problem(sp_, case.data)
    rep = estimate(u, case.data)
    th, parts = local_indicator(u, 4, case.data)
    assert th == rep.theta_K[4]
    assert set(parts) == set(TERMS)


# ------------------------------------------------------------- approximation
def test_zeta_single_conduit_edge():
    # [DERIVED] ||x - mean||^2 on [0, h] is h^3/12; weight h_min^2/h_E = 0.5
    h = 0.5
    mesh = build_graded_mesh(DomainGeometry(h, 0.5), 1, 1)
    rep = estimate(FeFunction(FeSpace(mesh, "Q1")), ProblemData(f_c=lambda x: x))
    np.testing.assert_allclose(rep.zeta_K ** 2, 0.5 * h ** 3 / 12, rtol=1e-12)


def test_zeta_decreases_under_refinement():
    case = make_case("layered", DomainGeometry(), a=2.0)
    z = [estimate(FeFunction(FeSpace(mesh_family(DomainGeometry(), n, n), "Q1")), case.data).zeta
         for n in (4, 8)]
    assert z[1] < z[0]


# ------------------------------------------------------------- invariants
@pytest.mark.parametrize("tag", ["P1", "Q1", "CR1", "CR2", "CR3", "Q2"])
def test_breakdown_sums(tag):
    case = make_case("layered", DomainGeometry(), a=2.0)
    sp_ = space_for(tag, 3, 3, 0.5)
    u, _ = solve_problem(sp_, case.data)
    rep = estimate(u, case.data)
    total = sum(rep.breakdown[t].sum() for t in TERMS)
    assert rep.theta ** 2 == pytest.approx(total, rel=1e-12)
    assert all(np.all(v >= 0) for v in rep.breakdown.values())


def test_conforming_solution_in_nonconforming_mode():
    case = make_case("layered", DomainGeometry(), a=2.0)
    sp_ = space_for("Q1", 4, 3, 0.5)
    u, _ = solve_problem(sp_, case.data)
    a = estimate(u, case.data, "anisotropic-conforming").theta
    b = estimate(u, case.data, "anisotropic-nonconforming").theta
    assert b == pytest.approx(a, rel=1e-12)


@given(st.floats(0.1, 50.0), st.sampled_from(["P1", "Q1", "CR1"]))
def test_scaling(s, tag):
    case = make_case("layered", DomainGeometry(), a=2.0)
    sp_ = space_for(tag, 3, 2, 0.5)
    cfg = SolverConfig("direct")
    u, _ = solve_problem(sp_, case.data, cfg)
    us, _ = solve_problem(sp_, case.data.scaled(s), cfg)
    a, b = estimate(u, case.data), estimate(us, case.data.scaled(s))
    assert b.theta == pytest.approx(s * a.theta, rel=1e-10)
    assert b.zeta == pytest.approx(s * a.zeta, rel=1e-10)


def test_isotropic_vs_anisotropic_on_squares():
    case = make_case("layered", DomainGeometry(), a=2.0)
    sp_ = space_for("Q1", 4, 4)
    u, _ = solve_problem(sp_, case.data)
    ani = estimate(u, case.data, "anisotropic-conforming")
    iso = estimate(u, case.data, "isotropic-conforming")
    for t in TERMS:
        a, i = ani.breakdown[t], iso.breakdown[t]
        mask = a > 0
        r = np.sqrt(i[mask] / a[mask])
        assert np.all((r >= 1 - 1e-12) & (r <= np.sqrt(2) + 1e-12))


def test_serialisation():
    case = make_case("layered", DomainGeometry(), a=2.0)
    sp_ = space_for("P1")
    u, _ = solve_problem(sp_, case.data)
    rep = estimate(u, case.data)
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert rows[0] == ["element", "theta_K", "zeta_K", *TERMS]
    assert len(rows) == sp_.mesh.n_cells + 1
    assert float(rows[3][1]) == rep.theta_K[2]
    doc = json.loads(rep.to_json())
    assert doc["theta"] == pytest.approx(rep.theta) and doc["mode"] in MODES


# ---------------------------------------------------------------- alignment
def slab_mesh():
    # 1 x 0.1 rectangles
    return tensor_mesh(DomainGeometry(4.0, 0.2), np.linspace(0, 4, 5), np.linspace(-0.2, 0.2, 5))


def test_alignment_aligned_and_misaligned():
    m = slab_mesh()
    assert alignment_measure(gradient_field(lambda x, y: np.stack([0 * x, 1 + 0 * y], -1)), m) == \
        pytest.approx(1.0, abs=1e-12)
    assert alignment_measure(gradient_field(lambda x, y: np.stack([1 + 0 * x, 0 * y], -1)), m) == \
        pytest.approx(10.0, abs=1e-12)


def test_alignment_isotropic_is_one():
    m = build_graded_mesh(DomainGeometry(), 4, 4)
    g = gradient_field(lambda x, y: np.stack([np.cos(3 * x + y), x * y], -1))
    assert alignment_measure(g, m) == pytest.approx(1.0, abs=1e-12)


def test_alignment_zero_gradient():
    with pytest.raises(EstimatorError):
        alignment_measure(gradient_field(lambda x, y: np.zeros(x.shape + (2,))), slab_mesh())


@given(st.integers(0, 2 ** 31 - 1), st.floats(0.3, 1.0), st.booleans())
def test_alignment_crude_bounds(seed, q, tri):
    mesh = mesh_family(DomainGeometry(), 3, 4, q, tri)
    sp_ = FeSpace(mesh, "P1" if tri else "Q1")
    u = FeFunction(sp_, np.random.default_rng(seed).normal(size=sp_.n_dofs))
    m1 = alignment_measure(fe_gradient_sampler(u), mesh)
    assert 1 - 1e-10 <= m1 <= mesh.aspect_ratios.max() + 1e-10
