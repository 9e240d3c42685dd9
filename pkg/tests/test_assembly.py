import numpy as np
import pytest
import scipy.io
from hypothesis import given, strategies as st

from karst.assembly import (AssemblyError, ProblemData, apply_dirichlet, assemble_system, conduit_matrices,
                            exchange_matrix, stiffness_matrix)
from karst.elements import FAMILY_TAGS, FeSpace, reference_basis
from karst.mesh import DomainGeometry, mesh_family
from karst.solver import SolverConfig, solve_problem
from karst.verification.cases import make_case
from karst.verification.consistency import galerkin_defect, weak_residual


def space_for(tag, nx=3, ny=2, q=1.0, geom=DomainGeometry()):
    tri = reference_basis(tag).shape == "triangle"
    return FeSpace(mesh_family(geom, nx, ny, q, tri), tag)


def test_decoupled_blocks():
    sp_ = space_for("P1", 4, 3)
    data = ProblemData(K=2.5, D=0.7, alpha=0.0)
    A = assemble_system(sp_, data).matrix.toarray()
    nm = sp_.n_matrix_dofs
    np.testing.assert_allclose(A[:nm, nm:], 0.0)
    np.testing.assert_allclose(A[:nm, :nm], 2.5 * stiffness_matrix(sp_).toarray()[:nm, :nm], atol=1e-13)
    Kc, _ = conduit_matrices(sp_)
    np.testing.assert_allclose(A[nm:, nm:], 0.7 * Kc.toarray()[nm:, nm:], atol=1e-13)
    # constants lie in the kernel of the Laplace stiffness
    np.testing.assert_allclose(A[:nm, :nm].sum(axis=1), 0.0, atol=1e-12)


def test_homogeneous_problem():
    sp_ = space_for("Q1")
    data = ProblemData(K=1, D=1, alpha=1)
    sys_ = assemble_system(sp_, data)
    assert np.all(sys_.rhs == 0)
    u, rep = solve_problem(sp_, data)
    assert np.all(u.coefficients == 0) and rep.iterations == 0


def test_one_element_coupling_mass():
    # [DERIVED] 1D P1 mass matrix on a single edge of length L
    L, alpha = 2.0, 1.5
    sp_ = FeSpace(mesh_family(DomainGeometry(L, 1.0), 1, 1), "Q1")
    E = exchange_matrix(sp_, alpha).toarray()
    conduit_nodes = np.flatnonzero(sp_.mesh.vertices[:, 1] == 0)
    ids = [sp_.dof_keys.index(("v", int(v))) for v in conduit_nodes]
    assert E[ids[0], ids[0]] == pytest.approx(alpha * L / 3)
    assert E[ids[0], ids[1]] == pytest.approx(alpha * L / 6)
    c0, c1 = sp_.conduit_dofs
    assert E[c0, c0] == pytest.approx(alpha * L / 3)
    assert E[ids[0], c0] == pytest.approx(-alpha * L / 3)


def test_fully_constrained():
    sp_ = space_for("P1", 1, 1)
    red = apply_dirichlet(assemble_system(sp_, ProblemData(alpha=1, f_m=lambda x, y: 1 + 0 * x)), sp_)
    assert red.matrix.shape == (0, 0)
    u, _ = solve_problem(sp_, ProblemData(f_m=lambda x, y: 1 + 0 * x))
    assert np.all(u.coefficients == 0)


@pytest.mark.parametrize("tag", FAMILY_TAGS)
def test_symmetry(tag):
    sp_ = space_for(tag, 3, 2, 0.5)
    sys_ = assemble_system(sp_, ProblemData(K=1.3, D=0.4, alpha=2.0))
    assert sys_.symmetry_error() <= 1e-12
    assert apply_dirichlet(sys_, sp_).symmetry_error() <= 1e-12


@pytest.mark.parametrize("tag", ("CR1", "CR2", "CR3"))
def test_nonconforming_needs_penalty(tag):
    with pytest.raises(AssemblyError):
        assemble_system(space_for(tag), ProblemData(), penalty=False)


def test_non_finite_source():
    with pytest.raises(AssemblyError):
        assemble_system(space_for("P1"), ProblemData(f_m=lambda x, y: np.full_like(x, np.inf)))
    with pytest.raises(AssemblyError):
        assemble_system(space_for("P1"), ProblemData(f_c=lambda x: np.full_like(x, np.nan)))


@pytest.mark.parametrize("kw", [dict(K=0.0), dict(D=-1.0), dict(alpha=-0.1)])
def test_bad_coefficients(kw):
    with pytest.raises(AssemblyError):
        ProblemData(**kw)


def test_from_physical():
    d = ProblemData.from_physical(k=2e-3, mu=1e-3, g=9.81, d=0.1, alpha=0.5)
    assert d.K == pytest.approx(2e-3 * 9.81 / 1e-3, rel=1e-14)
    assert d.D == pytest.approx(0.1 ** 3 * 9.81 / (12 * 1e-3), rel=1e-14)
    with pytest.raises(AssemblyError):
        ProblemData.from_physical(k=1, mu=0, g=1, d=1)


def test_matrix_market_export(tmp_path):
    sp_ = space_for("Q1")
    sys_ = assemble_system(sp_, ProblemData(alpha=1))
    path = tmp_path / "A.mtx"
    sys_.export_matrix_market(path)
    back = scipy.io.mmread(str(path)).toarray()
    np.testing.assert_allclose(back, sys_.matrix.toarray(), rtol=1e-14)


def test_deterministic():
    sp_ = space_for("CR2", 3, 3, 0.5)
    data = make_case("layered", DomainGeometry(), a=2.0).data
    a, b = assemble_system(sp_, data), assemble_system(sp_, data)
    assert (a.matrix != b.matrix).nnz == 0
    np.testing.assert_array_equal(a.rhs, b.rhs)


@pytest.mark.parametrize("tag", ("P1", "Q1", "P2", "Q2"))
def test_galerkin_orthogonality(tag):
    case = make_case("layered", DomainGeometry(), a=2.0)
    sp_ = space_for(tag, 4, 3, 0.5)
    u, _ = solve_problem(sp_, case.data, SolverConfig("direct"))
    d = galerkin_defect(u, case)
    assert np.abs(d).max() <= 1e-8 * np.abs(weak_residual(sp_, case)).max() + 1e-10


@given(st.sampled_from(FAMILY_TAGS), st.floats(0.5, 1.0), st.floats(0.1, 10), st.floats(0.1, 10),
       st.floats(0.0, 10))
def test_reduced_matrix_positive_definite(tag, q, K, D, alpha):
    sp_ = space_for(tag, 2, 2, q)
    A = apply_dirichlet(assemble_system(sp_, ProblemData(K=K, D=D, alpha=alpha)), sp_).matrix.toarray()
    np.testing.assert_allclose(A, A.T, atol=1e-12 * np.abs(A).max())
    assert np.linalg.eigvalsh(A).min() > 0
