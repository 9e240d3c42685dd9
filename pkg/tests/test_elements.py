import numpy as np
import pytest
from hypothesis import given, strategies as st

from karst.elements import (FAMILY_TAGS, FeFunction, FeSpace, bubble_edge, bubble_element, canonical_tag,
                            clement_basis_function, clement_interpolate, extend_from_edge, interpolate,
                            reference_basis)
from karst.elements.clement import ClementError, interior_nodes
from karst.elements.families import UnknownFamily
from karst.elements.functions import OutsideReferenceElement
from karst.mesh import BOUNDARY, DomainGeometry, mesh_family
from karst.verification.properties import edge_jump_means

TRI = ("P1", "P2", "P3", "CR1")
RECT = ("Q1", "Q2", "Q3", "CR2", "CR3")


def space_for(tag, nx=3, ny=2, q=1.0):
    mesh = mesh_family(DomainGeometry(), nx, ny, q, reference_basis(tag).shape == "triangle")
    return FeSpace(mesh, tag)


@pytest.mark.parametrize("tag", FAMILY_TAGS)
def test_unisolvence(tag):
    assert reference_basis(tag).unisolvence_error() <= 1e-12


def test_cr2_paper_values():
    el = reference_basis("CR2")
    assert el.values(np.array([[0.0, 0.0]]))[0, 2] == pytest.approx(0.5, abs=1e-15)
    g = el.gradients(np.array([[0.5, 0.5]]))[0, 0]
    np.testing.assert_allclose(g, [0.0, -1.0], atol=1e-15)
    assert el.functional_matrix().shape == (5, 5)


def test_cr3_q6_centre():
    el = reference_basis("CR3")
    assert el.values(np.array([[0.5, 0.5]]))[0, 5] == pytest.approx(2.0, abs=1e-14)
    assert el.functional_matrix().shape == (6, 6)


def test_aliases_and_unknown():
    assert canonical_tag("CR2-rect-Q1plus") == "CR2"
    assert canonical_tag("P1-conforming-tri") == "P1"
    with pytest.raises(UnknownFamily):
        reference_basis("P7")
    with pytest.raises(KeyError):
        canonical_tag("nope")


@pytest.mark.parametrize("tag", FAMILY_TAGS)
def test_zero_function(tag):
    u = FeFunction(space_for(tag))
    assert u.evaluate(0, (0.2, 0.2)) == 0.0
    np.testing.assert_array_equal(u.gradient(0, (0.2, 0.2)), [0.0, 0.0])


def test_outside_reference():
    u = FeFunction(space_for("P1"))
    with pytest.raises(OutsideReferenceElement):
        u.evaluate(0, (0.9, 0.9))
    with pytest.raises(OutsideReferenceElement):
        FeFunction(space_for("Q1")).gradient(0, (1.5, 0.0))


def test_p1_reproduces_x():
    sp_ = space_for("P1", 4, 3, 0.5)
    u = interpolate(sp_, lambda x, y: x)
    rng = np.random.default_rng(0)
    pts = rng.dirichlet([1, 1, 1], 5)[:, :2]
    g = u.gradients(np.arange(sp_.mesh.n_cells), pts)
    np.testing.assert_allclose(g[..., 0], 1.0, atol=1e-13)
    np.testing.assert_allclose(g[..., 1], 0.0, atol=1e-13)


# physical polynomial degree reproduced by each family
REPRO = {"P1": 1, "P2": 2, "P3": 3, "Q1": 1, "Q2": 2, "Q3": 3, "CR1": 1, "CR2": 1, "CR3": 2}


@given(st.sampled_from(FAMILY_TAGS), st.lists(st.floats(-2, 2), min_size=10, max_size=10),
       st.floats(0.5, 1.0))
def test_interpolation_reproduces_polynomials(tag, c, q):
    k = REPRO[tag]
    exps = [(i, j) for i in range(k + 1) for j in range(k + 1 - i)]

    def f(x, y):
        return sum(ci * x ** i * y ** j for ci, (i, j) in zip(c, exps))

    sp_ = space_for(tag, 3, 2, q)
    u = interpolate(sp_, f)
    rng = np.random.default_rng(1)
    ref = rng.uniform(0, 1, (6, 2))
    if sp_.element.shape == "triangle":
        ref = ref[ref.sum(axis=1) <= 1]
    cells = np.arange(sp_.mesh.n_cells)
    X = sp_.to_physical(cells, ref)
    np.testing.assert_allclose(u.values(cells, ref), f(X[..., 0], X[..., 1]), atol=1e-11)


@pytest.mark.parametrize("tag", ("P1", "P2", "Q1", "Q3"))
def test_conforming_jump_vanishes(tag):
    sp_ = space_for(tag, 3, 2, 0.5)
    u = interpolate(sp_, lambda x, y: np.sin(3 * x) * np.cos(2 * y))
    s = np.linspace(0, 1, 5)
    inner = np.flatnonzero(sp_.mesh.edge_location != BOUNDARY)
    assert np.abs(u.edge_jump(inner, s)).max() <= 1e-12


def test_boundary_jump_is_minus_trace():
    sp_ = space_for("CR1")
    u = FeFunction(sp_, np.random.default_rng(2).normal(size=sp_.n_dofs))
    b = sp_.mesh.boundary_edges
    s = np.array([0.25, 0.5])
    first, _ = u.edge_traces(b, s)
    np.testing.assert_allclose(u.edge_jump(b, s), -first)


@given(st.sampled_from(("CR1", "CR2", "CR3")), st.integers(0, 2 ** 31 - 1), st.floats(0.5, 1.0))
def test_cr_mean_jump_zero_for_any_member(tag, seed, q):
    sp_ = space_for(tag, 3, 2, q)
    c = np.random.default_rng(seed).normal(size=sp_.n_dofs)
    c[sp_.boundary_dofs] = 0.0
    inner = np.flatnonzero(sp_.mesh.edge_location != BOUNDARY)
    means = edge_jump_means(sp_, inner) @ c
    assert np.abs(means).max() <= 1e-12 * np.abs(c).max()


def test_nonconforming_jump_nonzero_pointwise():
    sp_ = space_for("CR1")
    c = np.random.default_rng(3).normal(size=sp_.n_dofs)
    inner = sp_.mesh.interior_matrix_edges
    assert np.abs(FeFunction(sp_, c).edge_jump(inner, np.array([0.1]))).max() > 1e-3


def test_q1_dof_count():
    # [DERIVED] (nx-1)(2ny-1) matrix nodes plus nx-1 conduit nodes
    sp_ = FeSpace(mesh_family(DomainGeometry(), 4, 4), "Q1")
    assert len(sp_.free_dofs) == 3 * 7 + 3


@pytest.mark.parametrize("tag", FAMILY_TAGS)
def test_boundary_dofs_vanish_on_boundary(tag):
    sp_ = space_for(tag)
    c = np.zeros(sp_.n_dofs)
    c[sp_.free_dofs] = np.random.default_rng(4).normal(size=len(sp_.free_dofs))
    u = FeFunction(sp_, c)
    b = sp_.mesh.boundary_edges
    s = np.linspace(0, 1, 7)
    first, _ = u.edge_traces(b, s)
    if sp_.conforming:
        assert np.abs(first).max() <= 1e-12
    else:
        # CR: zero edge means on the boundary
        assert np.abs(edge_jump_means(sp_, b) @ c).max() <= 1e-12
    assert u.conduit_values(np.array([0.0]))[0, 0] == 0.0
    assert u.conduit_values(np.array([1.0]))[-1, 0] == 0.0


# ------------------------------------------------------------------ bubbles
@pytest.mark.parametrize("tri,centre", [(True, (1 / 3, 1 / 3)), (False, (0.5, 0.5))])
def test_element_bubble(tri, centre):
    mesh = mesh_family(DomainGeometry(), 2, 2, 0.5, tri)
    for k in range(mesh.n_cells):
        b = bubble_element(mesh, k)
        X = mesh.affine_maps[0][k] + mesh.affine_maps[1][k] @ np.asarray(centre)
        assert b(X[0], X[1]) == pytest.approx(1.0, abs=1e-13)
        for v in mesh.vertices[mesh.cells[k]]:
            assert b(v[0], v[1]) == pytest.approx(0.0, abs=1e-13)


@pytest.mark.parametrize("tri", [True, False])
def test_edge_bubble_and_extension(tri):
    mesh = mesh_family(DomainGeometry(), 2, 2, 0.5, tri)
    e = int(mesh.interior_matrix_edges[0])
    b = bubble_edge(mesh, e)
    a, c = mesh.vertices[mesh.edge_vertices[e]]
    mid = 0.5 * (a + c)
    for k in mesh.edge_cells[e]:
        assert b.value(k, mid[0], mid[1]) == pytest.approx(1.0, abs=1e-13)
        assert b.value(k, a[0], a[1]) == pytest.approx(0.0, abs=1e-13)
        ext = extend_from_edge(lambda s: np.ones_like(s), mesh, e, lambda s: np.zeros_like(s))
        ctr = mesh.vertices[mesh.cells[k]].mean(axis=0)
        assert ext.value(k, ctr[0], ctr[1]) == pytest.approx(1.0)
        np.testing.assert_allclose(ext.gradient(k, ctr[0], ctr[1]), 0.0, atol=1e-14)


# ------------------------------------------------------------------ Clement
@pytest.mark.parametrize("tri", [True, False])
def test_clement_constants(tri):
    mesh = mesh_family(DomainGeometry(), 4, 3, 0.5, tri)
    z = clement_interpolate(lambda x, y: 0 * x, mesh)
    assert np.all(z.coefficients == 0)
    one = clement_interpolate(lambda x, y: 1 + 0 * x, mesh)
    vid = np.array([k[1] for k in one.space.dof_keys])
    inner = ~mesh.boundary_vertices[vid]
    np.testing.assert_allclose(one.matrix_coefficients[inner], 1.0, atol=1e-14)
    np.testing.assert_array_equal(one.matrix_coefficients[~inner], 0.0)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.booleans())
def test_clement_linear_on_symmetric_patches(a, b, c, tri):
    # uniform meshes have point-symmetric vertex patches, so patch means of
    # a linear function are its nodal values
    mesh = mesh_family(DomainGeometry(), 4, 2, 1.0, tri)
    u = clement_interpolate(lambda x, y: a + b * x + c * y, mesh)
    vid = np.array([k[1] for k in u.space.dof_keys])
    inner = ~mesh.boundary_vertices[vid]
    xy = mesh.vertices[vid[inner]]
    np.testing.assert_allclose(u.matrix_coefficients[inner], a + b * xy[:, 0] + c * xy[:, 1], atol=1e-12)


def test_clement_errors():
    mesh = mesh_family(DomainGeometry(), 2, 2)
    with pytest.raises(ClementError):
        clement_interpolate(lambda x, y: np.full_like(x, np.nan), mesh)
    with pytest.raises(ClementError):
        clement_basis_function(mesh, int(np.flatnonzero(mesh.boundary_vertices)[0]))


def test_clement_basis_nodal():
    mesh = mesh_family(DomainGeometry(), 3, 2, 1.0, True)
    nodes = interior_nodes(mesh)
    j = int(nodes[0])
    phi = clement_basis_function(mesh, j)
    for k in mesh.vertex_cells[j]:
        for i in mesh.cells[k]:
            ref = phi.space.to_reference([k], mesh.vertices[i][None, None, :])
            assert phi.values([k], ref[0])[0, 0] == pytest.approx(float(i == j), abs=1e-13)
