import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from karst.mesh import (BOUNDARY, CONDUIT, INTERIOR, DomainGeometry, Mesh, MeshError, build_graded_mesh,
                        check_mesh_assumptions, conduit_layer_cells, grading_for_aspect, hanging_nodes,
                        mesh_family, refine, split_to_triangles)


def test_counting_uniform(geom):
    m = build_graded_mesh(geom, 4, 4)
    assert m.n_cells == 32
    assert len(m.conduit_edges) == 4
    np.testing.assert_allclose(m.edge_lengths[m.conduit_edges], 0.25, atol=1e-15)


def test_unit_case(geom):
    m = build_graded_mesh(geom, 1, 1)
    assert m.n_cells == 2
    np.testing.assert_allclose(m.h1, 1.0)
    np.testing.assert_allclose(m.h2, 1.0)
    np.testing.assert_allclose(m.h_min, 1.0)


def test_geometric_layers(geom):
    # [DERIVED] sum q^i t = H gives t = 4/7 for q = 1/2, ny = 3
    m = build_graded_mesh(geom, 4, 3, 0.5)
    ys = m.grid[1]
    np.testing.assert_allclose(np.diff(ys[3:]), [1 / 7, 2 / 7, 4 / 7], atol=1e-14)
    np.testing.assert_allclose(ys, -ys[::-1], atol=1e-15)
    layer = conduit_layer_cells(m)
    np.testing.assert_allclose(m.h_min[layer], 1 / 7, atol=1e-14)
    np.testing.assert_allclose(m.aspect_ratios[layer], 7 / 4, atol=1e-13)


def test_split_counts_and_unit_triangles(geom):
    m = build_graded_mesh(geom, 4, 4)
    t = split_to_triangles(m)
    assert t.n_cells == 64
    # every rectangle edge survives the split
    rect_edges = {tuple(sorted(e)) for e in m.edge_vertices.tolist()}
    tri_edges = {tuple(sorted(e)) for e in t.edge_vertices.tolist()}
    assert rect_edges <= tri_edges
    u = split_to_triangles(build_graded_mesh(geom, 1, 1))
    np.testing.assert_allclose(u.areas, 0.5)
    np.testing.assert_allclose(u.h1, np.sqrt(2))
    ce = u.cell_edges
    np.testing.assert_allclose(u.h_EK, u.areas[:, None] / u.edge_lengths[ce], atol=1e-15)


def test_triangle_altitude(geom):
    # [DERIVED] right-triangle altitude h2 = 2|K|/h1
    t = split_to_triangles(build_graded_mesh(geom, 4, 3, 0.5))
    layer = conduit_layer_cells(t)
    h1 = np.hypot(0.25, 1 / 7)
    np.testing.assert_allclose(t.h1[layer], h1, atol=1e-14)
    np.testing.assert_allclose(t.h2[layer], 2 * (0.25 / 7 / 2) / h1, atol=1e-14)


def test_split_twice_rejected(tri_mesh):
    with pytest.raises(MeshError):
        split_to_triangles(tri_mesh)


@pytest.mark.parametrize("args", [(0, 2, 1.0), (2, 0, 1.0), (2, 2, 0.0), (2, 2, 1.5)])
def test_bad_parameters(geom, args):
    with pytest.raises(MeshError):
        build_graded_mesh(geom, *args)


def test_bad_geometry():
    with pytest.raises(MeshError):
        DomainGeometry(-1.0, 1.0)


def test_diagnostics(geom):
    d = check_mesh_assumptions(build_graded_mesh(geom, 4, 4))
    assert d.max_size_ratio == pytest.approx(1.0)
    assert d.max_valence <= 4 and d.ok
    d = check_mesh_assumptions(build_graded_mesh(geom, 4, 4, 0.5))
    assert d.max_ratio_y == pytest.approx(2.0)
    d = check_mesh_assumptions(mesh_family(geom, 4, 4, triangles=True))
    assert d.max_valence <= 6


def test_diagnostics_warn_on_rapid_change(geom):
    d = check_mesh_assumptions(build_graded_mesh(geom, 2, 4, 0.1))
    assert not d.ok and any("ratio" in w for w in d.warnings)


def test_refine_all_and_none(geom):
    m = build_graded_mesh(geom, 4, 4)
    r = refine(m, range(m.n_cells))
    assert r.n_cells == 4 * m.n_cells
    np.testing.assert_allclose(np.sort(r.h1), np.sort(np.repeat(m.h1 / 2, 4)))
    assert refine(m, []) is m


def test_refine_one_cell_closure(geom):
    m = build_graded_mesh(geom, 4, 4)  # 4 x 8 cells
    k = int(np.flatnonzero((m.vertices[m.cells].mean(axis=1) ** 2).sum(axis=1) < 0.3)[0])
    r = refine(m, [k])
    assert r.n_cells >= m.n_cells + 3
    assert len(hanging_nodes(r)) == 0


def test_refine_triangles(geom):
    t = mesh_family(geom, 2, 2, triangles=True)
    r = refine(t, [0])
    assert r.shape == "triangle" and len(hanging_nodes(r)) == 0
    assert r.areas.sum() == pytest.approx(geom.area)


def test_refine_out_of_range(geom):
    with pytest.raises(MeshError):
        refine(build_graded_mesh(geom, 2, 2), [99])


def test_edge_record(rect_mesh):
    m = rect_mesh
    e = int(m.interior_matrix_edges[0])
    E = m.edge(e)
    assert E.location == INTERIOR and len(E.cells) == 2
    # tangent is the normal rotated by +90 degrees
    np.testing.assert_allclose(E.tangent, [-E.normal[1], E.normal[0]], atol=1e-15)
    k1, k2 = E.cells
    l1 = list(m.cell_edges[k1]).index(e)
    l2 = list(m.cell_edges[k2]).index(e)
    assert E.h_E == pytest.approx(0.5 * (m.h_EK[k1, l1] + m.h_EK[k2, l2]))
    assert E.h_min_E == pytest.approx(0.5 * (m.h_min[k1] + m.h_min[k2]))
    b = m.edge(int(m.boundary_edges[0]))
    assert b.location == BOUNDARY and len(b.cells) == 1
    assert m.edge(int(m.conduit_edges[0])).location == CONDUIT


def test_json_round_trip(rect_mesh, tmp_path):
    path = tmp_path / "mesh.json"
    rect_mesh.to_json(path)
    doc = json.loads(path.read_text())
    assert {"vertices", "cells", "shape"} <= set(doc)
    back = Mesh.from_json(path)
    np.testing.assert_array_equal(back.cells, rect_mesh.cells)
    np.testing.assert_allclose(back.vertices, rect_mesh.vertices)
    np.testing.assert_array_equal(back.subdomain, rect_mesh.subdomain)


def test_grading_for_aspect(geom):
    for a in (1, 10, 100, 1000):
        ny, q = grading_for_aspect(geom, 8, a)
        m = build_graded_mesh(geom, 8, ny, q)
        assert m.aspect_ratios.max() == pytest.approx(a, rel=1e-6)
        assert q >= 0.5


meshes = st.builds(
    lambda L, H, nx, ny, q, tri: mesh_family(DomainGeometry(L, H), nx, ny, q, tri),
    st.floats(0.2, 5.0), st.floats(0.2, 5.0), st.integers(1, 6), st.integers(1, 5),
    st.floats(0.5, 1.0), st.booleans(),
)


@given(meshes)
def test_mesh_invariants(m):
    g = m.geometry
    assert m.areas.sum() == pytest.approx(g.area, rel=1e-12)
    # C^T C = diag(h1^2, h2^2)
    CtC = np.einsum("cki,ckj->cij", m.C, m.C)
    np.testing.assert_allclose(CtC[:, 0, 1], 0.0, atol=1e-12 * g.L * g.H_m)
    np.testing.assert_allclose(CtC[:, 0, 0], m.h1 ** 2, rtol=1e-12)
    np.testing.assert_allclose(CtC[:, 1, 1], m.h2 ** 2, rtol=1e-12)
    assert np.all(m.h1 >= m.h2)
    # conduit edges tile [0, L] in order
    ev = m.vertices[m.edge_vertices[m.conduit_edges]]
    xs = np.sort(ev[:, :, 0], axis=1)
    assert xs[0, 0] == 0.0 and xs[-1, 1] == pytest.approx(g.L)
    np.testing.assert_allclose(xs[1:, 0], xs[:-1, 1])
    np.testing.assert_allclose(ev[:, :, 1], 0.0)
    # no element straddles y = 0
    y = m.vertices[m.cells][:, :, 1]
    assert np.all((y.min(axis=1) >= 0) | (y.max(axis=1) <= 0))
    # each interior edge has two cells, boundary edges one
    two = m.edge_cells[:, 1] >= 0
    assert np.all(two == (m.edge_location != BOUNDARY))
    # mesh regularity of the edge quantities
    inner = np.flatnonzero(two)
    for side in range(2):
        k = m.edge_cells[inner, side]
        loc = m.edge_local_index[inner, side]
        r = m.h_E[inner] / m.h_EK[k, loc]
        assert np.all((r >= 0.5 - 1e-12) & (r <= 2 + 1e-12))
        r = m.h_min_E[inner] / m.h_min[k]
        assert np.all((r >= 0.5 - 1e-12) & (r <= 2 + 1e-12))
    assert len(hanging_nodes(m)) == 0


@pytest.mark.parametrize("tri", [False, True])
def test_json_matches_schema(geom, tri):
    jsonschema = pytest.importorskip("jsonschema")
    from pathlib import Path

    schema = json.loads((Path(__file__).parents[1] / "schemas" / "mesh.schema.json").read_text())
    jsonschema.validate(mesh_family(geom, 3, 2, 0.5, tri).to_dict(), schema)
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate({"format": "karst-mesh"}, schema)
