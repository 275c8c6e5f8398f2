import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from elastobem.geometry import (TriangleMesh, element_edges, make_cuboid, make_fichera, make_sheet, open_boundary,
                                read_off, refine, refine_to, write_off)


@pytest.mark.parametrize("level, n", [(0, 40), (1, 160), (2, 640)])
def test_cuboid_element_counts(level, n):
    m = make_cuboid(level=level)
    assert m.n_triangles == n
    assert m.total_area == pytest.approx(10.0)
    assert m.is_closed


def test_cuboid_h_halves():
    hs = [make_cuboid(level=k).h for k in range(3)]
    assert hs == pytest.approx([1.0, 0.5, 0.25])


@pytest.mark.parametrize("mesh", [make_cuboid(level=1), make_fichera(level=0), make_fichera(cells=2, split="diag")])
def test_outward_normals_enclose_positive_volume(mesh):
    # divergence theorem: volume = 1/3 sum_k area_k (c_k . n_k)
    vol = np.sum(mesh.areas * np.einsum("ij,ij->i", mesh.centroids, mesh.normals)) / 3
    assert vol > 0


def test_fichera_volume_and_size():
    m = make_fichera(cells=2, split="diag")
    vol = np.sum(m.areas * np.einsum("ij,ij->i", m.centroids, m.normals)) / 3
    assert vol == pytest.approx(7 / 8)
    assert m.n_triangles == 192
    assert m.is_closed


def test_sheet_mesh_a():
    m = make_sheet(20.0, 40)
    assert m.n_triangles == 3200
    assert not m.is_closed
    assert np.allclose(m.normals, [0, 0, -1])
    # open boundary = perimeter of the 20 m square
    e = open_boundary(m)
    assert np.sum(np.linalg.norm(e.p2 - e.p1, axis=1)) == pytest.approx(80.0)


def test_open_boundary_of_closed_mesh_is_empty(fichera0):
    assert len(open_boundary(fichera0)) == 0


def test_element_edges_pair_up_on_closed_mesh(cuboid0):
    e = element_edges(cuboid0)
    assert len(e) == 3 * cuboid0.n_triangles
    fwd = {(a, b) for a, b in zip(e.v1, e.v2)}
    assert all((b, a) in fwd for a, b in fwd)


def test_refine_preserves_area_and_orientation(cuboid0):
    r = refine(cuboid0)
    assert r.n_triangles == 4 * cuboid0.n_triangles
    assert r.total_area == pytest.approx(cuboid0.total_area)
    assert r.is_closed
    assert refine_to(cuboid0, 2).n_triangles == 16 * cuboid0.n_triangles


def test_refine_keeps_tags(cuboid0):
    m = cuboid0.with_tags(lambda c: np.abs(c[:, 0]) < 1e-9)
    r = refine(m)
    assert r.dirichlet.sum() == 4 * m.dirichlet.sum()


def test_off_roundtrip(tmp_path, fichera0):
    p = tmp_path / "f.off"
    write_off(fichera0, p)
    back = read_off(p)
    assert np.allclose(back.vertices, fichera0.vertices)
    assert np.array_equal(back.triangles, fichera0.triangles)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(0, 47), min_size=1, max_size=20, unique=True))
def test_open_boundary_length_bounded_by_element_perimeters(subset):
    m = make_fichera()
    ob = open_boundary(m, subset)
    ee = element_edges(m, subset)
    assert len(ob) <= len(ee)
    # every open edge has no reversed twin inside the subset
    pairs = set(zip(ee.v1, ee.v2))
    assert all((b, a) not in pairs for a, b in zip(ob.v1, ob.v2))


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(0.1, 10.0), st.floats(0.1, 10.0))
def test_cuboid_area_property(a, b, c):
    m = make_cuboid((a, b, c), level=0)
    assert m.total_area == pytest.approx(2 * (a * b + b * c + a * c))


def test_invalid_dimensions():
    with pytest.raises(ValueError):
        make_cuboid((0.0, 1.0, 1.0))
