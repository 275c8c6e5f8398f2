import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from elastobem.assembly import CollocationPoints, GalerkinRequest, QuadConfig, assemble_galerkin_blocks
from elastobem.fmm.chebyshev import basis_1d, cheb_interp, cheb_nodes, tensor_basis, tensor_nodes
from elastobem.fmm.scheme import FmmConfig, build_fmm_operators
from elastobem.fmm.tree import build_tree, mesh_spaces
from elastobem.geometry import make_cuboid, make_sheet
from elastobem.kernels import MaterialParams

MAT = MaterialParams(0.2778, 0.4167)


# ------------------------------------------------------------- Chebyshev


@pytest.mark.parametrize("p", [2, 3, 5, 8])
def test_cheb_delta_property(p):
    x = cheb_nodes(p)
    for n in range(p):
        assert np.allclose(cheb_interp(p, x, n), np.eye(p)[n], atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, 7, elements=st.floats(-1, 1)), st.integers(2, 9))
def test_cheb_reproduces_polynomials(x, p):
    val, der = basis_1d(p, x)
    assert np.allclose(val.sum(axis=1), 1.0, atol=1e-12)
    xn = cheb_nodes(p)
    deg = p - 1
    assert np.allclose(val @ xn**deg, x**deg, atol=1e-11)
    assert np.allclose(der @ xn**deg, deg * x ** (deg - 1), atol=1e-9)


def test_cheb_domain_and_args():
    with pytest.raises(ValueError):
        cheb_nodes(1)
    with pytest.raises(ValueError):
        cheb_interp(4, 1.5, 0)
    with pytest.raises(ValueError):
        cheb_interp(4, 0.0, 4)


def test_tensor_basis_gradient(rng):
    p = 4
    ref = rng.uniform(-0.9, 0.9, size=(5, 3))
    v, g = tensor_basis(p, ref, grad=True)
    f = lambda q: q[:, 0] ** 2 * q[:, 1] - 3 * q[:, 2] ** 3  # noqa: E731
    fn = f(tensor_nodes(p))
    assert np.allclose(v @ fn, f(ref), atol=1e-12)
    exact = np.column_stack([2 * ref[:, 0] * ref[:, 1], ref[:, 0] ** 2, -9 * ref[:, 2] ** 2])
    assert np.allclose(np.einsum("inj,n->ij", g, fn), exact, atol=1e-11)


# ------------------------------------------------------------------ tree


@pytest.fixture(scope="module")
def cuboid2():
    return make_cuboid(level=2)


@pytest.fixture(scope="module")
def tree2(cuboid2):
    return build_tree(*mesh_spaces(cuboid2), depth=3)


def test_tree_partitions_dofs(cuboid2, tree2):
    pos, _ = mesh_spaces(cuboid2)
    for name, p in pos.items():
        ids = np.concatenate([tree2.clusters[c].dofs[name] for c in tree2.leaves])
        assert np.array_equal(np.sort(ids), np.arange(len(p)))
        for c in tree2.leaves:
            cl = tree2.clusters[c]
            d = cl.dofs[name]
            assert np.all(np.abs(p[d] - cl.center) <= tree2.half_width(tree2.depth) * (1 + 1e-9))


def test_tree_extended_boxes_cover_supports(cuboid2, tree2):
    v = cuboid2.vertices
    for c in tree2.leaves:
        cl = tree2.clusters[c]
        for e in cl.dofs["p0"]:
            assert np.all(np.abs(cuboid2.corners[e] - cl.center) <= tree2.ext_half_width(cl.level) + 1e-12)
        for j in cl.dofs["p1"]:
            star = cuboid2.triangles[np.any(cuboid2.triangles == j, axis=1)].ravel()
            assert np.all(np.abs(v[star] - cl.center) <= tree2.ext_half_width(cl.level) + 1e-12)


def test_interaction_lists_cover_every_leaf_pair_once(tree2):
    cl = tree2.clusters
    leaves = tree2.leaves

    def ancestors(c):
        out = [c]
        while cl[out[-1]].parent >= 0:
            out.append(cl[out[-1]].parent)
        return out

    anc = {c: ancestors(c) for c in leaves}
    for t in leaves:
        for s in leaves:
            hits = int(s in cl[t].near)
            hits += sum(1 for a, b in zip(anc[t], anc[s]) if b in cl[a].far)
            assert hits == 1
    for c in range(len(cl)):
        for s in cl[c].far:
            assert tree2.admissible(c, s) and c in cl[s].far


def test_tree_far_field_counts(tree2, cuboid2):
    assert tree2.far_pairs() > 0
    assert build_tree(*mesh_spaces(cuboid2), depth=2).far_pairs() == 0
    with pytest.raises(ValueError):
        build_tree(*mesh_spaces(cuboid2), depth=0)


def test_lvl3_default_depth_has_far_field():
    mesh = make_cuboid(level=3)
    cfg = FmmConfig.for_level(3)
    assert cfg.depth == 3
    assert build_tree(*mesh_spaces(mesh), depth=cfg.depth).far_pairs() > 0


# -------------------------------------------------------------- operators


@pytest.fixture(scope="module")
def dense_galerkin(cuboid2):
    nt, nv = cuboid2.n_triangles, cuboid2.n_vertices
    a, b = np.arange(nt), np.arange(nv)
    return assemble_galerkin_blocks(cuboid2, MAT, QuadConfig(), GalerkinRequest(a, a, a, b, b, b))


@pytest.fixture(scope="module")
def fmm_ops(cuboid2):
    return {p: build_fmm_operators(cuboid2, MAT, "galerkin", FmmConfig(p=p, depth=3)) for p in (3, 4)}


def _rel(ops, dense, name, x):
    return np.linalg.norm(ops.matvec(name, x) - dense[name] @ x) / np.linalg.norm(dense[name] @ x)


@pytest.mark.parametrize("name", ["V", "K", "D"])
def test_fmm_error_decreases_with_p(fmm_ops, dense_galerkin, name, rng):
    x = rng.standard_normal(dense_galerkin[name].shape[1])
    e3, e4 = (_rel(fmm_ops[p], dense_galerkin, name, x) for p in (3, 4))
    assert e4 < e3 < 5e-3


@pytest.mark.parametrize("name", ["V", "K", "D"])
def test_fmm_linear_and_transpose(fmm_ops, name, rng):
    ops = fmm_ops[4]
    A = ops.operator(name)
    x, y = rng.standard_normal(A.shape[1]), rng.standard_normal(A.shape[1])
    assert np.allclose(A @ (2 * x - y), 2 * (A @ x) - A @ y, rtol=1e-12, atol=1e-14)
    assert np.all(A @ np.zeros(A.shape[1]) == 0)
    z = rng.standard_normal(A.shape[0])
    assert abs(z @ (A @ x) - (A.T @ z) @ x) <= 1e-12 * np.linalg.norm(z) * np.linalg.norm(A @ x)


def test_p0_moment_total_charge(fmm_ops, cuboid2):
    # interpolation is a partition of unity: moments of all ones give the areas
    eng = fmm_ops[4].engine
    total = sum(m.mat.sum() for m in eng.moment("p0").values())
    assert total == pytest.approx(cuboid2.areas.sum(), rel=1e-12)


def test_lines_variant_equals_standard(cuboid2, rng):
    a = build_fmm_operators(cuboid2, MAT, "galerkin", FmmConfig(p=3, depth=3))
    b = build_fmm_operators(cuboid2, MAT, "galerkin", FmmConfig(p=3, depth=3, variant="lines"))
    for name in "VKD":
        x = rng.standard_normal(a.operator(name).shape[1])
        assert np.allclose(a.matvec(name, x), b.matvec(name, x), rtol=1e-12, atol=1e-15)


def test_regularized_storage_about_double(cuboid2):
    s = build_fmm_operators(cuboid2, MAT, "galerkin", FmmConfig(p=3, depth=3)).storage()
    r = build_fmm_operators(cuboid2, MAT, "galerkin", FmmConfig(p=3, depth=3, variant="regularized")).storage()
    assert 1.7 <= r.fmm_bytes / s.fmm_bytes <= 2.3
    assert r.near == s.near


def test_shallow_tree_is_dense(cuboid0, rng):
    nt, nv = cuboid0.n_triangles, cuboid0.n_vertices
    pts = CollocationPoints.build(cuboid0, np.arange(nv), np.arange(nt))
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        ops = build_fmm_operators(cuboid0, MAT, "collocation", FmmConfig(p=2, depth=1), points=pts)
    assert any("admissible" in str(x.message) for x in w)
    from elastobem.assembly import assemble_collocation_blocks

    dense = assemble_collocation_blocks(cuboid0, MAT, QuadConfig(), pts, np.arange(nt), np.arange(nv))
    x = rng.standard_normal(3 * nv)
    assert np.allclose(ops.matvec("K", x), dense["K"] @ x, rtol=1e-12, atol=1e-14)


def test_fmm_rejects_bad_input(cuboid0):
    with pytest.raises(ValueError):
        build_fmm_operators(make_sheet(20.0, 4), MAT, "galerkin", FmmConfig(depth=1))
    with pytest.raises(ValueError):
        build_fmm_operators(cuboid0, MAT, "collocation", FmmConfig(depth=1))
    with pytest.raises(ValueError):
        FmmConfig(variant="fast")
    with pytest.raises(ValueError):
        FmmConfig(p=1)
