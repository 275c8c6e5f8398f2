"""Dense operator blocks against brute-force oracles and invariants."""
import numpy as np
import pytest

from elastobem.analytic import traction_field
from elastobem.assembly import (
    CollocationPoints,
    GalerkinRequest,
    QuadConfig,
    assemble_collocation_blocks,
    assemble_galerkin_blocks,
    mass_p0_p1,
    mass_sparse,
)
from elastobem.geometry import TriangleMesh, element_edges, make_cuboid, make_fichera, open_boundary
from elastobem.kernels import MaterialParams

MAT = MaterialParams(0.2778, 0.4167)

# two separated, non-planar open patches of two triangles each
VX = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0.4]], float)
VY = np.array([[0.2, 0.1, 0.9], [1.1, 0.3, 1.0], [0.1, 1.0, 1.2], [1.0, 1.2, 1.5]], float)
TRI = np.array([[0, 1, 2], [1, 3, 2]])


@pytest.fixture(scope="module")
def patches():
    return TriangleMesh(np.vstack([VX, VY]), np.vstack([TRI, TRI + 4]), np.zeros(4, dtype=np.int64))


def _conical(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x, w = (x + 1) / 2, w / 2
    u = np.repeat(x, n)
    v = np.tile(x, n) * (1 - u)
    return np.column_stack([u, v]), np.outer(w, w).ravel() * (1 - u)


def _element_points(mesh, t, n):
    P, W = _conical(n)
    a, b, c = mesh.vertices[mesh.triangles[t]]
    X = a + np.outer(P[:, 0], b - a) + np.outer(P[:, 1], c - a)
    lam = np.column_stack([1 - P[:, 0] - P[:, 1], P[:, 0], P[:, 1]])
    return X, W * 2 * mesh.areas[t], lam


def _p1_field(mesh, t, coef, n):
    X, W, lam = _element_points(mesh, t, n)
    return X, W, lam @ coef[mesh.triangles[t]]


def _double_layer(mesh, tris, cu, X, n_q):
    """(W u)(x) for every x in X via the traction of the Kelvin field."""
    out = np.zeros((len(X), 3))
    for t in tris:
        Y, WY, FU = _p1_field(mesh, t, cu, n_q)
        ny = np.broadcast_to(mesh.normals[t], Y.shape)
        for i, x in enumerate(X):
            # traction_field(y, n_y, x)[q, :, a]: traction at y of U(., x) e_a
            T = traction_field(Y, ny, x, MAT)
            out[i] += np.einsum("q,qca,qc->a", WY, T, FU)
    return out


def test_galerkin_k_against_quadrature(patches):
    mesh = patches
    cfg = QuadConfig(line_order=16, regular_order=8)
    req = GalerkinRequest(k_rows=np.arange(2), k_cols=np.arange(4, 8))
    K = assemble_galerkin_blocks(mesh, MAT, cfg, req)["K"]
    K_lines = assemble_galerkin_blocks(mesh, MAT, cfg, req, edges=open_boundary(mesh))["K"]
    rng = np.random.default_rng(1)
    cu = np.zeros((8, 3))
    cu[4:] = rng.normal(size=(4, 3))
    ref = np.zeros(6)
    for i in range(2):
        X, WX, _ = _element_points(mesh, i, 10)
        ref[3 * i:3 * i + 3] = WX @ _double_layer(mesh, (2, 3), cu, X, 10)
    got = K @ cu[4:].ravel()
    got_lines = K_lines @ cu[4:].ravel()
    # regularized K without its line terms misses the boundary contribution
    assert np.linalg.norm(got_lines - ref) < 1e-6 * np.linalg.norm(ref)
    assert np.linalg.norm(got - ref) > 1e-2 * np.linalg.norm(ref)


def test_collocation_k_against_quadrature(patches):
    mesh = patches
    cp = CollocationPoints.build(mesh, np.arange(4), np.arange(2))
    K = assemble_collocation_blocks(mesh, MAT, QuadConfig(line_order=10), cp, None, np.arange(4, 8),
                                    edges=open_boundary(mesh))["K"]
    rng = np.random.default_rng(2)
    cu = np.zeros((8, 3))
    cu[4:] = rng.normal(size=(4, 3))
    ref = _double_layer(mesh, (2, 3), cu, cp.x, 12).ravel()
    assert np.linalg.norm(K @ cu[4:].ravel() - ref) < 1e-5 * np.linalg.norm(ref)


def _hypersingular_form(mesh, cv, cu, n_q=8, h=1e-3):
    """<v, D u> = -<v, T_x W u> with the traction taken by central differences."""
    total = 0.0
    lam, mu = MAT.lam, MAT.mu
    for t in (0, 1):
        X, WX, FV = _p1_field(mesh, t, cv, n_q)
        nx = mesh.normals[t]
        grad = np.zeros((len(X), 3, 3))
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            grad[:, :, k] = (_double_layer(mesh, (2, 3), cu, X + e, n_q)
                             - _double_layer(mesh, (2, 3), cu, X - e, n_q)) / (2 * h)
        div = np.trace(grad, axis1=1, axis2=2)
        sig = lam * div[:, None, None] * np.eye(3) + mu * (grad + np.swapaxes(grad, 1, 2))
        total -= np.einsum("q,qc,qcj,j->", WX, FV, sig, nx)
    return total


@pytest.mark.slow
def test_galerkin_d_against_quadrature(patches):
    mesh = patches
    rng = np.random.default_rng(3)
    cv = np.zeros((8, 3))
    cu = np.zeros((8, 3))
    cv[:4] = rng.normal(size=(4, 3))
    cu[4:] = rng.normal(size=(4, 3))
    ref = _hypersingular_form(mesh, cv, cu)
    req = GalerkinRequest(d_rows=np.arange(4), d_cols=np.arange(4, 8))
    D = assemble_galerkin_blocks(mesh, MAT, QuadConfig(line_line="on", regular_order=8, line_order=10), req,
                                 edges=open_boundary(mesh))["D"]
    got = cv[:4].ravel() @ D @ cu[4:].ravel()
    assert abs(got - ref) < 1e-5 * abs(ref)


def _full_request(mesh):
    nv, nt = mesh.n_vertices, mesh.n_triangles
    return GalerkinRequest(v_rows=np.arange(nt), v_cols=np.arange(nt), k_rows=np.arange(nt), k_cols=np.arange(nv),
                           d_rows=np.arange(nv), d_cols=np.arange(nv))


@pytest.fixture(scope="module")
def galerkin_cuboid():
    mesh = make_cuboid(level=0)
    return mesh, assemble_galerkin_blocks(mesh, MAT, QuadConfig(sauter_order=8), _full_request(mesh))


@pytest.mark.parametrize("name", ["V", "D"])
def test_galerkin_symmetry(galerkin_cuboid, name):
    A = galerkin_cuboid[1][name]
    assert np.abs(A - A.T).max() <= 1e-10 * np.abs(A).max()


def test_galerkin_transpose_consistency(galerkin_cuboid):
    # K assembled with rows/columns swapped is the same block
    mesh, full = galerkin_cuboid
    rows, cols = np.arange(5, 17), np.arange(3, 11)
    sub = assemble_galerkin_blocks(mesh, MAT, QuadConfig(sauter_order=8), GalerkinRequest(k_rows=rows, k_cols=cols))["K"]
    r3 = (3 * rows[:, None] + np.arange(3)).ravel()
    c3 = (3 * cols[:, None] + np.arange(3)).ravel()
    assert np.abs(sub - full["K"][np.ix_(r3, c3)]).max() <= 1e-8 * np.abs(full["K"]).max()


def test_galerkin_v_positive_definite(galerkin_cuboid):
    assert np.linalg.eigvalsh(galerkin_cuboid[1]["V"]).min() > 0


def test_d_kills_rigid_motions(galerkin_cuboid):
    mesh, full = galerkin_cuboid
    D = full["D"]
    scale = np.linalg.norm(D)
    for b in range(3):
        trans = np.tile(np.eye(3)[b], mesh.n_vertices)
        assert np.linalg.norm(D @ trans) <= 1e-7 * scale
        rot = np.cross(np.eye(3)[b], mesh.vertices).ravel()
        assert np.linalg.norm(D @ rot) <= 1e-7 * scale * np.linalg.norm(rot) / np.sqrt(len(rot))


def test_galerkin_k_rigid_translation(galerkin_cuboid):
    # (1/2 M + K) 1 = 0 for an interior problem on a closed surface
    mesh, full = galerkin_cuboid
    M = mass_p0_p1(mesh, np.arange(mesh.n_triangles), np.arange(mesh.n_vertices))
    for b in range(3):
        one = np.tile(np.eye(3)[b], mesh.n_vertices)
        r = 0.5 * M @ one + full["K"] @ one
        assert np.linalg.norm(r) <= 1e-6 * np.linalg.norm(M @ one)


def test_mass_sparse_matches_dense(cuboid1):
    rows, cols = np.arange(cuboid1.n_triangles), np.arange(cuboid1.n_vertices)
    assert np.allclose(mass_sparse(cuboid1).toarray(), mass_p0_p1(cuboid1, rows, cols))


@pytest.mark.parametrize("maker", [lambda: make_cuboid(level=0), lambda: make_fichera(level=0)], ids=["cuboid", "fichera"])
@pytest.mark.parametrize("line_line", ["off", "on", "fp"])
def test_closed_line_terms_cancel(maker, line_line):
    mesh = maker()
    cfg = QuadConfig(line_line=line_line)
    req = GalerkinRequest(k_rows=np.arange(mesh.n_triangles), k_cols=np.arange(mesh.n_vertices),
                          d_rows=np.arange(mesh.n_vertices), d_cols=np.arange(mesh.n_vertices))
    a = assemble_galerkin_blocks(mesh, MAT, cfg, req)
    b = assemble_galerkin_blocks(mesh, MAT, cfg, req, edges=element_edges(mesh))
    for k in "KD":
        assert np.abs(a[k] - b[k]).max() <= 1e-12 * np.abs(a[k]).max()


def test_collocation_free_term_row_sum(cuboid0):
    from elastobem.assembly import free_term_matrix, integral_free_term

    pts = CollocationPoints.build(cuboid0, np.arange(cuboid0.n_vertices), np.arange(cuboid0.n_triangles))
    K = assemble_collocation_blocks(cuboid0, MAT, QuadConfig(), pts, None, np.arange(cuboid0.n_vertices))["K"]
    C = integral_free_term(cuboid0, "collocation", K, pts)
    CK = K + free_term_matrix(cuboid0, pts, C).toarray()
    for b in range(3):
        one = np.tile(np.eye(3)[b], cuboid0.n_vertices)
        assert np.abs(CK @ one).max() <= 1e-8 * np.abs(CK).max()
    # smooth face points see one half of the identity
    face = [i for i in range(len(pts)) if pts.vertex[i] < 0]
    assert np.allclose(C[face], 0.5 * np.eye(3), atol=5e-3)
