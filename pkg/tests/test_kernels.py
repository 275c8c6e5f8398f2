import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from elastobem.analytic import kelvin_field, traction_field
from elastobem.kernels import (
    MaterialParams,
    SingularEvaluation,
    cross_matrix,
    gunter_apply,
    kelvin,
    newton,
    newton_normal,
    surface_curl,
    traction_kernel,
    u_star_cross,
)

vec3 = arrays(np.float64, 3, elements=st.floats(-2, 2))


def _apart(x, y):
    return np.linalg.norm(np.asarray(x) - np.asarray(y)) > 1e-2


@pytest.mark.parametrize("lam,mu", [(0.2778, 0.4167), (1.0, 1.0), (1.3627e8, 1.3627e8)])
def test_material(lam, mu):
    m = MaterialParams(lam, mu)
    a, b = m.kelvin_coeffs
    assert a > b > 0
    assert 0 < m.poisson < 0.5


def test_material_rejects_bad():
    with pytest.raises(ValueError):
        MaterialParams(1.0, 0.0)
    with pytest.raises(ValueError):
        MaterialParams(-3.0, 1.0)


def test_singular_evaluation(mat):
    x = np.zeros(3)
    with pytest.raises(SingularEvaluation):
        kelvin(x, x, mat)
    with pytest.raises(SingularEvaluation):
        newton(x, x)


@settings(max_examples=50, deadline=None)
@given(vec3, vec3)
def test_kelvin_symmetric_and_reciprocal(x, y):
    if not _apart(x, y):
        return
    m = MaterialParams(0.2778, 0.4167)
    U = kelvin(x, y, m)
    assert np.allclose(U, U.T, rtol=1e-13, atol=0)
    assert np.allclose(U, kelvin(y, x, m), rtol=1e-13, atol=0)
    assert np.all(np.linalg.eigvalsh(U) > 0)


def test_kelvin_navier(mat):
    # U(., y) e solves the homogeneous Navier equation away from y
    y = np.array([0.3, -0.2, 0.1])
    x = np.array([1.1, 0.4, -0.5])
    e = np.array([0.2, 0.7, -0.4])
    h = 1e-3
    I = np.eye(3)

    def u(p):
        return kelvin(p, y, mat) @ e

    lap = sum((u(x + h * I[k]) - 2 * u(x) + u(x - h * I[k])) / h**2 for k in range(3))
    graddiv = np.zeros(3)
    for i in range(3):
        for k in range(3):
            pp = u(x + h * I[i] + h * I[k])[k] - u(x + h * I[i] - h * I[k])[k]
            mm = u(x - h * I[i] + h * I[k])[k] - u(x - h * I[i] - h * I[k])[k]
            graddiv[i] += (pp - mm) / (4 * h**2)
    res = mat.mu * lap + (mat.lam + mat.mu) * graddiv
    assert np.linalg.norm(res) < 1e-5 * mat.mu * np.linalg.norm(lap)


def test_kelvin_field_matches_pointwise(mat, rng):
    y = rng.normal(size=3)
    xs = rng.normal(size=(5, 3)) + 3
    F = kelvin_field(xs, y, mat)
    for x, f in zip(xs, F):
        assert np.allclose(f, kelvin(x, y, mat), rtol=1e-14)


def test_traction_kernel_matches_field(mat, rng):
    # row a of traction_kernel(x, y, n) is the traction at y of U(., x) e_a
    for _ in range(5):
        x, y = rng.normal(size=3), rng.normal(size=3) + 2.0
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        T = traction_kernel(x, y, n, mat)
        tf = traction_field(y[None], n[None], x, mat)[0]
        assert np.allclose(T, tf.T, rtol=1e-12, atol=1e-14)


def test_traction_field_by_finite_differences(mat):
    y = np.zeros(3)
    x = np.array([0.7, -0.4, 1.2])
    n = np.array([1.0, 2.0, -2.0]) / 3.0
    h = 1e-5
    grad = np.zeros((3, 3, 3))  # [i, a, k] = d U_ia / d x_k
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        grad[:, :, k] = (kelvin(x + e, y, mat) - kelvin(x - e, y, mat)) / (2 * h)
    t = np.zeros((3, 3))
    for a in range(3):
        g = grad[:, a, :]
        sig = mat.lam * np.trace(g) * np.eye(3) + mat.mu * (g + g.T)
        t[:, a] = sig @ n
    assert np.allclose(traction_field(x[None], n[None], y, mat)[0], t, rtol=1e-7, atol=1e-10)


def test_newton_normal_is_derivative():
    x, y, n = np.array([1.0, 0.5, 0.2]), np.array([0.1, -0.3, 0.4]), np.array([0.0, 0.6, 0.8])
    h = 1e-6
    fd = (newton(x, y + h * n) - newton(x, y - h * n)) / (2 * h)
    assert abs(newton_normal(x, y, n) - fd) < 1e-8


@settings(max_examples=50, deadline=None)
@given(vec3, vec3, vec3)
def test_gunter_and_curl(g, n, u):
    if np.linalg.norm(n) < 1e-3:
        return
    n = n / np.linalg.norm(n)
    G = gunter_apply(g, n)
    assert np.allclose(G, -G.T)
    # M u = (n . u) g - (g . u) n = (n x g) x u
    assert np.allclose(G @ u, np.cross(surface_curl(g, n), u), atol=1e-12)
    assert abs(surface_curl(g, n) @ n) < 1e-12


@settings(max_examples=30, deadline=None)
@given(vec3, vec3)
def test_cross_helpers(d, e):
    assert np.allclose(cross_matrix(d) @ e, np.cross(e, d), atol=1e-12)
    U = np.outer(d, e) + np.eye(3)
    C = u_star_cross(U, d)
    for k in range(3):
        assert np.allclose(C[:, k], np.cross(U[:, k], d), atol=1e-12)
