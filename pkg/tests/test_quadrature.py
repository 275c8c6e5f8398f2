import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elastobem.quadrature import (
    SAUTER_CASES,
    conical_triangle,
    duffy_rule,
    edge_graded_rule,
    gauss_segment,
    gauss_square,
    gauss_triangle,
    paget_apply,
    paget_apply_flipped,
    paget_rule,
    point_singular_rule,
    sauter_rule,
    subdivided_triangle,
)


def _monomial_triangle(i, j):
    # int over u, v >= 0, u + v <= 1 of u^i v^j
    from math import factorial

    return factorial(i) * factorial(j) / factorial(i + j + 2)


@pytest.mark.parametrize("order", [1, 2, 4, 7])
def test_gauss_segment_exact(order):
    r = gauss_segment(order)
    for k in range(2 * order):
        assert abs(r.integrate(lambda x: x[:, 0] ** k if x.ndim == 2 else x ** k) - 1 / (k + 1)) < 1e-13


@pytest.mark.parametrize("order", [1, 2, 3, 5, 7])
def test_gauss_triangle_exact(order):
    r = gauss_triangle(order)
    assert abs(r.weights.sum() - 0.5) < 1e-14
    assert np.all(r.points >= -1e-14) and np.all(r.points.sum(axis=1) <= 1 + 1e-14)
    for i in range(order + 1):
        for j in range(order + 1 - i):
            got = r.integrate(lambda p: p[:, 0] ** i * p[:, 1] ** j)
            assert abs(got - _monomial_triangle(i, j)) < 1e-13


@pytest.mark.parametrize("n", [3, 6])
def test_conical_and_subdivided(n):
    for r in (conical_triangle(n), subdivided_triangle(3, 2)):
        assert abs(r.weights.sum() - 0.5) < 1e-13
        assert abs(r.integrate(lambda p: p[:, 0] ** 2 * p[:, 1]) - _monomial_triangle(2, 1)) < 1e-13


def test_gauss_square_area():
    assert abs(gauss_square(4).weights.sum() - 1.0) < 1e-14


@pytest.mark.parametrize("vertex", [0, 1, 2])
def test_duffy_integrates_inverse_distance(vertex):
    ref = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])[vertex]

    def f(p):
        return 1.0 / np.linalg.norm(p - ref, axis=1)

    # int 1/r over the unit right triangle from its right-angle corner
    exact = {0: np.sqrt(2.0) * np.arcsinh(1.0)}
    got = duffy_rule(vertex, 16).integrate(f)
    ref_val = exact.get(vertex, duffy_rule(vertex, 32).integrate(f))
    assert abs(got - ref_val) < 1e-10 * ref_val
    assert abs(duffy_rule(vertex, 10).weights.sum() - 0.5) < 1e-12


def _inverse_distance_exact(q):
    # int 1/|p - q| over the reference triangle: sum over sub-triangles at q
    ref = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    tot = 0.0
    for k in range(3):
        a, b = ref[k], ref[(k + 1) % 3]
        e = (b - a) / np.linalg.norm(b - a)
        d = abs((a - q) @ np.array([-e[1], e[0]]))
        if d < 1e-14:
            continue
        tot += d * (np.arcsinh((b - q) @ e / d) - np.arcsinh((a - q) @ e / d))
    return tot


@pytest.mark.parametrize("q", [(1 / 3, 1 / 3), (0.2, 0.3), (0.0, 0.0), (1.0, 0.0), (0.5, 0.0), (0.5, 0.5)])
def test_point_singular_rule(q):
    r = point_singular_rule(*q, 32)
    assert abs(r.weights.sum() - 0.5) < 1e-12
    got = r.integrate(lambda p: 1.0 / np.hypot(p[:, 0] - q[0], p[:, 1] - q[1]))
    exact = _inverse_distance_exact(np.array(q))
    assert abs(got - exact) < 1e-9 * exact


def test_edge_graded_area():
    for v in range(3):
        assert abs(edge_graded_rule(v, 8).weights.sum() - 0.5) < 1e-13


@pytest.mark.parametrize("case", SAUTER_CASES)
def test_sauter_weights_and_domain(case):
    r = sauter_rule(case, 5)
    assert abs(r.weights.sum() - 0.25) < 1e-12
    for p in (r.test, r.trial):
        assert np.all(p >= -1e-13) and np.all(p.sum(axis=1) <= 1 + 1e-13)


@pytest.mark.parametrize("case", SAUTER_CASES)
def test_sauter_polynomial(case):
    r = sauter_rule(case, 5)
    f = r.test[:, 0] * r.trial[:, 1] ** 2
    assert abs(np.dot(r.weights, f) - _monomial_triangle(1, 0) * _monomial_triangle(0, 2)) < 1e-12


def test_sauter_coincident_singular_converges():
    # int int 1/|x - y| over a triangle pair in the plane
    def val(order):
        r = sauter_rule("coincident", order)
        return np.dot(r.weights, 1.0 / np.linalg.norm(r.test - r.trial, axis=1))

    assert abs(val(12) - val(16)) < 1e-9 * val(16)


def test_sauter_bad_input():
    with pytest.raises(ValueError):
        sauter_rule("touching", 3)
    with pytest.raises(ValueError):
        sauter_rule("coincident", 0)


@pytest.mark.parametrize("n", [2, 4, 8, 12])
def test_paget_exactness(n):
    r = paget_rule(n)
    for k in range(1, n):
        assert abs(paget_apply(r, lambda y: y**k) - 1.0 / k) < 1e-12
    assert abs(paget_apply(r, lambda y: np.ones_like(y))) < 1e-12


def test_paget_flipped_and_log_part():
    r = paget_rule(8)
    # fp int_0^1 (1 - xi)^2/(1 - xi) dxi = 1/2
    assert abs(paget_apply_flipped(r, lambda x: (1 - x) ** 2) - 0.5) < 1e-12
    # f(y) = 1 + y: finite part of 1/y vanishes, y/y integrates to 1
    assert abs(paget_apply(r, lambda y: 1 + y) - 1.0) < 1e-12


def test_paget_bad_n():
    with pytest.raises(ValueError):
        paget_rule(1)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=8))
def test_paget_linear_in_polynomial(coef):
    r = paget_rule(8)
    c = np.array(coef)
    exact = sum(c[k] / k for k in range(1, len(c)))
    got = paget_apply(r, lambda y: np.polynomial.polynomial.polyval(y, c))
    assert abs(got - exact) < 1e-11 * (1 + np.abs(c).sum())
