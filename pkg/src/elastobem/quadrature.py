"""Quadrature rules on the reference triangle, the unit segment and [0,1]^4.

Reference triangle: {(u, v): u, v >= 0, u + v <= 1}, area 1/2.  A point
(u, v) corresponds to barycentric weights (1 - u - v, u, v) on the corners
(P0, P1, P2) of a physical triangle.

All rule constructors are cached; the returned arrays are read-only.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial import legendre as npleg


@dataclass(frozen=True, eq=False)
class QuadRule:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        p = np.ascontiguousarray(self.points, dtype=np.float64)
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        if len(p) != len(w) or not np.all(np.isfinite(w)):
            raise ValueError("bad quadrature rule")
        p.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return len(self.weights)

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.dot(self.weights, f(self.points)))


@dataclass(frozen=True, eq=False)
class PairRule:
    """Rule for a double integral over two reference triangles."""

    test: np.ndarray
    trial: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True, eq=False)
class PagetRule:
    """Finite-part rule for fp int_0^1 f(y)/y dy."""

    n: int
    points: np.ndarray
    weights: np.ndarray


@lru_cache(maxsize=None)
def _gauss01(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = npleg.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def gauss_segment(order: int) -> QuadRule:
    """``order``-point Gauss-Legendre rule on [0, 1]."""
    if order < 1:
        raise ValueError("order must be >= 1")
    return _gauss_segment(int(order))


@lru_cache(maxsize=None)
def _gauss_segment(order: int) -> QuadRule:
    x, w = _gauss01(order)
    return QuadRule(x[:, None], w)


# Symmetric rules (Dunavant) as (barycentric orbit, weight) on area 1/2.
_A6 = (0.445948490915965, 0.091576213509771)
_W6 = (0.223381589678011, 0.109951743655322)
_A7 = (0.470142064105115, 0.101286507323456)
_W7 = (0.132394152788506, 0.125939180544827)


def _orbit3(a: float) -> np.ndarray:
    b = 1.0 - 2.0 * a
    return np.array([[a, a], [b, a], [a, b]])


def gauss_triangle(order: int) -> QuadRule:
    """Rule exact for polynomials of total degree <= ``order``."""
    if order < 1:
        raise ValueError("order must be >= 1")
    return _gauss_triangle(int(order))


@lru_cache(maxsize=None)
def _gauss_triangle(order: int) -> QuadRule:
    if order == 1:
        return QuadRule(np.array([[1 / 3, 1 / 3]]), np.array([0.5]))
    if order == 2:
        return QuadRule(_orbit3(1 / 6), np.full(3, 1 / 6))
    if order in (3, 4):
        pts = np.vstack([_orbit3(_A6[0]), _orbit3(_A6[1])])
        w = 0.5 * np.repeat(_W6, 3)
        return QuadRule(pts, w)
    if order == 5:
        pts = np.vstack([[[1 / 3, 1 / 3]], _orbit3(_A7[0]), _orbit3(_A7[1])])
        w = 0.5 * np.concatenate([[0.225], np.repeat(_W7, 3)])
        return QuadRule(pts, w)
    return conical_triangle((order + 3) // 2)


@lru_cache(maxsize=None)
def conical_triangle(n: int) -> QuadRule:
    """Collapsed n x n Gauss product rule (exact to degree 2n - 2)."""
    x, w = _gauss01(n)
    s, t = np.meshgrid(x, x, indexing="ij")
    ws = np.outer(w, w)
    u = s * (1.0 - t)
    v = s * t
    return QuadRule(np.column_stack([u.ravel(), v.ravel()]), (ws * s).ravel())


@lru_cache(maxsize=None)
def gauss_square(n: int) -> QuadRule:
    x, w = _gauss01(n)
    s, t = np.meshgrid(x, x, indexing="ij")
    return QuadRule(np.column_stack([s.ravel(), t.ravel()]), np.outer(w, w).ravel())


_REF = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def duffy_points(vertex_index: int, base_rule: QuadRule) -> QuadRule:
    """Map a unit-square rule onto the reference triangle, collapsed at a vertex.

    The Jacobian vanishes linearly at the chosen vertex, cancelling a 1/r
    singularity there.
    """
    if vertex_index not in (0, 1, 2):
        raise ValueError("vertex_index must be 0, 1 or 2")
    p = _REF[vertex_index]
    a = _REF[(vertex_index + 1) % 3] - p
    b = _REF[(vertex_index + 2) % 3] - p
    s, t = base_rule.points[:, 0], base_rule.points[:, 1]
    pts = p + s[:, None] * ((1.0 - t)[:, None] * a + t[:, None] * b)
    return QuadRule(pts, base_rule.weights * s)


@lru_cache(maxsize=None)
def duffy_rule(vertex_index: int, order: int) -> QuadRule:
    return duffy_points(vertex_index, gauss_square(order))


def _subtriangle_map(pts: np.ndarray, corners: np.ndarray) -> np.ndarray:
    return corners[0] + pts[:, :1] * (corners[1] - corners[0]) + pts[:, 1:2] * (corners[2] - corners[0])


@lru_cache(maxsize=None)
def point_singular_rule(u: float, v: float, order: int) -> QuadRule:
    """Rule for a 1/r singularity at an interior/edge/vertex reference point.

    The triangle is split into sub-triangles sharing the point and each one
    receives a Duffy rule collapsed there.
    """
    q = np.array([u, v])
    pts, wts = [], []
    base = duffy_rule(0, order)
    for k in range(3):
        c = np.array([q, _REF[k], _REF[(k + 1) % 3]])
        u1, u2 = c[1] - c[0], c[2] - c[0]
        area2 = abs(u1[0] * u2[1] - u1[1] * u2[0])
        if area2 < 1e-14:
            continue
        pts.append(_subtriangle_map(base.points, c))
        wts.append(base.weights * area2)
    return QuadRule(np.vstack(pts), np.concatenate(wts))


@lru_cache(maxsize=None)
def subdivided_triangle(order: int, levels: int) -> QuadRule:
    """``gauss_triangle(order)`` replicated on 4**levels congruent pieces."""
    base = gauss_triangle(order)
    tris = [_REF]
    for _ in range(levels):
        nxt = []
        for c in tris:
            ab, bc, ca = 0.5 * (c[0] + c[1]), 0.5 * (c[1] + c[2]), 0.5 * (c[2] + c[0])
            nxt += [np.array([c[0], ab, ca]), np.array([ab, c[1], bc]), np.array([ca, bc, c[2]]), np.array([ab, bc, ca])]
        tris = nxt
    scale = 0.25**levels
    pts = np.vstack([_subtriangle_map(base.points, c) for c in tris])
    return QuadRule(pts, np.tile(base.weights * scale, len(tris)))


SAUTER_CASES = ("coincident", "common_edge", "common_vertex", "separated")


def sauter_rule(case: str, order: int) -> PairRule:
    """Singularity-adapted rule for double integrals over a triangle pair.

    Conventions: for ``common_vertex`` the shared point is local vertex 0 of
    both triangles; for ``common_edge`` local vertices 0 and 1 of the test
    triangle coincide with local vertices 0 and 1 of the trial triangle.
    Weights sum to 1/4 (product of reference areas).
    """
    if case not in SAUTER_CASES:
        raise ValueError(f"unknown case {case!r}")
    if order < 1:
        raise ValueError("order must be >= 1")
    return _sauter_rule(case, int(order))


@lru_cache(maxsize=None)
def _sauter_rule(case: str, order: int) -> PairRule:
    if case == "separated":
        t = gauss_triangle(2 * order - 1) if order <= 3 else conical_triangle(order)
        n = len(t)
        return PairRule(np.repeat(t.points, n, axis=0), np.tile(t.points, (n, 1)), np.outer(t.weights, t.weights).ravel())

    x, w = _gauss01(order)
    g = np.meshgrid(x, x, x, x, indexing="ij")
    xi, e1, e2, e3 = (a.ravel() for a in g)
    W = np.einsum("i,j,k,l->ijkl", w, w, w, w).ravel() * xi**3
    # points below live on the triangle 0 <= y <= x <= 1
    regions = []
    if case == "coincident":
        W = W * e1**2 * e2
        e12, e123 = e1 * e2, e1 * e2 * e3
        regions = [
            ((xi, xi * (1 - e1 + e12)), (xi * (1 - e123), xi * (1 - e1)), W),
            ((xi * (1 - e123), xi * (1 - e1)), (xi, xi * (1 - e1 + e12)), W),
            ((xi, xi * (e1 - e12 + e123)), (xi * (1 - e12), xi * (e1 - e12)), W),
            ((xi * (1 - e12), xi * (e1 - e12)), (xi, xi * (e1 - e12 + e123)), W),
            ((xi * (1 - e123), xi * (e1 - e123)), (xi, xi * (e1 - e12)), W),
            ((xi, xi * (e1 - e12)), (xi * (1 - e123), xi * (e1 - e123)), W),
        ]
    elif case == "common_edge":
        W = W * e1**2
        e12, e123 = e1 * e2, e1 * e2 * e3
        regions = [
            ((xi, xi * e1 * e3), (xi * (1 - e12), xi * e1 * (1 - e2)), W),
            ((xi, xi * e1), (xi * (1 - e123), xi * e12 * (1 - e3)), W * e2),
            ((xi * (1 - e12), xi * e1 * (1 - e2)), (xi, xi * e123), W * e2),
            ((xi * (1 - e123), xi * e12 * (1 - e3)), (xi, xi * e1), W * e2),
            ((xi * (1 - e123), xi * e1 * (1 - e2 * e3)), (xi, xi * e12), W * e2),
        ]
    else:
        W = W * e2
        regions = [
            ((xi, xi * e1), (xi * e2, xi * e2 * e3), W),
            ((xi * e2, xi * e2 * e3), (xi, xi * e1), W),
        ]
    test = np.vstack([np.column_stack(r[0]) for r in regions])
    trial = np.vstack([np.column_stack(r[1]) for r in regions])
    weights = np.concatenate([r[2] for r in regions])
    # shear onto the reference triangle u, v >= 0, u + v <= 1
    test[:, 0] -= test[:, 1]
    trial[:, 0] -= trial[:, 1]
    return PairRule(test, trial, weights)


def paget_rule(n: int = 8) -> PagetRule:
    """n-point rule for the Hadamard finite part of int_0^1 f(y)/y dy.

    Nodes are Gauss-Legendre points; weights make the rule exact for f a
    polynomial of degree < n under the convention fp int_0^1 dy/y = 0.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    return _paget_rule(int(n))


@lru_cache(maxsize=None)
def _paget_rule(n: int) -> PagetRule:
    y, wg = _gauss01(n)
    # finite-part moments of shifted Legendre polynomials P_k(2y - 1)
    mu = np.empty(n)
    for k in range(n):
        c = npleg.leg2poly(np.eye(n)[k])
        shifted = np.polynomial.Polynomial(c)(np.polynomial.Polynomial([-1.0, 2.0])).coef
        m = np.arange(len(shifted))
        mu[k] = np.sum(shifted[1:] / m[1:])
    P = np.stack([npleg.legval(2 * y - 1, np.eye(n)[k]) for k in range(n)])
    w = wg * (((2 * np.arange(n) + 1) * mu) @ P)
    y.flags.writeable = False
    w.flags.writeable = False
    return PagetRule(n, y, w)


def paget_apply(rule: PagetRule, f: Callable[[np.ndarray], np.ndarray]) -> float:
    """fp int_0^1 f(y)/y dy."""
    return float(np.dot(rule.weights, f(rule.points)))


def paget_apply_flipped(rule: PagetRule, f: Callable[[np.ndarray], np.ndarray]) -> float:
    """fp int_0^1 f(xi)/(1 - xi) dxi, via xi -> 1 - xi."""
    return float(np.dot(rule.weights, f(1.0 - rule.points)))


@lru_cache(maxsize=None)
def edge_graded_rule(vertex_index: int, order: int) -> QuadRule:
    """Triangle rule graded toward the side opposite ``vertex_index``.

    Collapsed at the vertex with the radial coordinate s = 1 - (1 - z)^2,
    which tames a logarithmic singularity along that side.
    """
    x, w = _gauss01(order)
    z, t = np.meshgrid(x, x, indexing="ij")
    wz = np.outer(w, w)
    s = 1.0 - (1.0 - z) ** 2
    jac = 2.0 * (1.0 - z) * s
    p = _REF[vertex_index]
    a = _REF[(vertex_index + 1) % 3] - p
    b = _REF[(vertex_index + 2) % 3] - p
    s, t, wz, jac = s.ravel(), t.ravel(), wz.ravel(), jac.ravel()
    pts = p + s[:, None] * ((1.0 - t)[:, None] * a + t[:, None] * b)
    return QuadRule(pts, wz * jac)


def tensor_pair(test: QuadRule, trial: QuadRule) -> PairRule:
    n, m = len(test), len(trial)
    return PairRule(np.repeat(test.points, m, axis=0), np.tile(trial.points, (n, 1)),
                    np.outer(test.weights, trial.weights).ravel())
