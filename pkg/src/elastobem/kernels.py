"""Point kernels of isotropic elastostatics and the tangential operators.

Kernels return bare forms: ``newton`` is 1/|x-y| without the 1/(4 pi)
factor, which the assembly layer applies where it belongs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS3 = np.zeros((3, 3, 3))
EPS3[0, 1, 2] = EPS3[1, 2, 0] = EPS3[2, 0, 1] = 1.0
EPS3[0, 2, 1] = EPS3[2, 1, 0] = EPS3[1, 0, 2] = -1.0
I3 = np.eye(3)


class SingularEvaluation(ValueError):
    """Raised when a kernel is evaluated at coincident points."""


@dataclass(frozen=True)
class MaterialParams:
    lam: float
    mu: float

    def __post_init__(self):
        if not (self.mu > 0 and self.lam + 2 * self.mu > 0):
            raise ValueError("need mu > 0 and lambda + 2 mu > 0")

    @property
    def poisson(self) -> float:
        return self.lam / (2.0 * (self.lam + self.mu))

    @property
    def kelvin_coeffs(self) -> tuple[float, float]:
        """(a, b) with U = a I/r + b (x-y)(x-y)^T/r^3."""
        lam, mu = self.lam, self.mu
        den = 8.0 * np.pi * mu * (lam + 2.0 * mu)
        return (lam + 3.0 * mu) / den, (lam + mu) / den


def _offset(x, y):
    r = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    rho = float(np.linalg.norm(r))
    if rho == 0.0:
        raise SingularEvaluation("x and y coincide")
    return r, rho


def kelvin(x, y, mat: MaterialParams) -> np.ndarray:
    """Kelvin tensor U(x, y)."""
    r, rho = _offset(x, y)
    a, b = mat.kelvin_coeffs
    return a * I3 / rho + b * np.outer(r, r) / rho**3


def traction_kernel(x, y, n_y, mat: MaterialParams) -> np.ndarray:
    """(T_y U)^T at (x, y): row a holds the traction of the field U e_a."""
    r, rho = _offset(x, y)
    n = np.asarray(n_y, dtype=float)
    a, b = mat.kelvin_coeffs
    mu = mat.mu
    c = 1.0 / (4.0 * np.pi * (mat.lam + 2.0 * mu))
    rn = r @ n
    return (mu * c * (rn * I3 + np.outer(n, r) - np.outer(r, n)) / rho**3
            + 6.0 * mu * b * rn * np.outer(r, r) / rho**5)


def newton(x, y) -> float:
    return 1.0 / _offset(x, y)[1]


def newton_normal(x, y, n_y) -> float:
    """d/dn_y of 1/|x-y|, i.e. (x-y).n_y / |x-y|^3."""
    r, rho = _offset(x, y)
    return float(r @ np.asarray(n_y, dtype=float)) / rho**3


def gunter_apply(grad_phi, n) -> np.ndarray:
    """Matrix M with M_ij = n_j d_i phi - n_i d_j phi."""
    g = np.asarray(grad_phi, dtype=float)
    n = np.asarray(n, dtype=float)
    return np.outer(g, n) - np.outer(n, g)


def surface_curl(grad_phi, n) -> np.ndarray:
    return np.cross(np.asarray(n, dtype=float), np.asarray(grad_phi, dtype=float))


def u_star_cross(U, u) -> np.ndarray:
    """Matrix whose k-th column is (column k of U) x u."""
    return np.cross(np.asarray(U, dtype=float).T, np.asarray(u, dtype=float)).T


def cross_matrix(d) -> np.ndarray:
    """C with C @ e = e x d for every vector e."""
    d = np.asarray(d, dtype=float)
    return np.array([[0.0, d[2], -d[1]], [-d[2], 0.0, d[0]], [d[1], -d[0], 0.0]])
