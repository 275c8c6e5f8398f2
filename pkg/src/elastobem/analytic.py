"""Reference solutions and error metrics."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .geometry import TriangleMesh
from .kernels import MaterialParams
from .quadrature import gauss_triangle


def kelvin_field(x: np.ndarray, y: np.ndarray, mat: MaterialParams) -> np.ndarray:
    """Kelvin tensors U(x_i, y) for points x (n, 3) and one pole y, shape (n, 3, 3)."""
    r = np.atleast_2d(x) - np.asarray(y, dtype=float)
    rho = np.linalg.norm(r, axis=1)
    if np.any(rho == 0):
        raise ValueError("evaluation at the pole")
    a, b = mat.kelvin_coeffs
    return a * np.eye(3) / rho[:, None, None] + b * r[:, :, None] * r[:, None, :] / rho[:, None, None] ** 3


def traction_field(x: np.ndarray, n: np.ndarray, y: np.ndarray, mat: MaterialParams) -> np.ndarray:
    """Traction at x (normal n) of the displacement x -> U(x, y) e_a.

    Returns (n, 3, 3) with ``out[i, :, a]`` the traction of column a.
    """
    r = np.atleast_2d(x) - np.asarray(y, dtype=float)
    n = np.atleast_2d(n)
    rho = np.linalg.norm(r, axis=1)
    a, b = mat.kelvin_coeffs
    lam, mu = mat.lam, mat.mu
    # gradient dU_{ia}/dx_k
    I = np.eye(3)
    r3 = rho[:, None, None, None] ** 3
    g = (-a * I[None, :, :, None] * r[:, None, None, :] / r3
         + b * (I[None, :, None, :] * r[:, None, :, None] + r[:, :, None, None] * I[None, None, :, :]) / r3
         - 3 * b * r[:, :, None, None] * r[:, None, :, None] * r[:, None, None, :] / rho[:, None, None, None] ** 5)
    div = np.einsum("niai->na", g)
    rn = np.einsum("niak,nk->nia", g, n)  # (grad u_a) n
    nr = np.einsum("nkai,nk->nia", g, n)  # (grad u_a)^T n
    return lam * n[:, :, None] * div[:, None, :] + mu * (rn + nr)


@dataclass(frozen=True)
class PointSource:
    """Exterior pole y_S with a fixed direction e for manufactured data."""

    location: tuple[float, float, float]
    direction: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def check_outside(self, mesh: TriangleMesh) -> None:
        """Reject poles on or inside the closed surface (solid-angle test)."""
        y = np.asarray(self.location, dtype=float)
        r = mesh.centroids - y
        d = np.linalg.norm(r, axis=1)
        if d.min() < 1e-12 * mesh.h:
            raise ValueError("source lies on the boundary")
        if mesh.is_closed:
            omega = np.sum(mesh.areas * np.einsum("ij,ij->i", r, mesh.normals) / d**3) / (4 * np.pi)
            if omega > 0.5:
                raise ValueError("source lies inside the domain")


def manufactured_bc(source: PointSource, mat: MaterialParams):
    """Evaluators g_D(x) and g_N(x, n) of the field u(x) = U(x, y_S) e."""
    y = np.asarray(source.location, dtype=float)
    e = np.asarray(source.direction, dtype=float)

    def g_d(x):
        return kelvin_field(x, y, mat) @ e

    def g_n(x, n):
        return traction_field(x, n, y, mat) @ e

    return g_d, g_n


def boussinesq(x: np.ndarray, F: float, mat: MaterialParams) -> tuple[np.ndarray, np.ndarray]:
    """Surface displacements (u1, u3) of a half-space under a normal point load F."""
    x = np.atleast_2d(x)
    r = np.hypot(x[:, 0], x[:, 1])
    if np.any(r == 0):
        raise ValueError("r = 0 is singular")
    lam, mu = mat.lam, mat.mu
    u1 = -F * x[:, 0] / (4 * np.pi * (lam + mu) * r**2)
    u3 = F * (lam + 2 * mu) / (4 * np.pi * mu * (lam + mu) * r)
    return u1, u3


def element_quadrature(mesh: TriangleMesh, order: int = 5):
    """Physical points (nt, q, 3), weights (nt, q) and barycentrics (q, 3)."""
    rule = gauss_triangle(order)
    s, t = rule.points[:, 0], rule.points[:, 1]
    bary = np.column_stack([1 - s - t, s, t])
    pts = np.einsum("qk,nkc->nqc", bary, mesh.corners)
    w = 2.0 * mesh.areas[:, None] * rule.weights[None, :]
    return pts, w, bary


@dataclass(frozen=True)
class ErrorNorms:
    err_u: float
    err_t: float
    flag_u: bool = False
    flag_t: bool = False


def rel_l2_error(mesh: TriangleMesh, u_nodes: np.ndarray, t_elems: np.ndarray,
                 u_exact: Callable, t_exact: Callable, elements: Optional[np.ndarray] = None,
                 t_elements: Optional[np.ndarray] = None, order: int = 5) -> ErrorNorms:
    """Relative surface L2 errors of P1 displacement and P0 traction.

    ``elements``/``t_elements`` restrict the integration (default: all).
    A zero exact norm gives the absolute error with the flag set.
    """
    pts, w, bary = element_quadrature(mesh, order)
    uh = np.einsum("qk,nkc->nqc", bary, u_nodes[mesh.triangles])
    ue = u_exact(pts.reshape(-1, 3)).reshape(pts.shape)
    n = np.repeat(mesh.normals, pts.shape[1], axis=0)
    te = t_exact(pts.reshape(-1, 3), n).reshape(pts.shape)
    th = np.broadcast_to(t_elems[:, None, :], pts.shape)
    eu = elements if elements is not None else np.arange(mesh.n_triangles)
    et = t_elements if t_elements is not None else np.arange(mesh.n_triangles)

    def rel(err, ref, sel):
        num = np.sqrt(np.sum(w[sel] * np.sum((err[sel]) ** 2, axis=2)))
        den = np.sqrt(np.sum(w[sel] * np.sum(ref[sel] ** 2, axis=2)))
        if den == 0:
            return num, True
        return num / den, False

    a, fa = rel(uh - ue, ue, eu)
    b, fb = rel(th - te, te, et)
    return ErrorNorms(a, b, fa, fb)


def eoc(err_k: float, err_k1: float) -> float:
    """log2 of the error ratio between two consecutive levels."""
    if err_k <= 0 or err_k1 <= 0:
        raise ValueError("errors must be positive")
    return float(np.log2(err_k / err_k1))
