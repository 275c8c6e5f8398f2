"""Chebyshev interpolation on boxes."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as C

_TOL = 1e-12


def cheb_nodes(p: int) -> np.ndarray:
    """Roots of T_p on [-1, 1]."""
    if p < 2:
        raise ValueError("p must be >= 2")
    return np.cos((2 * np.arange(p) + 1) * np.pi / (2 * p))


@lru_cache(maxsize=None)
def _coeffs(p: int) -> np.ndarray:
    """Chebyshev series coefficients of S_p(., x_n): column n."""
    xn = cheb_nodes(p)
    c = (2.0 / p) * C.chebvander(xn, p - 1).T  # (k, n): T_k(x_n)
    c[0, :] = 1.0 / p
    return c


def cheb_interp(p: int, x, n: int) -> np.ndarray:
    """S_p(x, x_n) = 1/p + 2/p sum_k T_k(x) T_k(x_n)."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1 + _TOL):
        raise ValueError("x outside [-1, 1]")
    if not 0 <= n < p:
        raise ValueError("node index out of range")
    return C.chebval(x, _coeffs(p)[:, n])


def basis_1d(p: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Values and derivatives of all S_p(., x_n) at x, each (len(x), p)."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1 + _TOL):
        raise ValueError("x outside [-1, 1]")
    c = _coeffs(p)
    val = C.chebvander(x, p - 1) @ c
    dc = C.chebder(c, axis=0)
    der = C.chebvander(x, p - 2) @ dc if p > 1 else np.zeros_like(val)
    return val, der


def tensor_basis(p: int, ref: np.ndarray, grad: bool = False):
    """Tensor basis S_n(x) at reference points (N, 3) in [-1, 1]^3.

    Node n = (n0 * p + n1) * p + n2.  Returns values (N, p^3) and, with
    ``grad``, reference gradients (N, p^3, 3).
    """
    ref = np.atleast_2d(ref)
    vals, ders = zip(*(basis_1d(p, ref[:, d]) for d in range(3)))
    v = np.einsum("ia,ib,ic->iabc", vals[0], vals[1], vals[2]).reshape(len(ref), -1)
    if not grad:
        return v
    g = np.stack([
        np.einsum("ia,ib,ic->iabc", ders[0], vals[1], vals[2]).reshape(len(ref), -1),
        np.einsum("ia,ib,ic->iabc", vals[0], ders[1], vals[2]).reshape(len(ref), -1),
        np.einsum("ia,ib,ic->iabc", vals[0], vals[1], ders[2]).reshape(len(ref), -1),
    ], axis=-1)
    return v, g


def tensor_nodes(p: int) -> np.ndarray:
    """Reference tensor nodes (p^3, 3) in the ordering of ``tensor_basis``."""
    x = cheb_nodes(p)
    g = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1)
    return g.reshape(-1, 3)
