"""BiCGSTAB solves of the mixed block systems."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.sparse.linalg import LinearOperator, aslinearoperator
from scipy.sparse.linalg import bicgstab as _scipy_bicgstab

from .assembly.system import BoundaryOperatorSet, MixedTraceData


@dataclass(frozen=True)
class LinearMap:
    """A square linear map given by its action."""

    dimension: int
    apply: Callable[[np.ndarray], np.ndarray]

    @classmethod
    def from_operator(cls, A) -> "LinearMap":
        op = aslinearoperator(A)
        if op.shape[0] != op.shape[1]:
            raise ValueError("map must be square")
        return cls(op.shape[0], op.matvec)

    def as_operator(self) -> LinearOperator:
        return LinearOperator((self.dimension, self.dimension), matvec=self.apply, dtype=float)


@dataclass(frozen=True)
class SolveStats:
    iterations: int
    residual: float  # recomputed ||b - A x|| / ||b||
    converged: bool
    breakdown: bool = False


def block_jacobi(A: np.ndarray) -> LinearOperator:
    """Inverse of the 3x3 diagonal blocks of a dense matrix."""
    n = A.shape[0]
    if n % 3 or A.shape[1] != n:
        raise ValueError("block Jacobi needs a square matrix of 3x3 blocks")
    idx = np.arange(n).reshape(-1, 3)
    blocks = A[idx[:, :, None], idx[:, None, :]]
    inv = np.linalg.inv(blocks)

    def mv(x):
        return np.einsum("kab,kb->ka", inv, np.reshape(x, (-1, 3))).ravel()

    return LinearOperator((n, n), matvec=mv, dtype=float)


def bicgstab(A, b: np.ndarray, tol: float = 1e-8, max_iter: int = 500,
             x0: Optional[np.ndarray] = None, M: Optional[LinearOperator] = None) -> tuple[np.ndarray, SolveStats]:
    """BiCGSTAB (optionally preconditioned by ``M``); the reported residual is recomputed."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    amap = A if isinstance(A, LinearMap) else LinearMap.from_operator(A)
    b = np.asarray(b, dtype=float).ravel()
    if b.shape[0] != amap.dimension:
        raise ValueError(f"rhs has length {b.shape[0]}, map has dimension {amap.dimension}")
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b), SolveStats(0, 0.0, True)
    x0 = np.zeros_like(b) if x0 is None else np.asarray(x0, dtype=float).ravel()
    r0 = np.linalg.norm(b - amap.apply(x0)) / bnorm
    if r0 <= tol:
        return x0, SolveStats(0, float(r0), True)
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = _scipy_bicgstab(amap.as_operator(), b, x0=x0, rtol=tol, atol=0.0, maxiter=max_iter, callback=cb, M=M)
    res = float(np.linalg.norm(b - amap.apply(x)) / bnorm)
    return x, SolveStats(count[0], res, info == 0 and res <= 1.5 * tol, breakdown=info < 0)


def solve_mixed(ops: BoundaryOperatorSet, tol: float = 1e-8, max_iter: int = 500,
                x0: Optional[np.ndarray] = None, precondition: bool = False,
                direct: bool = False) -> tuple[MixedTraceData, SolveStats]:
    """Solve the block system and return the completed Cauchy data.

    ``precondition`` applies block Jacobi (dense systems only); ``direct``
    uses an LU solve of the dense system instead of BiCGSTAB.
    """
    A = ops.system()
    b = ops.rhs()
    if b.size == 0:
        return ops.data.with_solution(b), SolveStats(0, 0.0, True)
    if direct:
        if not isinstance(A, np.ndarray):
            raise ValueError("direct solves need a dense system")
        x = np.linalg.solve(A, b)
        bnorm = np.linalg.norm(b)
        res = float(np.linalg.norm(b - A @ x) / bnorm) if bnorm > 0 else 0.0
        return ops.data.with_solution(x), SolveStats(0, res, bool(np.isfinite(res)))
    M = None
    if precondition:
        if not isinstance(A, np.ndarray):
            raise ValueError("block Jacobi needs a dense system")
        M = block_jacobi(A)
    x, stats = bicgstab(A, b, tol, max_iter, x0, M)
    return ops.data.with_solution(x), stats
