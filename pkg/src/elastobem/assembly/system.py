"""Mixed boundary value problems: trace data, block systems and right-hand sides.

Unknowns are ordered [t~ on Dirichlet elements, u~ on free nodes], each
dof carrying three components (component fastest).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from ..analytic import element_quadrature
from ..geometry import EdgeSet, TriangleMesh, open_boundary
from ..kernels import MaterialParams
from .operators import (CollocationPoints, GalerkinRequest, QuadConfig, assemble_collocation_blocks,
                        assemble_galerkin_blocks, mass_p0_p1)

Operator = Union[np.ndarray, LinearOperator]


def expand(idx: np.ndarray) -> np.ndarray:
    """Dof indices -> component indices (3 i + a)."""
    idx = np.asarray(idx, dtype=np.int64)
    return (3 * idx[:, None] + np.arange(3)).ravel()


# ------------------------------------------------------------------ trace data


@dataclass
class MixedTraceData:
    """Boundary data and unknowns of a mixed problem.

    ``g_d`` (nv, 3) is the nodal extension of the Dirichlet datum, zero on
    free nodes; ``g_n`` (nt, 3) the P0 extension of the Neumann datum, zero
    on Dirichlet elements.  ``u_tilde``/``t_tilde`` hold the unknowns.
    """

    mesh: TriangleMesh
    g_d: np.ndarray
    g_n: np.ndarray
    u_tilde: Optional[np.ndarray] = None
    t_tilde: Optional[np.ndarray] = None

    def __post_init__(self):
        nv, nt = self.mesh.n_vertices, self.mesh.n_triangles
        self.g_d = np.array(self.g_d, dtype=float).reshape(nv, 3)
        self.g_n = np.array(self.g_n, dtype=float).reshape(nt, 3)
        self.g_d[self.free_nodes] = 0.0
        self.g_n[self.dirichlet_elements] = 0.0
        if self.u_tilde is None:
            self.u_tilde = np.zeros((nv, 3))
        if self.t_tilde is None:
            self.t_tilde = np.zeros((nt, 3))

    @property
    def dirichlet_elements(self) -> np.ndarray:
        return np.flatnonzero(self.mesh.dirichlet)

    @property
    def neumann_elements(self) -> np.ndarray:
        return np.flatnonzero(self.mesh.neumann)

    @property
    def dirichlet_nodes(self) -> np.ndarray:
        """Nodes in the closure of the Dirichlet part."""
        mark = np.zeros(self.mesh.n_vertices, dtype=bool)
        mark[self.mesh.triangles[self.mesh.dirichlet].ravel()] = True
        return np.flatnonzero(mark)

    @property
    def free_nodes(self) -> np.ndarray:
        """Nodes whose star lies in the Neumann part: the u~ unknowns."""
        mark = np.ones(self.mesh.n_vertices, dtype=bool)
        mark[self.mesh.triangles[self.mesh.dirichlet].ravel()] = False
        return np.flatnonzero(mark)

    @property
    def loaded_elements(self) -> np.ndarray:
        """Neumann elements with a nonzero datum."""
        return np.flatnonzero(np.any(self.g_n != 0.0, axis=1))

    @property
    def u(self) -> np.ndarray:
        return self.u_tilde + self.g_d

    @property
    def t(self) -> np.ndarray:
        return self.t_tilde + self.g_n

    @classmethod
    def from_evaluators(cls, mesh: TriangleMesh, g_d: Optional[Callable] = None, g_n: Optional[Callable] = None,
                        order: int = 5) -> "MixedTraceData":
        """Nodal interpolation of g_D and element means of g_N(x, n)."""
        gd = np.zeros((mesh.n_vertices, 3))
        gn = np.zeros((mesh.n_triangles, 3))
        if g_d is not None:
            gd = np.asarray(g_d(mesh.vertices), dtype=float)
        if g_n is not None:
            pts, w, _ = element_quadrature(mesh, order)
            n = np.repeat(mesh.normals, pts.shape[1], axis=0)
            vals = np.asarray(g_n(pts.reshape(-1, 3), n)).reshape(pts.shape)
            gn = np.einsum("nq,nqc->nc", w, vals) / mesh.areas[:, None]
        return cls(mesh, gd, gn)

    def with_solution(self, z: np.ndarray) -> "MixedTraceData":
        """Copy with unknowns filled from a solution vector."""
        nd = len(self.dirichlet_elements)
        t = np.zeros_like(self.t_tilde)
        u = np.zeros_like(self.u_tilde)
        t[self.dirichlet_elements] = z[: 3 * nd].reshape(-1, 3)
        u[self.free_nodes] = z[3 * nd:].reshape(-1, 3)
        return replace(self, g_d=self.g_d.copy(), g_n=self.g_n.copy(), u_tilde=u, t_tilde=t)

    def unknown_vector(self) -> np.ndarray:
        return np.concatenate([self.t_tilde[self.dirichlet_elements].ravel(), self.u_tilde[self.free_nodes].ravel()])

    def validate(self) -> None:
        if self.mesh.n_triangles == 0:
            raise ValueError("invalid problem: empty boundary")
        if self.mesh.is_closed and len(self.dirichlet_elements) == 0:
            raise ValueError("invalid problem: pure Neumann data on a closed surface leaves rigid motions free")


# -------------------------------------------------------------- block storage


@dataclass
class Block:
    """Operator restricted to index sets: ``op`` maps ``cols`` dofs to ``rows`` dofs."""

    rows: np.ndarray
    cols: np.ndarray
    op: Operator

    def sub(self, rows: np.ndarray, cols: np.ndarray) -> Operator:
        if len(rows) == 0 or len(cols) == 0:
            return np.zeros((3 * len(rows), 3 * len(cols)))
        ri = _positions(self.rows, rows)
        ci = _positions(self.cols, cols)
        if isinstance(self.op, np.ndarray):
            return self.op[np.ix_(expand(ri), expand(ci))]
        return _restricted(self.op, expand(ri), expand(ci))

    @property
    def nbytes(self) -> int:
        return int(self.op.nbytes) if isinstance(self.op, np.ndarray) else int(getattr(self.op, "nbytes", 0))


def _positions(have: np.ndarray, want: np.ndarray) -> np.ndarray:
    lookup = {int(v): i for i, v in enumerate(have)}
    try:
        return np.array([lookup[int(v)] for v in want], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"dof {exc} not assembled in this block") from None


def _restricted(op: LinearOperator, ri: np.ndarray, ci: np.ndarray) -> LinearOperator:
    n_in = op.shape[1]
    n_out = op.shape[0]

    def mv(x):
        full = np.zeros(n_in)
        full[ci] = np.ravel(x)
        return (op @ full)[ri]

    def rmv(y):
        full = np.zeros(n_out)
        full[ri] = np.ravel(y)
        return (op.T @ full)[ci]

    return LinearOperator((len(ri), len(ci)), matvec=mv, rmatvec=rmv, dtype=float)


def _mul(op: Operator, x: np.ndarray) -> np.ndarray:
    return op @ x if x.size else np.zeros(op.shape[0])


# ------------------------------------------------------------- operator sets


@dataclass
class BoundaryOperatorSet:
    """Assembled blocks of one formulation plus the block layout of the system."""

    formulation: str  # "collocation" | "galerkin"
    mesh: TriangleMesh
    blocks: dict[str, Block]
    data: MixedTraceData
    free_term: Optional[np.ndarray] = None  # (npts, 3, 3) for collocation
    points: Optional[CollocationPoints] = None
    info: dict = field(default_factory=dict)

    @property
    def n_dirichlet(self) -> int:
        return len(self.data.dirichlet_elements)

    @property
    def dimension(self) -> int:
        return 3 * (self.n_dirichlet + len(self.data.free_nodes))

    @property
    def nbytes(self) -> int:
        if "fmm" in self.info:
            return self.info["fmm"].storage().total
        return sum(b.nbytes for b in self.blocks.values())

    def _parts(self):
        d = self.data
        de, fn, dn, le = d.dirichlet_elements, d.free_nodes, d.dirichlet_nodes, d.loaded_elements
        if self.formulation == "collocation":
            rows = self._collocation_rows()
            V, CK = self.blocks["V"], self.blocks["CK"]
            return dict(A11=V.sub(rows, de), A12=CK.sub(rows, fn), F_d=CK.sub(rows, dn), F_n=V.sub(rows, le))
        V, K, D = self.blocks["V"], self.blocks["K"], self.blocks["D"]
        return dict(A11=V.sub(de, de), A12=K.sub(de, fn), A22=D.sub(fn, fn),
                    F_vn=V.sub(de, le), F_kd=K.sub(de, dn), F_kn=K.sub(le, fn), F_dd=D.sub(fn, dn))

    def _collocation_rows(self) -> np.ndarray:
        # Dirichlet centroids first so that both diagonal blocks are positive
        v = self.points.vertex
        return np.concatenate([np.flatnonzero(v < 0), np.flatnonzero(v >= 0)])

    def _row_sign(self) -> np.ndarray:
        """+1 on centroid equations, -1 on nodal equations (system row order)."""
        nd = int(np.sum(self.points.vertex < 0))
        s = np.ones(3 * len(self.points))
        s[3 * nd:] = -1.0
        return s

    def system(self) -> Operator:
        """The block system matrix (dense) or a matrix-free map."""
        if "system" in self.info:
            return self.info["system"]
        p = self._parts()
        if self.formulation == "collocation":
            sgn = self._row_sign()
            if isinstance(p["A11"], np.ndarray) and isinstance(p["A12"], np.ndarray):
                A = sgn[:, None] * np.hstack([p["A11"], -p["A12"]])
            else:
                A = _hstack_ops([p["A11"], -aslinearoperator(p["A12"])], sgn)
        else:
            blocks = [[p["A11"], p["A12"]], [p["A12"], p["A22"]]]
            if all(isinstance(x, np.ndarray) for row in blocks for x in row):
                A = np.block([[p["A11"], -p["A12"]], [p["A12"].T, p["A22"]]])
            else:
                A = _galerkin_op(p["A11"], p["A12"], p["A22"])
        self.info["system"] = A
        return A

    def rhs(self) -> np.ndarray:
        d = self.data
        gd = d.g_d[d.dirichlet_nodes].ravel()
        gn = d.g_n[d.loaded_elements].ravel()
        p = self._parts()
        if self.formulation == "collocation":
            return self._row_sign() * (_mul(p["F_d"], gd) - _mul(p["F_n"], gn))
        M = self.blocks["M"]
        de, fn, dn, le = d.dirichlet_elements, d.free_nodes, d.dirichlet_nodes, d.loaded_elements
        f1 = 0.5 * M.sub(de, dn) @ gd + _mul(p["F_kd"], gd) - _mul(p["F_vn"], gn)
        f2 = 0.5 * M.sub(le, fn).T @ gn - _kt(p["F_kn"], gn) - _mul(p["F_dd"], gd)
        return np.concatenate([f1, f2])


def _kt(op: Operator, x: np.ndarray) -> np.ndarray:
    if not x.size:
        return np.zeros(op.shape[1])
    return op.T @ x


def _hstack_ops(parts, row_sign: np.ndarray) -> LinearOperator:
    ops = [aslinearoperator(p) for p in parts]
    split = np.cumsum([o.shape[1] for o in ops])[:-1]

    def mv(x):
        out = np.zeros(ops[0].shape[0])
        for o, xi in zip(ops, np.split(np.ravel(x), split)):
            if xi.size:
                out += o @ xi
        return row_sign * out

    return LinearOperator((ops[0].shape[0], sum(o.shape[1] for o in ops)), matvec=mv, dtype=float)


def _galerkin_op(A11, A12, A22) -> LinearOperator:
    A11, A12, A22 = (aslinearoperator(x) for x in (A11, A12, A22))
    n1, n2 = A11.shape[1], A22.shape[1]

    def mv(z):
        z = np.ravel(z)
        t, u = z[:n1], z[n1:]
        r1 = (A11 @ t if n1 else np.zeros(n1)) - (A12 @ u if n2 else np.zeros(n1))
        r2 = (A12.T @ t if n1 else np.zeros(n2)) + (A22 @ u if n2 else np.zeros(n2))
        return np.concatenate([r1, r2])

    return LinearOperator((n1 + n2, n1 + n2), matvec=mv, dtype=float)


# ------------------------------------------------------------- free term


def integral_free_term(mesh: TriangleMesh, formulation: str, K: Optional[np.ndarray] = None,
                       points: Optional[CollocationPoints] = None) -> np.ndarray:
    """C(x) per collocation point, shape (npts, 3, 3).

    Galerkin and open surfaces use 1/2 I.  On closed surfaces the
    collocation value comes from the rigid-body row sum of the integral
    part ``K`` (points x all nodes).
    """
    n = len(points) if points is not None else mesh.n_vertices
    half = np.broadcast_to(0.5 * np.eye(3), (n, 3, 3)).copy()
    if formulation == "galerkin" or not mesh.is_closed:
        return half
    if K is None:
        raise ValueError("row-sum free term needs the full K block")
    rs = K.reshape(n, 3, -1, 3).sum(axis=2)
    return -rs


def free_term_matrix(mesh: TriangleMesh, points: CollocationPoints, C: np.ndarray) -> sp.csr_matrix:
    """Sparse (3 npts, 3 nv) matrix of C(x_i) u(x_i) for P1 u."""
    rows, cols, vals = [], [], []
    for i in range(len(points)):
        if points.vertex[i] >= 0:
            nodes, wts = [points.vertex[i]], [1.0]
        else:
            nodes, wts = mesh.triangles[points.element[i]], [1 / 3] * 3
        for v, w in zip(nodes, wts):
            for a in range(3):
                for b in range(3):
                    rows.append(3 * i + a)
                    cols.append(3 * v + b)
                    vals.append(w * C[i, a, b])
    return sp.csr_matrix((vals, (rows, cols)), shape=(3 * len(points), 3 * mesh.n_vertices))


def mass_sparse(mesh: TriangleMesh) -> sp.csr_matrix:
    """Sparse <phi0_k, phi1_j> I3 over all elements and nodes."""
    k = np.repeat(np.arange(mesh.n_triangles), 3)
    j = mesh.triangles.ravel()
    v = np.repeat(mesh.areas / 3.0, 3)
    a = np.arange(3)
    rows = (3 * k[:, None] + a).ravel()
    cols = (3 * j[:, None] + a).ravel()
    return sp.csr_matrix((np.repeat(v, 3), (rows, cols)), shape=(3 * mesh.n_triangles, 3 * mesh.n_vertices))


# ---------------------------------------------------------------- assembly


def line_edges(mesh: TriangleMesh, line_integrals: bool) -> Optional[EdgeSet]:
    """Segments carrying the line terms: the open boundary of the surface."""
    if not line_integrals:
        return None
    return open_boundary(mesh)


def collocation_points(data: MixedTraceData) -> CollocationPoints:
    """Free nodes followed by Dirichlet element centroids."""
    return CollocationPoints.build(data.mesh, data.free_nodes, data.dirichlet_elements)


def assemble_collocation(data: MixedTraceData, mat: MaterialParams, cfg: QuadConfig = QuadConfig(),
                         line_integrals: bool = False) -> BoundaryOperatorSet:
    data.validate()
    mesh = data.mesh
    pts = collocation_points(data)
    v_cols = np.union1d(data.dirichlet_elements, data.loaded_elements).astype(np.int64)
    k_cols = np.arange(mesh.n_vertices)
    out = assemble_collocation_blocks(mesh, mat, cfg, pts, v_cols if len(v_cols) else None, k_cols,
                                      edges=line_edges(mesh, line_integrals))
    K = out["K"]
    C = integral_free_term(mesh, "collocation", K, pts)
    CK = K + free_term_matrix(mesh, pts, C).toarray()
    rows = np.arange(len(pts))
    V = out.get("V", np.zeros((3 * len(pts), 0)))
    blocks = {"V": Block(rows, v_cols, V), "CK": Block(rows, k_cols, CK)}
    return BoundaryOperatorSet("collocation", mesh, blocks, data, free_term=C, points=pts)


def galerkin_request(data: MixedTraceData) -> GalerkinRequest:
    de, le = data.dirichlet_elements, data.loaded_elements
    v_cols = np.union1d(de, le).astype(np.int64)
    k_rows = v_cols
    nodes = np.arange(data.mesh.n_vertices)
    return GalerkinRequest(v_rows=de if len(de) else None, v_cols=v_cols if len(de) else None,
                           k_rows=k_rows if len(k_rows) else None, k_cols=nodes if len(k_rows) else None,
                           d_rows=data.free_nodes if len(data.free_nodes) else None,
                           d_cols=nodes if len(data.free_nodes) else None)


def assemble_galerkin(data: MixedTraceData, mat: MaterialParams, cfg: QuadConfig = QuadConfig(),
                      line_integrals: bool = False) -> BoundaryOperatorSet:
    data.validate()
    mesh = data.mesh
    req = galerkin_request(data)
    out = assemble_galerkin_blocks(mesh, mat, cfg, req, edges=line_edges(mesh, line_integrals))
    blocks = {
        "V": Block(_or(req.v_rows), _or(req.v_cols), out.get("V", np.zeros((0, 0)))),
        "K": Block(_or(req.k_rows), _or(req.k_cols), out.get("K", np.zeros((0, 0)))),
        "D": Block(_or(req.d_rows), _or(req.d_cols), out.get("D", np.zeros((0, 0)))),
    }
    m_rows = _or(req.k_rows)
    blocks["M"] = Block(m_rows, np.arange(mesh.n_vertices), mass_p0_p1(mesh, m_rows, np.arange(mesh.n_vertices)))
    return BoundaryOperatorSet("galerkin", mesh, blocks, data)


def _or(x):
    return np.zeros(0, dtype=np.int64) if x is None else np.asarray(x, dtype=np.int64)


def assemble_fmm(data: MixedTraceData, mat: MaterialParams, formulation: str, fmm,
                 cfg: QuadConfig = QuadConfig()) -> BoundaryOperatorSet:
    """Matrix-free blocks from the fast multipole scheme (closed surfaces)."""
    from ..fmm.scheme import build_fmm_operators

    data.validate()
    mesh = data.mesh
    nt, nv = mesh.n_triangles, mesh.n_vertices
    all_t, all_v = np.arange(nt), np.arange(nv)
    if formulation == "collocation":
        pts = collocation_points(data)
        ops = build_fmm_operators(mesh, mat, formulation, fmm, cfg, pts)
        K = ops.operator("K")
        # rigid-body row sums of the approximated integral part
        rs = np.stack([K @ np.tile(np.eye(3)[b], nv) for b in range(3)], axis=-1).reshape(len(pts), 3, 3)
        C = -rs
        CK = K + aslinearoperator(free_term_matrix(mesh, pts, C))
        blocks = {"V": Block(np.arange(len(pts)), all_t, ops.operator("V")),
                  "CK": Block(np.arange(len(pts)), all_v, CK)}
        out = BoundaryOperatorSet("collocation", mesh, blocks, data, free_term=C, points=pts)
    elif formulation == "galerkin":
        ops = build_fmm_operators(mesh, mat, formulation, fmm, cfg)
        blocks = {"V": Block(all_t, all_t, ops.operator("V")), "K": Block(all_t, all_v, ops.operator("K")),
                  "D": Block(all_v, all_v, ops.operator("D")),
                  "M": Block(all_t, all_v, mass_sparse(mesh))}
        out = BoundaryOperatorSet("galerkin", mesh, blocks, data)
    else:
        raise ValueError(f"unknown formulation {formulation!r}")
    out.info["fmm"] = ops
    return out


def assemble(data: MixedTraceData, mat: MaterialParams, formulation: str, cfg: QuadConfig = QuadConfig(),
             line_integrals: bool = False, fmm=None) -> BoundaryOperatorSet:
    """Dense blocks, or matrix-free FMM blocks when ``fmm`` (an FmmConfig) is given."""
    if fmm is not None:
        return assemble_fmm(data, mat, formulation, fmm, cfg)
    if formulation == "collocation":
        return assemble_collocation(data, mat, cfg, line_integrals)
    if formulation == "galerkin":
        return assemble_galerkin(data, mat, cfg, line_integrals)
    raise ValueError(f"unknown formulation {formulation!r}")
