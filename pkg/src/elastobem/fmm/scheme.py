"""Chebyshev-interpolation FMM for the single, double and hypersingular layers.

Far-field interactions between admissible clusters use interpolation of
the kernel on Chebyshev nodes of the extended boxes; near-field blocks come
from the dense assembly.  Three variants:

* ``standard``: only the Kelvin tensor is interpolated; the traction
  operator is moved onto the interpolation polynomials.
* ``lines``: as ``standard`` plus explicit line integrals over the open
  boundary of every near-field support set.
* ``regularized``: far field in the regularized form, which needs a
  Laplace M2L family and the combined family 16 pi mu U - 2/r I.
"""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator

from ..assembly.operators import (CollocationPoints, GalerkinRequest, QuadConfig, assemble_collocation_blocks,
                                  assemble_galerkin_blocks, elements_touching, index_map, mesh_data)
from ..geometry import TriangleMesh, open_boundary
from ..kernels import MaterialParams
from ..quadrature import gauss_triangle
from .chebyshev import tensor_basis, tensor_nodes
from .tree import ClusterTree, build_tree, mesh_spaces

VARIANTS = ("standard", "lines", "regularized")

# (p, depth) per mesh refinement level
DEFAULT_LEVELS = {0: (2, 1), 1: (3, 2), 2: (4, 2), 3: (5, 3)}


@dataclass(frozen=True)
class FmmConfig:
    p: int = 4
    depth: int = 2
    separation: float = 1.0
    variant: str = "standard"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.p < 2:
            raise ValueError("p must be >= 2")
        if self.depth < 1:
            raise ValueError("depth must be >= 1")

    @classmethod
    def for_level(cls, level: int, variant: str = "standard", **kw) -> "FmmConfig":
        p, depth = DEFAULT_LEVELS.get(level, (level + 2, level))
        return cls(p=kw.pop("p", p), depth=kw.pop("depth", depth), variant=variant, **kw)


# ------------------------------------------------------------------ moments


@dataclass
class Moment:
    """Per-cluster map between dof coefficients (n, 3) and node values (p^3, c).

    ``scalar``: mat (p^3, n) acting componentwise.
    ``full``:   mat (3 p^3, 3 n), c = 3.
    ``div``:    mat (p^3, 3 n), c = 1.
    """

    kind: str
    mat: np.ndarray

    def apply(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "scalar":
            return self.mat @ x
        if self.kind == "full":
            return (self.mat @ x.ravel()).reshape(-1, 3)
        return (self.mat @ x.ravel())[:, None]

    def apply_t(self, loc: np.ndarray) -> np.ndarray:
        if self.kind == "scalar":
            return self.mat.T @ loc
        if self.kind == "full":
            return (self.mat.T @ loc.ravel()).reshape(-1, 3)
        return (self.mat.T @ loc[:, 0]).reshape(-1, 3)

    @property
    def components(self) -> int:
        return 1 if self.kind == "div" else 3

    @property
    def nbytes(self) -> int:
        return int(self.mat.nbytes)


def _star_pairs(mesh: TriangleMesh, nodes: np.ndarray):
    """(element, local vertex, position in ``nodes``) for all hats of ``nodes``."""
    nmap = index_map(nodes, mesh.n_vertices)
    loc = nmap[mesh.triangles]
    el, lv = np.nonzero(loc >= 0)
    return el, lv, loc[el, lv]


class _MomentBuilder:
    def __init__(self, mesh: TriangleMesh, mat: MaterialParams, tree: ClusterTree, p: int, order: int):
        self.mesh, self.mat, self.tree, self.p = mesh, mat, tree, p
        rule = gauss_triangle(order)
        s, t = rule.points[:, 0], rule.points[:, 1]
        self.bary = np.column_stack([1 - s - t, s, t])
        self.pts = np.einsum("qk,nkc->nqc", self.bary, mesh.corners)
        self.w = 2.0 * mesh.areas[:, None] * rule.weights[None, :]
        md = mesh_data(mesh)
        self.G, self.S = md.G, md.S

    def _basis(self, cid, x, grad=False):
        ref = self.tree.to_reference(cid, x.reshape(-1, 3))
        out = tensor_basis(self.p, ref, grad)
        if grad:
            v, g = out
            return v, g / self.tree.ext_half_width(self.tree.clusters[cid].level)
        return out

    def points(self, cid, x):
        return Moment("scalar", self._basis(cid, x).T.copy())

    def p0(self, cid, elems):
        v = self._basis(cid, self.pts[elems]).reshape(len(elems), -1, self.p**3)
        return Moment("scalar", np.einsum("eq,eqn->ne", self.w[elems], v))

    def p1(self, cid, nodes, kinds):
        m = self.mesh
        el, lv, col = _star_pairs(m, nodes)
        P, n = self.p**3, len(nodes)
        v, g = self._basis(cid, self.pts[el], grad=True)
        nq = self.pts.shape[1]
        v = v.reshape(len(el), nq, P)
        g = g.reshape(len(el), nq, P, 3)
        wpsi = self.w[el] * self.bary[:, lv].T  # (pairs, q)
        nrm = m.normals[el]
        out = {}
        w_only = self.w[el]
        if "k" in kinds:
            lam, mu = self.mat.lam, self.mat.mu
            gs = np.einsum("eq,eqnc->enc", wpsi, g)  # int grad S psi
            dn = np.einsum("enc,ec->en", gs, nrm)
            blk = (lam * gs[:, :, :, None] * nrm[:, None, None, :]
                   + mu * dn[:, :, None, None] * np.eye(3)
                   + mu * nrm[:, None, :, None] * gs[:, :, None, :])  # (e, n, a, b)
            out["k"] = Moment("full", _scatter_full(blk, col, P, n))
        if "slp" in kinds:
            Gm = self.G[el, lv]  # (e, 3, 3) Guenter matrix of the hat
            si = np.einsum("eq,eqn->en", w_only, v)
            blk = si[:, :, None, None] * Gm[:, None, :, :]
            out["slp"] = Moment("full", _scatter_full(blk, col, P, n))
        if "dlp" in kinds:
            gs = np.einsum("eq,eqnc->enc", wpsi, g)
            dn = np.einsum("enc,ec->en", gs, nrm)
            out["dlp"] = Moment("scalar", _scatter_scalar(dn, col, P, n))
        if "curl" in kinds:
            si = np.einsum("eq,eqn->en", w_only, v)
            Sm = self.S[el, lv]  # (e, 3) surface curl of the hat
            for k in range(3):
                out[f"curl{k}"] = Moment("scalar", _scatter_scalar(si * Sm[:, None, k], col, P, n))
            blk = si[:, :, None] * Sm[:, None, :]  # (e, n, b)
            mat = np.zeros((P, 3 * n))
            for b in range(3):
                np.add.at(mat.T, 3 * col + b, blk[:, :, b])
            out["div"] = Moment("div", mat)
        return out


def _scatter_scalar(vals, col, P, n):
    mat = np.zeros((n, P))
    np.add.at(mat, col, vals)
    return mat.T.copy()


def _scatter_full(blk, col, P, n):
    # blk (e, node, a, b) -> rows 3 node + a, cols 3 col + b
    mat = np.zeros((n, 3, P, 3))
    np.add.at(mat, col, blk.transpose(0, 3, 1, 2))
    return mat.transpose(2, 3, 0, 1).reshape(3 * P, 3 * n).copy()


# ------------------------------------------------------------ translations


def _kelvin_block(d: np.ndarray, mat: MaterialParams) -> np.ndarray:
    """[U(d_mn)] as (3 P, 3 P) for offsets d (P, P, 3)."""
    a, b = mat.kelvin_coeffs
    rho = np.linalg.norm(d, axis=2)
    U = a * np.eye(3) / rho[:, :, None, None] + b * d[:, :, :, None] * d[:, :, None, :] / rho[:, :, None, None] ** 3
    P = d.shape[0]
    return U.transpose(0, 2, 1, 3).reshape(3 * P, 3 * P)


@dataclass
class FmmStorage:
    m2l: int = 0
    m2m: int = 0
    moments: int = 0
    near: int = 0

    @property
    def fmm_bytes(self) -> int:
        return self.m2l + self.m2m + self.moments

    @property
    def total(self) -> int:
        return self.fmm_bytes + self.near


class FmmEngine:
    """Tree, translation operators and cluster moments for one mesh."""

    def __init__(self, mesh: TriangleMesh, mat: MaterialParams, cfg: FmmConfig, quad: QuadConfig,
                 points: Optional[CollocationPoints] = None):
        self.mesh, self.mat, self.cfg, self.quad = mesh, mat, cfg, quad
        self.p = cfg.p
        self.P = cfg.p**3
        self.tree = build_tree(*mesh_spaces(mesh, points), depth=cfg.depth, separation=cfg.separation)
        self.points = points
        self.families = ["kelvin"] + (["laplace", "mstar"] if cfg.variant == "regularized" else [])
        self._m2m = self._build_m2m()
        self._m2l = self._build_m2l()
        self._builder = _MomentBuilder(mesh, mat, self.tree, cfg.p, quad.regular_order)
        self.moments: dict[str, dict[int, Moment]] = {}

    # translations --------------------------------------------------------
    def _build_m2m(self):
        """Per level l >= 1 and child octant: (P_parent, P_child) interpolation matrices."""
        tree, p = self.tree, self.p
        nodes = tensor_nodes(p)
        out = {}
        for level in range(1, tree.depth + 1):
            wc, wp = tree.ext_half_width(level), tree.ext_half_width(level - 1)
            hc = tree.half_width(level)
            for o in range(8):
                sgn = np.array([(o >> 2) & 1, (o >> 1) & 1, o & 1]) * 2 - 1
                ref = (sgn * hc + wc * nodes) / wp
                out[level, o] = tensor_basis(p, ref).T.copy()
        return out

    def _octant(self, cid):
        c = self.tree.clusters[cid]
        return ((c.ijk[0] & 1) << 2) | ((c.ijk[1] & 1) << 1) | (c.ijk[2] & 1)

    def _build_m2l(self):
        tree = self.tree
        nodes = tensor_nodes(self.p)
        cache = {f: {} for f in self.families}
        for tid, t in enumerate(tree.clusters):
            for s in t.far:
                key = (t.level, tree.offset(tid, s))
                if key in cache["kelvin"]:
                    continue
                we = tree.ext_half_width(t.level)
                shift = 2 * tree.half_width(t.level) * np.array(key[1], dtype=float)
                d = shift[None, None, :] + we * (nodes[:, None, :] - nodes[None, :, :])
                U = _kelvin_block(d, self.mat)
                cache["kelvin"][key] = U
                if "laplace" in cache:
                    L = 1.0 / np.linalg.norm(d, axis=2)
                    cache["laplace"][key] = L
                    cache["mstar"][key] = 16 * np.pi * self.mat.mu * U - 2 * np.kron(L, np.eye(3))
        return cache

    # moments -------------------------------------------------------------
    def moment(self, name: str) -> dict[int, Moment]:
        """Leaf moments by name: pt, p0, p1k, p1slp, p1dlp, p1curl{k}, p1div."""
        if name in self.moments:
            return self.moments[name]
        b = self._builder
        res: dict[str, dict[int, Moment]] = {}
        for cid in self.tree.leaves:
            dofs = self.tree.clusters[cid].dofs
            if name == "pt":
                res.setdefault("pt", {})[cid] = b.points(cid, self.points.x[dofs["pt"]])
            elif name == "p0":
                res.setdefault("p0", {})[cid] = b.p0(cid, dofs["p0"])
            else:
                kind = {"p1k": "k", "p1slp": "slp", "p1dlp": "dlp"}.get(name, "curl")
                for k, m in b.p1(cid, dofs["p1"], {kind}).items():
                    res.setdefault("p1" + k, {})[cid] = m
        self.moments.update(res)
        return self.moments[name]

    # passes --------------------------------------------------------------
    def far_pass(self, x_name: str, y_name: str, family: str, x: np.ndarray, space_x: str, space_y: str,
                 n_out: int) -> np.ndarray:
        """y-moment^T M2L x-moment applied over all far pairs: (n_out, 3)."""
        tree = self.tree
        cl = tree.clusters
        X, Y = self.moment(x_name), self.moment(y_name)
        ncomp = next(iter(X.values())).components if X else 3
        mult: dict[int, np.ndarray] = {}
        for cid in tree.leaves:
            d = cl[cid].dofs[space_x]
            mult[cid] = X[cid].apply(x[d]) if len(d) else np.zeros((self.P, ncomp))
        for level in range(tree.depth, 1, -1):
            for cid in tree.levels[level]:
                par = cl[cid].parent
                contrib = self._m2m[level, self._octant(cid)] @ mult[cid]
                mult[par] = mult[par] + contrib if par in mult else contrib
        table = self._m2l[family]
        loc: dict[int, np.ndarray] = {}
        for level in range(1, tree.depth + 1):
            for t in tree.levels[level]:
                acc = None
                for s in cl[t].far:
                    M = table[(level, tree.offset(t, s))]
                    w = mult[s]
                    if family == "laplace":
                        v = M @ w
                    else:
                        v = (M @ w.ravel()).reshape(-1, 3)
                    acc = v if acc is None else acc + v
                if level > 1:
                    par = cl[t].parent
                    if par in loc:
                        down = self._m2m[level, self._octant(t)].T @ loc[par]
                        acc = down if acc is None else acc + down
                if acc is not None:
                    loc[t] = acc
        out = np.zeros((n_out, 3))
        for cid in tree.leaves:
            if cid in loc:
                d = cl[cid].dofs[space_y]
                if len(d):
                    out[d] += Y[cid].apply_t(loc[cid])
        return out

    def storage(self) -> FmmStorage:
        st = FmmStorage()
        st.m2l = sum(m.nbytes for f in self._m2l.values() for m in f.values())
        st.m2m = sum(m.nbytes for m in self._m2m.values())
        st.moments = sum(m.nbytes for d in self.moments.values() for m in d.values())
        return st


# ------------------------------------------------------------ operator set


def _terms(formulation: str, variant: str, mu: float):
    """Far-field terms per operator: (x moment, y moment, M2L family, factor)."""
    f = 1.0 / (4 * np.pi)
    y0 = "pt" if formulation == "collocation" else "p0"
    terms = {"V": [("p0", y0, "kelvin", 1.0)]}
    if variant == "regularized":
        terms["K"] = [("p1slp", y0, "kelvin", 2 * mu), ("p1slp", y0, "laplace", -f), ("p1dlp", y0, "laplace", f)]
        terms["D"] = ([(f"p1curl{k}", f"p1curl{k}", "laplace", 2 * mu * f) for k in range(3)]
                      + [("p1div", "p1div", "laplace", -mu * f), ("p1slp", "p1slp", "mstar", -mu * f)])
    else:
        terms["K"] = [("p1k", y0, "kelvin", 1.0)]
        terms["D"] = [("p1k", "p1k", "kelvin", -1.0)]
    if formulation == "collocation":
        del terms["D"]
    return terms


_SPACE = {"pt": "pt", "p0": "p0"}


def _space(name: str) -> str:
    return _SPACE.get(name, "p1")


@dataclass
class FmmOperators:
    """Matrix-free V, K (with transpose) and D on full dof sets."""

    engine: FmmEngine
    formulation: str
    near: dict[str, sp.csr_matrix]
    terms: dict[str, list]
    timings: dict[str, float] = field(default_factory=dict)

    def _sizes(self, name: str) -> tuple[int, int]:
        m = self.engine.mesh
        n0 = len(self.engine.points) if self.formulation == "collocation" else m.n_triangles
        return {"V": (n0, m.n_triangles), "K": (n0, m.n_vertices), "D": (m.n_vertices, m.n_vertices)}[name]

    def far(self, name: str, x: np.ndarray, transpose: bool = False) -> np.ndarray:
        nr, nc = self._sizes(name)
        if transpose:
            nr, nc = nc, nr
        x = np.asarray(x, dtype=float).reshape(nc, 3)
        out = np.zeros((nr, 3))
        for xn, yn, fam, c in self.terms[name]:
            if transpose:
                xn, yn = yn, xn
            out += c * self.engine.far_pass(xn, yn, fam, x, _space(xn), _space(yn), nr)
        return out.ravel()

    def matvec(self, name: str, x: np.ndarray) -> np.ndarray:
        return self.near[name] @ np.ravel(x) + self.far(name, x)

    def rmatvec(self, name: str, y: np.ndarray) -> np.ndarray:
        return self.near[name].T @ np.ravel(y) + self.far(name, y, transpose=True)

    def operator(self, name: str) -> LinearOperator:
        nr, nc = self._sizes(name)
        return LinearOperator((3 * nr, 3 * nc), matvec=lambda x: self.matvec(name, x),
                              rmatvec=lambda y: self.rmatvec(name, y), dtype=float)

    def storage(self) -> FmmStorage:
        st = self.engine.storage()
        st.near = sum(int(a.data.nbytes + a.indices.nbytes + a.indptr.nbytes) for a in self.near.values())
        return st


def _expand(idx):
    idx = np.asarray(idx, dtype=np.int64)
    return (3 * idx[:, None] + np.arange(3)).ravel()


class _Coo:
    def __init__(self):
        self.r, self.c, self.v = [], [], []

    def add(self, rows, cols, block):
        if block.size == 0:
            return
        ri, ci = _expand(rows), _expand(cols)
        self.r.append(np.repeat(ri, len(ci)))
        self.c.append(np.tile(ci, len(ri)))
        self.v.append(block.ravel())

    def csr(self, shape):
        if not self.v:
            return sp.csr_matrix(shape)
        return sp.csr_matrix((np.concatenate(self.v), (np.concatenate(self.r), np.concatenate(self.c))), shape=shape)


def nearfield_line_edges(mesh: TriangleMesh, source_nodes: np.ndarray):
    """Open boundary of the union of the supports of ``source_nodes``."""
    return open_boundary(mesh, elements_touching(mesh, source_nodes))


def build_fmm_operators(mesh: TriangleMesh, mat: MaterialParams, formulation: str, cfg: FmmConfig,
                        quad: QuadConfig = QuadConfig(), points: Optional[CollocationPoints] = None) -> FmmOperators:
    """Tree, translations, moments and near-field blocks for one mesh.

    Collocation needs ``points``.  Only closed surfaces are supported: on
    them the line terms of the operators vanish.
    """
    if formulation not in ("collocation", "galerkin"):
        raise ValueError(f"unknown formulation {formulation!r}")
    if formulation == "collocation" and points is None:
        raise ValueError("collocation needs points")
    if not mesh.is_closed:
        raise ValueError("the FMM path supports closed surfaces only")
    t0 = time.perf_counter()
    eng = FmmEngine(mesh, mat, cfg, quad, points if formulation == "collocation" else None)
    if eng.tree.far_pairs() == 0:
        warnings.warn("no admissible cluster pairs: the FMM degenerates to dense near-field blocks", stacklevel=2)
    terms = _terms(formulation, cfg.variant, mat.mu)
    for lst in terms.values():
        for xn, yn, _, _ in lst:
            eng.moment(xn)
            eng.moment(yn)
    t1 = time.perf_counter()
    tree = eng.tree
    cl = tree.clusters
    coo = {k: _Coo() for k in terms}
    for t in tree.leaves:
        near = cl[t].near
        n0 = np.concatenate([cl[s].dofs["p0"] for s in near]).astype(np.int64)
        n1 = np.concatenate([cl[s].dofs["p1"] for s in near]).astype(np.int64)
        edges = nearfield_line_edges(mesh, n1) if cfg.variant == "lines" and len(n1) else None
        if formulation == "collocation":
            pid = cl[t].dofs["pt"]
            if not len(pid):
                continue
            sub = CollocationPoints(points.x[pid], points.vertex[pid], points.element[pid])
            out = assemble_collocation_blocks(mesh, mat, quad, sub, n0 if len(n0) else None,
                                              n1 if len(n1) else None, edges=edges)
            if "V" in out:
                coo["V"].add(pid, n0, out["V"])
            if "K" in out:
                coo["K"].add(pid, n1, out["K"])
        else:
            r0, r1 = cl[t].dofs["p0"], cl[t].dofs["p1"]
            req = GalerkinRequest(
                v_rows=r0 if len(r0) and len(n0) else None, v_cols=n0,
                k_rows=r0 if len(r0) and len(n1) else None, k_cols=n1,
                d_rows=r1 if len(r1) and len(n1) else None, d_cols=n1)
            out = assemble_galerkin_blocks(mesh, mat, quad, req, edges=edges)
            if "V" in out:
                coo["V"].add(r0, n0, out["V"])
            if "K" in out:
                coo["K"].add(r0, n1, out["K"])
            if "D" in out:
                coo["D"].add(r1, n1, out["D"])
    ops = FmmOperators(eng, formulation, {}, terms)
    ops.near = {k: coo[k].csr(tuple(3 * n for n in ops._sizes(k))) for k in terms}
    ops.timings = {"setup": t1 - t0, "near": time.perf_counter() - t1}
    return ops
