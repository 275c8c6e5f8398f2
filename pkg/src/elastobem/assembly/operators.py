"""Dense operator blocks from regularized kernels.

Row/column sets are passed explicitly so that only the blocks a problem
needs are formed (a pure Neumann sheet never builds a single layer block).
Everything below returns plain ndarrays with 3x3 blocks per dof pair,
component-fastest ordering: dof i, component a -> index 3 i + a.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Optional, Sequence

import numpy as np

from .. import quadrature as q
from ..geometry import EdgeSet, TriangleMesh
from ..kernels import MaterialParams
from . import _core


@dataclass(frozen=True)
class QuadConfig:
    """Quadrature orders and switches.

    ``line_rule`` selects finite-part ("paget") or plain "gauss" treatment
    of collocation line integrals that start or end at the collocation
    point.  ``line_line`` controls the segment-segment part of the
    hypersingular line terms: "off", "on" (self pairs dropped) or "fp"
    (self pairs by their finite part).
    """

    regular_order: int = 5
    near_threshold: float = 1.0
    near_levels: int = 1
    duffy_order: int = 8
    sauter_order: int = 6
    paget_n: int = 8
    line_order: int = 8
    line_rule: str = "paget"
    line_line: str = "off"
    chunk: int = 1_000_000

    def __post_init__(self):
        if self.line_rule not in ("paget", "gauss"):
            raise ValueError("line_rule must be 'paget' or 'gauss'")
        if self.line_line not in ("off", "on", "fp"):
            raise ValueError("line_line must be 'off', 'on' or 'fp'")


def index_map(indices: Sequence[int], n: int) -> np.ndarray:
    """Array m of length n with m[indices[k]] = k and -1 elsewhere."""
    m = np.full(n, -1, dtype=np.int64)
    idx = np.asarray(indices, dtype=np.int64)
    m[idx] = np.arange(len(idx))
    return m


@dataclass(frozen=True, eq=False)
class MeshData:
    tri: np.ndarray
    corners: np.ndarray
    normals: np.ndarray
    areas: np.ndarray
    cent: np.ndarray
    rad: np.ndarray
    diam: np.ndarray
    G: np.ndarray
    S: np.ndarray


_MESH_CACHE: dict[int, tuple[TriangleMesh, MeshData]] = {}


def mesh_data(mesh: TriangleMesh) -> MeshData:
    hit = _MESH_CACHE.get(id(mesh))
    if hit is not None and hit[0] is mesh:
        return hit[1]
    g = mesh.gradients
    n = mesh.normals
    # G[k, j] = grad n^T - n grad^T (Guenter matrix of the local hat j)
    G = g[:, :, :, None] * n[:, None, None, :] - n[:, None, :, None] * g[:, :, None, :]
    S = np.cross(n[:, None, :], g)
    rad = np.linalg.norm(mesh.corners - mesh.centroids[:, None, :], axis=2).max(axis=1)
    md = MeshData(mesh.triangles, np.ascontiguousarray(mesh.corners), n, mesh.areas, mesh.centroids,
                  rad, mesh.diameters, np.ascontiguousarray(G), np.ascontiguousarray(S))
    if len(_MESH_CACHE) > 16:
        _MESH_CACHE.clear()
    _MESH_CACHE[id(mesh)] = (mesh, md)
    return md


@lru_cache(maxsize=None)
def _galerkin_rules(cfg: QuadConfig):
    reg = q.gauss_triangle(cfg.regular_order)
    far = q.tensor_pair(reg, reg)
    sub = q.subdivided_triangle(cfg.regular_order, cfg.near_levels)
    near = q.tensor_pair(sub, sub)
    out = [far.test, far.trial, far.weights, near.test, near.trial, near.weights]
    for case in ("coincident", "common_edge", "common_vertex"):
        r = q.sauter_rule(case, cfg.sauter_order)
        if case == "common_edge":
            # the edge rule is not invariant under test <-> trial; averaging
            # both orientations makes V and D exactly symmetric
            r = q.PairRule(np.vstack([r.test, r.trial]), np.vstack([r.trial, r.test]),
                           0.5 * np.concatenate([r.weights, r.weights]))
        out += [r.test, r.trial, r.weights]
    return tuple(np.ascontiguousarray(a) for a in out)


@lru_cache(maxsize=None)
def _collocation_rules(cfg: QuadConfig):
    far = q.gauss_triangle(cfg.regular_order)
    near = q.subdivided_triangle(cfg.regular_order, cfg.near_levels + 1)
    near2 = q.subdivided_triangle(cfg.regular_order, cfg.near_levels + 2)
    duf = [q.duffy_rule(k, cfg.duffy_order) for k in range(3)]
    mid = q.point_singular_rule(1 / 3, 1 / 3, cfg.duffy_order)
    return (far.points, far.weights, near.points, near.weights, near2.points, near2.weights,
            np.stack([d.points for d in duf]), np.stack([d.weights for d in duf]), mid.points, mid.weights)


@lru_cache(maxsize=None)
def _line_rules(cfg: QuadConfig):
    g = q.gauss_segment(cfg.line_order)
    pg = q.paget_rule(cfg.paget_n)
    far = q.gauss_triangle(cfg.regular_order)
    near = q.subdivided_triangle(cfg.regular_order, cfg.near_levels)
    edge = [q.edge_graded_rule(k, cfg.duffy_order) for k in range(3)]
    duf = [q.duffy_rule(k, cfg.duffy_order) for k in range(3)]
    sq = q.gauss_square(cfg.duffy_order)
    return dict(
        gx=np.ascontiguousarray(g.points[:, 0]), gw=g.weights, px=pg.points, pw=pg.weights,
        far_p=far.points, far_w=far.weights, near_p=near.points, near_w=near.weights,
        edge_p=np.stack([e.points for e in edge]), edge_w=np.stack([e.weights for e in edge]),
        duf_p=np.stack([d.points for d in duf]), duf_w=np.stack([d.weights for d in duf]),
        sq_p=sq.points, sq_w=sq.weights,
    )


def _pair_chunks(rows: np.ndarray, cols: np.ndarray, chunk: int) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    if len(rows) == 0 or len(cols) == 0:
        return
    step = max(1, chunk // len(cols))
    for s in range(0, len(rows), step):
        r = rows[s : s + step]
        yield np.repeat(r, len(cols)), np.tile(cols, len(r))


def galerkin_surface_moments(mesh, mat, cfg, pi_, pj_):
    md = mesh_data(mesh)
    a, b = mat.kelvin_coeffs
    return _core.galerkin_moments(md.tri, md.corners, md.normals, md.areas, md.cent, md.rad, md.diam,
                                  pi_, pj_, cfg.near_threshold, a, b, *_galerkin_rules(cfg))


def elements_touching(mesh: TriangleMesh, nodes: Sequence[int]) -> np.ndarray:
    mark = np.zeros(mesh.n_vertices, dtype=bool)
    mark[np.asarray(nodes, dtype=np.int64)] = True
    return np.flatnonzero(mark[mesh.triangles].any(axis=1))


# ------------------------------------------------------------------ Galerkin


@dataclass
class GalerkinRequest:
    """Row/column sets of the Galerkin blocks to assemble (None = skip)."""

    v_rows: Optional[np.ndarray] = None  # P0 elements
    v_cols: Optional[np.ndarray] = None  # P0 elements
    k_rows: Optional[np.ndarray] = None  # P0 elements
    k_cols: Optional[np.ndarray] = None  # P1 nodes
    d_rows: Optional[np.ndarray] = None  # P1 nodes
    d_cols: Optional[np.ndarray] = None  # P1 nodes


def assemble_galerkin_blocks(mesh: TriangleMesh, mat: MaterialParams, cfg: QuadConfig, req: GalerkinRequest,
                             edges: Optional[EdgeSet] = None) -> dict[str, np.ndarray]:
    """V, K and D Galerkin blocks sharing one pass over element pairs.

    With ``edges`` given, the line-integral terms over those oriented
    segments are added to K and D.
    """
    md = mesh_data(mesh)
    nt, nv = mesh.n_triangles, mesh.n_vertices
    out: dict[str, np.ndarray] = {}
    test_sets, trial_sets = [], []
    maps = {}
    if req.v_rows is not None:
        out["V"] = np.zeros((3 * len(req.v_rows), 3 * len(req.v_cols)))
        maps["V"] = (index_map(req.v_rows, nt), index_map(req.v_cols, nt))
        test_sets.append(np.asarray(req.v_rows))
        trial_sets.append(np.asarray(req.v_cols))
    if req.k_rows is not None:
        out["K"] = np.zeros((3 * len(req.k_rows), 3 * len(req.k_cols)))
        maps["K"] = (index_map(req.k_rows, nt), index_map(req.k_cols, nv))
        test_sets.append(np.asarray(req.k_rows))
        trial_sets.append(elements_touching(mesh, req.k_cols))
    if req.d_rows is not None:
        out["D"] = np.zeros((3 * len(req.d_rows), 3 * len(req.d_cols)))
        maps["D"] = (index_map(req.d_rows, nv), index_map(req.d_cols, nv))
        test_sets.append(elements_touching(mesh, req.d_rows))
        trial_sets.append(elements_touching(mesh, req.d_cols))
    if not out:
        return out
    tests = np.unique(np.concatenate(test_sets)).astype(np.int64)
    trials = np.unique(np.concatenate(trial_sets)).astype(np.int64)
    mu = mat.mu
    for pi_, pj_ in _pair_chunks(tests, trials, cfg.chunk):
        mom = galerkin_surface_moments(mesh, mat, cfg, pi_, pj_)
        if "V" in out:
            _core.scatter_v(out["V"], *maps["V"], pi_, pj_, mom)
        if "K" in out:
            _core.scatter_k(out["K"], *maps["K"], md.tri, md.G, pi_, pj_, mom, mu)
        if "D" in out:
            _core.scatter_d(out["D"], *maps["D"], md.tri, md.G, md.S, pi_, pj_, mom, mu)
    if edges is not None and len(edges):
        if "K" in out:
            galerkin_line_k(mesh, mat, cfg, edges, req.k_rows, out["K"], maps["K"])
        if "D" in out:
            galerkin_line_d(mesh, mat, cfg, edges, out["D"], maps["D"], req.d_rows, req.d_cols)
    return out


def galerkin_line_surface_moments(mesh, mat, cfg, edges: EdgeSet, pt, pe):
    md = mesh_data(mesh)
    a, b = mat.kelvin_coeffs
    r = _line_rules(cfg)
    return _core.galerkin_line_moments(
        md.tri, md.corners, md.areas, md.cent, md.rad, md.diam, edges.v1, edges.v2, edges.p1, edges.p2,
        pt, pe, cfg.near_threshold, a, b, r["far_p"], r["far_w"], r["near_p"], r["near_w"],
        r["edge_p"], r["edge_w"], r["duf_p"], r["duf_w"], r["gx"], r["gw"])


def galerkin_line_k(mesh, mat, cfg, edges: EdgeSet, rows, out, maps):
    pt, pe = next(_pair_chunks(np.asarray(rows), np.arange(len(edges)), 1 << 62), (None, None))
    if pt is None:
        return
    mom = galerkin_line_surface_moments(mesh, mat, cfg, edges, pt, pe)
    _core.scatter_line_k(out, maps[0], maps[1], edges.v1, edges.v2, edges.p1, edges.p2, pt, pe, mom, mat.mu)


def galerkin_line_d(mesh, mat, cfg, edges: EdgeSet, out, maps, rows, cols):
    md = mesh_data(mesh)
    rmap, cmap = maps
    eidx = np.arange(len(edges))
    # surface test x segment trial
    for pt, pe in _pair_chunks(elements_touching(mesh, rows), eidx, cfg.chunk):
        mom = galerkin_line_surface_moments(mesh, mat, cfg, edges, pt, pe)
        _core.scatter_line_d_mixed(out, rmap, cmap, md.tri, md.G, md.S, edges.v1, edges.v2, edges.p1, edges.p2,
                                   pt, pe, mom, mat.mu, False)
    # segment test x surface trial, by symmetry of the bilinear form
    for pt, pe in _pair_chunks(elements_touching(mesh, cols), eidx, cfg.chunk):
        mom = galerkin_line_surface_moments(mesh, mat, cfg, edges, pt, pe)
        _core.scatter_line_d_mixed(out, rmap, cmap, md.tri, md.G, md.S, edges.v1, edges.v2, edges.p1, edges.p2,
                                   pt, pe, mom, mat.mu, True)
    if cfg.line_line == "off":
        return
    a, b = mat.kelvin_coeffs
    r = _line_rules(cfg)
    for pa, pb in _pair_chunks(eidx, eidx, cfg.chunk):
        mom = _core.line_line_moments(edges.v1, edges.v2, edges.p1, edges.p2, pa, pb, a, b, r["gx"], r["gw"],
                                      r["sq_p"], r["sq_w"], 1 if cfg.line_line == "fp" else 0)
        _core.scatter_line_d_pair(out, rmap, cmap, edges.v1, edges.v2, edges.p1, edges.p2, pa, pb, mom, mat.mu)


# ---------------------------------------------------------------- collocation


@dataclass(frozen=True)
class CollocationPoints:
    """Collocation points: mesh vertices (``vertex >= 0``) or element
    centroids (``element >= 0``)."""

    x: np.ndarray
    vertex: np.ndarray
    element: np.ndarray

    def __len__(self) -> int:
        return len(self.x)

    @classmethod
    def build(cls, mesh: TriangleMesh, nodes: Sequence[int], elements: Sequence[int]) -> "CollocationPoints":
        nodes = np.asarray(nodes, dtype=np.int64)
        elements = np.asarray(elements, dtype=np.int64)
        x = np.vstack([mesh.vertices[nodes], mesh.centroids[elements]]) if len(nodes) + len(elements) else np.zeros((0, 3))
        vertex = np.concatenate([nodes, np.full(len(elements), -1, dtype=np.int64)])
        element = np.concatenate([np.full(len(nodes), -1, dtype=np.int64), elements])
        return cls(np.ascontiguousarray(x), vertex, element)


def collocation_surface_moments(mesh, mat, cfg, pts: CollocationPoints, pp, pe):
    md = mesh_data(mesh)
    a, b = mat.kelvin_coeffs
    return _core.collocation_moments(pts.x, pts.vertex, pts.element, md.tri, md.corners, md.normals, md.areas,
                                     md.cent, md.rad, md.diam, pp, pe, cfg.near_threshold, a, b,
                                     *_collocation_rules(cfg))


def collocation_line_moments(mesh, mat, cfg, pts: CollocationPoints, edges: EdgeSet, pp, pe):
    a, b = mat.kelvin_coeffs
    r = _line_rules(cfg)
    mode = 0 if cfg.line_rule == "paget" else 1
    return _core.collocation_line_moments(pts.x, pts.vertex, edges.v1, edges.v2, edges.p1, edges.p2, pp, pe,
                                          cfg.near_threshold, a, b, r["gx"], r["gw"], r["px"], r["pw"], mode)


def assemble_collocation_blocks(mesh: TriangleMesh, mat: MaterialParams, cfg: QuadConfig, pts: CollocationPoints,
                                v_cols: Optional[np.ndarray], k_cols: Optional[np.ndarray],
                                edges: Optional[EdgeSet] = None) -> dict[str, np.ndarray]:
    """Collocation V (points x P0 elements) and K (points x P1 nodes).

    K holds the integral part only; the free term is added by the caller.
    """
    md = mesh_data(mesh)
    nt, nv = mesh.n_triangles, mesh.n_vertices
    out: dict[str, np.ndarray] = {}
    rows = np.arange(len(pts), dtype=np.int64)
    trial_sets = []
    if v_cols is not None:
        out["V"] = np.zeros((3 * len(pts), 3 * len(v_cols)))
        vmap = index_map(v_cols, nt)
        trial_sets.append(np.asarray(v_cols))
    if k_cols is not None:
        out["K"] = np.zeros((3 * len(pts), 3 * len(k_cols)))
        kmap = index_map(k_cols, nv)
        trial_sets.append(elements_touching(mesh, k_cols))
    if not out:
        return out
    trials = np.unique(np.concatenate(trial_sets)).astype(np.int64)
    for pp, pe in _pair_chunks(rows, trials, cfg.chunk):
        mom = collocation_surface_moments(mesh, mat, cfg, pts, pp, pe)
        if "V" in out:
            _core.scatter_v(out["V"], rows, vmap, pp, pe, mom)
        if "K" in out:
            _core.scatter_k(out["K"], rows, kmap, md.tri, md.G, pp, pe, mom, mat.mu)
    if edges is not None and len(edges) and "K" in out:
        collocation_line_k(mesh, mat, cfg, pts, edges, out["K"], kmap)
    return out


def collocation_line_k(mesh, mat, cfg, pts: CollocationPoints, edges: EdgeSet, out, kmap):
    rows = np.arange(len(pts), dtype=np.int64)
    for pp, pe in _pair_chunks(rows, np.arange(len(edges)), cfg.chunk):
        mom = collocation_line_moments(mesh, mat, cfg, pts, edges, pp, pe)
        _core.scatter_line_k(out, rows, kmap, edges.v1, edges.v2, edges.p1, edges.p2, pp, pe, mom, mat.mu)


# ---------------------------------------------------------------- mass terms


def mass_p0_p1(mesh: TriangleMesh, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
    """<phi0_i, phi1_j> I3 for P0 elements ``rows`` and P1 nodes ``cols``."""
    out = np.zeros((3 * len(rows), 3 * len(cols)))
    cmap = index_map(cols, mesh.n_vertices)
    for r, k in enumerate(np.asarray(rows, dtype=np.int64)):
        for v in mesh.triangles[k]:
            c = cmap[v]
            if c >= 0:
                val = mesh.areas[k] / 3.0
                for a in range(3):
                    out[3 * r + a, 3 * c + a] += val
    return out
