"""Uniform octree over dof positions with extended boxes."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..assembly.operators import CollocationPoints
from ..geometry import TriangleMesh


@dataclass
class Cluster:
    level: int
    ijk: tuple[int, int, int]
    center: np.ndarray
    parent: int = -1
    children: list[int] = field(default_factory=list)
    dofs: dict[str, np.ndarray] = field(default_factory=dict)
    near: list[int] = field(default_factory=list)
    far: list[int] = field(default_factory=list)

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class ClusterTree:
    """Octree of depth ``depth`` (root at level 0).

    Every dof of every space sits in exactly one leaf.  Boxes of level l
    have half-width ``half_width(l)``; their extended boxes add a uniform
    ``margin`` that covers the support of every member dof, so extended
    boxes of one level are translates of each other.
    """

    depth: int
    lo: np.ndarray
    width: float  # root box edge
    margin: float
    separation: float
    clusters: list[Cluster]
    levels: list[list[int]]

    def half_width(self, level: int) -> float:
        return 0.5 * self.width / 2**level

    def ext_half_width(self, level: int) -> float:
        return self.half_width(level) + self.margin

    @property
    def leaves(self) -> list[int]:
        return self.levels[self.depth]

    def admissible(self, a: int, b: int) -> bool:
        ca, cb = self.clusters[a], self.clusters[b]
        we = self.ext_half_width(ca.level)
        gap = np.max(np.abs(ca.center - cb.center)) - 2 * we
        return gap >= self.separation * 2 * we

    def offset(self, a: int, b: int) -> tuple[int, int, int]:
        ia, ib = self.clusters[a].ijk, self.clusters[b].ijk
        return tuple(int(x - y) for x, y in zip(ia, ib))

    def to_reference(self, cid: int, x: np.ndarray) -> np.ndarray:
        c = self.clusters[cid]
        return (np.atleast_2d(x) - c.center) / self.ext_half_width(c.level)

    def far_pairs(self) -> int:
        return sum(len(c.far) for c in self.clusters)

    def near_pairs(self) -> int:
        return sum(len(self.clusters[i].near) for i in self.leaves)


def mesh_spaces(mesh: TriangleMesh, points: Optional[CollocationPoints] = None):
    """Positions and support extents (infinity norm) of the P0/P1 spaces."""
    cent = mesh.centroids
    p0_ext = np.abs(mesh.corners - cent[:, None, :]).max(axis=(1, 2))
    v = mesh.vertices
    e = mesh.directed_edges
    d = np.abs(v[e[:, 0]] - v[e[:, 1]]).max(axis=1)
    p1_ext = np.zeros(mesh.n_vertices)
    np.maximum.at(p1_ext, e[:, 0], d)
    np.maximum.at(p1_ext, e[:, 1], d)
    pos = {"p0": cent, "p1": v}
    ext = {"p0": p0_ext, "p1": p1_ext}
    if points is not None:
        pos["pt"] = points.x
        ext["pt"] = np.zeros(len(points))
    return pos, ext


def build_tree(positions: dict[str, np.ndarray], extents: dict[str, np.ndarray], depth: int,
               separation: float = 1.0) -> ClusterTree:
    """Uniform octree with interaction lists.

    Pairs of same-level clusters whose extended boxes are separated by at
    least ``separation`` extended box widths go to the far list; leaf pairs
    that never separate go to the near list.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if separation <= 0:
        raise ValueError("separation must be positive")
    allpos = np.vstack([np.atleast_2d(p) for p in positions.values() if len(p)])
    if len(allpos) == 0:
        raise ValueError("no dofs")
    lo, hi = allpos.min(axis=0), allpos.max(axis=0)
    width = float((hi - lo).max()) * (1 + 1e-9) + 1e-12
    center = 0.5 * (lo + hi)
    lo = center - 0.5 * width
    margin = float(max((e.max() if len(e) else 0.0) for e in extents.values())) * (1 + 1e-9)

    clusters: list[Cluster] = [Cluster(0, (0, 0, 0), center.copy())]
    levels = [[0]]
    prev_keys = {(0, 0, 0): 0}
    n = 2**depth
    leaf_of = {}
    for name, p in positions.items():
        p = np.atleast_2d(p)
        ijk = np.clip(np.floor((p - lo) / width * n).astype(np.int64), 0, n - 1)
        leaf_of[name] = ijk
    for level in range(1, depth + 1):
        shift = depth - level
        keys: dict[tuple, int] = {}
        ids = []
        for name, ijk in leaf_of.items():
            for k in map(tuple, np.unique(ijk >> shift, axis=0)):
                if k in keys:
                    continue
                hw = 0.5 * width / 2**level
                c = lo + (np.array(k) * 2 + 1) * hw
                cid = len(clusters)
                parent_key = tuple(x >> 1 for x in k)
                parent = prev_keys[parent_key]
                clusters.append(Cluster(level, k, c, parent=parent))
                clusters[parent].children.append(cid)
                keys[k] = cid
                ids.append(cid)
        levels.append(ids)
        prev_keys = keys
        if level == depth:
            for name, ijk in leaf_of.items():
                lut = np.array([keys[tuple(k)] for k in ijk], dtype=np.int64) if len(ijk) else np.zeros(0, np.int64)
                order = np.argsort(lut, kind="stable")
                bounds = np.searchsorted(lut[order], ids)
                ends = np.searchsorted(lut[order], ids, side="right")
                for cid, a, b in zip(ids, bounds, ends):
                    clusters[cid].dofs[name] = order[a:b]
    for c in clusters:
        if not c.is_leaf:
            for name in positions:
                c.dofs[name] = np.concatenate([k.dofs[name] for k in _leaves_below(clusters, c)])
    tree = ClusterTree(depth, lo, width, margin, separation, clusters, levels)
    _interaction_lists(tree)
    return tree


def _leaves_below(clusters, c):
    stack, out = [c], []
    while stack:
        x = stack.pop()
        if x.is_leaf:
            out.append(x)
        else:
            stack.extend(clusters[k] for k in x.children)
    return out


def _interaction_lists(tree: ClusterTree) -> None:
    cl = tree.clusters
    cl[0].near = [0]
    for level in range(1, tree.depth + 1):
        for t in tree.levels[level]:
            cand = [s for pn in cl[cl[t].parent].near for s in cl[pn].children]
            for s in cand:
                (cl[t].far if tree.admissible(t, s) else cl[t].near).append(s)
    # near lists only matter at the leaves
    for level in range(tree.depth):
        for t in tree.levels[level]:
            cl[t].near = []
