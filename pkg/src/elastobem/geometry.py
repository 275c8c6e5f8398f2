"""Flat triangle surface meshes: generators, refinement, boundary edges, OFF io.

Meshes are immutable value objects.  Boundary-condition tags are attached
after construction with :meth:`TriangleMesh.with_tags`, driven by a
predicate on triangle centroids, so generators never decide which part of
the surface is Dirichlet.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

NEUMANN = 0
DIRICHLET = 1


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Conforming flat-triangle mesh.

    ``vertices`` is (nv, 3), ``triangles`` is (nt, 3) with counter-clockwise
    vertex order about the normal.  ``tags`` holds NEUMANN/DIRICHLET per
    triangle.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    tags: np.ndarray = field(default=None)

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=np.float64)
        t = np.ascontiguousarray(self.triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3 or t.ndim != 2 or t.shape[1] != 3:
            raise ValueError("vertices must be (nv, 3) and triangles (nt, 3)")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise ValueError("triangle index out of range")
        tags = np.zeros(len(t), dtype=np.int8) if self.tags is None else np.asarray(self.tags, dtype=np.int8)
        if tags.shape != (len(t),):
            raise ValueError("one tag per triangle required")
        v.flags.writeable = False
        t.flags.writeable = False
        tags.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        object.__setattr__(self, "tags", tags)
        if np.any(self.areas <= 0.0):
            raise ValueError("degenerate triangle")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def corners(self) -> np.ndarray:
        """(nt, 3, 3) array of triangle corner coordinates."""
        return self.vertices[self.triangles]

    @cached_property
    def _cross(self) -> np.ndarray:
        c = self.corners
        return np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])

    @cached_property
    def areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self._cross, axis=1)

    @cached_property
    def normals(self) -> np.ndarray:
        return self._cross / (2.0 * self.areas[:, None])

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.corners.mean(axis=1)

    @cached_property
    def diameters(self) -> np.ndarray:
        c = self.corners
        e = np.stack([c[:, 1] - c[:, 0], c[:, 2] - c[:, 1], c[:, 0] - c[:, 2]], axis=1)
        return np.linalg.norm(e, axis=2).max(axis=1)

    @property
    def h(self) -> float:
        """Largest edge length."""
        return float(self.diameters.max())

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())

    @cached_property
    def gradients(self) -> np.ndarray:
        """Surface gradients of the three barycentric functions, (nt, 3, 3).

        ``gradients[k, j]`` is the constant gradient of the hat function of
        local vertex j on triangle k.
        """
        c = self.corners
        n = self.normals
        g = np.empty_like(c)
        for j in range(3):
            a = c[:, (j + 1) % 3]
            b = c[:, (j + 2) % 3]
            # grad of the hat at vertex j is n x (b - a) / (2 area)
            g[:, j] = np.cross(n, b - a) / (2.0 * self.areas[:, None])
        return g

    @cached_property
    def directed_edges(self) -> np.ndarray:
        """(3 nt, 2) array of directed edges (a->b, b->c, c->a)."""
        t = self.triangles
        return np.stack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]], axis=1).reshape(-1, 2)

    @property
    def is_closed(self) -> bool:
        return len(open_boundary(self)) == 0

    @property
    def dirichlet(self) -> np.ndarray:
        return self.tags == DIRICHLET

    @property
    def neumann(self) -> np.ndarray:
        return self.tags == NEUMANN

    def with_tags(self, predicate: Callable[[np.ndarray], np.ndarray] | np.ndarray) -> "TriangleMesh":
        """Copy with Dirichlet tags where ``predicate(centroids)`` holds."""
        mask = predicate(self.centroids) if callable(predicate) else predicate
        tags = np.where(np.asarray(mask, dtype=bool), DIRICHLET, NEUMANN)
        return TriangleMesh(self.vertices, self.triangles, tags)

    def vertex_triangles(self) -> list[np.ndarray]:
        """Triangles incident to each vertex (the P1 support)."""
        order = np.argsort(self.triangles.ravel(), kind="stable")
        counts = np.bincount(self.triangles.ravel(), minlength=self.n_vertices)
        tri = order // 3
        return np.split(tri, np.cumsum(counts)[:-1])


@dataclass(frozen=True)
class EdgeSet:
    """Oriented segments p1 -> p2 with the index of their owning triangle."""

    v1: np.ndarray
    v2: np.ndarray
    owner: np.ndarray
    p1: np.ndarray
    p2: np.ndarray

    def __len__(self) -> int:
        return len(self.owner)

    @classmethod
    def empty(cls) -> "EdgeSet":
        z = np.zeros(0, dtype=np.int64)
        p = np.zeros((0, 3))
        return cls(z, z.copy(), z.copy(), p, p.copy())


def _check_positive(**kw):
    for k, v in kw.items():
        if not np.all(np.asarray(v, dtype=float) > 0):
            raise ValueError(f"{k} must be positive, got {v}")


def _edge_set(mesh: TriangleMesh, rows: np.ndarray, owners: np.ndarray) -> EdgeSet:
    v1, v2 = rows[:, 0].copy(), rows[:, 1].copy()
    return EdgeSet(v1, v2, owners, mesh.vertices[v1], mesh.vertices[v2])


def element_edges(mesh: TriangleMesh, subset: Optional[Iterable[int]] = None) -> EdgeSet:
    """All three boundary edges of every triangle in ``subset``.

    Summing line integrals over this set is what a per-element evaluation
    does; interior edges appear twice with opposite orientation.
    """
    idx = np.arange(mesh.n_triangles) if subset is None else np.asarray(list(subset), dtype=np.int64)
    rows = mesh.directed_edges.reshape(-1, 3, 2)[idx].reshape(-1, 2)
    return _edge_set(mesh, rows, np.repeat(idx, 3))


def open_boundary(mesh: TriangleMesh, subset: Optional[Iterable[int]] = None) -> EdgeSet:
    """Edges that belong to exactly one triangle of ``subset``."""
    idx = np.arange(mesh.n_triangles) if subset is None else np.unique(np.asarray(list(subset), dtype=np.int64))
    if idx.size == 0:
        return EdgeSet.empty()
    rows = mesh.directed_edges.reshape(-1, 3, 2)[idx].reshape(-1, 2)
    owners = np.repeat(idx, 3)
    key = np.sort(rows, axis=1)
    _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    keep = counts[inv.ravel()] == 1
    return _edge_set(mesh, rows[keep], owners[keep])


def refine(mesh: TriangleMesh) -> TriangleMesh:
    """Quadrisection through edge midpoints; tags are inherited."""
    t = mesh.triangles
    nv = mesh.n_vertices
    e = np.sort(mesh.directed_edges, axis=1)
    uniq, inv = np.unique(e, axis=0, return_inverse=True)
    inv = inv.ravel().reshape(-1, 3) + nv
    mids = 0.5 * (mesh.vertices[uniq[:, 0]] + mesh.vertices[uniq[:, 1]])
    verts = np.vstack([mesh.vertices, mids])
    a, b, c = t[:, 0], t[:, 1], t[:, 2]
    ab, bc, ca = inv[:, 0], inv[:, 1], inv[:, 2]
    children = np.stack(
        [
            np.stack([a, ab, ca], axis=1),
            np.stack([ab, b, bc], axis=1),
            np.stack([ca, bc, c], axis=1),
            np.stack([ab, bc, ca], axis=1),
        ],
        axis=1,
    ).reshape(-1, 3)
    return TriangleMesh(verts, children, np.repeat(mesh.tags, 4))


def refine_to(mesh: TriangleMesh, level: int) -> TriangleMesh:
    if level < 0:
        raise ValueError("level must be >= 0")
    for _ in range(level):
        mesh = refine(mesh)
    return mesh


def voxel_surface(voxels: Iterable[Sequence[int]], cell: Sequence[float], origin: Sequence[float],
                  split: str = "star") -> TriangleMesh:
    """Outer surface of a union of axis-aligned boxes on a regular grid.

    ``split="star"`` cuts every exposed face into four triangles around its
    centre, which keeps the coarse meshes symmetric; ``"diag"`` cuts it
    along one diagonal.  Normals point outward.
    """
    if split not in ("star", "diag"):
        raise ValueError("split must be 'star' or 'diag'")
    vox = {tuple(int(i) for i in v) for v in voxels}
    cell = np.asarray(cell, dtype=float)
    origin = np.asarray(origin, dtype=float)
    index: dict[tuple[int, int, int], int] = {}
    pts: list[np.ndarray] = []

    def vid(key2):
        # keys are doubled integer grid coordinates so face centres stay integral
        if key2 not in index:
            index[key2] = len(pts)
            pts.append(origin + 0.5 * np.asarray(key2, dtype=float) * cell)
        return index[key2]

    tris = []
    for v in sorted(vox):
        for axis in range(3):
            for side in (0, 1):
                nb = list(v)
                nb[axis] += 1 if side else -1
                if tuple(nb) in vox:
                    continue
                i, j = (axis + 1) % 3, (axis + 2) % 3
                quad = []
                for di, dj in ((0, 0), (1, 0), (1, 1), (0, 1)):
                    k = [0, 0, 0]
                    k[axis] = 2 * (v[axis] + side)
                    k[i] = 2 * (v[i] + di)
                    k[j] = 2 * (v[j] + dj)
                    quad.append(vid(tuple(k)))
                if not side:
                    quad = quad[::-1]
                if split == "diag":
                    tris.append((quad[0], quad[1], quad[2]))
                    tris.append((quad[0], quad[2], quad[3]))
                    continue
                k = [0, 0, 0]
                k[axis] = 2 * (v[axis] + side)
                k[i] = 2 * v[i] + 1
                k[j] = 2 * v[j] + 1
                ctr = vid(tuple(k))
                for q in range(4):
                    tris.append((quad[q], quad[(q + 1) % 4], ctr))
    return TriangleMesh(np.array(pts), np.array(tris, dtype=np.int64))


def make_cuboid(dims: Sequence[float] = (2.0, 1.0, 1.0), level: int = 0, origin: Optional[Sequence[float]] = None) -> TriangleMesh:
    """Closed box mesh.

    The default placement puts the origin at the bottom-left corner of the
    +x face, i.e. the box is [-dx, 0] x [0, dy] x [0, dz].
    """
    dims = np.asarray(dims, dtype=float)
    _check_positive(dims=dims)
    if level < 0:
        raise ValueError("level must be >= 0")
    n = np.maximum(1, np.rint(dims / dims.min())).astype(int)
    cell = dims / n
    if origin is None:
        origin = (-dims[0], 0.0, 0.0)
    vox = [(a, b, c) for a in range(n[0]) for b in range(n[1]) for c in range(n[2])]
    return refine_to(voxel_surface(vox, cell, origin), level)


def make_fichera(side: float = 1.0, level: int = 0, corner: Sequence[int] = (1, 1, 1),
                 cells: int = 1, split: str = "star") -> TriangleMesh:
    """Cube of edge ``side`` centred at the origin with one octant removed.

    ``corner`` gives the signs of the removed octant; ``cells`` voxels per
    octant edge and ``split`` set the coarse triangulation.
    """
    _check_positive(side=side)
    if level < 0:
        raise ValueError("level must be >= 0")
    if cells < 1:
        raise ValueError("cells must be >= 1")
    drop = tuple(1 if s > 0 else 0 for s in corner)
    n = 2 * cells
    vox = [(a, b, c) for a in range(n) for b in range(n) for c in range(n)
           if (a // cells, b // cells, c // cells) != drop]
    half = 0.5 * side
    h = half / cells
    return refine_to(voxel_surface(vox, (h, h, h), (-half, -half, -half), split), level)


def make_sheet(length: float = 20.0, n: int = 40) -> TriangleMesh:
    """Square open sheet in the plane x3 = 0, centred at the origin.

    The elastic body occupies x3 > 0, so the outward normal is -e3.
    """
    _check_positive(length=length, n=n)
    s = np.linspace(-0.5 * length, 0.5 * length, n + 1)
    X, Y = np.meshgrid(s, s, indexing="ij")
    verts = np.column_stack([X.ravel(), Y.ravel(), np.zeros(X.size)])
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    v00 = (i * (n + 1) + j).ravel()
    v10 = v00 + (n + 1)
    v01 = v00 + 1
    v11 = v10 + 1
    # clockwise seen from +x3 gives normal -e3
    t1 = np.column_stack([v00, v01, v11])
    t2 = np.column_stack([v00, v11, v10])
    tris = np.stack([t1, t2], axis=1).reshape(-1, 3)
    return TriangleMesh(verts, tris)


def write_off(mesh: TriangleMesh, path: str | Path) -> None:
    """OFF text: header, counts, coordinates, then ``3 i j k tag`` rows."""
    lines = ["OFF", f"{mesh.n_vertices} {mesh.n_triangles} 0"]
    lines += [f"{x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist()]
    lines += [f"3 {a} {b} {c} {g}" for (a, b, c), g in zip(mesh.triangles.tolist(), mesh.tags.tolist())]
    Path(path).write_text("\n".join(lines) + "\n")


def read_off(path: str | Path) -> TriangleMesh:
    """Read the OFF variant written by :func:`write_off` (tag column optional)."""
    rows = [ln.split("#")[0].split() for ln in Path(path).read_text().splitlines()]
    rows = [r for r in rows if r]
    if not rows or rows[0][0] != "OFF":
        raise ValueError("not an OFF file")
    nv, nt = int(rows[1][0]), int(rows[1][1])
    verts = np.array([[float(x) for x in r[:3]] for r in rows[2 : 2 + nv]])
    faces = rows[2 + nv : 2 + nv + nt]
    if any(int(r[0]) != 3 for r in faces):
        raise ValueError("only triangles are supported")
    tris = np.array([[int(x) for x in r[1:4]] for r in faces], dtype=np.int64)
    tags = np.array([int(r[4]) if len(r) > 4 else NEUMANN for r in faces], dtype=np.int8)
    return TriangleMesh(verts, tris, tags)
