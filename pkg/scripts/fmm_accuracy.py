"""Matvec accuracy of the FMM operators against dense assembly.

For each expansion order p, applies every FMM block to random vectors and
reports the worst relative error of A x and A^T y.

    python scripts/fmm_accuracy.py --level 2 --depth 3 --p 3,4,5,6
"""
import argparse
import time

import numpy as np

from elastobem.assembly import (CollocationPoints, GalerkinRequest, QuadConfig, assemble_collocation_blocks,
                                assemble_galerkin_blocks)
from elastobem.fmm.scheme import FmmConfig, build_fmm_operators
from elastobem.geometry import make_cuboid
from elastobem.kernels import MaterialParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--level", type=int, default=2)
    ap.add_argument("--depth", type=int, default=3)
    ap.add_argument("--method", default="galerkin", choices=["collocation", "galerkin"])
    ap.add_argument("--variant", default="standard", choices=["standard", "lines", "regularized"])
    ap.add_argument("--p", default="3,4,5")
    ap.add_argument("--separation", type=float, default=1.0)
    ap.add_argument("--samples", type=int, default=5)
    a = ap.parse_args()
    mesh = make_cuboid(level=a.level)
    mat = MaterialParams(0.2778, 0.4167)
    quad = QuadConfig()
    nt, nv = mesh.n_triangles, mesh.n_vertices
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    if a.method == "collocation":
        pts = CollocationPoints.build(mesh, np.arange(nv), np.arange(nt))
        dense = assemble_collocation_blocks(mesh, mat, quad, pts, np.arange(nt), np.arange(nv))
    else:
        pts = None
        e, v = np.arange(nt), np.arange(nv)
        dense = assemble_galerkin_blocks(mesh, mat, quad, GalerkinRequest(e, e, e, v, v, v))
    print(f"dense assembly {time.perf_counter() - t0:.1f}s")
    for p in (int(s) for s in a.p.split(",")):
        t0 = time.perf_counter()
        cfg = FmmConfig(p=p, depth=a.depth, variant=a.variant, separation=a.separation)
        ops = build_fmm_operators(mesh, mat, a.method, cfg, quad, pts)
        line = f"p={p} build {time.perf_counter() - t0:.1f}s fmm {ops.storage().fmm_bytes / 1e6:.1f} MB"
        for key, A in dense.items():
            ef, et = [], []
            for _ in range(a.samples):
                x = rng.standard_normal(A.shape[1])
                ef.append(np.linalg.norm(ops.matvec(key, x) - A @ x) / np.linalg.norm(A @ x))
                y = rng.standard_normal(A.shape[0])
                et.append(np.linalg.norm(ops.rmatvec(key, y) - A.T @ y) / np.linalg.norm(A.T @ y))
            line += f" | {key} {max(ef):.2e} (T {max(et):.2e})"
        print(line, flush=True)


if __name__ == "__main__":
    main()
