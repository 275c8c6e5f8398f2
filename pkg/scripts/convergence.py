"""Convergence study on the closed benchmark geometries.

    python scripts/convergence.py --geometry cuboid --method collocation --levels 0-2
"""
import argparse
import logging

from elastobem.cli import RunConfig, parse_levels, run_converge


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--geometry", default="cuboid", choices=["cuboid", "fichera"])
    ap.add_argument("--method", default="collocation", choices=["collocation", "galerkin"])
    ap.add_argument("--levels", default="0-2")
    ap.add_argument("--fmm", default="dense")
    ap.add_argument("--line-integrals", action="store_true")
    ap.add_argument("--solver", default="bicgstab", choices=["bicgstab", "direct"])
    ap.add_argument("--output", default="convergence.csv")
    a = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    cfg = RunConfig(geometry=a.geometry, method=a.method, levels=parse_levels(a.levels), fmm=a.fmm,
                    line_integrals=a.line_integrals, solver=a.solver, output=a.output, deep=True)
    cfg.validate("converge")
    report, _ = run_converge(cfg)
    print(f"{'lvl':>3} {'dof':>7} {'err_u':>10} {'eoc_u':>6} {'err_t':>10} {'eoc_t':>6} {'it':>4}")
    for r, eu, et in zip(report.rows, report.eoc_u, report.eoc_t):
        f = lambda v: "     X" if v is None else f"{v:6.2f}"
        print(f"{r.level:3d} {r.dof:7d} {r.err_u:10.3e} {f(eu)} {r.err_t:10.3e} {f(et)} {r.stats.iterations:4d}")


if __name__ == "__main__":
    main()
