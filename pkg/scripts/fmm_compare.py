"""Solve the cuboid problem with the three FMM variants and report errors and storage.

    python scripts/fmm_compare.py --levels 2-3
"""
import argparse
import logging

from elastobem.cli import RunConfig, parse_levels, run_fmm_compare


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--geometry", default="cuboid", choices=["cuboid", "fichera"])
    ap.add_argument("--method", default="galerkin", choices=["collocation", "galerkin"])
    ap.add_argument("--levels", default="2-3")
    ap.add_argument("--p", type=int)
    ap.add_argument("--flvl", type=int)
    ap.add_argument("--output", default="fmm_compare.csv")
    a = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    cfg = RunConfig(geometry=a.geometry, method=a.method, levels=parse_levels(a.levels), p=a.p, flvl=a.flvl,
                    output=a.output, deep=True)
    cfg.validate("fmm-compare")
    rows, _ = run_fmm_compare(cfg)
    print(f"{'lvl':>3} {'variant':<12} {'err_u':>10} {'err_t':>10} {'it':>4} {'fmm MB':>9}")
    for level, variant, r in rows:
        print(f"{level:3d} {variant:<12} {r.err_u:10.4e} {r.err_t:10.4e} {r.stats.iterations:4d} {r.nbytes / 1e6:9.1f}")


if __name__ == "__main__":
    main()
