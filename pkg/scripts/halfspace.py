"""Half-space point-load benchmark against the Boussinesq solution.

Runs the sheet problem with several formulation and line-rule settings and
prints the deviation of u3 from the exact solution along y = 0.

    python scripts/halfspace.py --n 40
"""
import argparse

import numpy as np

from elastobem.cli import RunConfig, run_halfspace

RUNS = {
    "collocation": dict(method="collocation"),
    "collocation-gauss": dict(method="collocation", line_rule="gauss"),
    "galerkin": dict(method="galerkin", solver="direct"),
    "galerkin-lines": dict(method="galerkin", line_integrals=True, solver="direct"),
}


def summarize(prof):
    x, u3, u3e = prof[:, 0], prof[:, 2], prof[:, 4]
    mid = (np.abs(x) >= 2) & (np.abs(x) <= 9)
    edge = (x >= 8) & (x <= 10)
    dev = np.abs(u3[mid] / u3e[mid] - 1).max()
    edge_err = np.abs(u3[edge] - u3e[edge]).max() / np.abs(u3e[edge]).max()
    return dev, edge_err, np.abs(u3).max() / u3e.max()


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=40, help="cells per side of the 20 m sheet")
    ap.add_argument("--runs", default=",".join(RUNS))
    ap.add_argument("--prefix", default="halfspace")
    a = ap.parse_args()
    print(f"{'run':<18} {'dev 2..9':>9} {'edge 8..10':>11} {'max|u3|/max u3e':>16}")
    for name in a.runs.split(","):
        cfg = RunConfig(geometry="sheet", sheet_n=a.n, output=f"{a.prefix}_{name}.csv", **RUNS[name])
        cfg.validate("halfspace")
        prof, _ = run_halfspace(cfg)
        dev, edge, amp = summarize(prof)
        print(f"{name:<18} {dev:9.4f} {edge:11.4f} {amp:16.3g}", flush=True)


if __name__ == "__main__":
    main()
