"""Command-line driver: convergence studies, half-space runs and FMM comparisons.

Configuration comes from a flat ``key=value`` file (``--config``) with
command-line flags taking precedence.  Every run writes its CSV plus a
``<output>.config`` sidecar echoing the resolved configuration.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .analytic import PointSource, boussinesq, eoc, manufactured_bc, rel_l2_error
from .assembly.operators import QuadConfig
from .assembly.system import MixedTraceData, assemble
from .fmm.scheme import FmmConfig
from .geometry import TriangleMesh, make_cuboid, make_fichera, make_sheet, write_off
from .kernels import MaterialParams
from .solver import SolveStats, solve_mixed

log = logging.getLogger("elastobem")

CONVERGE_HEADER = "level,dof,h,err_u,eoc_u,err_t,eoc_t,iters,seconds,bytes"
HALFSPACE_HEADER = "x1,u1,u3,u1_exact,u3_exact"
COMPARE_HEADER = "level,variant,dof,err_u,err_t,iters,seconds,fmm_bytes,near_bytes"

GEOMETRIES = ("cuboid", "fichera", "sheet")
METHODS = ("collocation", "galerkin")
FMM_MODES = ("dense", "standard", "lines", "regularized")
DEEPEST = {"cuboid": 3, "fichera": 2, "sheet": 0}

# manufactured-solution setups
MATERIALS = {"cuboid": (0.2778, 0.4167), "fichera": (0.2778, 0.4167), "sheet": (1.3627e8, 1.3627e8)}
CUBOID_SOURCE = PointSource((3.0, 0.5, 0.5), (0.0, 0.0, 1.0))
FICHERA_SOURCE = PointSource((0.75, -0.15, 0.1), (0.0, 0.0, 1.0))


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    geometry: str = "cuboid"
    method: str = "collocation"
    fmm: str = "dense"
    line_integrals: bool = False
    levels: tuple = (0, 1, 2)
    lam: Optional[float] = None
    mu: Optional[float] = None
    p: Optional[int] = None
    flvl: Optional[int] = None
    separation: float = 1.0
    tol: float = 1e-8
    max_iter: int = 500
    solver: str = "bicgstab"
    precondition: bool = False
    line_rule: str = "paget"
    line_line: str = "off"
    sauter_order: int = 6
    sheet_n: int = 40
    deep: bool = False
    output: str = "out.csv"

    @property
    def material(self) -> MaterialParams:
        lam, mu = MATERIALS[self.geometry]
        return MaterialParams(self.lam if self.lam is not None else lam, self.mu if self.mu is not None else mu)

    @property
    def quad(self) -> QuadConfig:
        return QuadConfig(sauter_order=self.sauter_order, line_rule=self.line_rule, line_line=self.line_line)

    def fmm_config(self, level: int, variant: Optional[str] = None) -> Optional[FmmConfig]:
        variant = variant or self.fmm
        if variant == "dense":
            return None
        kw = {"separation": self.separation}
        if self.p is not None:
            kw["p"] = self.p
        if self.flvl is not None:
            kw["depth"] = self.flvl
        return FmmConfig.for_level(level, variant, **kw)

    def validate(self, command: str) -> None:
        _choice("geometry", self.geometry, GEOMETRIES)
        _choice("method", self.method, METHODS)
        _choice("fmm", self.fmm, FMM_MODES)
        _choice("solver", self.solver, ("bicgstab", "direct"))
        _choice("line_rule", self.line_rule, ("paget", "gauss"))
        _choice("line_line", self.line_line, ("off", "on", "fp"))
        if self.line_line != "off" and self.method != "galerkin":
            raise UsageError("line_line applies to the hypersingular operator and needs method=galerkin")
        if self.tol <= 0 or self.max_iter < 1:
            raise UsageError("tol must be positive and max_iter >= 1")
        if self.separation <= 0:
            raise UsageError("separation must be positive")
        if any(lv < 0 for lv in self.levels):
            raise UsageError("levels must be non-negative")
        if command in ("converge", "fmm-compare") and self.geometry == "sheet":
            raise UsageError(f"{command} needs a closed geometry (cuboid or fichera)")
        if command == "halfspace" and self.geometry != "sheet":
            raise UsageError("halfspace needs geometry=sheet")
        if command == "halfspace" and (self.sheet_n < 40 or self.sheet_n % 40):
            raise UsageError("sheet_n must be a positive multiple of 40 so whole cells cover the load patch")
        if self.geometry == "sheet" and self.fmm != "dense":
            raise UsageError("the FMM path supports closed surfaces only")
        if self.fmm != "dense" and self.solver == "direct":
            raise UsageError("direct solves need fmm=dense")
        if self.fmm != "dense" and self.precondition:
            raise UsageError("block Jacobi needs fmm=dense")
        if command != "halfspace" and not self.deep and self.levels and max(self.levels) > DEEPEST[self.geometry]:
            raise UsageError(f"{self.geometry} levels above {DEEPEST[self.geometry]} need deep=true")

    def dump(self) -> str:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "levels":
                v = ",".join(str(x) for x in v)
            out.append(f"{f.name}={'' if v is None else v}")
        return "\n".join(out) + "\n"


def _choice(name, value, allowed):
    if value not in allowed:
        raise UsageError(f"{name} must be one of {allowed}, got {value!r}")


def parse_levels(text: str) -> tuple:
    text = text.strip()
    if not text:
        return ()
    out = []
    try:
        for part in text.split(","):
            if "-" in part:
                a, b = part.split("-")
                out.extend(range(int(a), int(b) + 1))
            else:
                out.append(int(part))
    except ValueError as exc:
        raise UsageError(f"bad level range {text!r}") from exc
    return tuple(out)


def _parse_bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "on", "yes"):
        return True
    if t in ("0", "false", "off", "no"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def _convert(name: str, text: str):
    kinds = {"line_integrals": _parse_bool, "precondition": _parse_bool, "deep": _parse_bool,
             "levels": parse_levels, "lam": float, "mu": float, "separation": float, "tol": float,
             "p": int, "flvl": int, "max_iter": int, "sauter_order": int, "sheet_n": int}
    if name not in {f.name for f in fields(RunConfig)}:
        raise UsageError(f"unknown configuration key {name!r}")
    if text == "" and name in ("lam", "mu", "p", "flvl"):
        return None
    try:
        return kinds.get(name, str)(text)
    except ValueError as exc:
        raise UsageError(f"bad value for {name}: {text!r}") from exc


def read_config(path: str | Path) -> dict:
    out = {}
    for ln, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{ln}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k] = _convert(k, v)
    return out


def resolve_config(file_values: dict, overrides: dict) -> RunConfig:
    cfg = RunConfig()
    cfg = dataclasses.replace(cfg, **file_values)
    return dataclasses.replace(cfg, **{k: v for k, v in overrides.items() if v is not None})


# ------------------------------------------------------------------ problems


def closed_problem(geometry: str, level: int, mat: MaterialParams):
    """Tagged mesh, trace data and exact evaluators of a manufactured problem."""
    if geometry == "cuboid":
        mesh = make_cuboid(level=level).with_tags(lambda c: np.abs(c[:, 0]) < 1e-9)
        src = CUBOID_SOURCE
    elif geometry == "fichera":
        mesh = make_fichera(level=level, cells=2, split="diag").with_tags(lambda c: np.abs(c[:, 0] + 0.5) > 1e-9)
        src = FICHERA_SOURCE
    else:
        raise UsageError(f"no manufactured problem for {geometry!r}")
    src.check_outside(mesh)
    g_d, g_n = manufactured_bc(src, mat)
    return mesh, MixedTraceData.from_evaluators(mesh, g_d, g_n), g_d, g_n


def sheet_problem(n: int) -> tuple[TriangleMesh, MixedTraceData]:
    """Pure Neumann 20 m x 20 m sheet with a unit traction on the central 1 m^2 patch."""
    mesh = make_sheet(20.0, n)
    c = mesh.centroids
    g_n = np.zeros((mesh.n_triangles, 3))
    g_n[(np.abs(c[:, 0]) <= 0.5) & (np.abs(c[:, 1]) <= 0.5)] = (0.0, 0.0, 1.0)
    return mesh, MixedTraceData(mesh, np.zeros((mesh.n_vertices, 3)), g_n)


@dataclass
class LevelResult:
    level: int
    dof: int
    h: float
    err_u: float
    err_t: float
    stats: SolveStats
    seconds: float
    nbytes: int
    near_bytes: int = 0


def solve_level(cfg: RunConfig, level: int, variant: Optional[str] = None) -> LevelResult:
    mat = cfg.material
    mesh, data, g_d, g_n = closed_problem(cfg.geometry, level, mat)
    t0 = time.perf_counter()
    ops = assemble(data, mat, cfg.method, cfg.quad, cfg.line_integrals, fmm=cfg.fmm_config(level, variant))
    sol, stats = solve_mixed(ops, cfg.tol, cfg.max_iter, precondition=cfg.precondition,
                             direct=cfg.solver == "direct")
    secs = time.perf_counter() - t0
    err = rel_l2_error(mesh, sol.u, sol.t, g_d, g_n)
    near = ops.info["fmm"].storage().near if "fmm" in ops.info else 0
    nbytes = ops.info["fmm"].storage().fmm_bytes if "fmm" in ops.info else ops.nbytes
    return LevelResult(level, ops.dimension, mesh.h, err.err_u, err.err_t, stats, secs, nbytes, near)


# ------------------------------------------------------------------ commands


@dataclass
class ConvergenceReport:
    rows: list[LevelResult]

    @property
    def eoc_u(self) -> list[Optional[float]]:
        return [None] + [eoc(a.err_u, b.err_u) for a, b in zip(self.rows, self.rows[1:])]

    @property
    def eoc_t(self) -> list[Optional[float]]:
        return [None] + [eoc(a.err_t, b.err_t) for a, b in zip(self.rows, self.rows[1:])]

    def csv_rows(self) -> list[list[str]]:
        out = []
        for r, eu, et in zip(self.rows, self.eoc_u, self.eoc_t):
            out.append([str(r.level), str(r.dof), repr(float(r.h)), repr(float(r.err_u)), _eoc(eu), repr(float(r.err_t)), _eoc(et),
                        str(r.stats.iterations), repr(round(r.seconds, 3)), str(r.nbytes)])
        return out


def _eoc(x):
    return "X" if x is None else repr(float(x))


def _write_csv(path: Path, header: str, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(header + "\n")
        csv.writer(fh, lineterminator="\n").writerows(rows)


def _write_sidecar(cfg: RunConfig, command: str) -> None:
    Path(cfg.output + ".config").write_text(f"command={command}\n" + cfg.dump())


def run_converge(cfg: RunConfig) -> tuple[ConvergenceReport, bool]:
    """Level loop; returns the report and whether every solve converged."""
    rows, ok = [], True
    for level in cfg.levels:
        r = solve_level(cfg, level)
        if not r.stats.converged:
            ok = False
            log.warning("level %d: solver did not converge (residual %.3e)", level, r.stats.residual)
        log.info("level %d dof %d err_u %.3e err_t %.3e iters %d %.1fs", level, r.dof, r.err_u, r.err_t,
                 r.stats.iterations, r.seconds)
        rows.append(r)
    report = ConvergenceReport(rows)
    _write_csv(Path(cfg.output), CONVERGE_HEADER, report.csv_rows())
    _write_sidecar(cfg, "converge")
    return report, ok


def run_halfspace(cfg: RunConfig) -> tuple[np.ndarray, SolveStats]:
    """Line profile (x1, u1, u3, u1_exact, u3_exact) along y = 0."""
    mat = cfg.material
    mesh, data = sheet_problem(cfg.sheet_n)
    ops = assemble(data, mat, cfg.method, cfg.quad, cfg.line_integrals)
    sol, stats = solve_mixed(ops, cfg.tol, cfg.max_iter, precondition=cfg.precondition,
                             direct=cfg.solver == "direct")
    v = mesh.vertices
    line = np.flatnonzero((np.abs(v[:, 1]) < 1e-9) & (np.abs(v[:, 0]) > 1e-9))
    line = line[np.argsort(v[line, 0])]
    u1e, u3e = boussinesq(v[line], 1.0, mat)
    prof = np.column_stack([v[line, 0], sol.u[line, 0], sol.u[line, 2], u1e, u3e])
    _write_csv(Path(cfg.output), HALFSPACE_HEADER, [[repr(float(x)) for x in row] for row in prof])
    _write_sidecar(cfg, "halfspace")
    return prof, stats


def run_fmm_compare(cfg: RunConfig) -> tuple[list[tuple[int, str, LevelResult]], bool]:
    out, ok = [], True
    rows = []
    for level in cfg.levels:
        for variant in ("standard", "lines", "regularized"):
            r = solve_level(cfg, level, variant)
            ok &= r.stats.converged
            log.info("level %d %s err_u %.3e err_t %.3e fmm bytes %d", level, variant, r.err_u, r.err_t, r.nbytes)
            out.append((level, variant, r))
            rows.append([str(level), variant, str(r.dof), repr(float(r.err_u)), repr(float(r.err_t)), str(r.stats.iterations),
                         repr(round(r.seconds, 3)), str(r.nbytes), str(r.near_bytes)])
    _write_csv(Path(cfg.output), COMPARE_HEADER, rows)
    _write_sidecar(cfg, "fmm-compare")
    return out, ok


def run_mesh(cfg: RunConfig) -> None:
    for level in cfg.levels or (0,):
        if cfg.geometry == "sheet":
            mesh, _ = sheet_problem(cfg.sheet_n)
        else:
            mesh = closed_problem(cfg.geometry, level, cfg.material)[0]
        stem = Path(cfg.output)
        path = stem.with_name(f"{stem.stem}_lvl{level}.off") if cfg.geometry != "sheet" else stem.with_suffix(".off")
        write_off(mesh, path)
        log.info("wrote %s (%d triangles)", path, mesh.n_triangles)
    _write_sidecar(cfg, "mesh")


# ------------------------------------------------------------------ entry


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="elastobem", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("converge", "halfspace", "fmm-compare", "mesh"):
        sp_ = sub.add_parser(name)
        sp_.add_argument("--config", help="key=value configuration file")
        for f in fields(RunConfig):
            sp_.add_argument("--" + f.name.replace("_", "-"), dest=f.name, default=None)
        sp_.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        file_values = read_config(args.config) if args.config else {}
        overrides = {f.name: _convert(f.name, getattr(args, f.name)) for f in fields(RunConfig)
                     if getattr(args, f.name) is not None}
        cfg = resolve_config(file_values, overrides)
        cfg.validate(args.command)
    except (UsageError, OSError) as exc:
        print(f"elastobem: error: {exc}", file=sys.stderr)
        return 2
    if args.command == "converge":
        _, ok = run_converge(cfg)
    elif args.command == "halfspace":
        _, stats = run_halfspace(cfg)
        ok = stats.converged
    elif args.command == "fmm-compare":
        _, ok = run_fmm_compare(cfg)
    else:
        run_mesh(cfg)
        ok = True
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
