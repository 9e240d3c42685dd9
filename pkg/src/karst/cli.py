"""Command line entry point: ``karst mesh|solve|estimate|adapt|verify``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time

import numpy as np

from . import __version__
from .adapt import adapt_loop
from .assembly import ProblemData
from .config import ConfigError, RunConfig, apply_overrides, load_config, validate
from .elements import FeSpace, reference_basis
from .estimator import estimate
from .io import output_dir, write_json
from .mesh import TRIANGLE, DomainGeometry, Mesh, check_mesh_assumptions, grading_for_aspect, mesh_family
from .solver import SolverConfig, SolverError, solve_problem
from .verification.cases import make_case, make_layered_case
from .verification.norms import error_norm
from .verification.properties import PropertyConfig, property_suites
from .verification.study import aspect_sweep, run_study, studies_to_csv, uniform_meshes

log = logging.getLogger("karst")

COMMANDS = ("mesh", "solve", "estimate", "adapt", "verify")

_CASE_PARAMS = {
    "layered": ("K", "D", "alpha", "a"),
    "smooth": ("K", "D"),
    "conduit-polynomial": ("K", "D"),
    "coupled-polynomial": ("K", "D", "alpha"),
}


# ----------------------------------------------------------------- builders
def geometry(cfg: RunConfig) -> DomainGeometry:
    return DomainGeometry(cfg.geometry.L, cfg.geometry.H_m)


def build_mesh(cfg: RunConfig) -> Mesh:
    geom = geometry(cfg)
    triangles = cfg.mesh.triangles
    if triangles is None:
        triangles = reference_basis_shape(cfg.family) == TRIANGLE
    if cfg.mesh.aspect is not None:
        ny, q = grading_for_aspect(geom, cfg.mesh.nx, cfg.mesh.aspect)
    else:
        ny, q = cfg.mesh.ny, cfg.mesh.grading
    return mesh_family(geom, cfg.mesh.nx, ny, q, triangles)


def reference_basis_shape(family: str) -> str:
    return reference_basis(family).shape


def build_problem(cfg: RunConfig):
    """(ProblemData, ManufacturedCase or None)."""
    p = cfg.problem
    if p.case is None:
        fm, fc = p.f_m, p.f_c
        data = ProblemData(K=p.K, D=p.D, alpha=p.alpha,
                           f_m=lambda x, y: np.full(np.broadcast(x, y).shape, fm),
                           f_c=lambda x: np.full(np.shape(x), fc), smooth_data=False)
        return data, None
    params = {k: getattr(p, k) for k in _CASE_PARAMS[p.case] if getattr(p, k) is not None}
    case = make_case(p.case, geometry(cfg), **params)
    return case.data, case


def solver_config(cfg: RunConfig) -> SolverConfig:
    s = cfg.solver
    return SolverConfig(s.method, s.tol, s.max_iter, s.precondition)


def _space(cfg: RunConfig, mesh: Mesh) -> FeSpace:
    if reference_basis_shape(cfg.family) != mesh.shape:
        raise ConfigError(f"family: {cfg.family} needs a {reference_basis_shape(cfg.family)} mesh; "
                          f"set mesh.triangles accordingly")
    return FeSpace(mesh, cfg.family)


# ----------------------------------------------------------------- commands
def cmd_mesh(cfg: RunConfig, out) -> int:
    mesh = build_mesh(cfg)
    mesh.to_json(out / "mesh.json")
    diag = check_mesh_assumptions(mesh)
    print(f"mesh: {mesh.n_cells} {mesh.shape}s, {mesh.n_vertices} vertices, "
          f"max aspect ratio {mesh.aspect_ratios.max():.3g}")
    for w in diag.warnings:
        print(f"warning: {w}")
    return 0


def _solve(cfg: RunConfig):
    mesh = build_mesh(cfg)
    space = _space(cfg, mesh)
    data, case = build_problem(cfg)
    t = time.perf_counter()
    u_h, report = solve_problem(space, data, solver_config(cfg))
    run = {"version": __version__, "config": cfg.to_dict(), "solver": report.to_dict(),
           "n_cells": mesh.n_cells, "n_dofs": space.n_dofs, "solve_seconds": time.perf_counter() - t}
    if case is not None:
        run["error"] = error_norm(u_h, case)
    return mesh, u_h, data, case, run


def cmd_solve(cfg: RunConfig, out) -> int:
    mesh, u_h, _, _, run = _solve(cfg)
    write_json(out / "solution.json", {"mesh": mesh.to_dict(), "solution": u_h.to_dict()})
    write_json(out / "run.json", run)
    msg = f"solve: {run['n_dofs']} dofs, {run['solver']['iterations']} iterations"
    if "error" in run:
        msg += f", error {run['error']:.6e}"
    print(msg)
    return 0


def cmd_estimate(cfg: RunConfig, out) -> int:
    mesh, u_h, data, case, run = _solve(cfg)
    rep = estimate(u_h, data, cfg.estimator.mode)
    rep.to_csv(out / "estimator.csv")
    rep.to_json(out / "estimator.json")
    run["theta"], run["zeta"] = rep.theta, rep.zeta
    write_json(out / "run.json", run)
    print(f"estimate ({rep.mode}): theta {rep.theta:.6e}, zeta {rep.zeta:.6e}")
    return 0


def cmd_adapt(cfg: RunConfig, out) -> int:
    mesh = build_mesh(cfg)
    _space(cfg, mesh)
    data, case = build_problem(cfg)

    def on_level(step, u_h, rep):
        rep.to_csv(out / f"estimator_level{step.level}.csv")

    err_fn = (lambda u: error_norm(u, case)) if case is not None else None
    steps, _ = adapt_loop(mesh, cfg.family, data, cfg.adapt.max_levels, cfg.adapt.theta,
                          cfg.estimator.mode, solver_config(cfg), err_fn, on_level)
    write_json(out / "adapt.json", {"theta_fraction": cfg.adapt.theta, "steps": [s.to_dict() for s in steps]})
    for s in steps:
        print(f"level {s.level}: {s.n_cells} cells, theta {s.theta:.4e}, marked {s.n_marked}, "
              f"touching y=0: {s.conduit_fraction:.3f}")
    return 0


def run_verify(cfg: RunConfig):
    """Studies plus property suites; returns (studies, property report, failures)."""
    geom = geometry(cfg)
    v = cfg.verify
    solver = solver_config(cfg)
    studies, failures = [], []
    conv_case = make_case(v.convergence_case, geom)
    for fam in v.families:
        tri = reference_basis_shape(fam) == TRIANGLE
        res = run_study(conv_case, fam, uniform_meshes(geom, v.n0, v.levels, tri),
                        cfg.estimator.mode, solver, label="uniform")
        studies.append(res)
    sweep_case = make_layered_case(geom, cfg.problem.K, cfg.problem.D, v.sweep_alpha, v.sweep_a / geom.H_m)
    for fam in v.sweep_families:
        tri = reference_basis_shape(fam) == TRIANGLE
        studies.extend(aspect_sweep(sweep_case, fam, v.sweep_nx, tuple(v.aspects), v.sweep_levels, tri,
                                    cfg.estimator.mode, solver))
    for res in studies:
        for r in res.records:
            if r.error > 0 and not (np.isfinite(r.error) and np.isfinite(r.theta) and np.isfinite(r.effectivity)):
                failures.append(f"study {res.family} {res.label} level {r.level}: non-finite record")
    props = property_suites(PropertyConfig(seed=cfg.seed, aspects=tuple(v.aspects)), v.suites)
    failures.extend(props.failures)
    return studies, props, failures


def cmd_verify(cfg: RunConfig, out) -> int:
    t = time.perf_counter()
    studies, props, failures = run_verify(cfg)
    studies_to_csv(studies, out / "study.csv")
    write_json(out / "study.json", [s.to_dict() for s in studies])
    props.to_json(out / "properties.json")
    summary = {"passed": not failures, "failures": failures, "seconds": time.perf_counter() - t}
    write_json(out / "verify.json", summary)
    for res in studies:
        if res.label == "uniform":
            print(f"{res.family} uniform: error rate {res.final_rate('error'):.3f}, "
                  f"theta rate {res.final_rate('theta'):.3f}")
    for s in props.suites:
        print(f"suite {s.name}: {'pass' if s.passed else 'FAIL'}")
    if failures:
        print(json.dumps({"failures": failures}), file=sys.stderr)
        return 1
    return 0


_HANDLERS = {"mesh": cmd_mesh, "solve": cmd_solve, "estimate": cmd_estimate, "adapt": cmd_adapt,
             "verify": cmd_verify}


# --------------------------------------------------------------------- main
def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="karst", description="Coupled matrix/conduit FEM with a posteriori estimators")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON run configuration (defaults are used when omitted)")
        p.add_argument("--out", help="output directory (overrides the config's 'output')")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a scalar field, e.g. mesh.nx=16")
        p.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else validate(RunConfig())
        cfg = apply_overrides(cfg, args.set)
        out = output_dir(args.out or cfg.output)
        return _HANDLERS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
