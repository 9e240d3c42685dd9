"""Convergence and aspect-ratio studies against manufactured solutions."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ..assembly import penalty_matrix
from ..elements import FeSpace
from ..estimator import alignment_measure, error_gradient_sampler, estimate
from ..mesh import DomainGeometry, Mesh, grading_for_aspect, mesh_family
from ..solver import SolverConfig, SolverError, solve_problem
from .cases import ManufacturedCase
from .norms import error_parts, local_error_norms

log = logging.getLogger(__name__)


class StudyError(ValueError):
    pass


@dataclass
class StudyRecord:
    """One refinement level. ``effectivity`` is NaN when the error vanishes.

    ``theta_matrix`` and ``efficiency_matrix`` repeat Theta and the local
    efficiency ratio with the conduit residual left out; they are
    diagnostics only.
    """

    level: int
    n_dofs: int
    n_cells: int
    h_max: float
    h_min: float
    max_aspect: float
    error: float
    theta: float
    zeta: float
    m1: float
    effectivity: float
    reliability: float
    efficiency: float
    jump: float
    iterations: int
    theta_matrix: float = float("nan")
    efficiency_matrix: float = float("nan")

    @property
    def finite(self) -> bool:
        return all(np.isfinite(getattr(self, f.name)) for f in fields(self))


COLUMNS = tuple(f.name for f in fields(StudyRecord))


def _ratio(a: float, b: float) -> float:
    return float(a / b) if b > 0 else float("nan")


def _nanmax(a) -> float:
    return float(np.nanmax(a)) if np.any(np.isfinite(a)) else float("nan")


def rate(e_prev: float, e: float, h_prev: float, h: float) -> float:
    """Observed order log(e_prev/e)/log(h_prev/h)."""
    if not (e_prev > 0 and e > 0 and h_prev > 0 and h > 0) or h_prev == h:
        return float("nan")
    return float(np.log(e_prev / e) / np.log(h_prev / h))


@dataclass
class StudyResult:
    family: str
    case: str
    mode: str
    records: list[StudyRecord] = field(default_factory=list)
    label: str = ""

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def rates(self, name: str = "error") -> np.ndarray:
        v, h = self.column(name), self.column("h_max")
        return np.array([rate(v[i - 1], v[i], h[i - 1], h[i]) for i in range(1, len(v))])

    def final_rate(self, name: str = "error") -> float:
        r = self.rates(name)
        return float(r[-1]) if len(r) else float("nan")

    def to_dict(self) -> dict:
        return {
            "family": self.family, "case": self.case, "mode": self.mode, "label": self.label,
            "columns": list(COLUMNS),
            "records": [asdict(r) for r in self.records],
            "error_rate": self.final_rate("error"), "theta_rate": self.final_rate("theta"),
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def to_csv(self, path=None, header: bool = True) -> str:
        return studies_to_csv([self], path, header)


def studies_to_csv(results, path=None, header: bool = True) -> str:
    """One row per level; float columns use repr so they round-trip."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(("label", "family", "case", "mode") + COLUMNS)
    for res in results:
        for r in res.records:
            w.writerow([res.label, res.family, res.case, res.mode] + [repr(getattr(r, c)) for c in COLUMNS])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def run_level(case: ManufacturedCase, family: str, mesh: Mesh, mode: str | None = None,
              solver: SolverConfig = SolverConfig(), level: int = 0,
              penalty: bool | None = None) -> StudyRecord:
    space = FeSpace(mesh, family)
    u_h, report = solve_problem(space, case.data, solver, penalty)
    rep = estimate(u_h, case.data, mode)
    parts = error_parts(u_h, case)
    err = parts.norm(None if mode is None else ("nonconforming" if "nonconforming" in mode else "conforming"))
    try:
        m1 = alignment_measure(error_gradient_sampler(case.grad_m, u_h), mesh)
    except ValueError:
        m1 = float("nan")  # error gradient vanishes identically
    est = float(np.hypot(rep.theta, rep.zeta))
    local = local_error_norms(parts, mesh)
    zpatch = np.array([rep.zeta_K[p].sum() for p in mesh.cell_patches])
    denom = local + zpatch
    with np.errstate(divide="ignore", invalid="ignore"):
        eff = np.where(denom > 0, rep.theta_K / denom, np.nan)
    efficiency = _nanmax(eff)
    theta_m2 = sum(v for k, v in rep.breakdown.items() if k != "conduit")
    with np.errstate(divide="ignore", invalid="ignore"):
        eff_m = _nanmax(np.where(denom > 0, np.sqrt(theta_m2) / denom, np.nan))
    if space.conforming:
        jump = 0.0
    else:
        c = u_h.coefficients
        jump = float(np.sqrt(max(c @ (penalty_matrix(space) @ c), 0.0)))
    return StudyRecord(
        level=level, n_dofs=space.n_dofs, n_cells=mesh.n_cells,
        h_max=float(mesh.diameters.max()), h_min=float(mesh.h_min.min()),
        max_aspect=float(mesh.aspect_ratios.max()),
        error=float(err), theta=float(rep.theta), zeta=float(rep.zeta), m1=m1,
        effectivity=_ratio(rep.theta, err), reliability=_ratio(err, m1 * est),
        efficiency=efficiency, jump=jump, iterations=int(report.iterations),
        theta_matrix=float(np.sqrt(theta_m2.sum())), efficiency_matrix=eff_m,
    )


def run_study(case: ManufacturedCase, family: str, meshes, mode: str | None = None,
              solver: SolverConfig = SolverConfig(), label: str = "",
              penalty: bool | None = None) -> StudyResult:
    meshes = list(meshes)
    if len(meshes) < 2:
        raise StudyError("a study needs at least two mesh levels")
    res = StudyResult(family, case.name, mode or "default", label=label)
    for i, mesh in enumerate(meshes):
        try:
            rec = run_level(case, family, mesh, mode, solver, i, penalty)
        except SolverError as exc:
            raise SolverError(f"level {i} ({mesh.n_cells} cells): {exc}") from exc
        log.info("%s %s level %d: dofs=%d err=%.3e theta=%.3e", label, family, i, rec.n_dofs,
                 rec.error, rec.theta)
        res.records.append(rec)
    return res


def uniform_meshes(geom: DomainGeometry, n0: int, levels: int, triangles: bool = False) -> list[Mesh]:
    """Uniform meshes with nx = n0, 2 n0, ... and near-square cells (ny per half)."""
    out = []
    for i in range(levels):
        n = n0 * 2 ** i
        ny = max(1, int(round(n * geom.H_m / geom.L)))
        out.append(mesh_family(geom, n, ny, 1.0, triangles))
    return out


def aspect_meshes(geom: DomainGeometry, nx: int, aspect: float, levels: int = 2,
                  triangles: bool = False) -> list[Mesh]:
    """Graded meshes whose conduit layer has the requested aspect ratio.

    Every level doubles nx and keeps the same conduit-layer aspect ratio.
    """
    out = []
    for i in range(levels):
        n = nx * 2 ** i
        ny, q = grading_for_aspect(geom, n, aspect)
        out.append(mesh_family(geom, n, ny, q, triangles))
    return out


def aspect_sweep(case: ManufacturedCase, family: str, nx: int, aspects=(1, 10, 100, 1000),
                 levels: int = 2, triangles: bool = False, mode: str | None = None,
                 solver: SolverConfig = SolverConfig()) -> list[StudyResult]:
    return [run_study(case, family, aspect_meshes(case.geometry, nx, a, levels, triangles), mode, solver,
                      label=f"AR={a:g}") for a in aspects]
