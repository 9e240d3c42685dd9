"""Solve, estimate, mark, refine."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np

from .assembly import ProblemData
from .elements import FeSpace
from .estimator import EstimatorReport, estimate
from .mesh import Mesh, conduit_layer_cells, refine
from .solver import SolverConfig, solve_problem

log = logging.getLogger(__name__)


def dorfler_mark(indicators, theta: float = 0.5) -> np.ndarray:
    """Smallest set of cells, largest first, carrying ``theta`` of sum(eta_K^2).

    Ties are broken by cell index so the result is deterministic.
    """
    eta2 = np.asarray(indicators, dtype=float) ** 2
    if not 0 < theta <= 1:
        raise ValueError(f"marking fraction must lie in (0, 1], got {theta}")
    total = eta2.sum()
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    order = np.lexsort((np.arange(len(eta2)), -eta2))
    csum = np.cumsum(eta2[order])
    n = int(np.searchsorted(csum, theta * total * (1 - 1e-14))) + 1
    return np.sort(order[:n])


@dataclass
class AdaptStep:
    level: int
    n_cells: int
    n_dofs: int
    theta: float
    zeta: float
    n_marked: int
    conduit_fraction: float  # share of marked cells touching y = 0
    error: float = float("nan")

    def to_dict(self) -> dict:
        return asdict(self)


def adapt_loop(mesh: Mesh, family: str, data: ProblemData, max_levels: int = 3, theta: float = 0.5,
               mode: str | None = None, solver: SolverConfig = SolverConfig(), error_fn=None,
               on_level=None) -> tuple[list[AdaptStep], Mesh]:
    """Run ``max_levels`` solve/estimate/mark passes, refining between them.

    ``error_fn(u_h)`` optionally supplies the true error; ``on_level(step,
    u_h, report)`` is called after every pass.
    """
    steps = []
    for level in range(max_levels):
        space = FeSpace(mesh, family)
        u_h, _ = solve_problem(space, data, solver)
        rep: EstimatorReport = estimate(u_h, data, mode)
        marked = dorfler_mark(rep.theta_K, theta)
        layer = conduit_layer_cells(mesh)
        frac = float(layer[marked].mean()) if len(marked) else float("nan")
        err = float(error_fn(u_h)) if error_fn is not None else float("nan")
        step = AdaptStep(level, mesh.n_cells, space.n_dofs, rep.theta, rep.zeta, len(marked), frac, err)
        log.info("adapt level %d: cells=%d theta=%.3e marked=%d (%.0f%% at y=0)", level, mesh.n_cells,
                 rep.theta, len(marked), 100 * frac)
        steps.append(step)
        if on_level is not None:
            on_level(step, u_h, rep)
        if level + 1 < max_levels:
            mesh = refine(mesh, marked)
    return steps, mesh
