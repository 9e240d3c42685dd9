"""Linear solvers for the reduced SPD system."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import SparseSystem

log = logging.getLogger(__name__)

METHODS = ("cg", "dense", "direct")
_ALIASES = {"conjugate-gradient": "cg", "dense-direct": "dense", "sparse-direct": "direct"}


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    method: str = "cg"
    tol: float = 1e-10
    max_iter: int = 20000
    precondition: bool = True

    def __post_init__(self):
        object.__setattr__(self, "method", _ALIASES.get(self.method, self.method))
        if self.method not in METHODS:
            raise SolverError(f"unknown solver method {self.method!r}")
        if not 0 < self.tol < 1:
            raise SolverError(f"tolerance must lie in (0, 1), got {self.tol}")
        if self.max_iter < 1:
            raise SolverError("max_iter must be at least 1")


@dataclass
class SolveReport:
    method: str
    iterations: int
    residual: float
    converged: bool
    n_unknowns: int

    def to_dict(self) -> dict:
        return asdict(self)


def conjugate_gradient(A, b, tol=1e-10, max_iter=20000, precondition=True):
    """Preconditioned CG; stops when ||b - A x|| <= tol ||b||."""
    n = len(b)
    x = np.zeros(n)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return x, 0, 0.0
    d = A.diagonal() if sp.issparse(A) else np.diag(A)
    if precondition:
        if np.any(d <= 0):
            raise SolverError("Jacobi preconditioner needs a positive diagonal")
        minv = 1.0 / d
    else:
        minv = np.ones(n)
    r = b.copy()
    z = minv * r
    p = z.copy()
    rz = r @ z
    for it in range(1, max_iter + 1):
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0:
            raise SolverError("matrix is not positive definite (p.Ap <= 0)")
        a = rz / pAp
        x += a * p
        r -= a * Ap
        rn = np.linalg.norm(r)
        if rn <= tol * bnorm:
            # confirm with the true residual to guard against drift
            rt = np.linalg.norm(b - A @ x)
            if rt <= tol * bnorm:
                return x, it, rt / bnorm
            # restart from the true residual
            r = b - A @ x
            z = minv * r
            p = z.copy()
            rz = r @ z
            continue
        z = minv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, max_iter, np.linalg.norm(b - A @ x) / bnorm


def solve_linear(A, b, cfg: SolverConfig = SolverConfig()) -> tuple[np.ndarray, SolveReport]:
    b = np.asarray(b, dtype=float)
    n = len(b)
    if A.shape != (n, n):
        raise SolverError(f"matrix shape {A.shape} does not match rhs of length {n}")
    data = A.data if sp.issparse(A) else np.asarray(A)
    if not (np.all(np.isfinite(data)) and np.all(np.isfinite(b))):
        raise SolverError("system contains non-finite entries")
    if n == 0:
        return np.zeros(0), SolveReport(cfg.method, 0, 0.0, True, 0)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), SolveReport(cfg.method, 0, 0.0, True, n)
    if cfg.method == "cg":
        x, it, res = conjugate_gradient(A, b, cfg.tol, cfg.max_iter, cfg.precondition)
        if res > cfg.tol:
            raise SolverError(f"CG did not converge in {it} iterations (relative residual {res:.3e})")
    elif cfg.method == "dense":
        M = A.toarray() if sp.issparse(A) else np.asarray(A)
        x = scipy.linalg.solve(M, b, assume_a="pos")
        it, res = 1, np.linalg.norm(b - M @ x) / bnorm
    else:
        x = spla.spsolve(sp.csc_matrix(A), b)
        it, res = 1, np.linalg.norm(b - A @ x) / bnorm
    report = SolveReport(cfg.method, int(it), float(res), bool(res <= max(cfg.tol, 1e-8)), n)
    log.debug("solve %s", report)
    return x, report


def solve(system: SparseSystem, cfg: SolverConfig = SolverConfig()) -> tuple[np.ndarray, SolveReport]:
    """Solve the reduced system; returns the full coefficient vector."""
    x, report = solve_linear(system.matrix, system.rhs, cfg)
    return system.extend(x), report


def solve_problem(space, data, cfg: SolverConfig = SolverConfig(), penalty: bool | None = None):
    """Assemble, constrain, solve; returns (FeFunction, SolveReport)."""
    from .assembly import apply_dirichlet, assemble_system
    from .elements.functions import FeFunction

    system = apply_dirichlet(assemble_system(space, data, penalty), space)
    try:
        x, report = solve(system, cfg)
    except SolverError as exc:
        raise SolverError(f"{space.tag} on {space.mesh!r}: {exc}") from exc
    return FeFunction(space, x), report
