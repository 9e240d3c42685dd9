"""Manufactured solutions for the coupled matrix/conduit problem."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..assembly import ProblemData
from ..mesh import DomainGeometry


class CaseError(ValueError):
    pass


@dataclass
class ManufacturedCase:
    """Exact heads, their derivatives and the matching sources."""

    name: str
    tag: str
    geometry: DomainGeometry
    data: ProblemData
    u_m: Callable
    grad_m: Callable
    u_c: Callable
    du_c: Callable
    params: dict = field(default_factory=dict)
    exact_in: tuple[str, ...] = ()

    def interface_residual(self, x) -> np.ndarray:
        """K [d_y u_m](x, 0) - alpha (u_m(x, 0) - u_c(x)); zero for a valid case."""
        x = np.asarray(x, dtype=float)
        eps = 0.0
        up = self.grad_m(x, np.full_like(x, +eps), side=+1)[..., 1]
        lo = self.grad_m(x, np.full_like(x, -eps), side=-1)[..., 1]
        trace = self.u_m(x, np.zeros_like(x))
        return self.data.K * (up - lo) - self.data.alpha * (trace - self.u_c(x))

    def scaled(self, s: float) -> "ManufacturedCase":
        um, gm, uc, duc = self.u_m, self.grad_m, self.u_c, self.du_c
        return ManufacturedCase(
            f"{self.name}*{s:g}", self.tag, self.geometry, self.data.scaled(s),
            lambda x, y: s * um(x, y), lambda x, y, side=None: s * gm(x, y, side),
            lambda x: s * uc(x), lambda x: s * duc(x), dict(self.params, scale=s), self.exact_in,
        )


def _side(y, side):
    if side is not None:
        return np.broadcast_to(np.asarray(side, dtype=float), np.shape(y))
    return np.where(np.asarray(y) >= 0, 1.0, -1.0)


def make_layered_case(geom: DomainGeometry = DomainGeometry(), K: float = 1.0, D: float = 1.0,
                      alpha: float = 1.0, a: float | None = None) -> ManufacturedCase:
    """u_c = sin(pi x/L), u_m = sin(pi x/L) phi(|y|), phi(t) = (H - t)(a + b t).

    ``b`` is fixed by the interface condition K (-2a + 2bH) = alpha (aH - 1);
    the default ``a = 1/H`` gives u_m(x, 0) = u_c.
    """
    L, H = geom.L, geom.H_m
    if K <= 0 and alpha <= 0:
        raise CaseError("degenerate parameters: K and alpha both vanish")
    if K <= 0 or D <= 0 or alpha < 0:
        raise CaseError("need K > 0, D > 0 and alpha >= 0")
    if a is None:
        a = 1.0 / H
    b = a / H + alpha * (a * H - 1.0) / (2.0 * K * H)
    w = np.pi / L

    def phi(t):
        return (H - t) * (a + b * t)

    def dphi(t):
        return -(a + b * t) + b * (H - t)

    def u_m(x, y):
        return np.sin(w * np.asarray(x)) * phi(np.abs(y))

    def grad_m(x, y, side=None):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        sg = _side(y, side)
        t = np.abs(y)
        return np.stack([w * np.cos(w * x) * phi(t), np.sin(w * x) * dphi(t) * sg], axis=-1)

    def u_c(x):
        return np.sin(w * np.asarray(x))

    def du_c(x):
        return w * np.cos(w * np.asarray(x))

    def f_m(x, y):
        return K * np.sin(w * np.asarray(x)) * (w ** 2 * phi(np.abs(y)) + 2.0 * b)

    def f_c(x):
        s = np.sin(w * np.asarray(x))
        return D * w ** 2 * s - alpha * (a * H - 1.0) * s

    tag = "smooth-decoupled" if alpha == 0 and np.isclose(a, 1 / H) else "layered-coupled"
    data = ProblemData(K=K, D=D, alpha=alpha, f_m=f_m, f_c=f_c)
    return ManufacturedCase("layered", tag, geom, data, u_m, grad_m, u_c, du_c,
                            {"K": K, "D": D, "alpha": alpha, "a": a, "b": b})


def make_smooth_case(geom: DomainGeometry = DomainGeometry(), K: float = 1.0, D: float = 1.0) -> ManufacturedCase:
    """Decoupled sine products: smooth across y=0 and no exchange."""
    L, H = geom.L, geom.H_m
    wx, wy = np.pi / L, np.pi / (2.0 * H)

    def u_m(x, y):
        return np.sin(wx * np.asarray(x)) * np.cos(wy * np.asarray(y))

    def grad_m(x, y, side=None):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return np.stack([wx * np.cos(wx * x) * np.cos(wy * y), -wy * np.sin(wx * x) * np.sin(wy * y)], axis=-1)

    def u_c(x):
        return np.sin(wx * np.asarray(x))

    def du_c(x):
        return wx * np.cos(wx * np.asarray(x))

    def f_m(x, y):
        return K * (wx ** 2 + wy ** 2) * u_m(x, y)

    def f_c(x):
        return D * wx ** 2 * u_c(x)

    data = ProblemData(K=K, D=D, alpha=0.0, f_m=f_m, f_c=f_c)
    return ManufacturedCase("smooth", "smooth-decoupled", geom, data, u_m, grad_m, u_c, du_c,
                            {"K": K, "D": D, "alpha": 0.0})


def make_conduit_polynomial_case(geom: DomainGeometry = DomainGeometry(), D: float = 1.0,
                                 c: float = 1.0, K: float = 1.0) -> ManufacturedCase:
    """No exchange, quiet matrix, constant conduit source: u_c = c x (L - x) / (2D).

    Every residual vanishes for a discrete space containing quadratics on
    the conduit, and the data are exactly representable, so the estimator
    must return zero.
    """
    L = geom.L

    def zero_m(x, y):
        return np.zeros(np.broadcast(x, y).shape)

    def grad_m(x, y, side=None):
        return np.zeros(np.broadcast(x, y).shape + (2,))

    def u_c(x):
        x = np.asarray(x, dtype=float)
        return c * x * (L - x) / (2.0 * D)

    def du_c(x):
        x = np.asarray(x, dtype=float)
        return c * (L - 2.0 * x) / (2.0 * D)

    def f_c(x):
        return np.full(np.shape(x), float(c))

    data = ProblemData(K=K, D=D, alpha=0.0, f_m=zero_m, f_c=f_c, smooth_data=False)
    return ManufacturedCase("conduit-polynomial", "polynomial", geom, data, zero_m, grad_m, u_c, du_c,
                            {"K": K, "D": D, "alpha": 0.0, "c": c}, exact_in=("P2", "P3", "Q2", "Q3"))


def make_coupled_polynomial_case(geom: DomainGeometry = DomainGeometry(), K: float = 1.0,
                                 D: float = 1.0, alpha: float = 1.0) -> ManufacturedCase:
    """u_m = x (L - x)(H - |y|), u_c = (H + 2K/alpha) x (L - x).

    Exactly reproduced by Q2 (and higher); the conduit source is not
    edgewise constant, so only the conduit residual (equal to its data
    oscillation) survives.
    """
    if alpha <= 0:
        raise CaseError("the coupled polynomial case needs alpha > 0")
    L, H = geom.L, geom.H_m
    gamma = H + 2.0 * K / alpha

    def u_m(x, y):
        x = np.asarray(x, float)
        return x * (L - x) * (H - np.abs(y))

    def grad_m(x, y, side=None):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        sg = _side(y, side)
        return np.stack([(L - 2 * x) * (H - np.abs(y)), -x * (L - x) * sg], axis=-1)

    def u_c(x):
        x = np.asarray(x, float)
        return gamma * x * (L - x)

    def du_c(x):
        return gamma * (L - 2 * np.asarray(x, float))

    def f_m(x, y):
        return 2.0 * K * (H - np.abs(np.asarray(y, float))) * np.ones(np.broadcast(x, y).shape)

    def f_c(x):
        x = np.asarray(x, float)
        return 2.0 * D * gamma + 2.0 * K * x * (L - x)

    data = ProblemData(K=K, D=D, alpha=alpha, f_m=f_m, f_c=f_c, smooth_data=False)
    return ManufacturedCase("coupled-polynomial", "polynomial", geom, data, u_m, grad_m, u_c, du_c,
                            {"K": K, "D": D, "alpha": alpha, "gamma": gamma}, exact_in=("Q2", "Q3"))


CASES = {
    "layered": make_layered_case,
    "smooth": make_smooth_case,
    "conduit-polynomial": make_conduit_polynomial_case,
    "coupled-polynomial": make_coupled_polynomial_case,
}


def make_case(name: str, geom: DomainGeometry, **params) -> ManufacturedCase:
    try:
        factory = CASES[name]
    except KeyError:
        raise CaseError(f"unknown manufactured case {name!r}; choose from {', '.join(CASES)}") from None
    return factory(geom, **params)
