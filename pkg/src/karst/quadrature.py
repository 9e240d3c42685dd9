"""Gauss rules on the reference square, triangle and interval."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

MAX_DEGREE = 15


class QuadratureError(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (n, dim) reference coordinates
    weights: np.ndarray  # (n,)
    degree: int

    def __len__(self):
        return len(self.weights)


def _check(degree):
    if isinstance(degree, bool) or int(degree) != degree:
        raise QuadratureError(f"quadrature degree must be an integer, got {degree!r}")
    if not (0 <= int(degree) <= MAX_DEGREE):
        raise QuadratureError(f"quadrature degree {degree} outside [0, {MAX_DEGREE}]")
    return int(degree)


@lru_cache(maxsize=None)
def _gauss01(n: int):
    x, w = roots_legendre(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def gauss_interval(degree: int) -> QuadratureRule:
    """Gauss-Legendre on (0, 1), exact up to ``degree``."""
    degree = _check(degree)
    x, w = _gauss01(degree // 2 + 1)
    return QuadratureRule(x[:, None], w, degree)


@lru_cache(maxsize=None)
def gauss_square(degree: int) -> QuadratureRule:
    """Tensor Gauss-Legendre on (0,1)^2, exact for Q_degree."""
    degree = _check(degree)
    x, w = _gauss01(degree // 2 + 1)
    X, Y = np.meshgrid(x, x, indexing="ij")
    W = np.outer(w, w)
    return QuadratureRule(np.column_stack([X.ravel(), Y.ravel()]), W.ravel(), degree)


@lru_cache(maxsize=None)
def gauss_triangle(degree: int) -> QuadratureRule:
    """Collapsed (Duffy) Gauss rule on the unit triangle, exact for P_degree."""
    degree = _check(degree)
    n = degree // 2 + 1
    xa, wa = roots_jacobi(n, 1.0, 0.0)  # weight (1 - t) on (-1, 1)
    a = 0.5 * (xa + 1.0)
    wa = wa / 4.0
    b, wb = _gauss01(n)
    A, Bq = np.meshgrid(a, b, indexing="ij")
    x = A.ravel()
    y = ((1.0 - A) * Bq).ravel()
    W = np.outer(wa, wb).ravel()
    return QuadratureRule(np.column_stack([x, y]), W, degree)


def quadrature(shape: str, degree: int) -> QuadratureRule:
    if shape == "rectangle":
        return gauss_square(degree)
    if shape == "triangle":
        return gauss_triangle(degree)
    if shape == "interval":
        return gauss_interval(degree)
    raise QuadratureError(f"unknown reference shape {shape!r}")
