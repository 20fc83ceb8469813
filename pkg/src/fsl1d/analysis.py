"""Composite Gauss-Legendre norms, error measures and the truncation probe."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .core import PeriodicGrid
from .interpolation import Interpolant, OrderOutOfRangeError
from .problems import BurgersBenchmark, Flux, exact_solution


_GL7_X = np.array([
    -0.9491079123427585245,
    -0.7415311855993944399,
    -0.4058451513773971669,
    0.0,
    0.4058451513773971669,
    0.7415311855993944399,
    0.9491079123427585245,
])
_GL7_W = np.array([
    0.1294849661688696933,
    0.2797053914892766679,
    0.3818300505051189450,
    0.4179591836734693878,
    0.3818300505051189450,
    0.2797053914892766679,
    0.1294849661688696933,
])


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def exact_degree(self) -> int:
        return 2 * self.nodes.size - 1

    def integrate(self, g: Callable, a: float = -1.0, b: float = 1.0) -> float:
        half = 0.5 * (b - a)
        return half * float(np.dot(self.weights, g(a + half * (self.nodes + 1.0))))


def _check_rule(rule: QuadratureRule) -> None:
    if abs(rule.weights.sum() - 2.0) > 1e-15:
        raise RuntimeError("Gauss-Legendre weights do not sum to 2")
    for k in range(rule.exact_degree + 1):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        if abs(np.dot(rule.weights, rule.nodes**k) - exact) > 1e-13:
            raise RuntimeError(f"Gauss-Legendre rule fails on x^{k}")


GAUSS_LEGENDRE_7 = QuadratureRule(_GL7_X, _GL7_W)
_check_rule(GAUSS_LEGENDRE_7)


def quadrature_points(grid: PeriodicGrid, rule: QuadratureRule = GAUSS_LEGENDRE_7):
    """Points and weights of the composite rule, shape ``(n_cells, n_nodes)``.

    Points of the wrap cell may exceed 1; callers evaluate periodic functions.
    """
    half = 0.5 * grid.widths[:, None]
    x = grid.nodes[:, None] + half * (rule.nodes[None, :] + 1.0)
    w = half * rule.weights[None, :]
    return x, w


def _evaluate(v, x, k: int = 0):
    if isinstance(v, Interpolant):
        return v.eval(x, k)
    if k == 0:
        return np.asarray(v(x), dtype=float) * np.ones_like(x)
    try:
        out = v(x, k)
    except TypeError:
        raise OrderOutOfRangeError(
            f"derivative of order {k} is not available for {v!r}"
        ) from None
    return np.asarray(out, dtype=float) * np.ones_like(x)


def l2_norm(phi, grid: PeriodicGrid) -> float:
    x, w = quadrature_points(grid)
    return math.sqrt(float(np.sum(w * _evaluate(phi, x) ** 2)))


def hs_seminorm(v, s: int, grid: PeriodicGrid) -> float:
    """``|v|_{s,2}``.  ``v`` is an :class:`Interpolant` or a callable ``v(x, k)``."""
    x, w = quadrature_points(grid)
    return math.sqrt(float(np.sum(w * _evaluate(v, x, s) ** 2)))


def weighted_norm(v, s: int, grid: PeriodicGrid, dt: float) -> float:
    """``(||v||^2 + h^{2s} / dt |v|_s^2)^{1/2}`` with ``h`` the grid's mesh size."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    weight = grid.mesh_size ** (2 * s) / dt
    return math.sqrt(l2_norm(v, grid) ** 2 + weight * hs_seminorm(v, s, grid) ** 2)


def starred_norm(v, s: int, grid: PeriodicGrid) -> float:
    """``(||v||^2 + |v|_s^2)^{1/2}``, equivalent to the H^s norm."""
    return math.hypot(l2_norm(v, grid), hs_seminorm(v, s, grid))


def difference(a, b) -> Callable:
    """Pointwise ``a - b`` of two evaluables, keeping derivative access."""
    return lambda x, k=0: _evaluate(a, x, k) - _evaluate(b, x, k)


def rel_l2_error(numeric, exact, grid: Optional[PeriodicGrid] = None) -> float:
    if grid is None:
        grid = numeric.grid
    ref = l2_norm(exact, grid)
    if ref == 0.0:
        raise ZeroDivisionError("exact solution has zero L2 norm")
    return l2_norm(difference(numeric, exact), grid) / ref


@dataclass(frozen=True)
class ErrorReport:
    rel_l2: float
    abs_l2: float
    h: float
    dt: float
    s: int = 1
    hs_seminorm_err: Optional[float] = None
    weighted_err: Optional[float] = None
    n_newton_avg: float = float("nan")

    def __post_init__(self):
        for name in ("rel_l2", "abs_l2", "hs_seminorm_err", "weighted_err"):
            value = getattr(self, name)
            if value is not None and not value >= 0:
                raise ValueError(f"{name} must be non-negative, got {value}")
        if self.hs_seminorm_err is not None and self.weighted_err is not None:
            expected = self.abs_l2**2 + self.h ** (2 * self.s) / self.dt * self.hs_seminorm_err**2
            if not math.isclose(self.weighted_err**2, expected, rel_tol=1e-12, abs_tol=0.0):
                raise ValueError("weighted_err inconsistent with abs_l2 and hs_seminorm_err")


def error_report(
    numeric: Interpolant,
    exact,
    s: int,
    dt: float,
    n_newton_avg: float = float("nan"),
) -> ErrorReport:
    """Errors of ``numeric`` against ``exact`` on the interpolant's grid.

    The seminorm fields are filled only when ``exact`` provides the ``s``-th
    derivative.
    """
    grid = numeric.grid
    err = difference(numeric, exact)
    abs_l2 = l2_norm(err, grid)
    ref = l2_norm(exact, grid)
    if ref == 0.0:
        raise ZeroDivisionError("exact solution has zero L2 norm")
    try:
        semi = hs_seminorm(err, s, grid)
    except OrderOutOfRangeError:
        semi = weighted = None
    else:
        h = grid.mesh_size
        weighted = math.sqrt(abs_l2**2 + h ** (2 * s) / dt * semi**2)
    return ErrorReport(
        rel_l2=abs_l2 / ref,
        abs_l2=abs_l2,
        h=grid.mesh_size,
        dt=dt,
        s=s,
        hs_seminorm_err=semi,
        weighted_err=weighted,
        n_newton_avg=n_newton_avg,
    )


def truncation_error(b: BurgersBenchmark, flux: Flux, t_n: float, dt: float) -> Callable:
    """The one-step defect of the exact solution, as a function of ``x``.

    Only the characteristic and diffusive averaging are applied; no
    interpolation is involved.
    """
    if t_n < dt:
        raise ValueError("t_n must be at least dt")
    shift = math.sqrt(2.0 * b.nu * dt)

    def tau(x):
        u_now = exact_solution(b, x, t_n)
        foot = x - flux.f(u_now) * dt
        before = 0.5 * (
            exact_solution(b, foot - shift, t_n - dt) + exact_solution(b, foot + shift, t_n - dt)
        )
        return (u_now - before) / dt

    return tau


def truncation_probe(
    b: BurgersBenchmark, flux: Flux, t_n: float, dt: float, grid: PeriodicGrid
) -> float:
    return l2_norm(truncation_error(b, flux, t_n, dt), grid)


def observed_order(hs: Sequence[float], errs: Sequence[float]) -> float:
    """Least-squares slope of ``log(err)`` against ``log(h)``."""
    hs = np.asarray(hs, dtype=float)
    errs = np.asarray(errs, dtype=float)
    if hs.shape != errs.shape or hs.size < 2:
        raise ValueError("need at least two (h, err) pairs")
    if np.any(hs <= 0) or np.any(errs <= 0):
        raise ValueError("step sizes and errors must be positive")
    if np.any(np.diff(hs) >= 0):
        raise ValueError("step sizes must be strictly decreasing")
    lh, le = np.log(hs), np.log(errs)
    lh = lh - lh.mean()
    return float(np.dot(lh, le - le.mean()) / np.dot(lh, lh))
