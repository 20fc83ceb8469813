"""One step of the implicit fully semi-Lagrangian scheme.

For every node ``x_m`` the new value solves the scalar equation

    F(xi) = xi - (g(z-) + g(z+)) / 2 = 0,   z+- = x_m - f(xi) dt +- sqrt(2) delta,

where ``g`` interpolates the previous nodal data and ``delta = sqrt(nu dt)``.
The roots are found by Newton's method, all nodes at once, with a
bracketing bisection fallback for nodes where Newton does not settle.

Hermite back-ends also carry nodal derivatives.  Differentiating the nodal
map ``u(x) = (g(z-) + g(z+)) / 2`` with ``X' = 1 - dt f'(u) u'`` gives

    u'  = A / (1 + dt f'(u) A),                         A = (g'(z-) + g'(z+)) / 2
    u'' = (B X'^2 - dt A f''(u) u'^2) / (1 + dt A f'(u)), B = (g''(z-) + g''(z+)) / 2
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import NodalState, PeriodicGrid, SchemeConfig
from .interpolation import Interpolant, build_from_state, sample
from .problems import Flux


class ConvergenceError(RuntimeError):
    def __init__(self, node, residual: float, message: str = "foot solve did not converge"):
        super().__init__(f"{message} (node {node}, residual {residual:.3e})")
        self.node = node
        self.residual = residual


class StepSizeError(ValueError):
    pass


class StepSizeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class StepReport:
    newton_iters: np.ndarray
    max_residual: float
    dt_margin: float
    bisection_nodes: int = 0


@dataclass(frozen=True)
class RunReport:
    n_steps: int
    newton_iters_avg: float
    max_residual: float
    min_dt_margin: float
    bisection_nodes: int = 0


def dt_max(flux_lip: float, grad_bound: float) -> float:
    """Step bound ``min(1 / (3 |f'| |v'|), 1)`` under which the foot equation
    has a unique root and the characteristic map is a bijection."""
    if flux_lip < 0 or grad_bound < 0:
        raise ValueError("bounds must be non-negative")
    product = 3.0 * flux_lip * grad_bound
    if product == 0.0:
        return 1.0
    return min(1.0 / product, 1.0)


def gradient_bound(g: Interpolant, per_cell: int = 8) -> float:
    """``max |g'|`` sampled at ``per_cell`` equispaced points of every cell."""
    grid = g.grid
    frac = np.arange(per_cell) / per_cell
    x = (grid.nodes[:, None] + grid.widths[:, None] * frac[None, :]).ravel()
    return float(np.max(np.abs(g.eval(x, 1))))


def _residual(x, u, g, flux, dt, shift):
    foot = x - flux.f(u) * dt
    n = np.size(u)
    vals, slopes = g.eval_many(np.concatenate([foot - shift, foot + shift]), (0, 1))
    F = u - 0.5 * (vals[:n] + vals[n:])
    dF = 1.0 + 0.5 * dt * flux.f_prime(u) * (slopes[:n] + slopes[n:])
    return F, dF


def _bisect(x, g, flux, dt, shift, u0, tol, node):
    def F(xi):
        return float(_residual(np.array([x]), np.array([xi]), g, flux, dt, shift)[0][0])

    f0 = F(u0)
    if abs(f0) <= tol:
        return u0, f0
    scale = 1.0 + abs(u0)
    r = 1e-3 * scale
    while True:
        lo, hi = u0 - r, u0 + r
        flo, fhi = F(lo), F(hi)
        if flo * fhi <= 0.0:
            break
        r *= 2.0
        if r > 10.0 * scale:
            raise ConvergenceError(node, abs(f0), "no sign change in bisection bracket")
    if flo > 0.0:
        lo, hi, flo, fhi = hi, lo, fhi, flo
    mid, fmid = lo, flo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fmid = F(mid)
        if abs(fmid) <= tol or mid in (lo, hi):
            break
        if fmid < 0.0:
            lo = mid
        else:
            hi = mid
    if abs(fmid) > tol:
        raise ConvergenceError(node, abs(fmid))
    return mid, fmid


def solve_feet(
    x: np.ndarray,
    g: Interpolant,
    flux: Flux,
    dt: float,
    delta: float,
    u_init: np.ndarray,
    tol: float = 1e-13,
    max_iter: int = 50,
    node_ids: np.ndarray | None = None,
):
    """Solve the foot equation at every point of ``x``.

    Returns ``(u, iterations, residuals, n_bisected)``.  Each point is
    updated only while its own residual exceeds ``tol``, so the result for a
    point does not depend on which other points share the call.
    """
    x = np.asarray(x, dtype=float)
    u0 = np.asarray(u_init, dtype=float)
    u = u0.copy()
    if not np.all(np.isfinite(u)):
        raise ValueError("initial guess must be finite")
    shift = math.sqrt(2.0) * delta
    iters = np.zeros(u.size, dtype=np.int64)
    resid = np.full(u.size, np.inf)
    active = np.arange(u.size)
    for _ in range(max_iter):
        if active.size == 0:
            break
        F, dF = _residual(x[active], u[active], g, flux, dt, shift)
        iters[active] += 1
        done = np.abs(F) <= tol
        resid[active[done]] = F[done]
        keep = ~done
        with np.errstate(divide="ignore", invalid="ignore"):
            step = F[keep] / dF[keep]
        active = active[keep]
        u[active] -= step
        bad = ~np.isfinite(u[active])
        if np.any(bad):
            # left for the bisection fallback
            u[active[bad]] = u0[active[bad]]
            active = active[~bad]
    stalled = np.flatnonzero(~(np.abs(resid) <= tol))
    for i in stalled:
        node = i if node_ids is None else node_ids[i]
        u[i], resid[i] = _bisect(x[i], g, flux, dt, shift, float(u0[i]), tol, node)
    return u, iters, np.abs(resid), stalled.size


def solve_foot(
    x: float,
    g: Interpolant,
    flux: Flux,
    dt: float,
    delta: float,
    u_init: float,
    tol: float = 1e-13,
    max_iter: int = 50,
) -> float:
    if not dt > 0:
        raise ValueError("dt must be positive")
    u, _, _, _ = solve_feet(np.array([x]), g, flux, dt, delta, np.array([u_init]), tol, max_iter)
    return float(u[0])


def _propagate_derivatives(x, u, g, flux, dt, shift, rows):
    foot = x - flux.f(u) * dt
    n = u.size
    orders = (1, 2) if rows == 2 else (1,)
    evals = g.eval_many(np.concatenate([foot - shift, foot + shift]), orders)
    fp = flux.f_prime(u)
    a = 0.5 * (evals[0][:n] + evals[0][n:])
    v = a / (1.0 + dt * fp * a)
    if rows == 1:
        return np.vstack([v])
    b = 0.5 * (evals[1][:n] + evals[1][n:])
    xp = 1.0 - dt * fp * v
    w = (b * xp**2 - dt * a * flux.f_second(u) * v**2) / (1.0 + dt * a * fp)
    return np.vstack([v, w])


def _chunks(n: int, workers: int):
    bounds = np.linspace(0, n, max(1, min(workers, n)) + 1).astype(int)
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def step(state: NodalState, flux: Flux, config: SchemeConfig, workers: int = 1):
    """Advance ``state`` by one step of size ``config.dt``.

    ``workers > 1`` splits the nodes over a thread pool; the result is
    bit-identical to the sequential one.
    """
    method = config.interpolation
    if state.method != method:
        raise ValueError(f"state carries {state.method} data but config uses {method}")
    dt = config.dt
    g = build_from_state(state)
    margin = dt_max(flux.lip_bound, gradient_bound(g)) - dt
    if margin <= 0.0:
        msg = f"dt = {dt:g} is not below the step bound (margin {margin:.3g})"
        if config.strict_dt_check:
            raise StepSizeError(msg)
        warnings.warn(msg, StepSizeWarning, stacklevel=2)

    x = state.grid.nodes
    shift = math.sqrt(2.0) * config.delta
    ids = np.arange(x.size)

    def work(sl):
        u, it, res, nb = solve_feet(
            x[sl], g, flux, dt, config.delta, state.values[sl],
            config.newton_tol, config.newton_max_iter, node_ids=ids[sl],
        )
        derivs = (
            _propagate_derivatives(x[sl], u, g, flux, dt, shift, method.n_derivs)
            if method.n_derivs else None
        )
        return u, it, res, nb, derivs

    pieces = _chunks(x.size, workers)
    if len(pieces) == 1:
        results = [work(pieces[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(pieces)) as pool:
            results = list(pool.map(work, pieces))
    u = np.concatenate([r[0] for r in results])
    iters = np.concatenate([r[1] for r in results])
    resid = np.concatenate([r[2] for r in results])
    derivs = np.hstack([r[4] for r in results]) if method.n_derivs else None
    new = NodalState(state.grid, method, u, derivs, state.time + dt)
    report = StepReport(
        newton_iters=iters,
        max_residual=float(resid.max()),
        dt_margin=margin,
        bisection_nodes=sum(r[3] for r in results),
    )
    return new, report


def run(
    initial: Callable,
    grid: PeriodicGrid,
    flux: Flux,
    config: SchemeConfig,
    derivatives: Sequence[Callable] = (),
    workers: int = 1,
    callback: Callable | None = None,
):
    """Interpolate ``initial`` and take ``t_final / dt`` steps.

    Hermite back-ends need ``derivatives``: callables for the first
    ``s - 1`` derivatives of the initial data.
    """
    n_steps = config.n_steps
    state = sample(grid, initial, config.interpolation, derivatives)
    iters_total = 0
    max_res = 0.0
    min_margin = math.inf
    bisected = 0
    for n in range(n_steps):
        state, rep = step(state, flux, config, workers)
        # time is accumulated from the step count to avoid drift
        state = NodalState(state.grid, state.method, state.values, state.derivs, (n + 1) * config.dt)
        iters_total += int(rep.newton_iters.sum())
        max_res = max(max_res, rep.max_residual)
        min_margin = min(min_margin, rep.dt_margin)
        bisected += rep.bisection_nodes
        if callback is not None:
            callback(n + 1, state, rep)
    report = RunReport(
        n_steps=n_steps,
        newton_iters_avg=iters_total / (n_steps * grid.cell_count),
        max_residual=max_res,
        min_dt_margin=min_margin,
        bisection_nodes=bisected,
    )
    return state, report


def characteristic_map_slope(
    g: Interpolant, flux: Flux, dt: float, per_cell: int = 8,
    tol: float = 1e-13, max_iter: int = 50,
) -> np.ndarray:
    """Derivative of ``x -> x - f(w(x)) dt`` where ``w = g(x - f(w) dt)``.

    Sampled at ``per_cell`` points of each cell.  Under the step bound every
    value lies in ``[1/2, 3/2]``.
    """
    grid = g.grid
    frac = np.arange(per_cell) / per_cell
    x = (grid.nodes[:, None] + grid.widths[:, None] * frac[None, :]).ravel()
    w, _, _, _ = solve_feet(x, g, flux, dt, 0.0, g(x), tol, max_iter)
    slope = g.eval(x - flux.f(w) * dt, 1)
    fp = flux.f_prime(w)
    dw = slope / (1.0 + dt * fp * slope)
    return 1.0 - dt * fp * dw
