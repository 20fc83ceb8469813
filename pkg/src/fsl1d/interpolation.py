"""Periodic piecewise-polynomial interpolants of degree ``2s - 1``.

Three back-ends share one representation: per-cell monomial coefficients in
the local variable ``t = x - x_m`` on cell ``[x_m, x_{m+1})``.

* linear: ``s = 1``, globally C^0.
* spline: ``s in {2, 3}``, globally C^{2s-2}; uniform grids only.  The
  unknown nodal derivatives come from a cyclic banded system, after which
  each cell is filled in by the two-point Hermite kernel.
* hermite: ``s in {2, 3}``, globally C^{s-1}; nodal derivatives up to order
  ``s - 1`` are supplied by the caller.
"""

from __future__ import annotations

from functools import lru_cache
from math import factorial
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .core import InvalidGridError, Method, NodalState, PeriodicGrid, wrap


class OrderOutOfRangeError(ValueError):
    pass


class DimensionError(ValueError):
    pass


class UnsupportedGridError(ValueError):
    pass


class NumericalError(ArithmeticError):
    pass


class Interpolant:
    """Periodic piecewise polynomial on a :class:`PeriodicGrid`.

    ``coeffs[m, i]`` multiplies ``(x - x_m)**i`` on cell ``m``.  Evaluation
    at a knot uses the cell to its right.
    """

    def __init__(self, grid: PeriodicGrid, coeffs: np.ndarray, smoothness: int):
        coeffs = np.array(coeffs, dtype=float)
        if coeffs.ndim != 2 or coeffs.shape[0] != grid.cell_count:
            raise DimensionError("coeffs must have one row per cell")
        coeffs.setflags(write=False)
        self.grid = grid
        self.coeffs = coeffs
        self.smoothness = smoothness
        self._deriv_tables = {0: coeffs}

    @property
    def degree(self) -> int:
        return self.coeffs.shape[1] - 1

    def __repr__(self):
        return (
            f"Interpolant(degree={self.degree}, smoothness=C^{self.smoothness}, "
            f"n={self.grid.cell_count})"
        )

    def _table(self, k: int) -> np.ndarray:
        if k < 0 or k > self.degree:
            raise OrderOutOfRangeError(
                f"derivative order {k} outside 0..{self.degree}"
            )
        table = self._deriv_tables.get(k)
        if table is None:
            i = np.arange(k, self.degree + 1)
            falling = np.array([factorial(j) // factorial(j - k) for j in i], dtype=float)
            table = self.coeffs[:, k:] * falling
            table.setflags(write=False)
            self._deriv_tables[k] = table
        return table

    def locate(self, x):
        """Cell index and local offset of the wrapped points ``x``."""
        xw = wrap(np.asarray(x, dtype=float))
        grid = self.grid
        n = grid.cell_count
        nodes = grid.nodes
        if grid.uniform:
            idx = np.floor(np.nan_to_num(xw) * n).astype(np.intp)
            np.clip(idx, 0, n - 1, out=idx)
            t = xw - nodes[idx]
            # floor(x * n) can land one cell off within an ulp of a knot
            low = t < 0.0
            if np.any(low):
                idx[low] -= 1
                t[low] = xw[low] - nodes[idx[low]]
            high = (t >= grid.widths[0]) & (idx < n - 1)
            if np.any(high):
                idx[high] += 1
                t[high] = xw[high] - nodes[idx[high]]
        else:
            idx = np.searchsorted(nodes, xw, side="right") - 1
            t = xw - nodes[np.maximum(idx, 0)]
            before = idx < 0
            if np.any(before):
                idx[before] = n - 1
                t[before] = xw[before] + 1.0 - nodes[-1]
        return idx, t

    def eval_local(self, idx, t, k: int = 0):
        table = self._table(k)
        r = table[idx, -1].copy()
        for j in range(table.shape[1] - 2, -1, -1):
            r *= t
            r += table[idx, j]
        return r

    def eval(self, x, k: int = 0):
        """``k``-th derivative at ``x`` (scalar in, scalar out)."""
        self._table(k)
        scalar = np.ndim(x) == 0
        idx, t = self.locate(np.atleast_1d(np.asarray(x, dtype=float)))
        out = self.eval_local(idx, t, k)
        return float(out[0]) if scalar else out.reshape(np.shape(x))

    def eval_many(self, x, orders: Sequence[int]):
        """Evaluate several derivative orders at the same points."""
        for k in orders:
            self._table(k)
        x = np.asarray(x, dtype=float)
        idx, t = self.locate(x.ravel())
        return [self.eval_local(idx, t, k).reshape(x.shape) for k in orders]

    def __call__(self, x):
        return self.eval(x, 0)

    def derivative(self, k: int) -> Callable:
        return lambda x: self.eval(x, k)

    def nodal_values(self) -> np.ndarray:
        return self.coeffs[:, 0].copy()


def evaluate(interp: Interpolant, x, k: int = 0):
    """Functional alias of :meth:`Interpolant.eval`."""
    return interp.eval(x, k)


def _check_length(grid: PeriodicGrid, values, name="values") -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.cell_count,):
        raise DimensionError(
            f"{name} must have shape ({grid.cell_count},), got {values.shape}"
        )
    return values


def build_linear(grid: PeriodicGrid, values) -> Interpolant:
    u = _check_length(grid, values)
    coeffs = np.column_stack([u, (np.roll(u, -1) - u) / grid.widths])
    return Interpolant(grid, coeffs, smoothness=0)


def _hermite_cells(w, left, right) -> np.ndarray:
    """Two-point Hermite coefficients on cells of width ``w``.

    ``left``/``right`` hold (value, d1[, d2]) at the two ends of each cell.
    """
    s = len(left)
    a0, a1 = left[0], left[1]
    b0, b1 = right[0], right[1]
    d = b0 - a0
    if s == 2:
        c2 = (3.0 * d / w - 2.0 * a1 - b1) / w
        c3 = (-2.0 * d / w + a1 + b1) / w**2
        return np.column_stack([a0, a1, c2, c3])
    a2, b2 = left[2], right[2]
    w2 = w * w
    c2 = 0.5 * a2
    c3 = (20.0 * d - (12.0 * a1 + 8.0 * b1) * w - (3.0 * a2 - b2) * w2) / (2.0 * w2 * w)
    c4 = (-15.0 * d + (8.0 * a1 + 7.0 * b1) * w + (1.5 * a2 - b2) * w2) / (w2 * w2)
    c5 = (12.0 * d - 6.0 * (a1 + b1) * w - (a2 - b2) * w2) / (2.0 * w2 * w2 * w)
    return np.column_stack([a0, a1, c2, c3, c4, c5])


def build_hermite(grid: PeriodicGrid, values, derivs, s: int) -> Interpolant:
    if s not in (2, 3):
        raise OrderOutOfRangeError("Hermite interpolation supports s in {2, 3}")
    u = _check_length(grid, values)
    derivs = np.asarray(derivs, dtype=float)
    if derivs.ndim == 1:
        derivs = derivs[None, :]
    if derivs.shape != (s - 1, grid.cell_count):
        raise DimensionError(
            f"derivs must have shape ({s - 1}, {grid.cell_count}), got {derivs.shape}"
        )
    left = [u, *derivs]
    right = [np.roll(r, -1) for r in left]
    return Interpolant(grid, _hermite_cells(grid.widths, left, right), smoothness=s - 1)


# Stencils for the unknown nodal derivatives of a uniform periodic spline,
# scaled by powers of h.  Block row m reads L x_{m-1} + D x_m + R x_{m+1}.
#   cubic,   x = h u':             C^2 continuity
#   quintic, x = (h u', h^2 u''):  C^4 then C^3 continuity
_STENCILS = {
    2: (np.array([[1.0]]), np.array([[4.0]]), np.array([[1.0]])),
    3: (
        np.array([[7.0, 1.0], [-8.0, -1.0]]),
        np.array([[16.0, 0.0], [0.0, 6.0]]),
        np.array([[7.0, -1.0], [8.0, -1.0]]),
    ),
}


def _spline_rhs(s: int, u: np.ndarray) -> np.ndarray:
    up, um = np.roll(u, -1), np.roll(u, 1)
    if s == 2:
        return 3.0 * (up - um)
    rhs = np.empty(2 * u.size)
    rhs[0::2] = 15.0 * (up - um)
    rhs[1::2] = 20.0 * (um - 2.0 * u + up)
    return rhs


class _CyclicBandedSolver:
    """Solver for a block-circulant banded system.

    The periodic corner blocks are split off as a rank-``2b`` update, the
    remaining banded matrix is solved by LAPACK, and the corners are restored
    with the Sherman-Morrison-Woodbury identity.
    """

    def __init__(self, lower, diag, upper, n_blocks: int):
        b = diag.shape[0]
        n = b * n_blocks
        bw = 2 * b - 1
        ab = np.zeros((2 * bw + 1, n))
        for m in range(n_blocks):
            for r in range(b):
                i = b * m + r
                for c in range(b):
                    for block, mm in ((lower, m - 1), (diag, m), (upper, m + 1)):
                        if 0 <= mm < n_blocks and block[r, c] != 0.0:
                            j = b * mm + c
                            ab[bw + i - j, j] = block[r, c]
        u_mat = np.zeros((n, 2 * b))
        u_mat[:b, :b] = np.eye(b)
        u_mat[n - b :, b:] = np.eye(b)
        self._b = b
        self._n = n
        self._bw = bw
        self._ab = ab
        self._lower = lower
        self._upper = upper
        try:
            z = scipy.linalg.solve_banded((bw, bw), ab, u_mat, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"banded spline system is singular: {exc}") from exc
        cap = np.eye(2 * b) + self._vt(z)
        if not np.isfinite(np.linalg.cond(cap)) or np.linalg.cond(cap) > 1e12:
            raise NumericalError("cyclic spline system is numerically singular")
        self._z = z
        self._cap_inv = np.linalg.inv(cap)

    def _vt(self, y):
        b, n = self._b, self._n
        return np.concatenate([self._lower @ y[n - b :], self._upper @ y[:b]])

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        y = scipy.linalg.solve_banded(
            (self._bw, self._bw), self._ab, rhs, check_finite=False
        )
        return y - self._z @ (self._cap_inv @ self._vt(y))


@lru_cache(maxsize=64)
def _spline_solver(s: int, n: int) -> _CyclicBandedSolver:
    return _CyclicBandedSolver(*_STENCILS[s], n)


def spline_nodal_derivatives(grid: PeriodicGrid, values, s: int) -> np.ndarray:
    """Nodal derivatives (rows of order 1..s-1) of the periodic spline."""
    u = _check_length(grid, values)
    if s not in (2, 3):
        raise OrderOutOfRangeError("spline interpolation supports s in {2, 3}")
    if not grid.uniform:
        raise UnsupportedGridError("spline interpolation requires a uniform grid")
    n = grid.cell_count
    if n < 2 * s + 1:
        raise UnsupportedGridError(f"spline of degree {2 * s - 1} needs at least {2 * s + 1} cells")
    h = grid.widths[0]
    x = _spline_solver(s, n).solve(_spline_rhs(s, u))
    if s == 2:
        return (x / h)[None, :]
    return np.vstack([x[0::2] / h, x[1::2] / h**2])


def build_spline(grid: PeriodicGrid, values, s: int) -> Interpolant:
    u = _check_length(grid, values)
    derivs = spline_nodal_derivatives(grid, u, s)
    left = [u, *derivs]
    right = [np.roll(r, -1) for r in left]
    return Interpolant(grid, _hermite_cells(grid.widths, left, right), smoothness=2 * s - 2)


def build(grid: PeriodicGrid, method: Method, values, derivs=None) -> Interpolant:
    """Dispatch to the builder for ``method``."""
    if method.kind == "linear":
        return build_linear(grid, values)
    if method.kind == "spline":
        return build_spline(grid, values, method.s)
    if derivs is None:
        raise DimensionError(f"{method} requires nodal derivatives")
    return build_hermite(grid, values, derivs, method.s)


def build_from_state(state: NodalState) -> Interpolant:
    return build(state.grid, state.method, state.values, state.derivs)


def sample(
    grid: PeriodicGrid,
    f: Callable,
    method: Method,
    derivatives: Sequence[Callable] = (),
    time: float = 0.0,
) -> NodalState:
    """Nodal data of ``f`` (and, for Hermite, its derivatives) on ``grid``."""
    x = grid.nodes
    values = np.broadcast_to(np.asarray(f(x), dtype=float), x.shape)
    rows = method.n_derivs
    if len(derivatives) < rows:
        raise DimensionError(f"{method} needs {rows} derivative function(s)")
    derivs = [np.broadcast_to(np.asarray(d(x), dtype=float), x.shape) for d in derivatives[:rows]]
    return NodalState(grid, method, values, np.array(derivs).reshape(rows, x.size), time)


def interpolate_function(
    grid: PeriodicGrid,
    f: Callable,
    method: Method | str,
    derivatives: Sequence[Callable] = (),
) -> Interpolant:
    if isinstance(method, str):
        method = Method.parse(method)
    return build_from_state(sample(grid, f, method, derivatives))


__all__ = [
    "DimensionError",
    "Interpolant",
    "InvalidGridError",
    "NumericalError",
    "OrderOutOfRangeError",
    "UnsupportedGridError",
    "build",
    "build_from_state",
    "build_hermite",
    "build_linear",
    "build_spline",
    "evaluate",
    "interpolate_function",
    "sample",
    "spline_nodal_derivatives",
]
