"""Grid, nodal state and configuration types shared across the package."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class InvalidGridError(ValueError):
    pass


class ConfigurationError(ValueError):
    pass


def wrap(x):
    """Map ``x`` onto the periodic unit interval ``[0, 1)``.

    Works on scalars and arrays. Tiny negative inputs whose image rounds to
    exactly 1.0 are folded back to 0.0 so the result never leaves ``[0, 1)``.
    """
    if np.ndim(x) == 0:
        y = float(x) - math.floor(x)
        return 0.0 if y >= 1.0 else y
    x = np.asarray(x, dtype=float)
    y = x - np.floor(x)
    y[y >= 1.0] = 0.0
    return y


@dataclass(frozen=True, eq=False)
class PeriodicGrid:
    """Nodes ``x_0 < ... < x_{N-1}`` of one period of the unit torus.

    Cell ``m`` covers ``[x_m, x_{m+1})``; the last cell wraps to ``x_0 + 1``.
    """

    nodes: np.ndarray
    uniform: bool = False

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 4:
            raise InvalidGridError("a periodic grid needs at least 4 nodes")
        if not np.all(np.isfinite(nodes)):
            raise InvalidGridError("grid nodes must be finite")
        if nodes[0] < 0.0 or nodes[-1] >= 1.0:
            raise InvalidGridError("grid nodes must lie in [0, 1)")
        if np.any(np.diff(nodes) <= 0.0):
            raise InvalidGridError("grid nodes must be strictly increasing")
        nodes.setflags(write=False)
        widths = np.empty_like(nodes)
        widths[:-1] = np.diff(nodes)
        widths[-1] = nodes[0] + 1.0 - nodes[-1]
        widths.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "widths", widths)

    @property
    def cell_count(self) -> int:
        return self.nodes.size

    @property
    def mesh_size(self) -> float:
        return float(self.widths.max())

    def __len__(self):
        return self.nodes.size

    def __repr__(self):
        kind = "uniform" if self.uniform else "nonuniform"
        return f"PeriodicGrid({kind}, n={self.cell_count}, h={self.mesh_size:.6g})"


def uniform_grid(n_cells: int) -> PeriodicGrid:
    """Uniform grid ``x_m = m / n_cells`` with mesh size ``1 / n_cells``."""
    if int(n_cells) != n_cells or n_cells < 4:
        raise InvalidGridError(f"n_cells must be an integer >= 4, got {n_cells!r}")
    n = int(n_cells)
    grid = PeriodicGrid(np.arange(n) / n, uniform=True)
    # every cell width of a uniform grid is exactly 1/n, including the wrap cell
    widths = np.full(n, 1.0 / n)
    widths.setflags(write=False)
    object.__setattr__(grid, "widths", widths)
    return grid


@dataclass(frozen=True)
class Method:
    """Interpolation back-end: ``kind`` in {linear, spline, hermite} and order ``s``.

    The interpolant has degree ``2s - 1``; linear is ``s = 1``.
    """

    kind: str
    s: int

    def __post_init__(self):
        if self.kind == "linear":
            if self.s != 1:
                raise ConfigurationError("linear interpolation has s = 1")
        elif self.kind in ("spline", "hermite"):
            if self.s not in (2, 3):
                raise ConfigurationError(f"{self.kind} interpolation supports s in {{2, 3}}")
        else:
            raise ConfigurationError(f"unknown interpolation kind {self.kind!r}")

    @property
    def degree(self) -> int:
        return 2 * self.s - 1

    @property
    def n_derivs(self) -> int:
        """Number of nodal derivative rows carried alongside the values."""
        return self.s - 1 if self.kind == "hermite" else 0

    @property
    def name(self) -> str:
        return "linear" if self.kind == "linear" else f"{self.kind}{self.degree}"

    @classmethod
    def parse(cls, name: str) -> "Method":
        name = name.strip().lower()
        table = {
            "linear": cls("linear", 1),
            "spline3": cls("spline", 2),
            "spline5": cls("spline", 3),
            "hermite3": cls("hermite", 2),
            "hermite5": cls("hermite", 3),
        }
        try:
            return table[name]
        except KeyError:
            raise ConfigurationError(
                f"unknown method {name!r}; expected one of {sorted(table)}"
            ) from None

    def __str__(self):
        return self.name


METHOD_NAMES = ("linear", "spline3", "spline5", "hermite3", "hermite5")


@dataclass(frozen=True, eq=False)
class NodalState:
    """Nodal values ``u_m`` at time ``t`` plus, for Hermite back-ends, the
    derivative rows ``(d/dx u, ..., d^{s-1}/dx^{s-1} u)`` at the nodes."""

    grid: PeriodicGrid
    method: Method
    values: np.ndarray
    derivs: np.ndarray = field(default=None)
    time: float = 0.0

    def __post_init__(self):
        n = self.grid.cell_count
        values = np.array(self.values, dtype=float)
        if values.shape != (n,):
            raise ValueError(f"values must have shape ({n},), got {values.shape}")
        rows = self.method.n_derivs
        derivs = np.zeros((0, n)) if self.derivs is None else np.array(self.derivs, dtype=float)
        if derivs.ndim == 1 and derivs.size == n:
            derivs = derivs[None, :]
        if derivs.size == 0:
            derivs = np.zeros((0, n))
        if derivs.shape != (rows, n):
            raise ValueError(
                f"{self.method} needs derivs of shape ({rows}, {n}), got {derivs.shape}"
            )
        values.setflags(write=False)
        derivs.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "derivs", derivs)

    @property
    def order(self) -> int:
        return self.method.s


@dataclass(frozen=True)
class SchemeConfig:
    nu: float
    dt: float
    t_final: float
    interpolation: Method
    newton_tol: float = 1e-13
    newton_max_iter: int = 50
    strict_dt_check: bool = True

    def __post_init__(self):
        if isinstance(self.interpolation, str):
            object.__setattr__(self, "interpolation", Method.parse(self.interpolation))
        if not self.nu > 0:
            raise ConfigurationError("nu must be positive")
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        if not self.t_final > 0:
            raise ConfigurationError("t_final must be positive")
        if self.dt > self.t_final * (1 + 1e-12):
            raise ConfigurationError("dt must not exceed t_final")
        if not self.newton_tol > 0:
            raise ConfigurationError("newton_tol must be positive")
        if self.newton_max_iter < 1:
            raise ConfigurationError("newton_max_iter must be >= 1")

    @property
    def delta(self) -> float:
        """Diffusive offset scale ``sqrt(nu * dt)``."""
        return math.sqrt(self.nu * self.dt)

    @property
    def n_steps(self) -> int:
        ratio = self.t_final / self.dt
        n = round(ratio)
        if n < 1 or abs(ratio - n) > 1e-9 * ratio:
            raise ConfigurationError(
                f"t_final / dt = {ratio!r} is not a positive integer step count"
            )
        return n
