"""Implicit fully semi-Lagrangian scheme for 1D periodic advection-diffusion
with spline and Hermite interpolation of degree 2s - 1."""

from .analysis import (
    ErrorReport,
    hs_seminorm,
    l2_norm,
    observed_order,
    rel_l2_error,
    truncation_probe,
    weighted_norm,
)
from .characteristics import dt_max, run, solve_foot, step
from .core import Method, NodalState, PeriodicGrid, SchemeConfig, uniform_grid, wrap
from .interpolation import (
    Interpolant,
    build_hermite,
    build_linear,
    build_spline,
    evaluate,
    interpolate_function,
)
from .problems import BurgersBenchmark, Flux, burgers_flux, exact_solution

__version__ = "0.1.0"

__all__ = [
    "BurgersBenchmark",
    "ErrorReport",
    "Flux",
    "Interpolant",
    "Method",
    "NodalState",
    "PeriodicGrid",
    "SchemeConfig",
    "build_hermite",
    "build_linear",
    "build_spline",
    "burgers_flux",
    "dt_max",
    "evaluate",
    "exact_solution",
    "hs_seminorm",
    "interpolate_function",
    "l2_norm",
    "observed_order",
    "rel_l2_error",
    "run",
    "solve_foot",
    "step",
    "truncation_probe",
    "uniform_grid",
    "weighted_norm",
    "wrap",
]
