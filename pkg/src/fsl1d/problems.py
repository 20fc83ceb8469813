"""Fluxes and the viscous Burgers benchmark with a closed-form solution."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .interpolation import OrderOutOfRangeError


@dataclass(frozen=True)
class Flux:
    """Flux ``f`` with its first two derivatives.

    ``lip_bound`` bounds ``|f'|`` over the range of values the solution takes.
    """

    f: Callable
    f_prime: Callable
    f_second: Callable
    lip_bound: float

    def __post_init__(self):
        if not self.lip_bound >= 0:
            raise ValueError("lip_bound must be non-negative")


def burgers_flux() -> Flux:
    return Flux(
        f=lambda u: u,
        f_prime=lambda u: np.ones_like(u) if np.ndim(u) else 1.0,
        f_second=lambda u: np.zeros_like(u) if np.ndim(u) else 0.0,
        lip_bound=1.0,
    )


def zero_flux() -> Flux:
    """``f = 0``: pure diffusion (or pure re-interpolation when ``nu -> 0``)."""
    return Flux(
        f=lambda u: np.zeros_like(u) if np.ndim(u) else 0.0,
        f_prime=lambda u: np.zeros_like(u) if np.ndim(u) else 0.0,
        f_second=lambda u: np.zeros_like(u) if np.ndim(u) else 0.0,
        lip_bound=0.0,
    )


@dataclass(frozen=True)
class BurgersBenchmark:
    """Periodic viscous Burgers problem

        u(x, t) = 4 nu A pi e(t) sin(2 pi x) / (1 + A e(t) cos(2 pi x)),
        e(t) = exp(-4 pi^2 nu t).
    """

    A: float = 0.9
    nu: float = 1e-3
    t_final: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.A < 1.0:
            raise ValueError("A must lie in (0, 1)")
        if not self.nu > 0.0:
            raise ValueError("nu must be positive")
        if not self.t_final > 0.0:
            raise ValueError("t_final must be positive")

    def exact(self, x, t, k: int = 0):
        return exact_solution(self, x, t, k)

    def initial(self, x, k: int = 0):
        return exact_solution(self, x, 0.0, k)

    def initial_derivatives(self, count: int) -> list[Callable]:
        """Callables for ``d^j/dx^j u_0``, ``j = 1..count``."""
        return [lambda x, j=j: self.initial(x, j) for j in range(1, count + 1)]

    def at(self, t: float) -> Callable:
        """``x -> u(x, t)`` with an optional derivative order, for norm routines."""
        return lambda x, k=0: exact_solution(self, x, t, k)


def exact_solution(b: BurgersBenchmark, x, t, k: int = 0):
    """``k``-th spatial derivative (``k <= 2``) of the benchmark solution."""
    if k not in (0, 1, 2):
        raise OrderOutOfRangeError(f"exact derivatives available for k <= 2, got {k}")
    if np.any(np.asarray(t) < 0):
        raise ValueError("t must be non-negative")
    decay = np.exp(-4.0 * math.pi**2 * b.nu * np.asarray(t, dtype=float))
    a = 4.0 * b.nu * b.A * math.pi * decay
    c = b.A * decay
    theta = 2.0 * math.pi * np.asarray(x, dtype=float)
    sin, cos = np.sin(theta), np.cos(theta)
    den = 1.0 + c * cos
    # derivatives taken in theta, then scaled by (2 pi)^k
    if k == 0:
        out = a * sin / den
    elif k == 1:
        out = 2.0 * math.pi * a * (cos + c) / den**2
    else:
        out = (2.0 * math.pi) ** 2 * a * sin * (2.0 * c * (cos + c) - den) / den**3
    return float(out) if np.ndim(out) == 0 else out
