"""Self-checks of the interpolation operators and the scheme's step map.

Each ``check_*`` function returns a :class:`CheckResult`; :func:`run_verify`
runs them all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .analysis import GAUSS_LEGENDRE_7, hs_seminorm, l2_norm, observed_order
from .characteristics import characteristic_map_slope, dt_max, gradient_bound, solve_feet, step
from .core import Method, NodalState, SchemeConfig, uniform_grid
from .interpolation import Interpolant, build_from_state, interpolate_function, sample
from .problems import BurgersBenchmark, Flux, burgers_flux


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


@dataclass
class VerifyReport:
    results: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def summary(self) -> str:
        lines = [r.line() for r in self.results]
        n_ok = sum(r.passed for r in self.results)
        lines.append(f"{n_ok}/{len(self.results)} checks passed")
        return "\n".join(lines)


class TrigPolynomial:
    """``c0 + sum_j a_j cos(2 pi j x) + b_j sin(2 pi j x)`` with exact derivatives."""

    def __init__(self, c0, a, b):
        self.c0 = float(c0)
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)

    @classmethod
    def random(cls, rng: np.random.Generator, modes: int = 3) -> "TrigPolynomial":
        decay = 1.0 / np.arange(1, modes + 1) ** 2
        return cls(rng.normal(), rng.normal(size=modes) * decay, rng.normal(size=modes) * decay)

    def __call__(self, x, k: int = 0):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, self.c0 if k == 0 else 0.0)
        for j, (aj, bj) in enumerate(zip(self.a, self.b), start=1):
            w = 2.0 * math.pi * j
            theta = w * x + 0.5 * math.pi * k  # d^k/dx^k shifts the phase by k pi/2
            out += w**k * (aj * np.cos(theta) + bj * np.sin(theta))
        return out

    def derivatives(self, count: int) -> list[Callable]:
        return [lambda x, k=k: self(x, k) for k in range(1, count + 1)]


def _sine(x, k: int = 0):
    w = 2.0 * math.pi
    return w**k * np.sin(w * np.asarray(x, dtype=float) + 0.5 * math.pi * k)


def _interp(grid, fn, method: Method) -> Interpolant:
    return interpolate_function(grid, fn, method, [lambda x, k=k: fn(x, k) for k in range(1, method.s)])


HIGH_ORDER = [Method("spline", 2), Method("spline", 3), Method("hermite", 2), Method("hermite", 3)]
ALL_METHODS = [Method("linear", 1), *HIGH_ORDER]


def check_quadrature(tol: float = 1e-13) -> CheckResult:
    rule = GAUSS_LEGENDRE_7
    worst = 0.0
    for k in range(14):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        worst = max(worst, abs(float(np.dot(rule.weights, rule.nodes**k)) - exact))
    worst = max(worst, abs(rule.weights.sum() - 2.0))
    return CheckResult("gauss-legendre-7 exactness (degree <= 13)", worst <= tol, f"max error {worst:.2e}")


def integral_relation_defect(method: Method, n: int, v: TrigPolynomial, w: TrigPolynomial) -> float:
    """Relative defect of ``|e - I w|_s^2 = |e|_s^2 + |I w|_s^2`` with ``e = v - I v``."""
    s = method.s
    grid = uniform_grid(n)
    iv = _interp(grid, v, method)
    iw = _interp(grid, w, method)
    fine = uniform_grid(8 * n)

    def err(x, k=0):
        return v(x, k) - iv.eval(x, k)

    lhs = hs_seminorm(lambda x, k=0: err(x, k) - iw.eval(x, k), s, fine) ** 2
    rhs = hs_seminorm(err, s, fine) ** 2 + hs_seminorm(iw, s, fine) ** 2
    return abs(lhs - rhs) / rhs


def check_integral_relation(trials: int = 100, seed: int = 0, tol: float = 1e-8) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []
    for method in HIGH_ORDER:
        for n in (8, 16, 32):
            worst = max(
                integral_relation_defect(method, n, TrigPolynomial.random(rng), TrigPolynomial.random(rng))
                for _ in range(trials)
            )
            out.append(CheckResult(
                f"integral relation {method} n={n}", worst <= tol,
                f"max relative defect {worst:.2e} over {trials} trials",
            ))
    return out


def interpolation_orders(method: Method, sizes=(20, 40, 80, 160)) -> tuple[float, float]:
    """Observed L2 and H^s-seminorm orders of the interpolation error of sin(2 pi x)."""
    s = method.s
    l2, semi = [], []
    for n in sizes:
        grid = uniform_grid(n)
        ip = _interp(grid, _sine, method)

        def err(x, k=0):
            return _sine(x, k) - ip.eval(x, k)

        l2.append(l2_norm(err, grid))
        semi.append(hs_seminorm(err, s, grid))
    hs = [1.0 / n for n in sizes]
    return observed_order(hs, l2), observed_order(hs, semi)


def check_interpolation_orders(slack: float = 0.3) -> list[CheckResult]:
    out = []
    for method in HIGH_ORDER:
        s = method.s
        p_l2, p_semi = interpolation_orders(method)
        ok = p_l2 >= 2 * s - slack and p_semi >= s - slack
        out.append(CheckResult(
            f"interpolation orders {method}", ok,
            f"L2 {p_l2:.3f} (>= {2 * s - slack}), H^{s} {p_semi:.3f} (>= {s - slack})",
        ))
    return out


def _cubic_flux() -> Flux:
    return Flux(
        f=lambda u: u + u**3 / 3.0,
        f_prime=lambda u: 1.0 + u**2,
        f_second=lambda u: 2.0 * u,
        lip_bound=10.0,
    )


def check_constant_fixed_point(tol: float = 1e-12) -> CheckResult:
    grid = uniform_grid(16)
    worst = 0.0
    for method in ALL_METHODS:
        for flux in (burgers_flux(), _cubic_flux()):
            for c in (-1.3, 0.0, 0.25, 2.0):
                state = NodalState(grid, method, np.full(16, c), np.zeros((method.n_derivs, 16)))
                config = SchemeConfig(nu=1e-3, dt=1e-2, t_final=1.0, interpolation=method)
                new, _ = step(state, flux, config)
                worst = max(worst, float(np.max(np.abs(new.values - c))))
                if new.derivs.size:
                    worst = max(worst, float(np.max(np.abs(new.derivs))))
    return CheckResult("constant states are fixed points", worst <= tol, f"max deviation {worst:.2e}")


def check_characteristic_map(trials: int = 20, seed: int = 1) -> CheckResult:
    rng = np.random.default_rng(seed)
    bench = BurgersBenchmark()
    lo, hi = math.inf, -math.inf
    for i in range(trials):
        method = ALL_METHODS[i % len(ALL_METHODS)]
        grid = uniform_grid(int(rng.choice([16, 32, 64])))
        fn = bench.initial if i % 2 else TrigPolynomial.random(rng)
        flux = burgers_flux() if i % 3 else _cubic_flux()
        g = _interp(grid, fn, method)
        # the cubic flux's |f'| bound holds for |u| <= 3
        dt = 0.9 * dt_max(flux.lip_bound, gradient_bound(g))
        slope = characteristic_map_slope(g, flux, dt)
        lo, hi = min(lo, float(slope.min())), max(hi, float(slope.max()))
    ok = lo >= 0.5 and hi <= 1.5
    return CheckResult(
        "characteristic map slope in [1/2, 3/2] below the step bound", ok,
        f"sampled range [{lo:.4f}, {hi:.4f}]",
    )


def nodal_map(g: Interpolant, flux: Flux, dt: float, delta: float, x: np.ndarray, guess: np.ndarray):
    u, _, _, _ = solve_feet(x, g, flux, dt, delta, guess, 1e-14, 100)
    return u


def derivative_map(g: Interpolant, flux: Flux, dt: float, delta: float, x: np.ndarray, u: np.ndarray):
    """First derivative of the nodal map at virtual nodes ``x`` by the chain rule."""
    shift = math.sqrt(2.0) * delta
    foot = x - flux.f(u) * dt
    a = 0.5 * (g.eval(foot - shift, 1) + g.eval(foot + shift, 1))
    return a / (1.0 + dt * flux.f_prime(u) * a)


def derivative_propagation_defect(method: Method, state: NodalState, flux: Flux, config: SchemeConfig,
                                  eps: float = 1e-6) -> float:
    """Largest gap between propagated derivatives and central differences.

    Order one is compared with differences of the nodal map itself; order
    two with differences of the order-one map, both taken at virtual nodes
    ``x_m +- eps``.
    """
    g = build_from_state(state)
    new, _ = step(state, flux, config)
    x = state.grid.nodes
    dt, delta = config.dt, config.delta
    up = nodal_map(g, flux, dt, delta, x + eps, new.values)
    um = nodal_map(g, flux, dt, delta, x - eps, new.values)
    fd1 = (up - um) / (2 * eps)
    scale = max(1.0, float(np.max(np.abs(fd1))))
    worst = float(np.max(np.abs(fd1 - new.derivs[0]))) / scale
    if method.s == 3:
        fd2 = (derivative_map(g, flux, dt, delta, x + eps, up)
               - derivative_map(g, flux, dt, delta, x - eps, um)) / (2 * eps)
        scale = max(1.0, float(np.max(np.abs(fd2))))
        worst = max(worst, float(np.max(np.abs(fd2 - new.derivs[1]))) / scale)
    return worst


def check_derivative_propagation(trials: int = 10, seed: int = 2, tol: float = 1e-6) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for method in (Method("hermite", 2), Method("hermite", 3)):
        for i in range(trials):
            grid = uniform_grid(int(rng.choice([16, 32])))
            fn = TrigPolynomial.random(rng)
            fn = TrigPolynomial(fn.c0 * 0.2, fn.a * 0.2, fn.b * 0.2)
            flux = burgers_flux() if i % 2 else _cubic_flux()
            state = sample(grid, fn, method, fn.derivatives(method.n_derivs))
            dt = min(1e-2, 0.5 * dt_max(flux.lip_bound, gradient_bound(build_from_state(state))))
            config = SchemeConfig(nu=1e-3, dt=dt, t_final=1.0, interpolation=method)
            worst = max(worst, derivative_propagation_defect(method, state, flux, config))
    return CheckResult("Hermite derivative propagation vs finite differences", worst <= tol,
                       f"max scaled defect {worst:.2e}")


def run_verify(trials: int = 100, seed: int = 0) -> VerifyReport:
    report = VerifyReport()
    report.results.append(check_quadrature())
    report.results.extend(check_integral_relation(trials, seed))
    report.results.extend(check_interpolation_orders())
    report.results.append(check_constant_fixed_point())
    report.results.append(check_characteristic_map())
    report.results.append(check_derivative_propagation())
    return report
