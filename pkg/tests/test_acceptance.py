"""End-to-end acceptance checks on the Burgers benchmark.

Each test appends one PASS/FAIL line that is printed in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

import conftest
from oracles import foot_root
from fsl1d.analysis import observed_order, truncation_probe
from fsl1d.characteristics import dt_max, gradient_bound, solve_foot, step
from fsl1d.cli import main
from fsl1d.core import METHOD_NAMES, Method, SchemeConfig, uniform_grid
from fsl1d.experiments import ExperimentSpec, read_csv, run_experiment
from fsl1d.interpolation import build_from_state, sample
from fsl1d.problems import BurgersBenchmark, Flux, burgers_flux
from fsl1d.verify import TrigPolynomial, run_verify

pytestmark = pytest.mark.slow

NX_SWEEP = (20, 40, 80, 160, 320)

# reference relative L2 errors for the fig1 sweep (N_t = 1000)
FIG1_REFERENCE = {
    "linear": (8.285e-1, 6.635e-1, 4.929e-1, 3.203e-1, 1.574e-1),
    "spline3": (2.586e-2, 6.341e-3, 1.461e-3, 2.892e-4, 4.806e-5),
    "spline5": (1.101e-2, 2.421e-4, 2.654e-5, 1.886e-5, 1.852e-5),
    "hermite3": (2.566e-2, 6.268e-3, 1.448e-3, 2.874e-4, 4.787e-5),
    "hermite5": (4.139e-3, 1.245e-4, 2.257e-5, 1.863e-5, 1.851e-5),
}
FIG1_TOL = {"linear": 0.05, "spline3": 0.05, "hermite3": 0.05, "spline5": 0.10, "hermite5": 0.10}


def record(number, title, ok, detail):
    conftest.ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}")
    return ok


@pytest.fixture(scope="module")
def fig1_csv(tmp_path_factory):
    out = {}
    for threads in (1, 8):
        path = tmp_path_factory.mktemp("fig1") / f"threads{threads}.csv"
        start = time.perf_counter()
        code = main(["convergence", "--experiment", "fig1", "--threads", str(threads), "--out", str(path)])
        out[threads] = (code, path.read_bytes(), time.perf_counter() - start)
    return out


def test_1_fig1_reproduction(fig1_csv):
    code, raw, seconds = fig1_csv[1]
    rows = read_csv(raw.decode())
    worst = {}
    for name in METHOD_NAMES:
        got = [r["rel_l2_error"] for r in rows if r["method"] == name]
        assert [r["nx"] for r in rows if r["method"] == name] == list(NX_SWEEP)
        worst[name] = max(abs(g / ref - 1) for g, ref in zip(got, FIG1_REFERENCE[name]))
    ok = code == 0 and seconds <= 120 and all(worst[m] <= FIG1_TOL[m] for m in METHOD_NAMES)
    detail = ", ".join(f"{m} {100 * worst[m]:.2f}%" for m in METHOD_NAMES)
    assert record(1, "fig1 sweep errors", ok, f"max rel. deviation {detail}; {seconds:.1f} s")


def test_2_fig2_reproduction():
    rows = run_experiment(ExperimentSpec("fig2", threads=0))
    err = {(r["method"], r["nt"]): r["rel_l2_error"] for r in rows}
    anchor = err[("spline3", 320)]
    spread = max(
        max(err[(m, nt)] for m in METHOD_NAMES[1:]) / min(err[(m, nt)] for m in METHOD_NAMES[1:]) - 1
        for nt in NX_SWEEP
    )
    rising = err[("linear", 320)] > err[("linear", 40)]
    ok = abs(anchor / 5.792e-5 - 1) <= 0.05 and spread <= 0.01 and rising
    detail = (f"spline3 dt=1/320 {anchor:.4e}; high-order spread {100 * spread:.3f}%; "
              f"linear {err[('linear', 40)]:.3e} -> {err[('linear', 320)]:.3e}")
    assert record(2, "fig2 sweep errors", ok, detail)


def test_3_fig3_slopes():
    rows = run_experiment(ExperimentSpec("fig3", threads=0))
    target = {"linear": 1.0, "spline3": 2.0, "hermite3": 2.0, "spline5": 3.0, "hermite5": 3.0}
    slopes = {}
    for name in METHOD_NAMES:
        mine = [r for r in rows if r["method"] == name][-3:]
        slopes[name] = observed_order([r["h"] for r in mine], [r["rel_l2_error"] for r in mine])
    ok = all(abs(slopes[m] - target[m]) <= 0.3 for m in METHOD_NAMES)
    detail = ", ".join(f"{m} {slopes[m]:.3f}" for m in METHOD_NAMES)
    assert record(3, "fig3 sweep slopes", ok, detail)


def test_4_truncation_order():
    b = BurgersBenchmark()
    grid = uniform_grid(100)
    dts = (1e-2, 5e-3, 2.5e-3)
    start = time.perf_counter()
    taus = [truncation_probe(b, burgers_flux(), 0.5, dt, grid) for dt in dts]
    seconds = time.perf_counter() - start
    order = observed_order(dts, taus)
    ok = abs(order - 1.0) <= 0.2 and seconds <= 1.0
    assert record(4, "truncation order", ok, f"order {order:.4f}; {seconds:.3f} s")


def test_5_property_suite():
    report = run_verify()
    failed = [r.name for r in report.results if not r.passed]
    detail = f"{len(report.results) - len(failed)}/{len(report.results)} checks" + (
        f"; failed: {', '.join(failed)}" if failed else "")
    assert record(5, "property suite", report.passed, detail)


def _cubic_flux():
    return Flux(lambda u: u + u**3 / 3, lambda u: 1 + u**2, lambda u: 2 * u, lip_bound=10.0)


def _foot_gap(rng):
    method = Method.parse(METHOD_NAMES[rng.integers(len(METHOD_NAMES))])
    grid = uniform_grid(int(rng.choice([16, 32, 64])))
    fn = TrigPolynomial.random(rng)
    fn = TrigPolynomial(0.3 * fn.c0, 0.3 * fn.a, 0.3 * fn.b)
    flux = burgers_flux() if rng.random() < 0.5 else _cubic_flux()
    g = build_from_state(sample(grid, fn, method, fn.derivatives(method.n_derivs)))
    dt = rng.uniform(0.05, 0.9) * dt_max(flux.lip_bound, gradient_bound(g))
    delta = math.sqrt(10 ** rng.uniform(-5, -2) * dt)
    m = int(rng.integers(grid.cell_count))
    x = float(grid.nodes[m])
    guess = float(g.eval(x))
    got = solve_foot(x, g, flux, dt, delta, guess)
    return abs(got - foot_root(g, flux.f, x, dt, delta, guess, 0.5))


def _propagation_gap(rng, method):
    grid = uniform_grid(int(rng.choice([16, 32])))
    fn = TrigPolynomial.random(rng)
    fn = TrigPolynomial(0.2 * fn.c0, 0.2 * fn.a, 0.2 * fn.b)
    flux = burgers_flux() if rng.random() < 0.5 else _cubic_flux()
    state = sample(grid, fn, method, fn.derivatives(method.n_derivs))
    g = build_from_state(state)
    dt = min(1e-2, 0.5 * dt_max(flux.lip_bound, gradient_bound(g)))
    cfg = SchemeConfig(nu=1e-3, dt=dt, t_final=1.0, interpolation=method)
    new, _ = step(state, flux, cfg)
    shift = math.sqrt(2) * cfg.delta
    eps = 1e-6

    def slope_at(x, guess):
        u = foot_root(g, flux.f, x, dt, cfg.delta, guess, 0.1)
        foot = x - flux.f(u) * dt
        a = 0.5 * (g.eval(foot - shift, 1) + g.eval(foot + shift, 1))
        return a / (1 + dt * flux.f_prime(u) * a)

    worst = 0.0
    for m in rng.choice(grid.cell_count, size=4, replace=False):
        x, u = float(grid.nodes[m]), float(new.values[m])
        up = foot_root(g, flux.f, x + eps, dt, cfg.delta, u, 0.1)
        um = foot_root(g, flux.f, x - eps, dt, cfg.delta, u, 0.1)
        d1 = (up - um) / (2 * eps)
        worst = max(worst, abs(d1 - new.derivs[0, m]) / max(1.0, abs(d1)))
        if method.s == 3:
            d2 = (slope_at(x + eps, u) - slope_at(x - eps, u)) / (2 * eps)
            worst = max(worst, abs(d2 - new.derivs[1, m]) / max(1.0, abs(d2)))
    return worst


def test_6_oracle_equivalence():
    rng = np.random.default_rng(2024)
    foot = max(_foot_gap(rng) for _ in range(1000))
    prop = max(_propagation_gap(rng, Method.parse(name)) for name in ("hermite3", "hermite5") for _ in range(10))
    ok = foot <= 1e-12 and prop <= 1e-6
    detail = f"foot solve vs bisection {foot:.2e} over 1000 instances; derivative propagation vs FD {prop:.2e}"
    assert record(6, "oracle equivalence", ok, detail)


def test_7_thread_determinism(fig1_csv):
    (c1, a, _), (c8, b, _) = fig1_csv[1], fig1_csv[8]
    ok = c1 == c8 == 0 and a == b
    assert record(7, "determinism", ok, f"threads 1 vs 8 CSV byte-identical: {a == b} ({len(a)} bytes)")
