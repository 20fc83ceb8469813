import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsl1d.analysis import (
    GAUSS_LEGENDRE_7,
    ErrorReport,
    error_report,
    hs_seminorm,
    l2_norm,
    observed_order,
    quadrature_points,
    rel_l2_error,
    starred_norm,
    truncation_error,
    truncation_probe,
    weighted_norm,
)
from fsl1d.core import PeriodicGrid, uniform_grid
from fsl1d.interpolation import Interpolant, OrderOutOfRangeError, build_spline, interpolate_function
from fsl1d.problems import BurgersBenchmark, burgers_flux, exact_solution, zero_flux

TWO_PI = 2 * math.pi


def sine(x, k=0):
    return TWO_PI**k * np.sin(TWO_PI * np.asarray(x) + 0.5 * math.pi * k)


def test_rule_invariants():
    rule = GAUSS_LEGENDRE_7
    assert rule.nodes.size == 7
    assert abs(rule.weights.sum() - 2.0) <= 1e-15
    for k in range(14):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert abs(np.dot(rule.weights, rule.nodes**k) - exact) <= 1e-13
    ref_x, ref_w = np.polynomial.legendre.leggauss(7)
    np.testing.assert_allclose(rule.nodes, ref_x, atol=1e-15)
    np.testing.assert_allclose(rule.weights, ref_w, atol=1e-15)


@settings(max_examples=50)
@given(st.lists(st.floats(-5, 5), min_size=14, max_size=14))
def test_rule_exact_on_random_polynomials(coef):
    p = np.polynomial.Polynomial(coef)
    exact = p.integ()(1.0) - p.integ()(-1.0)
    assert GAUSS_LEGENDRE_7.integrate(p) == pytest.approx(exact, abs=1e-13 * (1 + np.sum(np.abs(coef))))


def test_l2_of_one():
    assert l2_norm(lambda x: np.ones_like(x), uniform_grid(7)) == pytest.approx(1.0, abs=1e-15)


def test_l2_of_sine():
    assert l2_norm(sine, uniform_grid(20)) == pytest.approx(1 / math.sqrt(2), abs=1e-12)


def test_l2_piecewise_degree_six_symbolic():
    """Per-cell exact integrals of a random piecewise sextic, including a nonuniform grid."""
    rng = np.random.default_rng(2)
    for grid in (uniform_grid(9), PeriodicGrid([0.05, 0.2, 0.41, 0.5, 0.77])):
        coeffs = rng.normal(size=(grid.cell_count, 7))
        ip = Interpolant(grid, coeffs, smoothness=-1)
        exact = 0.0
        for m in range(grid.cell_count):
            sq = np.polynomial.Polynomial(coeffs[m]) ** 2
            exact += sq.integ()(grid.widths[m])
        assert l2_norm(ip, grid) == pytest.approx(math.sqrt(exact), abs=1e-13)


def test_l2_homogeneity_and_triangle():
    rng = np.random.default_rng(4)
    g = uniform_grid(10)
    for _ in range(20):
        a = Interpolant(g, rng.normal(size=(10, 6)), -1)
        b = Interpolant(g, rng.normal(size=(10, 6)), -1)
        alpha = rng.normal() * 5
        assert l2_norm(lambda x: alpha * a(x), g) == pytest.approx(abs(alpha) * l2_norm(a, g), rel=1e-13)
        assert l2_norm(lambda x: a(x) + b(x), g) <= l2_norm(a, g) + l2_norm(b, g) + 1e-12


def test_quadrature_points_cover_wrap_cell():
    x, w = quadrature_points(PeriodicGrid([0.1, 0.4, 0.6, 0.8]))
    assert x.shape == (4, 7)
    assert np.all((x[-1] > 0.8) & (x[-1] < 1.1))
    assert w.sum() == pytest.approx(1.0)


def test_seminorm_examples():
    g = uniform_grid(20)
    assert hs_seminorm(lambda x, k=0: 0 * x + (2.0 if k == 0 else 0.0), 2, g) == 0.0
    assert hs_seminorm(sine, 2, g) == pytest.approx(TWO_PI**2 / math.sqrt(2), abs=1e-10)
    rng = np.random.default_rng(0)
    sp = build_spline(uniform_grid(12), rng.normal(size=12), 2)
    # s-th derivative of a cubic spline is piecewise linear; compare with exact cell integrals
    exact = sum(
        (np.polynomial.Polynomial(sp._table(2)[m]) ** 2).integ()(1 / 12) for m in range(12)
    )
    assert hs_seminorm(sp, 2, sp.grid) == pytest.approx(math.sqrt(exact), rel=1e-13)


def test_seminorm_needs_derivative():
    with pytest.raises(OrderOutOfRangeError):
        hs_seminorm(lambda x: x, 1, uniform_grid(8))


def test_weighted_norm_examples():
    g = uniform_grid(20)
    zero = lambda x, k=0: 0 * x
    assert weighted_norm(zero, 2, g, 1e-3) == 0.0
    const = lambda x, k=0: 0 * x + (-3.0 if k == 0 else 0.0)
    assert weighted_norm(const, 2, g, 1e-3) == pytest.approx(3.0)
    expected = math.sqrt(0.5 + (0.05**4 / 1e-3) * (TWO_PI**2 / math.sqrt(2)) ** 2)
    assert weighted_norm(sine, 2, g, 1e-3) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError):
        weighted_norm(sine, 2, g, 0.0)
    assert starred_norm(sine, 1, g) == pytest.approx(math.sqrt(0.5 + TWO_PI**2 / 2), rel=1e-12)


def test_rel_l2_error_examples():
    g = uniform_grid(1000)
    ip = interpolate_function(g, sine, "spline5")
    assert rel_l2_error(ip, sine) <= 1e-10
    zero = Interpolant(g, np.zeros((1000, 2)), 0)
    assert rel_l2_error(zero, sine) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ZeroDivisionError):
        rel_l2_error(ip, lambda x: 0 * x)


def test_error_report_consistency():
    b = BurgersBenchmark()
    g = uniform_grid(40)
    ip = interpolate_function(g, b.initial, "spline3")
    rep = error_report(ip, b.at(0.0), 2, 1e-3)
    assert rep.hs_seminorm_err is not None
    lhs = rep.weighted_err**2
    rhs = rep.abs_l2**2 + rep.h**4 / rep.dt * rep.hs_seminorm_err**2
    assert lhs == pytest.approx(rhs, rel=1e-12)
    # third derivatives of the benchmark are not provided
    rep3 = error_report(interpolate_function(g, b.initial, "spline5"), b.at(0.0), 3, 1e-3)
    assert rep3.hs_seminorm_err is None and rep3.weighted_err is None
    with pytest.raises(ValueError):
        ErrorReport(rel_l2=0.1, abs_l2=0.1, h=0.1, dt=0.1, s=2, hs_seminorm_err=1.0, weighted_err=5.0)
    with pytest.raises(ValueError):
        ErrorReport(rel_l2=-0.1, abs_l2=0.1, h=0.1, dt=0.1)


def test_truncation_zero_flux_collapse():
    b = BurgersBenchmark(nu=1e-12)
    g = uniform_grid(50)
    dt = 1e-2
    tau = truncation_probe(b, zero_flux(), 0.5, dt, g)
    du_dt = l2_norm(lambda x: (exact_solution(b, x, 0.5) - exact_solution(b, x, 0.5 - dt)) / dt, g)
    assert tau == pytest.approx(du_dt, rel=1e-6)


def test_truncation_first_order():
    b = BurgersBenchmark()
    g = uniform_grid(100)
    taus = [truncation_probe(b, burgers_flux(), 0.5, dt, g) for dt in (1e-2, 5e-3, 2.5e-3)]
    assert math.log2(taus[0] / taus[1]) == pytest.approx(1.0, abs=0.2)
    assert math.log(taus[0] / taus[2]) / math.log(4) == pytest.approx(1.0, abs=0.2)


def test_truncation_domain():
    with pytest.raises(ValueError):
        truncation_error(BurgersBenchmark(), burgers_flux(), 1e-3, 1e-2)


def test_observed_order_examples():
    assert observed_order([0.1, 0.05], [1e-2, 2.5e-3]) == pytest.approx(2.0, abs=1e-12)
    hs = [1 / 20, 1 / 40, 1 / 80, 1 / 160, 1 / 320]
    errs = [2.204e-2, 3.616e-3, 8.060e-4, 1.950e-4, 4.835e-5]
    assert observed_order(hs, errs) == pytest.approx(2.2, abs=0.05)
    assert observed_order(hs[2:], errs[2:]) == pytest.approx(2.03, abs=0.01)
    assert observed_order([0.1, 0.05, 0.025], [3.0, 3.0, 3.0]) == 0.0


@pytest.mark.parametrize(
    "hs, errs",
    [([0.1], [1.0]), ([0.1, 0.2], [1.0, 2.0]), ([0.1, 0.05], [0.0, 1.0]), ([0.1, -0.05], [1.0, 1.0])],
)
def test_observed_order_errors(hs, errs):
    with pytest.raises(ValueError):
        observed_order(hs, errs)
