import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from jacobi_linstat.kernels import sine_kernel
from jacobi_linstat.quadrature import (IntegralEstimate, QuadratureError, composite_rule,
                                       gauss_jacobi, gauss_legendre, graded_rule,
                                       halfline_rule, integrate_double, integrate_halfline,
                                       wynn_epsilon)
from jacobi_linstat.specfun import bessel_j, bessel_j_integral


# ---------------------------------------------------------------- Gauss-Legendre

def test_gauss_legendre_midpoint():
    r = gauss_legendre(1)
    assert r.nodes.tolist() == [0.0]
    assert r.weights.tolist() == [2.0]


def test_gauss_legendre_order5_monomial():
    r = gauss_legendre(5)
    assert r.integrate(r.nodes ** 8) == pytest.approx(2 / 9, abs=1e-13)


def test_gauss_legendre_exponential():
    r = gauss_legendre(64)
    assert r.integrate(np.exp(r.nodes)) == pytest.approx(math.e - 1 / math.e, abs=1e-14)


@pytest.mark.parametrize("n", [1, 2, 7, 30, 200, 2048])
def test_gauss_legendre_rule_structure(n):
    r = gauss_legendre(n)
    assert r.order == n == len(r.weights)
    assert np.all(r.weights > 0)
    assert np.all(np.diff(r.nodes) > 0)
    assert np.all(np.abs(r.nodes) < 1)
    assert r.weights.sum() == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("n", range(1, 31))
def test_gauss_legendre_exact_to_degree(n):
    r = gauss_legendre(n)
    for k in range(2 * n):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert abs(r.integrate(r.nodes ** k) - exact) < 1e-12


def test_gauss_legendre_matches_numpy():
    x, w = np.polynomial.legendre.leggauss(40)
    r = gauss_legendre(40)
    assert np.allclose(r.nodes, x, atol=1e-14)
    assert np.allclose(r.weights, w, atol=1e-14)


@pytest.mark.parametrize("n", [0, 2049, 2.5])
def test_gauss_legendre_order_range(n):
    with pytest.raises(QuadratureError):
        gauss_legendre(n)


def test_mapped_rule():
    r = gauss_legendre(8).mapped(2.0, 5.0)
    assert r.domain == (2.0, 5.0)
    assert r.integrate(r.nodes ** 3) == pytest.approx((5 ** 4 - 2 ** 4) / 4, rel=1e-14)


# ---------------------------------------------------------------- Gauss-Jacobi

def test_gauss_jacobi_legendre_case():
    gj, gl = gauss_jacobi(3, 0.0, 0.0), gauss_legendre(3)
    assert np.allclose(gj.nodes, gl.nodes, atol=1e-12)
    assert np.allclose(gj.weights, gl.weights, atol=1e-12)


def test_gauss_jacobi_mass_a1_b1():
    assert gauss_jacobi(8, 1.0, 1.0).weights.sum() == pytest.approx(4 / 3, abs=1e-10)


def test_gauss_jacobi_second_moment():
    r = gauss_jacobi(16, 0.5, 0.0)
    ref = integrate.quad(lambda x: x * x, -1, 1, weight="alg", wvar=(0.0, 0.5),
                         epsabs=1e-15)[0]
    assert r.integrate(r.nodes ** 2) == pytest.approx(ref, abs=1e-13)


@given(a=st.floats(-0.95, 5.0), b=st.floats(-0.95, 5.0), n=st.integers(1, 60))
def test_gauss_jacobi_total_mass(a, b, n):
    r = gauss_jacobi(n, a, b)
    mass = 2 ** (a + b + 1) * math.exp(math.lgamma(a + 1) + math.lgamma(b + 1)
                                       - math.lgamma(a + b + 2))
    assert r.weights.sum() == pytest.approx(mass, rel=1e-10)
    assert np.all(r.weights > 0)
    assert np.all(np.diff(r.nodes) > 0)


@given(a=st.floats(-0.9, 4.0), b=st.floats(-0.9, 4.0), n=st.integers(2, 20))
def test_gauss_jacobi_matches_scipy(a, b, n):
    x, w = special.roots_jacobi(n, a, b)
    r = gauss_jacobi(n, a, b)
    assert np.allclose(r.nodes, x, atol=1e-12)
    assert np.allclose(r.weights, w, rtol=1e-9)


@pytest.mark.parametrize("a,b,n", [(-1.0, 0.0, 4), (0.0, -1.5, 4), (0.0, 0.0, 0),
                                   (0.0, 0.0, 1025)])
def test_gauss_jacobi_rejects(a, b, n):
    with pytest.raises(QuadratureError):
        gauss_jacobi(n, a, b)


# ---------------------------------------------------------------- composite rules

def test_composite_rule_polynomial():
    r = composite_rule([0.0, 0.3, 1.0, 2.5], 6)
    assert r.integrate(r.nodes ** 5) == pytest.approx(2.5 ** 6 / 6, rel=1e-14)
    with pytest.raises(QuadratureError):
        composite_rule([0.0, 0.0, 1.0])


@pytest.mark.parametrize("e", [-0.5, 0.5, 1.7])
def test_graded_rule_endpoint_power(e):
    # singular end placed at 0 so the distance to it is exact in floating point
    ref = integrate.quad(np.cos, 0, 2, weight="alg", wvar=(e, 0.0), epsabs=1e-14)[0]
    lo = graded_rule(0.0, 2.0, panels=4, lo_exponent=e)
    hi = graded_rule(-2.0, 0.0, panels=4, hi_exponent=e)
    assert lo.integrate(lo.nodes ** e * np.cos(lo.nodes)) == pytest.approx(ref, abs=1e-12)
    assert hi.integrate((-hi.nodes) ** e * np.cos(hi.nodes)) == pytest.approx(ref, abs=1e-12)
    assert np.all(np.diff(lo.nodes) > 0) and np.all(np.diff(hi.nodes) > 0)


def test_halfline_rule_gamma():
    r = halfline_rule(20)
    for k in range(1, 7):
        vals = r.nodes ** (k - 1) * np.exp(-r.nodes)
        assert r.integrate(vals) == pytest.approx(math.gamma(k), rel=1e-9)


# ---------------------------------------------------------------- half line

def test_halfline_unit_exponential():
    est = integrate_halfline(lambda x: np.exp(-x), tol=1e-10)
    assert isinstance(est, IntegralEstimate)
    assert est.converged
    assert est.value == pytest.approx(1.0, abs=1e-10)


def test_halfline_x_exponential():
    assert integrate_halfline(lambda x: x * np.exp(-x)).value == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("k", range(1, 7))
def test_halfline_reproduces_gamma(k):
    est = integrate_halfline(lambda x: x ** (k - 1) * np.exp(-x), tol=1e-12)
    assert est.value == pytest.approx(math.gamma(k), rel=1e-9)
    assert est.error_estimate >= 0


def test_halfline_origin_singularity():
    est = integrate_halfline(lambda x: x ** -0.5 * np.exp(-x), origin_exponent=-0.5)
    assert est.value == pytest.approx(math.sqrt(math.pi), abs=1e-10)


def test_halfline_oscillatory_bessel():
    est = integrate_halfline(lambda x: bessel_j(0.0, np.sqrt(x)) / np.sqrt(x),
                             decay_hint="oscillatory", tol=1e-8, origin_exponent=-0.5)
    combined = est.error_estimate + 1e-8
    assert est.value == pytest.approx(2.0, abs=combined)
    # same value through the Bessel antiderivative at a large cutoff
    assert est.value == pytest.approx(2 * bessel_j_integral(0.0, 1e6), abs=2e-3)


def test_halfline_bad_arguments():
    with pytest.raises(QuadratureError):
        integrate_halfline(np.exp, tol=0.0)
    with pytest.raises(QuadratureError):
        integrate_halfline(np.exp, decay_hint="slow")


def test_halfline_nonconvergence_flagged():
    # slowly decaying oscillation: the tail bound must show up in the estimate
    est = integrate_halfline(lambda x: np.cos(np.sqrt(x)) / (1 + x) ** 0.3,
                             decay_hint="oscillatory", tol=1e-14, x_max=100.0)
    assert not est.converged
    assert est.error_estimate >= 100.0 ** -0.25


def test_wynn_epsilon_alternating_series():
    k = np.arange(20)
    sums = np.cumsum((-1.0) ** k / (k + 1))
    est, err = wynn_epsilon(sums)
    assert est == pytest.approx(math.log(2), abs=1e-12)
    assert err < 1e-10


# ---------------------------------------------------------------- double integrals

def test_double_unit_square():
    est = integrate_double(lambda x, y: np.ones(np.broadcast(x, y).shape), ((0, 1), (0, 1)))
    assert est.value == pytest.approx(1.0, abs=1e-14)


def test_double_quarter_plane():
    est = integrate_double(lambda x, y: np.exp(-x - y), "quarter-plane", tol=1e-9)
    assert est.converged
    assert est.value == pytest.approx(1.0, abs=1e-9)


def test_double_sine_kernel_against_simpson():
    def f(x, y):
        return sine_kernel(x, y) ** 2 * np.exp(-x * x - y * y)

    est = integrate_double(f, ((-8, 8), (-8, 8)), tol=1e-9, order=64, max_order=1024)
    g = np.linspace(-8, 8, 1601)
    X, Y = np.meshgrid(g, g, indexing="ij")
    vals = (np.sinc((X - Y) / math.pi) / math.pi) ** 2 * np.exp(-X * X - Y * Y)
    simpson = integrate.simpson(integrate.simpson(vals, x=g, axis=1), x=g)
    assert est.value == pytest.approx(simpson, abs=1e-6)


def test_double_error_shrinks_with_order():
    f = lambda x, y: np.cos(3 * x) * np.exp(y) / (1 + x * x)
    exact = integrate.quad(lambda x: np.cos(3 * x) / (1 + x * x), -2, 2)[0] * (math.e - 1)
    errs = [abs(integrate_double(f, ((-2, 2), (0, 1)), tol=1e-30, order=n, max_order=n).value
                - exact) for n in (8, 16, 32)]
    assert errs[1] <= 2 * errs[0] and errs[2] <= 2 * errs[1] + 1e-15
