import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from jacobi_linstat.quadrature import gauss_jacobi
from jacobi_linstat.specfun import (BESSEL_SEAM, SpecialFunctionError, bessel_j,
                                    bessel_j_derivative, bessel_j_integral, jacobi_norm,
                                    jacobi_p, loggamma, sine_integral)
from jacobi_linstat import specfun

exponent = st.floats(-0.95, 6.0)


# ---------------------------------------------------------------- Jacobi

def test_jacobi_degree_zero():
    assert jacobi_p(0, 1.5, 0.5, 0.3) == 1.0


def test_jacobi_degree_one_closed_form():
    assert jacobi_p(1, 1.0, 0.0, 0.0) == pytest.approx(0.5, abs=1e-15)


def test_jacobi_legendre_degree_five():
    x = 0.7
    expected = (63 * x ** 5 - 70 * x ** 3 + 15 * x) / 8
    assert jacobi_p(5, 0.0, 0.0, x) == pytest.approx(expected, rel=1e-14)


@given(n=st.integers(0, 25), a=exponent, b=exponent, x=st.floats(-1, 1))
def test_jacobi_matches_scipy(n, a, b, x):
    ref = special.eval_jacobi(n, a, b, x)
    assert jacobi_p(n, a, b, x) == pytest.approx(ref, rel=1e-9, abs=1e-9 * max(1.0, abs(ref)))


def test_jacobi_norm_examples():
    assert jacobi_norm(0, 0.0, 0.0) == pytest.approx(2.0, rel=1e-14)
    assert jacobi_norm(0, 1.0, 1.0) == pytest.approx(8.0 / 6.0, rel=1e-14)
    rule = gauss_jacobi(20, 0.5, 1.5)
    direct = rule.integrate(jacobi_p(3, 0.5, 1.5, rule.nodes) ** 2)
    assert jacobi_norm(3, 0.5, 1.5) == pytest.approx(direct, rel=1e-12)


def test_jacobi_norm_domain():
    with pytest.raises(SpecialFunctionError):
        jacobi_norm(2, -1.0, 0.0)


@given(a=exponent, b=exponent)
def test_orthonormality(a, b):
    rule = gauss_jacobi(30, a, b)
    P = np.array([jacobi_p(j, a, b, rule.nodes) / math.sqrt(jacobi_norm(j, a, b))
                  for j in range(13)])
    gram = (P * rule.weights) @ P.T
    assert np.max(np.abs(gram - np.eye(13))) < 1e-9


@given(a=exponent, b=exponent)
def test_three_term_recurrence(a, b):
    x = np.linspace(-1, 1, 21)
    for n in range(1, 30):
        c = 2 * n + a + b
        lhs = 2 * (n + 1) * (n + a + b + 1) * c * jacobi_p(n + 1, a, b, x)
        rhs = ((c + 1) * (c * (c + 2) * x + a * a - b * b) * jacobi_p(n, a, b, x)
               - 2 * (n + a) * (n + b) * (c + 2) * jacobi_p(n - 1, a, b, x))
        scale = np.max(np.abs(lhs)) + 1e-300
        assert np.max(np.abs(lhs - rhs)) <= 1e-10 * scale


@pytest.mark.parametrize("a,b", [(0.0, 0.0), (1.0, 0.5), (-0.5, 2.5)])
def test_derivative_identity(a, b):
    # d/dx P_n^{(a,b)} = (n + a + b + 1)/2 * P_{n-1}^{(a+1,b+1)}
    x = np.linspace(-0.95, 0.95, 17)
    h = 1e-5
    for n in range(1, 12):
        fd = (-jacobi_p(n, a, b, x + 2 * h) + 8 * jacobi_p(n, a, b, x + h)
              - 8 * jacobi_p(n, a, b, x - h) + jacobi_p(n, a, b, x - 2 * h)) / (12 * h)
        exact = 0.5 * (n + a + b + 1) * jacobi_p(n - 1, a + 1, b + 1, x)
        assert np.max(np.abs(fd - exact)) <= 1e-8 * max(1.0, np.max(np.abs(exact)))


def test_jacobi_refuses_large_work():
    with pytest.raises(SpecialFunctionError):
        jacobi_p(500, 30.0, 0.0, 0.1)


def test_jacobi_rejects_nonfinite():
    with pytest.raises(SpecialFunctionError):
        jacobi_p(3, 0.0, 0.0, float("nan"))


@given(x=st.floats(0.01, 9000.0))
def test_loggamma_matches_scipy(x):
    assert float(loggamma(x)) == pytest.approx(special.gammaln(x), rel=1e-13, abs=1e-13)


def test_loggamma_reflection():
    for x in (-0.5, -1.5, -2.25):
        assert float(loggamma(x)) == pytest.approx(special.gammaln(x), rel=1e-12)


# ---------------------------------------------------------------- Bessel

def test_bessel_examples():
    assert bessel_j(0.0, 0.0) == 1.0
    assert bessel_j(0.5, 2.0) == pytest.approx(math.sqrt(2 / (math.pi * 2)) * math.sin(2),
                                               rel=1e-13)
    with mp.workdps(40):
        ref = float(mp.besselj(1.3, 10))
    assert bessel_j(1.3, 10.0) == pytest.approx(ref, rel=1e-10)


@given(nu=st.floats(-1.95, 12.0), x=st.floats(1e-3, 200.0))
def test_bessel_matches_scipy(nu, x):
    ref = special.jv(nu, x)
    got = bessel_j(nu, x)
    env = max(abs(ref), math.sqrt(2 / (math.pi * max(x, 1.0))) * 1e-3)
    assert abs(got - ref) <= 1e-10 * env + 1e-14


@given(nu=st.floats(-0.9, 8.0), x=st.floats(0.5, 100.0))
def test_bessel_recurrence(nu, x):
    lhs = bessel_j(nu - 1, x) + bessel_j(nu + 1, x)
    rhs = 2 * nu / x * bessel_j(nu, x)
    scale = max(abs(lhs), abs(bessel_j(nu - 1, x)), abs(bessel_j(nu + 1, x)))
    assert abs(lhs - rhs) <= 1e-9 * scale + 1e-14


@pytest.mark.parametrize("nu", [-0.5, 0.0, 1.0, 2.5, 7.0])
def test_bessel_seam_branches_agree(nu):
    x = BESSEL_SEAM + np.array([-1e-9, 0.0, 1e-9])
    series, large = specfun._bessel_series(nu, x), specfun._bessel_large(nu, x)
    assert np.max(np.abs(series - large)) < 2e-12
    assert np.allclose(bessel_j(nu, x), special.jv(nu, x), rtol=0, atol=1e-12)


def test_bessel_derivative_identity():
    x = np.linspace(0.5, 30, 40)
    assert np.allclose(bessel_j_derivative(1.5, x), special.jvp(1.5, x), atol=1e-12)


def test_bessel_domain():
    with pytest.raises(SpecialFunctionError):
        bessel_j(0.0, -1.0)
    with pytest.raises(SpecialFunctionError):
        bessel_j(-2.0, 1.0)


def test_bessel_integral_examples():
    assert bessel_j_integral(0.0, 0.0) == 0.0
    x = np.linspace(0, 5, 100001)
    simpson = integrate.simpson(special.jv(1, x), x=x)
    assert bessel_j_integral(1.0, 5.0) == pytest.approx(simpson, abs=1e-12)
    # tends to 1 with an O(x^{-1/2}) tail
    assert abs(bessel_j_integral(0.0, 400.0) - 1.0) < 2.0 / math.sqrt(400.0)


@given(nu=st.floats(-0.9, 6.0), x=st.floats(0.0, 150.0))
def test_bessel_integral_matches_scipy(nu, x):
    if x == 0.0:
        assert bessel_j_integral(nu, x) == 0.0
        return
    # J_nu(t) t^-nu is smooth at 0; the t^nu factor goes into the quad weight
    lead = 1.0 / (2.0 ** nu * math.gamma(nu + 1.0))
    smooth = lambda t: special.jv(nu, t) * t ** -nu if t > 1e-8 else lead
    ref = integrate.quad(smooth, 0, x, weight="alg", wvar=(nu, 0.0), limit=400,
                         epsabs=1e-13)[0]
    assert bessel_j_integral(nu, x) == pytest.approx(ref, abs=1e-9)


# ---------------------------------------------------------------- Si

def test_si_examples():
    assert sine_integral(0.0) == 0.0
    assert sine_integral(-3.0) == -sine_integral(3.0)
    quad = integrate.quad(lambda t: np.sinc(t / math.pi), 0, 50, limit=400,
                          epsabs=1e-14)[0]
    assert sine_integral(50.0) == pytest.approx(quad, abs=1e-12)
    # two-term expansion plus the next three asymptotic terms; remainder O(x^-6)
    two = math.pi / 2 - math.cos(50) / 50 - math.sin(50) / 50 ** 2
    nxt = (2 * math.cos(50) / 50 ** 3 + 6 * math.sin(50) / 50 ** 4
           - 24 * math.cos(50) / 50 ** 5)
    assert abs(sine_integral(50.0) - (two + nxt)) < 1e-8


@given(x=st.floats(-500.0, 500.0))
def test_si_matches_scipy(x):
    assert abs(sine_integral(x) - special.sici(x)[0]) < 1e-10


@given(x=st.floats(-500.0, 500.0))
def test_si_odd(x):
    assert sine_integral(-x) == -sine_integral(x)


def test_si_monotone_on_zero_pi():
    x = np.linspace(0, math.pi, 2001)
    assert np.all(np.diff(sine_integral(x)) > 0)


def test_si_asymptotic_tail():
    for x in (30.0, 100.0, 1000.0):
        two = math.pi / 2 - math.cos(x) / x - math.sin(x) / x ** 2
        assert abs(sine_integral(x) - two) <= 2.5 / x ** 3


def test_pure_functions_are_vectorised():
    x = np.array([0.5, 3.0, 20.0])
    assert np.allclose(bessel_j(0.3, x), [bessel_j(0.3, v) for v in x], rtol=0, atol=0)
    assert specfun.sine_integral(x).shape == (3,)
