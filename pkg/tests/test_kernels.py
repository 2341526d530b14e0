import io
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from jacobi_linstat.ensemble import EnsembleSpec, ParameterError
from jacobi_linstat.kernels import (EpsilonTransform, KernelError, PhiFamily, bessel_kernel,
                                    c_constant, epsilon_phi, finite_kernel, full_kernel,
                                    kernel_table, l_kernel, limit_kernel, phi,
                                    scaled_kernel, scaled_kernel_error, sine_kernel,
                                    write_kernel_csv)
from jacobi_linstat.quadrature import gauss_jacobi, gauss_legendre, graded_rule
from jacobi_linstat.specfun import bessel_j, bessel_j_integral, jacobi_norm, jacobi_p

coord = st.floats(-20.0, 20.0)
positive = st.floats(0.05, 60.0)
GRID = np.linspace(-0.97, 0.97, 41)


# ---------------------------------------------------------------- sine kernel

def test_sine_kernel_examples():
    assert sine_kernel(0.7, 0.7) == pytest.approx(1 / math.pi, abs=1e-15)
    assert sine_kernel(math.pi, 0.0) == pytest.approx(0.0, abs=1e-16)
    assert sine_kernel(1.0, 0.0) == pytest.approx(math.sin(1.0) / math.pi, abs=1e-15)


@given(x=coord, y=coord)
def test_sine_kernel_symmetric(x, y):
    assert sine_kernel(x, y) == sine_kernel(y, x)


def test_sine_kernel_near_diagonal_series():
    d = np.array([1e-7, 5e-7, 9.9e-7, 1.01e-6, 1e-5])
    exact = [float(mp.sin(v) / (mp.pi * v)) for v in d]
    assert np.allclose(sine_kernel(2.0 + d, 2.0), exact, rtol=0, atol=1e-15)


# ---------------------------------------------------------------- Bessel kernel

def test_bessel_kernel_diagonal_order_zero():
    t = 2.3
    r = math.sqrt(t)
    expected = (bessel_j(0.0, r) ** 2 + bessel_j(1.0, r) ** 2) / 4
    assert bessel_kernel(0.0, t, t) == pytest.approx(expected, abs=1e-15)


def test_bessel_kernel_continuity_at_diagonal():
    assert bessel_kernel(1.0, 2.0, 2.0000001) == pytest.approx(
        bessel_kernel(1.0, 2.0, 2.0), abs=1e-7)


@given(alpha=st.floats(-0.9, 5.0), x=positive, y=positive)
def test_bessel_kernel_symmetric(alpha, x, y):
    assert bessel_kernel(alpha, x, y) == pytest.approx(bessel_kernel(alpha, y, x), abs=1e-14)


def test_bessel_kernel_example_swap():
    assert bessel_kernel(0.5, 4.0, 1.0) == pytest.approx(bessel_kernel(0.5, 1.0, 4.0),
                                                         abs=1e-15)


def test_bessel_kernel_domain():
    with pytest.raises(KernelError):
        bessel_kernel(0.0, 0.0, 1.0)
    with pytest.raises(KernelError):
        bessel_kernel(-1.0, 1.0, 2.0)


# ---------------------------------------------------------------- L kernel

def _l_oracle(alpha, x, y):
    """L by mpmath: Gauss on [0, sqrt x], oscillatory quadrature beyond (z = t^2)."""
    mp.mp.dps = 20

    def kb(u, v):
        ru, rv = mp.sqrt(u), mp.sqrt(v)
        ju, jv = mp.besselj(alpha, ru), mp.besselj(alpha, rv)
        du, dv = mp.besselj(alpha, ru, 1), mp.besselj(alpha, rv, 1)
        return (ju * rv * dv - du * ru * jv) / (2 * (u - v))

    f = lambda t: 2 * mp.sqrt(y) * kb(y, t * t)
    head = mp.quad(f, [0, mp.sqrt(x)])
    tail = mp.quadosc(f, [mp.sqrt(x), mp.inf], omega=1)
    return float(head - tail)


def test_l_kernel_against_oscillatory_oracle():
    assert l_kernel(0.5, 1.0, 1.0) == pytest.approx(_l_oracle(0.5, 1.0, 1.0), abs=1e-8)


def test_l_kernel_small_x_is_minus_total():
    assert l_kernel(0.0, 1e-8, 1.0) == pytest.approx(_l_oracle(0.0, 1e-8, 1.0), abs=1e-8)


def test_l_kernel_additive_in_x():
    head = integrate.quad(lambda z: math.sqrt(3 / z) * bessel_kernel(1.0, 3.0, z), 2.0, 2.5,
                          epsabs=1e-13)[0]
    diff = l_kernel(1.0, 2.5, 3.0) - l_kernel(1.0, 2.0, 3.0)
    assert diff == pytest.approx(2 * head, abs=1e-9)


def test_l_kernel_broadcasts_and_reports_error():
    x = np.array([0.5, 1.0, 4.0])
    vals, errs = l_kernel(0.5, x[:, None], x[None, :], full_output=True)
    assert vals.shape == errs.shape == (3, 3)
    assert np.all(errs >= 0) and np.all(errs <= 1e-8)
    assert vals[1, 2] == pytest.approx(l_kernel(0.5, 1.0, 4.0), abs=1e-15)


# ---------------------------------------------------------------- phi families

def test_phi_unitary_constant():
    fam = PhiFamily("unitary", 0.0, 0.0, 3)
    assert phi(fam, 0, 0.2) == pytest.approx(1 / math.sqrt(2), abs=1e-15)


def test_phi_orthogonal_composition():
    fam = PhiFamily("orthogonal", -0.5, 0.5, 4)
    expected = jacobi_p(2, 0.5, 1.5, 0.0) / math.sqrt(jacobi_norm(2, 0.5, 1.5))
    assert phi(fam, 2, 0.0) == pytest.approx(expected, abs=1e-14)
    assert fam.poly_params == (0.5, 1.5)
    assert fam.exponents == (-0.25, 0.25)


@pytest.mark.parametrize("variant,a,b", [("unitary", 0.5, -0.5), ("symplectic", 1.0, 1.0),
                                         ("symplectic", 0.5, 2.5), ("orthogonal", -1.5, 1.0),
                                         ("orthogonal", 1.0, 1.0)])
def test_phi_orthonormal(variant, a, b):
    # phi_j phi_k (1-x^2) (or phi_j phi_k for unitary) is p_j p_k times the Jacobi weight
    fam = PhiFamily(variant, a, b, 12)
    p, q = fam.poly_params
    r = gauss_jacobi(40, p, q)
    vals = fam.poly(r.nodes)
    gram = (vals * r.weights) @ vals.T
    assert np.allclose(gram, np.eye(13), atol=1e-9)


def test_phi_endpoints():
    fam = PhiFamily("unitary", 1.0, 0.5, 3)
    assert phi(fam, 2, 1.0) == 0.0
    assert phi(fam, 2, -1.0) == 0.0
    sing = PhiFamily("unitary", -0.5, 0.0, 3)
    with pytest.raises(KernelError):
        phi(sing, 1, 1.0)
    with pytest.raises(KernelError):
        phi(fam, 4, 0.0)
    with pytest.raises(KernelError):
        phi(fam, 0, 1.5)


@pytest.mark.parametrize("variant,a", [("unitary", -1.0), ("symplectic", 0.0),
                                       ("orthogonal", -2.0)])
def test_phi_family_ranges(variant, a):
    with pytest.raises(KernelError):
        PhiFamily(variant, a, 1.0, 3)


# ---------------------------------------------------------------- eps operator

def test_eps_of_constant():
    et = EpsilonTransform(lambda t: np.ones_like(t))
    x = np.linspace(-1, 1, 21)
    assert np.allclose(et(x)[0], x, atol=1e-14)


@given(c=st.floats(-0.9, 0.9), k=st.integers(0, 6))
def test_eps_endpoint_values(c, k):
    et = EpsilonTransform(lambda t: np.cos(k * t + c) * (1 + t))
    total = integrate.quad(lambda t: np.cos(k * t + c) * (1 + t), -1, 1, epsabs=1e-14)[0]
    assert et(-1.0)[0] == pytest.approx(-total / 2, abs=1e-13)
    assert et(1.0)[0] == pytest.approx(total / 2, abs=1e-13)


@pytest.mark.parametrize("variant,a,b", [("unitary", 1.0, 1.0), ("unitary", -0.5, 0.5),
                                         ("symplectic", 1.0, 1.0), ("symplectic", 0.5, 1.5),
                                         ("orthogonal", 1.0, 1.0), ("orthogonal", -1.5, 2.0)])
def test_eps_inverts_differentiation(variant, a, b):
    fam = PhiFamily(variant, a, b, 17)
    assert fam.epsilon_transform.derivative_defect() < 1e-6


def test_eps_phi_against_direct_integration():
    fam = PhiFamily("symplectic", 1.5, 2.0, 9)
    f = lambda t: float(phi(fam, 7, t))
    for x in (-0.6, 0.1, 0.8):
        left = integrate.quad(f, -1, x, epsabs=1e-13, limit=200)[0]
        right = integrate.quad(f, x, 1, epsabs=1e-13, limit=200)[0]
        assert epsilon_phi(fam, 7, x) == pytest.approx(0.5 * (left - right), abs=1e-10)


@pytest.mark.parametrize("a,b", [(1.0, 1.0), (0.5, 2.5), (3.0, 0.7)])
def test_symplectic_eps_identity(a, b):
    fam = PhiFamily("symplectic", a, b, 14)
    vals, eps = fam.values(GRID), fam.epsilon(GRID)
    for j in range(1, 7):
        lhs = (1 - GRID ** 2) * vals[2 * j]
        rhs = (c_constant("symplectic", 2 * j - 1, a, b) * eps[2 * j - 1]
               - c_constant("symplectic", 2 * j, a, b) * eps[2 * j + 1])
        assert np.max(np.abs(lhs - rhs)) < 1e-7


@pytest.mark.parametrize("a,b", [(1.0, 1.0), (-1.5, 0.5), (2.0, -0.5)])
def test_orthogonal_eps_identity(a, b):
    fam = PhiFamily("orthogonal", a, b, 14)
    vals, eps = fam.values(GRID), fam.epsilon(GRID)
    for j in range(1, 7):
        lhs = (1 - GRID ** 2) * vals[2 * j - 1]
        rhs = (c_constant("orthogonal", 2 * j - 1, a, b) * eps[2 * j - 2]
               - c_constant("orthogonal", 2 * j, a, b) * eps[2 * j])
        assert np.max(np.abs(lhs - rhs)) < 1e-7


@pytest.mark.parametrize("a,b", [(1.0, 1.0), (2.5, 0.5)])
def test_symplectic_derivative_recurrence(a, b):
    fam = PhiFamily("symplectic", a, b, 12)
    h = 1e-5
    g = lambda x: (1 - x ** 2) * fam.values(x)
    d = (8 * (g(GRID + h) - g(GRID - h)) - (g(GRID + 2 * h) - g(GRID - 2 * h))) / (12 * h)
    vals = fam.values(GRID)
    for j in range(5):
        rhs = (c_constant("symplectic", 2 * j, a, b) * vals[2 * j]
               - c_constant("symplectic", 2 * j + 1, a, b) * vals[2 * j + 2])
        assert np.max(np.abs(d[2 * j + 1] - rhs)) < 1e-6


# ---------------------------------------------------------------- constants

def test_c_constant_examples():
    assert c_constant("orthogonal", 0, 1.0, 1.0) == 0.0
    assert c_constant("symplectic", 6, 1.0, 1.0) == pytest.approx(
        math.sqrt(7 ** 4 / (15 * 13)), abs=1e-14)
    with pytest.raises(KernelError):
        c_constant("unitary", 1, 1.0, 1.0)


@given(j=st.integers(2, 60), a=st.floats(0.1, 8.0), b=st.floats(0.1, 8.0))
def test_c_constant_formula(j, a, b):
    sym = (j + 1) * (j + a) * (j + b) * (j + a + b - 1) / ((2 * j + a + b + 1)
                                                          * (2 * j + a + b - 1))
    orth = j * (j + a + 1) * (j + b + 1) * (j + a + b + 2) / ((2 * j + a + b + 1)
                                                             * (2 * j + a + b + 3))
    assert c_constant("symplectic", j, a, b) == pytest.approx(math.sqrt(sym), rel=1e-14)
    assert c_constant("orthogonal", j, a, b) == pytest.approx(math.sqrt(orth), rel=1e-14)


# ---------------------------------------------------------------- finite kernels

def test_unitary_kernel_trace():
    spec = EnsembleSpec(2, 0.5, 1.5, 7)
    # K(x, x) is the Jacobi weight times a polynomial of degree 12
    gj = gauss_jacobi(20, 0.5, 1.5)
    fam = PhiFamily("unitary", 0.5, 1.5, 6)
    diag = finite_kernel(spec, gj.nodes, gj.nodes) / fam.weight(gj.nodes) ** 2
    assert gj.integrate(diag) == pytest.approx(7.0, abs=1e-12)


def test_christoffel_darboux_matches_sum():
    spec = EnsembleSpec(2, 0.0, 0.0, 8)
    assert finite_kernel(spec, 0.3, -0.4, method="cd") == pytest.approx(
        finite_kernel(spec, 0.3, -0.4), abs=1e-10)


@given(x=st.floats(-0.99, 0.99), y=st.floats(-0.99, 0.99), a=st.floats(-0.5, 3.0),
       N=st.integers(1, 20))
def test_christoffel_darboux_property(x, y, a, N):
    if abs(x - y) < 1e-3:
        return
    spec = EnsembleSpec(2, a, 1.0, N)
    assert finite_kernel(spec, x, y, method="cd") == pytest.approx(
        finite_kernel(spec, x, y), abs=1e-8)


@given(x=st.floats(-1.0, 1.0), y=st.floats(-1.0, 1.0), N=st.integers(1, 25))
def test_unitary_kernel_symmetric(x, y, N):
    spec = EnsembleSpec(2, 1.0, 0.5, N)
    assert finite_kernel(spec, x, y) == pytest.approx(finite_kernel(spec, y, x), abs=1e-12)


@pytest.mark.parametrize("N", [3, 10])
def test_unitary_kernel_projection(N):
    spec = EnsembleSpec(2, 1.0, 2.0, N)
    r = gauss_legendre(max(64, 4 * N))
    x, y = 0.37, -0.52
    kz = finite_kernel(spec, x, r.nodes) * finite_kernel(spec, r.nodes, y)
    assert r.integrate(kz) == pytest.approx(finite_kernel(spec, x, y), abs=1e-8)


def test_symplectic_full_kernel_decomposition():
    spec = EnsembleSpec(4, 1.0, 1.0, 3)
    fam = PhiFamily.for_spec(spec)
    x, y = 0.31, -0.62
    s = sum((1 - x ** 2) * phi(fam, j, x) * phi(fam, j, y) for j in range(7))
    rank_one = c_constant("symplectic", 6, 1.0, 1.0) * epsilon_phi(fam, 7, x) * phi(fam, 6, y)
    assert finite_kernel(spec, x, y) == pytest.approx(s, abs=1e-13)
    assert full_kernel(spec, x, y) == pytest.approx(0.5 * s + 0.5 * rank_one, abs=1e-13)


def test_orthogonal_full_kernel_decomposition():
    spec = EnsembleSpec(1, 0.5, 1.0, 4)
    fam = PhiFamily.for_spec(spec)
    x, y = -0.2, 0.75
    s = sum((1 - x ** 2) * phi(fam, j, x) * phi(fam, j, y) for j in range(4))
    rank_one = c_constant("orthogonal", 4, 0.5, 1.0) * epsilon_phi(fam, 4, x) * phi(fam, 3, y)
    assert full_kernel(spec, x, y) == pytest.approx(s + rank_one, abs=1e-13)


@pytest.mark.parametrize("beta,N", [(4, 4), (1, 6)])
def test_full_kernel_trace_is_N(beta, N):
    spec = EnsembleSpec(beta, 1.0, 1.0, N)
    r = graded_rule(-1.0, 1.0, panels=16, grade_lo=True, grade_hi=True)
    assert r.integrate(full_kernel(spec, r.nodes, r.nodes)) == pytest.approx(N, abs=1e-8)


def test_odd_orthogonal_rejected():
    with pytest.raises(ParameterError):
        EnsembleSpec(1, 1.0, 1.0, 5)


def test_cd_only_for_unitary():
    with pytest.raises(KernelError):
        finite_kernel(EnsembleSpec(4, 1.0, 1.0, 3), 0.1, 0.2, method="cd")


# ---------------------------------------------------------------- scaling limits

def test_unitary_bulk_scaled_error_decreases():
    grid = np.linspace(-3, 3, 13)
    e40 = scaled_kernel_error(EnsembleSpec(2, 1.0, 1.0, 40), grid)
    e80 = scaled_kernel_error(EnsembleSpec(2, 1.0, 1.0, 80), grid)
    assert e40 < 0.15
    assert e80 < e40


def test_unitary_edge_limit_diagonal():
    a = 0.7
    spec = EnsembleSpec(2, a, 1.0, 60, "edge")
    expected = (bessel_j(a, 1.0) ** 2 - bessel_j(a + 1, 1.0) * bessel_j(a - 1, 1.0)) / 4
    assert limit_kernel(spec, 1.0, 1.0) == pytest.approx(expected, abs=1e-15)
    e60 = abs(scaled_kernel(spec, 1.0, 1.0) - expected)
    e120 = abs(scaled_kernel(spec.with_(N=120), 1.0, 1.0) - expected)
    assert e60 < 5e-3 and e120 < 0.6 * e60


def test_symplectic_bulk_diagonal():
    spec = EnsembleSpec(4, 1.0, 1.0, 40)
    assert limit_kernel(spec, 0.4, 0.4) == pytest.approx(1 / math.pi, abs=1e-15)
    assert scaled_kernel(spec, 0.4, 0.4) == pytest.approx(1 / math.pi, abs=0.02)


@pytest.mark.parametrize("beta,a", [(2, 1.0), (4, 1.5), (1, 0.5)])
@pytest.mark.parametrize("regime", ["bulk", "edge"])
def test_scaled_error_shrinks(beta, a, regime):
    grid = np.linspace(-2, 2, 9) if regime == "bulk" else np.linspace(0.5, 8, 6)
    errs = [scaled_kernel_error(EnsembleSpec(beta, a, 1.0, N, regime), grid)
            for N in (10, 20, 40)]
    assert errs[2] < errs[1] < errs[0]


def test_symplectic_bulk_amplitudes():
    for N in (40, 80):
        fam = PhiFamily("symplectic", 1.0, 1.0, 2 * N + 1)
        s = np.linspace(-3, 3, 25) / (2 * N)
        assert np.max(np.abs(fam.values(s)[2 * N])) <= math.sqrt(2 / math.pi) + 0.2
        assert N * np.max(np.abs(fam.epsilon(s)[2 * N])) < 1.0


def test_symplectic_edge_amplitudes():
    # near x = 1, eps phi_j sees the whole interval: its limit is 1 - 2 J + (-1)^j
    a = 1.5
    x = np.array([0.5, 2.0, 5.0, 10.0])
    limit_phi = bessel_j(a - 1, np.sqrt(x)) / np.sqrt(x)
    limit_eps = 1 - 2 * bessel_j_integral(a - 1, np.sqrt(x)) + 1.0
    errs = []
    for N in (20, 40, 80):
        fam = PhiFamily("symplectic", a, 1.0, 2 * N + 1)
        t = 1 - x / (8 * N * N)
        p = fam.values(t)[2 * N] * (2 * N) ** -1.5
        e = fam.epsilon(t)[2 * N] * 2 ** 1.5 * math.sqrt(N)
        errs.append((np.max(np.abs(p - limit_phi)), np.max(np.abs(e - limit_eps))))
    errs = np.array(errs)
    assert np.all(np.diff(errs, axis=0) < 0)
    assert errs[-1, 0] < 5e-3 and errs[-1, 1] < 2e-2


def test_orthogonal_edge_constants_by_parity():
    # eps phi_j / amplitude -> 1 - 2 J(sqrt x) + (-1)^j with an O(1/N) error
    x = np.array([0.0, 1.0, 4.0, 9.0])
    base = 1 - 2 * bessel_j_integral(2.0, np.sqrt(x))
    errs = []
    for N in (40, 80, 160):
        fam = PhiFamily("orthogonal", 1.0, 2.0, N + 1)
        e = fam.epsilon(1 - x / (2 * N * N))
        amp = e[N][0] / 2
        errs.append([np.max(np.abs(e[N] / amp - (base + 1))),
                     np.max(np.abs(e[N + 1] / amp - (base - 1)))])
    errs = np.array(errs)
    ratios = errs[:-1] / errs[1:]
    assert np.all((ratios > 1.8) & (ratios < 2.2))
    assert np.all(errs[-1] < 0.08)


# ---------------------------------------------------------------- table export

def test_kernel_table_csv():
    spec = EnsembleSpec(2, 1.0, 1.0, 10)
    rows = kernel_table(spec, np.array([-1.0, 0.5]))
    assert len(rows) == 4
    text = write_kernel_csv(rows)
    lines = text.splitlines()
    assert lines[0] == "x,y,value,limit,error,kernel_id,N,a,b"
    assert lines[1].startswith("-1,-1,") and lines[1].endswith(",K2-bulk,10,1,1")
    buf = io.StringIO()
    write_kernel_csv(rows, buf)
    assert buf.getvalue() == text
