"""Special functions: log-gamma, Jacobi polynomials, Bessel J, integrated Bessel, Si.

Everything here is vectorised over the argument ``x`` and pure.  Orders and
Jacobi parameters are scalars.
"""
from __future__ import annotations

import math

import numpy as np

__all__ = [
    "SpecialFunctionError",
    "loggamma",
    "gamma_sign",
    "rgamma",
    "jacobi_p",
    "jacobi_p_all",
    "jacobi_recurrence",
    "jacobi_orthonormal_all",
    "jacobi_orthonormal_deriv_all",
    "jacobi_norm",
    "log_jacobi_norm",
    "bessel_j",
    "bessel_j_derivative",
    "bessel_j_integral",
    "sine_integral",
    "BESSEL_SEAM",
    "MAX_JACOBI_WORK",
]

# Series/asymptotic switch for J_nu.
BESSEL_SEAM = 12.0
# Refuse Jacobi evaluations where n*max(|a|,|b|) exceeds this.
MAX_JACOBI_WORK = 1.0e4


class SpecialFunctionError(ValueError):
    """Raised on domain violations (non-finite input, bad parameters)."""


def _check_finite(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise SpecialFunctionError(f"{name} must be finite")
    return arr


# --------------------------------------------------------------------------
# log-gamma (Lanczos, g = 7, 9 terms)
# --------------------------------------------------------------------------

_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _loggamma_positive(x):
    # valid for x >= 0.5
    z = x - 1.0
    acc = np.full_like(z, _LANCZOS_COEF[0])
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc = acc + c / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * np.log(t) - t + np.log(acc)


def loggamma(x):
    """log|Gamma(x)| for real x; +inf at the poles 0, -1, -2, ...

    Negative arguments go through the reflection formula.
    """
    arr = _check_finite(x)
    scalar = arr.ndim == 0
    x = np.atleast_1d(arr).astype(float)
    out = np.empty_like(x)
    big = x >= 0.5
    out[big] = _loggamma_positive(x[big])
    small = ~big
    if np.any(small):
        xs = x[small]
        pole = (xs <= 0) & (xs == np.floor(xs))
        s = np.abs(np.sin(np.pi * xs))
        with np.errstate(divide="ignore"):
            val = math.log(math.pi) - np.log(s) - _loggamma_positive(1.0 - xs)
        val[pole] = np.inf
        out[small] = val
    return out[0] if scalar else out


def gamma_sign(x):
    """Sign of Gamma(x); 0 at the poles."""
    x = np.asarray(x, dtype=float)
    sign = np.ones_like(x)
    neg = x < 0
    fl = np.floor(x)
    pole = neg & (x == fl)
    odd = neg & ~pole & (np.mod(-fl, 2) == 1)
    sign = np.where(odd, -1.0, sign)
    sign = np.where(pole, 0.0, sign)
    return sign


def rgamma(x):
    """1/Gamma(x), exactly zero at the poles."""
    x = np.asarray(x, dtype=float)
    s = gamma_sign(x)
    with np.errstate(over="ignore"):
        val = np.exp(-np.where(s == 0, 0.0, loggamma(np.where(s == 0, 1.0, x))))
    return s * val


# --------------------------------------------------------------------------
# Jacobi polynomials
# --------------------------------------------------------------------------

def _check_jacobi_work(n, a, b):
    if n < 0 or int(n) != n:
        raise SpecialFunctionError("degree must be a non-negative integer")
    if not (math.isfinite(a) and math.isfinite(b)):
        raise SpecialFunctionError("Jacobi exponents must be finite")
    if n * max(abs(a), abs(b)) > MAX_JACOBI_WORK:
        raise SpecialFunctionError(
            f"n*max(|a|,|b|) = {n * max(abs(a), abs(b)):g} exceeds {MAX_JACOBI_WORK:g}"
        )


def jacobi_p_all(n, a, b, x):
    """Return P_0..P_n at x as an array of shape (n+1,) + x.shape.

    Ascending three-term recurrence in double precision.
    """
    _check_jacobi_work(n, a, b)
    x = _check_finite(x)
    out = np.empty((n + 1,) + x.shape)
    out[0] = 1.0
    if n == 0:
        return out
    out[1] = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * x
    ab = a + b
    for k in range(1, n):
        c = 2.0 * k + ab
        lhs = 2.0 * (k + 1) * (k + ab + 1) * c
        t1 = (c + 1.0) * (c * (c + 2.0) * x + a * a - b * b)
        t2 = 2.0 * (k + a) * (k + b) * (c + 2.0)
        out[k + 1] = (t1 * out[k] - t2 * out[k - 1]) / lhs
    return out


def jacobi_p(n, a, b, x):
    """P_n^{(a,b)}(x) by the standard three-term recurrence."""
    res = jacobi_p_all(int(n), float(a), float(b), x)[-1]
    return res[()] if np.ndim(res) == 0 else res


def log_jacobi_norm(n, a, b):
    if a <= -1 or b <= -1:
        raise SpecialFunctionError("jacobi_norm needs a, b > -1")
    if n < 0 or int(n) != n:
        raise SpecialFunctionError("degree must be a non-negative integer")
    if n == 0:
        # (2n+a+b+1) Gamma(n+a+b+1) = Gamma(a+b+2) at n = 0, also when a+b+1 <= 0
        return ((a + b + 1) * math.log(2.0) + float(loggamma(a + 1)) + float(loggamma(b + 1))
                - float(loggamma(a + b + 2)))
    val = ((a + b + 1) * math.log(2.0)
           + float(loggamma(n + a + 1)) + float(loggamma(n + b + 1))
           - float(loggamma(n + 1.0)) - math.log(2 * n + a + b + 1)
           - float(loggamma(n + a + b + 1)))
    return val


def jacobi_norm(n, a, b):
    """h_n^{(a,b)} = int P_n^2 (1-x)^a (1+x)^b dx, evaluated in log space."""
    return math.exp(log_jacobi_norm(n, a, b))


# --------------------------------------------------------------------------
# Bessel J
# --------------------------------------------------------------------------

def jacobi_recurrence(n, a, b):
    """Orthonormal recurrence coefficients for the weight (1-x)^a (1+x)^b.

    Returns (alpha, beta) with alpha of length n and beta of length n, so that
    x p_j = beta[j+1] p_{j+1} + alpha[j] p_j + beta[j] p_{j-1}
    (beta[0] unused, set to 0).  These are the Golub-Welsch Jacobi-matrix
    entries; the removable 0/0 cases at j = 0, 1 are filled by their limits.
    """
    if a <= -1 or b <= -1:
        raise SpecialFunctionError("orthonormal Jacobi recurrence needs a, b > -1")
    ab = a + b
    j = np.arange(n, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = (b * b - a * a) / ((2 * j + ab) * (2 * j + ab + 2))
        c = 2 * j + ab
        beta2 = 4 * j * (j + a) * (j + b) * (j + ab) / (c * c * (c - 1.0) * (c + 1.0))
    if n > 0:
        alpha[0] = (b - a) / (ab + 2.0)
        beta2[0] = 0.0
    if n > 1:
        beta2[1] = 4.0 * (1 + a) * (1 + b) / ((2 + ab) ** 2 * (3 + ab))
    return alpha, np.sqrt(beta2)


def jacobi_orthonormal_all(n, a, b, x):
    """p_0..p_n at x, p_j = P_j^{(a,b)} / sqrt(h_j), shape (n+1,) + x.shape.

    Uses the orthonormal three-term recurrence, which stays O(1) in size for
    large n where the classical normalisation would overflow.
    """
    x = _check_finite(x)
    alpha, beta = jacobi_recurrence(n + 1, a, b)
    out = np.empty((n + 1,) + x.shape)
    out[0] = math.exp(-0.5 * log_jacobi_norm(0, a, b))
    if n == 0:
        return out
    out[1] = (x - alpha[0]) * out[0] / beta[1]
    for k in range(1, n):
        out[k + 1] = ((x - alpha[k]) * out[k] - beta[k] * out[k - 1]) / beta[k + 1]
    return out


def jacobi_orthonormal_deriv_all(n, a, b, x):
    """Derivatives p_0'..p_n' of the orthonormal Jacobi polynomials.

    Differentiates the orthonormal recurrence term by term.
    """
    x = _check_finite(x)
    alpha, beta = jacobi_recurrence(n + 1, a, b)
    p = jacobi_orthonormal_all(n, a, b, x)
    d = np.zeros_like(p)
    if n == 0:
        return d
    d[1] = p[0] / beta[1]
    for k in range(1, n):
        d[k + 1] = ((x - alpha[k]) * d[k] + p[k] - beta[k] * d[k - 1]) / beta[k + 1]
    return d


def _bessel_series(nu, x):
    """Power series for J_nu(x), x >= 0."""
    x = np.asarray(x, dtype=float)
    if nu < 0 and nu == math.floor(nu):
        n = -int(nu)
        return (-1.0) ** n * _bessel_series(float(n), x)
    q = 0.25 * x * x
    qmax = float(np.max(q)) if q.size else 0.0
    term = np.full_like(x, float(rgamma(nu + 1.0)))
    total = term.copy()
    for k in range(1, 400):
        term = term * (-q) / (k * (k + nu))
        total = total + term
        if k > qmax and np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    with np.errstate(divide="ignore", invalid="ignore"):
        pref = np.power(0.5 * x, nu)
    res = pref * total
    if nu == 0:
        res = np.where(x == 0, 1.0, res)
    return res


def _hankel(nu, x):
    """Large-argument asymptotic expansion of J_nu(x)."""
    x = np.asarray(x, dtype=float)
    mu = 4.0 * nu * nu
    p = np.ones_like(x)
    qsum = np.zeros_like(x)
    term = np.ones_like(x)
    active = np.ones(x.shape, dtype=bool)
    prev = np.full(x.shape, np.inf)
    for k in range(1, 200):
        new = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        mag = np.abs(new)
        active = active & (mag < prev) & (mag > 1e-18)
        if not np.any(active):
            break
        prev = np.where(active, mag, prev)
        # k odd -> Q, k even -> P, alternating signs every two terms
        sign = -1.0 if (k // 2) % 2 == 1 else 1.0
        if k % 2 == 1:
            qsum = qsum + np.where(active, sign * new, 0.0)
        else:
            p = p + np.where(active, sign * new, 0.0)
        term = np.where(active, new, term)
    chi = x - (0.5 * nu + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(chi) - qsum * np.sin(chi))


def _bessel_large(nu, x):
    """J_nu(x) for x > BESSEL_SEAM: Hankel at base orders, then recurrence."""
    x = np.asarray(x, dtype=float)
    base = nu - math.floor(nu)
    j0 = _hankel(base, x)
    j1 = _hankel(base + 1.0, x)
    steps = int(round(nu - base))
    if steps == 0:
        return j0
    if steps == 1:
        return j1
    if steps < 0:
        lo, hi, order = j0, j1, base
        for _ in range(-steps):
            lo, hi = 2.0 * order / x * lo - hi, lo
            order -= 1.0
        return lo
    if nu <= np.min(x):
        cur, nxt, order = j0, j1, base + 1.0
        for _ in range(steps - 1):
            cur, nxt = nxt, 2.0 * order / x * nxt - cur
            order += 1.0
        return nxt
    # Miller backward recurrence, normalised on both base orders.
    top = steps + int(np.max(x)) + 40
    hi = np.zeros_like(x)
    cur = np.ones_like(x)
    target = np.zeros_like(x)
    order = base + top
    for m in range(top, 0, -1):
        lo = 2.0 * order / x * cur - hi
        hi, cur = cur, lo
        order -= 1.0
        if m - 1 == steps:
            target = cur.copy()
        big = np.abs(cur) > 1e100
        if np.any(big):
            cur = np.where(big, cur * 1e-100, cur)
            hi = np.where(big, hi * 1e-100, hi)
            target = np.where(big, target * 1e-100, target)
    # cur ~ J_base, hi ~ J_{base+1}
    norm = np.maximum(np.abs(cur), np.abs(hi))
    c, h = cur / norm, hi / norm
    scale = (c * j0 + h * j1) / (c * c + h * h)
    return target / norm * scale


def bessel_j(nu, x):
    """Bessel function of the first kind J_nu(x) for x >= 0 and nu > -2."""
    nu = float(nu)
    if not math.isfinite(nu) or nu <= -2:
        raise SpecialFunctionError("bessel_j needs a finite order nu > -2")
    arr = _check_finite(x)
    if np.any(arr < 0):
        raise SpecialFunctionError("bessel_j needs x >= 0")
    scalar = arr.ndim == 0
    x = np.atleast_1d(arr)
    out = np.empty_like(x)
    small = x <= BESSEL_SEAM
    if np.any(small):
        out[small] = _bessel_series(nu, x[small])
    if np.any(~small):
        out[~small] = _bessel_large(nu, x[~small])
    return out[0] if scalar else out


def bessel_j_derivative(nu, x):
    """J'_nu(x) = (J_{nu-1}(x) - J_{nu+1}(x)) / 2."""
    return 0.5 * (bessel_j(nu - 1.0, x) - bessel_j(nu + 1.0, x))


def _bessel_scaled_series(nu, t):
    """J_nu(t) / t^nu (entire in t)."""
    t = np.asarray(t, dtype=float)
    q = 0.25 * t * t
    term = np.ones_like(t)
    total = np.zeros_like(t)
    for k in range(0, 200):
        total = total + term * float(rgamma(k + nu + 1.0))
        term = term * (-q) / (k + 1.0)
        if k > 2 and np.all(np.abs(term) < 1e-18 * np.maximum(np.abs(total), 1e-300)):
            break
    return total * 2.0 ** (-nu)


def bessel_j_integral(nu, x):
    """int_0^x J_nu(t) dt for x >= 0, nu > -1.

    Gauss-Jacobi on the first unit panel (weight t^nu), then Gauss-Legendre
    panels of width at most pi/2.
    """
    from .quadrature import gauss_jacobi, gauss_legendre

    nu = float(nu)
    if nu <= -1:
        raise SpecialFunctionError("bessel_j_integral needs nu > -1")
    arr = _check_finite(x)
    if np.any(arr < 0):
        raise SpecialFunctionError("bessel_j_integral needs x >= 0")
    scalar = arr.ndim == 0
    xs = np.atleast_1d(arr).ravel()
    out = np.zeros_like(xs)

    gj = gauss_jacobi(24, 0.0, nu)  # weight (1+s)^nu on [-1,1]
    gl = gauss_legendre(24)
    head = 1.0

    def first_panel(h):
        # int_0^h t^nu g(t) dt with t = h(1+s)/2
        h = np.asarray(h, dtype=float)
        t = 0.5 * h[:, None] * (1.0 + gj.nodes[None, :])
        vals = _bessel_scaled_series(nu, t.ravel()).reshape(t.shape)
        return (0.5 * h) ** (nu + 1.0) * (vals @ gj.weights)

    def gl_panel(lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        t = mid[:, None] + half[:, None] * gl.nodes[None, :]
        vals = bessel_j(nu, t.ravel()).reshape(t.shape)
        return half * (vals @ gl.weights)

    inside = xs <= head
    if np.any(inside):
        out[inside] = first_panel(xs[inside])
    rest = ~inside
    if np.any(rest):
        xr = xs[rest]
        xmax = float(np.max(xr))
        width = 0.5 * math.pi
        nfull = int(math.ceil((xmax - head) / width))
        edges = head + width * np.arange(nfull + 1)
        panel = np.concatenate([first_panel(np.array([head])),
                                gl_panel(edges[:-1], edges[1:])])
        cum = np.cumsum(panel)  # cum[k] = int_0^{edges[k]}
        k = np.minimum(((xr - head) // width).astype(int), nfull - 1)
        k = np.maximum(k, 0)
        out[rest] = cum[k] + gl_panel(edges[k], xr)
    out = out.reshape(np.shape(arr)) if not scalar else out
    return out[0] if scalar else out


# --------------------------------------------------------------------------
# Sine integral
# --------------------------------------------------------------------------

_SI_SERIES_MAX = 4.0


def _si_series(x):
    x = np.asarray(x, dtype=float)
    x2 = x * x
    term = x.copy()
    total = x.copy()
    for k in range(1, 60):
        term = term * (-x2) / ((2 * k) * (2 * k + 1))
        total = total + term / (2 * k + 1)
    return total


def _si_continued_fraction(x):
    """Si(x) = pi/2 + Im E1(ix), E1 by its continued fraction (modified Lentz)."""
    x = np.asarray(x, dtype=float)
    tiny = 1e-300
    b = 1.0 + 1j * x
    c = np.full(x.shape, 1.0 / tiny, dtype=complex)
    d = 1.0 / b
    h = d.copy()
    for i in range(1, 400):
        a = -float(i * i)
        b = b + 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h = h * delta
        if np.all(np.abs(delta - 1.0) < 1e-16):
            break
    e1 = h * (np.cos(x) - 1j * np.sin(x))
    return 0.5 * math.pi + e1.imag


def sine_integral(x):
    """Si(x) = int_0^x sin(t)/t dt.  Odd in x."""
    arr = _check_finite(x)
    scalar = arr.ndim == 0
    x = np.atleast_1d(arr)
    ax = np.abs(x)
    out = np.empty_like(ax)
    small = ax <= _SI_SERIES_MAX
    out[small] = _si_series(ax[small])
    if np.any(~small):
        out[~small] = _si_continued_fraction(ax[~small])
    out = np.sign(x) * out
    return out[0] if scalar else out
