"""Correlation kernels: sine, Bessel, L, finite-N Jacobi kernels and the eps operator.

Finite-N objects are built from orthonormal weighted Jacobi functions

    phi_j(x) = p_j^{(p,q)}(x) (1-x)^{ea} (1+x)^{eb},

with p_j the orthonormal polynomials for the weight (1-x)^p (1+x)^q and

    ============  ===========  ================
    variant       (p, q)       (ea, eb)
    ============  ===========  ================
    unitary       (a, b)       (a/2, b/2)
    symplectic    (a-1, b-1)   (a/2-1, b/2-1)
    orthogonal    (a+1, b+1)   (a/2, b/2)
    ============  ===========  ================

The symplectic and orthogonal families are orthonormal against (1-x^2)dx.
``eps`` is the integral operator with kernel sgn(x-y)/2 on [-1, 1].
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .ensemble import EnsembleSpec, ParameterError
from .quadrature import QuadratureError, gauss_jacobi, gauss_legendre, wynn_epsilon
from .specfun import (
    SpecialFunctionError,
    bessel_j,
    bessel_j_derivative,
    jacobi_orthonormal_all,
)

__all__ = [
    "KernelError",
    "PhiFamily",
    "EpsilonTransform",
    "phi",
    "epsilon_phi",
    "c_constant",
    "sine_kernel",
    "bessel_kernel",
    "l_kernel",
    "LTable",
    "finite_kernel",
    "full_kernel",
    "limit_kernel",
    "scaled_kernel",
    "scaled_kernel_error",
    "kernel_table",
    "write_kernel_csv",
]

NEAR_DIAGONAL = 1e-6


class KernelError(ValueError):
    """Invalid kernel request (domain or parameter range)."""


# ---------------------------------------------------------------------------
# Limiting kernels
# ---------------------------------------------------------------------------

def sine_kernel(x, y):
    """sin(x - y) / (pi (x - y)), with the Taylor series for |x - y| < 1e-6."""
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    near = np.abs(d) < NEAR_DIAGONAL
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(near, (1.0 - d * d / 6.0 + d ** 4 / 120.0) / math.pi,
                       np.sin(d) / (math.pi * d))
    return out[()] if out.ndim == 0 else out


def _bessel_parts(alpha, z):
    r = np.sqrt(z)
    return bessel_j(alpha, r), r * bessel_j_derivative(alpha, r)


def _bessel_diagonal(alpha, z):
    r = np.sqrt(z)
    ja = bessel_j(alpha, r)
    return 0.25 * (ja * ja - bessel_j(alpha + 1.0, r) * bessel_j(alpha - 1.0, r))


def bessel_kernel(alpha, x, y):
    """Hard-edge Bessel kernel of order alpha (> -1) for x, y > 0.

    Off the diagonal the quotient form with J' = (J_{v-1} - J_{v+1})/2 is used;
    for |x - y| < 1e-6 max(x, y) the diagonal value at the midpoint is used
    (the kernel is symmetric, so this is accurate to O((x-y)^2)).
    """
    if alpha <= -1:
        raise KernelError("Bessel kernel order must exceed -1")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise KernelError("Bessel kernel needs x, y > 0")
    jx, dx = _bessel_parts(alpha, x)
    jy, dy = _bessel_parts(alpha, y)
    d = x - y
    near = np.abs(d) < NEAR_DIAGONAL * np.maximum(x, y)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (jx * dy - dx * jy) / (2.0 * d)
    if np.any(near):
        mid = np.broadcast_to(0.5 * (x + y), out.shape)
        out = np.array(out, copy=True)
        out[near] = _bessel_diagonal(alpha, mid[near])
    return out[()] if out.ndim == 0 else out


def _bessel_kernel_outer(alpha, ys, zs):
    """K_B(y_i, z_k) for 1-D arrays (outer product), sharing Bessel evaluations."""
    jy, dy = _bessel_parts(alpha, ys)
    jz, dz = _bessel_parts(alpha, zs)
    d = ys[:, None] - zs[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (jy[:, None] * dz[None, :] - dy[:, None] * jz[None, :]) / (2.0 * d)
    near = np.abs(d) < NEAR_DIAGONAL * np.maximum(ys[:, None], zs[None, :])
    if np.any(near):
        ii, kk = np.nonzero(near)
        out[ii, kk] = _bessel_diagonal(alpha, 0.5 * (ys[ii] + zs[kk]))
    return out


# ---------------------------------------------------------------------------
# The L kernel
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LTable:
    """L^{(alpha)}(x_i, y_j) on point sets xs, ys with error estimates.

    L(x, y) = int_0^x sqrt(y/z) K_B(y, z) dz - int_x^inf sqrt(y/z) K_B(y, z) dz
            = 2 I_y(x) - Lambda(y).
    """

    alpha: float
    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray
    error: np.ndarray
    tail: np.ndarray  # Lambda(y_j)

    @property
    def converged_to(self) -> float:
        return float(np.max(self.error)) if self.error.size else 0.0


def _l_table(alpha, xs, ys, *, m=16, max_width=0.5 * math.pi, tail_panels=64):
    """Direct evaluation of L on xs x ys.

    With z = t^2 the inner integrals become 2 sqrt(y) int K_B(y, t^2) dt.  The
    t-axis is cut at 0, at every sqrt(x_i), sqrt(y_j) and into panels no wider
    than ``max_width``; the first panel uses Gauss-Jacobi for the t^alpha
    behaviour at the origin.  Lambda(y) continues with half-period (width pi)
    panels whose partial sums are accelerated with Wynn's epsilon.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise KernelError("L kernel needs x, y > 0")
    tx = np.sqrt(xs)
    marks = np.unique(np.concatenate([tx, np.sqrt(ys)]))
    bps = [0.0]
    for t in marks:
        gap = t - bps[-1]
        if gap <= 0:
            continue
        k = max(1, int(math.ceil(gap / max_width)))
        bps.extend(bps[-1] + gap * np.arange(1, k) / k)
        bps.append(t)
    bps = np.asarray(bps)
    lo, hi = bps[:-1], bps[1:]
    gl = gauss_legendre(m)
    half = 0.5 * (hi - lo)
    t_nodes = lo[:, None] + half[:, None] * (gl.nodes[None, :] + 1.0)
    w_nodes = half[:, None] * gl.weights[None, :]
    # first panel with weight t^alpha
    gj = gauss_jacobi(m, 0.0, alpha)
    h0 = bps[1]
    t0 = 0.5 * h0 * (gj.nodes + 1.0)
    t_nodes[0] = t0
    w_nodes[0] = gj.weights * (0.5 * h0) ** (alpha + 1.0) / t0 ** alpha
    tq = t_nodes.ravel()
    wq = w_nodes.ravel()
    kmat = _bessel_kernel_outer(alpha, ys, tq * tq)  # (ny, nt)
    panel_vals = (kmat * wq[None, :]).reshape(len(ys), len(lo), m).sum(axis=2)
    cum = np.concatenate([np.zeros((len(ys), 1)), np.cumsum(panel_vals, axis=1)], axis=1)
    scale = 2.0 * np.sqrt(ys)[:, None]
    # I_y at each breakpoint, then pick the sqrt(x_i)
    idx = np.searchsorted(bps, tx)  # exact hits: every sqrt(x_i) is a breakpoint
    i_yx = scale * cum[:, idx]  # (ny, nx)

    # tail from the last breakpoint, half-period panels
    start = bps[-1]
    tlo = start + math.pi * np.arange(tail_panels)
    tt = (tlo[:, None] + 0.5 * math.pi * (gl.nodes[None, :] + 1.0)).ravel()
    tw = np.tile(0.5 * math.pi * gl.weights, tail_panels)
    ktail = _bessel_kernel_outer(alpha, ys, tt * tt)
    tail_vals = (ktail * tw[None, :]).reshape(len(ys), tail_panels, m).sum(axis=2)
    partial = cum[:, -1][:, None] + np.cumsum(tail_vals, axis=1)
    est, err = wynn_epsilon(partial[:, -40:].T)
    lam = scale[:, 0] * est
    lam_err = scale[:, 0] * err
    values = 2.0 * i_yx.T - lam[None, :]
    error = np.broadcast_to(lam_err[None, :] + 1e-14 * np.abs(values), values.shape)
    return LTable(float(alpha), xs, ys, values, np.array(error), lam)


def l_kernel(alpha, x, y, tol=1e-8, full_output=False):
    """L^{(alpha)}(x, y) for x, y > 0 (broadcasting over x and y).

    Raises ``QuadratureError`` when the tail acceleration does not reach
    ``tol``.  With ``full_output`` returns ``(value, error_estimate)``.
    """
    if alpha <= -1:
        raise KernelError("L kernel order must exceed -1")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xb, yb = np.broadcast_arrays(x, y)
    ux, ix = np.unique(xb.ravel(), return_inverse=True)
    uy, iy = np.unique(yb.ravel(), return_inverse=True)
    table = _l_table(alpha, ux, uy)
    vals = table.values[ix, iy].reshape(xb.shape)
    errs = table.error[ix, iy].reshape(xb.shape)
    if np.any(errs > tol):
        raise QuadratureError(f"L kernel tail did not converge (error {errs.max():.2e} > {tol:g})")
    if vals.ndim == 0:
        vals, errs = vals[()], errs[()]
    return (vals, errs) if full_output else vals


# ---------------------------------------------------------------------------
# Weighted Jacobi families
# ---------------------------------------------------------------------------

VARIANTS = ("unitary", "symplectic", "orthogonal")
_VARIANT_OF_BETA = {2: "unitary", 4: "symplectic", 1: "orthogonal"}


class PhiFamily:
    """Orthonormal weighted Jacobi functions phi_0..phi_{max_degree}.

    Parameters are the user-facing (a, b); the shifted polynomial parameters
    and weight exponents are stored alongside (``poly_params``,
    ``exponents``).
    """

    def __init__(self, variant: str, a: float, b: float, max_degree: int):
        if variant not in VARIANTS:
            raise KernelError(f"variant must be one of {VARIANTS}")
        lower = {"unitary": -1.0, "symplectic": 0.0, "orthogonal": -2.0}[variant]
        a, b = float(a), float(b)
        if a <= lower or b <= lower:
            raise KernelError(f"{variant} family needs a, b > {lower:g}")
        if int(max_degree) != max_degree or max_degree < 0:
            raise KernelError("max_degree must be a non-negative integer")
        self.variant = variant
        self.a, self.b = a, b
        self.max_degree = int(max_degree)
        shift = {"unitary": 0.0, "symplectic": -1.0, "orthogonal": 1.0}[variant]
        self.poly_params = (a + shift, b + shift)
        wshift = -1.0 if variant == "symplectic" else 0.0
        self.exponents = (a / 2 + wshift, b / 2 + wshift)

    @classmethod
    def for_spec(cls, spec: EnsembleSpec, max_degree: int | None = None) -> "PhiFamily":
        """Family used by the ensemble's kernels (degree 2N+1, N-1 or N)."""
        if max_degree is None:
            max_degree = {2: spec.N - 1, 4: 2 * spec.N + 1, 1: spec.N}[spec.beta]
        return cls(_VARIANT_OF_BETA[spec.beta], spec.a, spec.b, max_degree)

    def __repr__(self):
        return f"PhiFamily({self.variant!r}, a={self.a:g}, b={self.b:g}, max_degree={self.max_degree})"

    def _degree(self, n):
        n = self.max_degree if n is None else int(n)
        if not 0 <= n <= self.max_degree:
            raise KernelError(f"degree {n} outside 0..{self.max_degree}")
        return n

    def poly(self, x, n=None):
        """Orthonormal polynomial part, shape (n+1,) + x.shape."""
        n = self._degree(n)
        return jacobi_orthonormal_all(n, *self.poly_params, x)

    def weight(self, x, shift=0.0):
        """(1-x)^{ea+shift} (1+x)^{eb+shift}; 0 at an endpoint with positive exponent."""
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x) > 1):
            raise KernelError("evaluation outside [-1, 1]")
        ea = self.exponents[0] + shift
        eb = self.exponents[1] + shift
        for e, end in ((ea, 1.0), (eb, -1.0)):
            if e < 0 and np.any(x == end):
                raise KernelError("divergent endpoint evaluation (negative exponent)")
        with np.errstate(divide="ignore"):
            return np.power(1.0 - x, ea) * np.power(1.0 + x, eb)

    def values(self, x, n=None, shift=0.0):
        """phi_0..phi_n at x (times (1-x^2)^shift), shape (n+1,) + x.shape."""
        x = np.asarray(x, dtype=float)
        return self.poly(x, n) * self.weight(x, shift)

    def __call__(self, j, x):
        return self.values(x, j)[j]

    @cached_property
    def epsilon_transform(self) -> "EpsilonTransform":
        """eps phi_j table for all j <= max_degree (resolution verified)."""
        panels = max(512, 4 * (self.max_degree + 1))
        return EpsilonTransform.verified(
            lambda t: self.poly(t), self.exponents[0], self.exponents[1], panels=panels)

    def epsilon(self, x, n=None):
        """eps phi_0..eps phi_n at x, shape (n+1,) + x.shape."""
        n = self._degree(n)
        return self.epsilon_transform(x)[: n + 1]


def phi(family: PhiFamily, j: int, x):
    """Orthonormal weighted function phi_j of the family at x in [-1, 1]."""
    out = family(j, x)
    return out[()] if np.ndim(out) == 0 else out


def epsilon_phi(family: PhiFamily, j: int, x):
    """(eps phi_j)(x) = (int_{-1}^x phi_j - int_x^1 phi_j) / 2."""
    family._degree(j)
    out = family.epsilon_transform(x)[j]
    return out[()] if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# eps operator
# ---------------------------------------------------------------------------

def _singular(e):
    return not (e >= 0 and float(e).is_integer())


class EpsilonTransform:
    """eps g for g(x) = (1-x)^alpha (1+x)^beta h(x), h smooth and vector valued.

    ``func(x)`` returns h at a 1-D array of points with shape (k, len(x)) or
    (len(x),).  g is taken to vanish outside ``support``.  Cumulative panel
    integrals are tabulated once on Chebyshev-spaced breakpoints
    -cos(pi k / panels) (plus any extra ``breakpoints``); evaluation at x
    integrates the partial panel exactly with an m-point rule.  Panels that
    touch a singular endpoint use Gauss-Jacobi rules for that endpoint's
    exponent, and points in the last panel are handled as total minus the
    integral over [x, 1].
    """

    def __init__(self, func, alpha=0.0, beta=0.0, *, panels=512, m=16,
                 breakpoints=None, support=(-1.0, 1.0)):
        lo, hi = float(support[0]), float(support[1])
        if not -1.0 <= lo < hi <= 1.0:
            raise KernelError("support must be a sub-interval of [-1, 1]")
        self.func = func
        self.alpha, self.beta = float(alpha), float(beta)
        self.m = int(m)
        self.panels = int(panels)
        self.support = (lo, hi)
        bp = -np.cos(np.pi * np.arange(self.panels + 1) / self.panels)
        bp = bp[(bp > lo) & (bp < hi)]
        extra = [] if breakpoints is None else np.asarray(breakpoints, dtype=float).ravel()
        extra = [v for v in extra if lo < v < hi]
        self.breakpoints = np.unique(np.concatenate([[lo, hi], bp, extra]))
        self._sing_lo = lo == -1.0 and _singular(self.beta)
        self._sing_hi = hi == 1.0 and _singular(self.alpha)
        if (lo == -1.0 and self.beta <= -1) or (hi == 1.0 and self.alpha <= -1):
            raise KernelError("g is not integrable at the endpoints")
        self._gl = gauss_legendre(self.m)
        self._build()

    @classmethod
    def verified(cls, func, alpha=0.0, beta=0.0, *, tol=1e-6, max_panels=8192, **kw):
        """Build with ``panels`` doubled until the D eps = I check passes."""
        panels = kw.pop("panels", 512)
        while True:
            et = cls(func, alpha, beta, panels=panels, **kw)
            if et.derivative_defect() <= tol or panels >= max_panels:
                return et
            panels *= 2

    # g itself ------------------------------------------------------------
    def _h(self, x):
        h = np.asarray(self.func(x), dtype=float)
        if h.ndim == 1:
            h = h[None, :]
        return h

    def g(self, x):
        """The integrand g at a 1-D array of points, shape (k, len(x))."""
        x = np.asarray(x, dtype=float)
        out = self._h(x) * _endpoint_weight(x, self.alpha, self.beta)[None, :]
        inside = (x >= self.support[0]) & (x <= self.support[1])
        return np.where(inside[None, :], out, 0.0)

    # tabulation -----------------------------------------------------------
    def _weighted(self, t, drop_lo=False, drop_hi=False):
        """h(t) times the weight factors that are not absorbed in a rule."""
        wa = 0.0 if drop_hi else self.alpha
        wb = 0.0 if drop_lo else self.beta
        return self._h(t) * _endpoint_weight(t, wa, wb)[None, :]

    def _int_from_minus_one(self, x):
        """int_{-1}^x g for x in the first panel (Gauss-Jacobi at -1)."""
        gj = gauss_jacobi(self.m, 0.0, self.beta)
        half = 0.5 * (x + 1.0)
        t = (-1.0 + half[:, None] * (gj.nodes[None, :] + 1.0)).ravel()
        vals = self._weighted(t, drop_lo=True).reshape(-1, len(x), self.m)
        return (vals @ gj.weights) * half[None, :] ** (self.beta + 1.0)

    def _int_to_one(self, x):
        """int_x^1 g for x in the last panel (Gauss-Jacobi at +1)."""
        gj = gauss_jacobi(self.m, self.alpha, 0.0)
        half = 0.5 * (1.0 - x)
        t = (x[:, None] + half[:, None] * (gj.nodes[None, :] + 1.0)).ravel()
        vals = self._weighted(t, drop_hi=True).reshape(-1, len(x), self.m)
        return (vals @ gj.weights) * half[None, :] ** (self.alpha + 1.0)

    def _int_gl(self, a, b):
        """int_a^b g with m-point Gauss-Legendre, vectorised over intervals."""
        half = 0.5 * (b - a)
        t = (a[:, None] + half[:, None] * (self._gl.nodes[None, :] + 1.0)).ravel()
        vals = self._weighted(t).reshape(-1, len(a), self.m)
        return (vals @ self._gl.weights) * half[None, :]

    def _build(self):
        bp = self.breakpoints
        lo, hi = bp[:-1], bp[1:]
        pieces = self._int_gl(lo, hi)
        if self._sing_lo:
            pieces[:, 0] = self._int_from_minus_one(hi[:1])[:, 0]
        if self._sing_hi:
            pieces[:, -1] = self._int_to_one(lo[-1:])[:, 0]
        self._cum = np.concatenate([np.zeros((pieces.shape[0], 1)),
                                    np.cumsum(pieces, axis=1)], axis=1)
        self.total = self._cum[:, -1].copy()

    # evaluation -------------------------------------------------------------
    def antiderivative(self, x):
        """int_{-1}^x g, shape (k,) + x.shape."""
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x) > 1):
            raise KernelError("eps evaluation outside [-1, 1]")
        flat = x.ravel()
        out = np.empty((self._cum.shape[0], flat.size))
        bp = self.breakpoints
        lo_s, hi_s = self.support
        below = flat <= lo_s
        above = flat >= hi_s
        out[:, below] = 0.0
        out[:, above] = self.total[:, None]
        mid = ~(below | above)
        if np.any(mid):
            xm = flat[mid]
            k = np.clip(np.searchsorted(bp, xm, side="right") - 1, 0, len(bp) - 2)
            res = np.empty((out.shape[0], xm.size))
            first = (k == 0) & self._sing_lo
            last = (k == len(bp) - 2) & self._sing_hi & ~first
            rest = ~(first | last)
            if np.any(first):
                res[:, first] = self._int_from_minus_one(xm[first])
            if np.any(last):
                res[:, last] = self.total[:, None] - self._int_to_one(xm[last])
            if np.any(rest):
                kr = k[rest]
                res[:, rest] = self._cum[:, kr] + self._int_gl(bp[kr], xm[rest])
            out[:, mid] = res
        return out.reshape((out.shape[0],) + x.shape)

    def __call__(self, x):
        """eps g at x, shape (k,) + x.shape."""
        x = np.asarray(x, dtype=float)
        tot = self.total.reshape((-1,) + (1,) * x.ndim)
        return self.antiderivative(x) - 0.5 * tot

    def derivative_defect(self, points=None, h=1e-5):
        """max |D eps g - g| / max(1, max|g|) by a 4th-order central difference."""
        lo, hi = self.support
        if points is None:
            c, r = 0.5 * (lo + hi), 0.5 * (hi - lo)
            points = c + 0.95 * r * np.cos(np.pi * (np.arange(50) + 0.5) / 50)
        x = np.asarray(points, dtype=float)
        h = min(h, 0.01 * (hi - lo))
        e = lambda s: self(s)
        d = (8.0 * (e(x + h) - e(x - h)) - (e(x + 2 * h) - e(x - 2 * h))) / (12.0 * h)
        g = self.g(x)
        return float(np.max(np.abs(d - g)) / max(1.0, float(np.max(np.abs(g)))))


def _endpoint_weight(x, alpha, beta):
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.power(1.0 - x, alpha) * np.power(1.0 + x, beta)
    return w


# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------

def c_constant(kind: str, j: int, a: float, b: float) -> float:
    """C_j for the symplectic or orthogonal family.

    symplectic: sqrt((j+1)(j+a)(j+b)(j+a+b-1) / ((2j+a+b+1)(2j+a+b-1)))
    orthogonal: sqrt(j(j+a+1)(j+b+1)(j+a+b+2) / ((2j+a+b+1)(2j+a+b+3)))
    Removable 0/0 factors (j = 0 symplectic, j = 1 orthogonal) take their limits;
    C_{-1} = 0 for the symplectic kind.
    """
    a, b = float(a), float(b)
    if kind == "symplectic":
        if j == -1:
            return 0.0
        ratio = 1.0 if j == 0 else (j + a + b - 1) / (2 * j + a + b - 1)
        rad = (j + 1) * (j + a) * (j + b) * ratio / (2 * j + a + b + 1)
    elif kind == "orthogonal":
        if j == 0:
            return 0.0
        ratio = 1.0 if j == 1 else (j + a + b + 2) / (2 * j + a + b + 1)
        rad = j * (j + a + 1) * (j + b + 1) * ratio / (2 * j + a + b + 3)
    else:
        raise KernelError("kind must be 'symplectic' or 'orthogonal'")
    if not rad > 0:
        raise KernelError(f"non-positive radicand for C_{j} ({kind}, a={a:g}, b={b:g})")
    return math.sqrt(rad)


# ---------------------------------------------------------------------------
# Finite-N kernels
# ---------------------------------------------------------------------------

def _cd_kernel(spec, x, y):
    from .specfun import jacobi_p_all, loggamma

    N, a, b = spec.N, spec.a, spec.b
    logc = (float(loggamma(N + 1.0)) + float(loggamma(N + a + b + 1.0))
            - (a + b) * math.log(2.0) - math.log(2 * N + a + b)
            - float(loggamma(N + a)) - float(loggamma(N + b)))
    px = jacobi_p_all(N, a, b, x)
    py = jacobi_p_all(N, a, b, y)
    num = px[N] * py[N - 1] - px[N - 1] * py[N]
    fam = PhiFamily("unitary", a, b, 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return math.exp(logc) * num / (x - y) * fam.weight(x) * fam.weight(y)


def _lead(arr, nd):
    # (k,) + shape  ->  (k,) + (1,)*(nd - len(shape)) + shape, for broadcasting
    return arr.reshape(arr.shape[:1] + (1,) * (nd - arr.ndim + 1) + arr.shape[1:])


def finite_kernel(spec: EnsembleSpec, x, y, method: str = "sum"):
    """K_N^{(2)} (beta=2), S_N^{(4)} (beta=4) or S_N^{(1)} (beta=1) at (x, y).

    ``method='cd'`` (beta = 2 only) uses the Christoffel-Darboux quotient,
    which is singular on the diagonal.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if method == "cd":
        if spec.beta != 2:
            raise KernelError("the Christoffel-Darboux form is for beta = 2")
        out = _cd_kernel(spec, x, y)
        return out[()] if out.ndim == 0 else out
    if method != "sum":
        raise KernelError("method must be 'sum' or 'cd'")
    N = spec.N
    n = {2: N - 1, 4: 2 * N, 1: N - 1}[spec.beta]
    fam = PhiFamily.for_spec(spec, n)
    shift = 0.0 if spec.beta == 2 else 1.0
    nd = max(x.ndim, y.ndim)
    px = _lead(fam.values(x, n, shift=shift), nd)
    py = _lead(fam.values(y, n), nd)
    out = np.sum(px * py, axis=0)
    return out[()] if np.ndim(out) == 0 else out


def full_kernel(spec: EnsembleSpec, x, y):
    """Full finite-N kernel including the rank-one term.

    beta = 4: K = S/2 + (C_{2N}/2) eps phi_{2N+1}(x) phi_{2N}(y)
    beta = 1: K = S + C_N eps phi_N(x) phi_{N-1}(y)
    """
    s = np.asarray(finite_kernel(spec, x, y), dtype=float)
    if spec.beta == 2:
        return s
    fam = PhiFamily.for_spec(spec)
    N = spec.N
    if spec.beta == 4:
        c = c_constant("symplectic", 2 * N, spec.a, spec.b)
        ex = fam.epsilon(x)[2 * N + 1]
        py = fam.values(y, 2 * N)[2 * N]
        return 0.5 * s + 0.5 * c * ex * py
    c = c_constant("orthogonal", N, spec.a, spec.b)
    ex = fam.epsilon(x)[N]
    py = fam.values(y, N - 1)[N - 1]
    return s + c * ex * py


def limit_kernel(spec: EnsembleSpec, x, y):
    """Scaling limit of the finite-N kernel in the regime of ``spec``."""
    if spec.regime == "bulk":
        return sine_kernel(x, y)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    alpha = spec.bessel_order
    kb = bessel_kernel(alpha, x, y)
    return kb if spec.beta == 2 else np.sqrt(x / y) * kb


def scaled_kernel(spec: EnsembleSpec, x, y):
    """(1/c) K_fin(x/c, y/c) (bulk) or (1/c) K_fin(1-x/c, 1-y/c) (edge)."""
    c = spec.scale_factor
    return finite_kernel(spec, spec.unscale(x), spec.unscale(y)) / c


def _grid(grid):
    if isinstance(grid, tuple) and len(grid) == 2:
        xs, ys = (np.asarray(g, dtype=float).ravel() for g in grid)
    else:
        xs = ys = np.asarray(grid, dtype=float).ravel()
    if xs.size == 0 or ys.size == 0:
        raise KernelError("empty grid")
    return xs, ys


def scaled_kernel_error(spec: EnsembleSpec, grid, regime: str | None = None) -> float:
    """max |scaled finite-N kernel - limit| over the tensor grid xs x ys.

    ``grid`` is a 1-D point set (used for both arguments) or a pair (xs, ys).
    """
    if regime is not None and regime != spec.regime:
        spec = spec.with_(regime=regime)
    xs, ys = _grid(grid)
    X, Y = xs[:, None], ys[None, :]
    return float(np.max(np.abs(scaled_kernel(spec, X, Y) - limit_kernel(spec, X, Y))))


def kernel_id(spec: EnsembleSpec) -> str:
    base = {2: "K2", 4: "S4", 1: "S1"}[spec.beta]
    return f"{base}-{spec.regime}"


def kernel_table(spec: EnsembleSpec, grid):
    """Rows (x, y, value, limit, error, kernel_id, N, a, b) on the tensor grid."""
    xs, ys = _grid(grid)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    val = scaled_kernel(spec, X, Y)
    lim = limit_kernel(spec, X, Y)
    kid = kernel_id(spec)
    rows = []
    for xv, yv, v, l in zip(X.ravel(), Y.ravel(), val.ravel(), lim.ravel()):
        rows.append((float(xv), float(yv), float(v), float(l), float(abs(v - l)), kid,
                     spec.N, spec.a, spec.b))
    return rows


KERNEL_COLUMNS = ("x", "y", "value", "limit", "error", "kernel_id", "N", "a", "b")


def write_kernel_csv(rows, stream=None) -> str:
    """Serialise kernel_table rows as CSV (17 significant digits, LF endings)."""
    buf = io.StringIO() if stream is None else stream
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(KERNEL_COLUMNS)
    for r in rows:
        w.writerow([format(v, ".17g") if isinstance(v, float) else v for v in r])
    return buf.getvalue() if stream is None else ""
