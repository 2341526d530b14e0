"""Gauss rules, composite/graded panel rules, half-line and double integrals."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "QuadratureError",
    "QuadratureRule",
    "IntegralEstimate",
    "gauss_legendre",
    "gauss_jacobi",
    "composite_rule",
    "graded_rule",
    "halfline_rule",
    "integrate_halfline",
    "integrate_double",
    "wynn_epsilon",
]


class QuadratureError(ValueError):
    """Invalid rule request or integration parameters."""


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    domain: tuple = (-1.0, 1.0)

    @property
    def order(self) -> int:
        return len(self.nodes)

    def integrate(self, values) -> float:
        """Apply the rule to sampled values (last axis indexes nodes)."""
        return np.asarray(values) @ self.weights

    def mapped(self, lo: float, hi: float) -> "QuadratureRule":
        """Affine map of a [-1, 1] rule onto [lo, hi]."""
        half = 0.5 * (hi - lo)
        return QuadratureRule(lo + half * (self.nodes + 1.0), half * self.weights, (lo, hi))


@dataclass(frozen=True)
class IntegralEstimate:
    value: float
    error_estimate: float
    evaluations: int
    converged: bool = True

    def __post_init__(self):
        if not self.error_estimate >= 0:
            raise QuadratureError("error estimate must be non-negative")


# ---------------------------------------------------------------------------
# Gauss rules
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _gauss_legendre_cached(order: int):
    k = np.arange(1, order + 1)
    x = np.cos(np.pi * (k - 0.25) / (order + 0.5))
    for _ in range(100):
        p0 = np.ones_like(x)
        p1 = x.copy()
        for n in range(2, order + 1):
            p0, p1 = p1, ((2 * n - 1) * x * p1 - (n - 1) * p0) / n
        if order == 1:
            p0 = np.ones_like(x)
        dp = order * (x * p1 - p0) / (x * x - 1.0)
        dx = p1 / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-16:
            break
    p0 = np.ones_like(x)
    p1 = x.copy()
    for n in range(2, order + 1):
        p0, p1 = p1, ((2 * n - 1) * x * p1 - (n - 1) * p0) / n
    if order == 1:
        p0 = np.ones_like(x)
    dp = order * (x * p1 - p0) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    idx = np.argsort(x)
    nodes, weights = x[idx], w[idx]
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre(order: int) -> QuadratureRule:
    """Gauss-Legendre rule on [-1, 1] (Newton from Chebyshev-type guesses)."""
    if int(order) != order or not 1 <= order <= 2048:
        raise QuadratureError("Gauss-Legendre order must be in [1, 2048]")
    nodes, weights = _gauss_legendre_cached(int(order))
    return QuadratureRule(nodes, weights)


@lru_cache(maxsize=128)
def _gauss_jacobi_cached(order: int, a: float, b: float):
    from .specfun import jacobi_p_all, jacobi_recurrence, loggamma

    n = order
    ab = a + b
    diag, off = jacobi_recurrence(n, a, b)
    x = eigh_tridiagonal(diag, off[1:], eigvals_only=True) if n > 1 else diag.copy()
    x = np.sort(x)

    # Newton polish on P_n, weights from the derivative formula.
    def deriv(xv):
        p = jacobi_p_all(n, a, b, xv)
        if n == 0:
            return p[-1], np.zeros_like(xv)
        dp = 0.5 * (n + ab + 1) * jacobi_p_all(n - 1, a + 1, b + 1, xv)[-1]
        return p[-1], dp

    for _ in range(3):
        p, dp = deriv(x)
        x = x - p / dp
    _, dp = deriv(x)
    logc = ((ab + 1) * math.log(2.0) + float(loggamma(n + a + 1)) + float(loggamma(n + b + 1))
            - float(loggamma(n + ab + 1)) - float(loggamma(n + 1.0)))
    w = math.exp(logc) / ((1.0 - x * x) * dp * dp)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_jacobi(order: int, a: float, b: float) -> QuadratureRule:
    """Gauss rule for the weight (1-x)^a (1+x)^b on [-1, 1]."""
    if a <= -1 or b <= -1:
        raise QuadratureError("Gauss-Jacobi needs a, b > -1")
    if int(order) != order or not 1 <= order <= 1024:
        raise QuadratureError("Gauss-Jacobi order must be in [1, 1024]")
    nodes, weights = _gauss_jacobi_cached(int(order), float(a), float(b))
    return QuadratureRule(nodes, weights)


# ---------------------------------------------------------------------------
# Composite rules
# ---------------------------------------------------------------------------

def composite_rule(breakpoints, m: int = 16) -> QuadratureRule:
    """m-point Gauss-Legendre on every panel between consecutive breakpoints."""
    bp = np.asarray(breakpoints, dtype=float)
    if bp.ndim != 1 or len(bp) < 2 or np.any(np.diff(bp) <= 0):
        raise QuadratureError("breakpoints must be strictly increasing")
    gl = gauss_legendre(m)
    lo, hi = bp[:-1, None], bp[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (gl.nodes[None, :] + 1.0)).ravel()
    weights = (half * gl.weights[None, :]).ravel()
    return QuadratureRule(nodes, weights, (float(bp[0]), float(bp[-1])))


def _geometric_offsets(width, ratio, smallest):
    out = []
    d = width
    while d > smallest:
        out.append(d)
        d *= ratio
    return np.array(out[::-1])


def graded_rule(lo: float, hi: float, panels: int = 32, m: int = 16, *,
                grade_lo: bool = False, grade_hi: bool = False,
                lo_exponent: float | None = None, hi_exponent: float | None = None,
                ratio: float = 0.15, smallest: float = 1e-12,
                interior=None) -> QuadratureRule:
    """Composite Gauss-Legendre rule with geometric refinement at the ends.

    ``panels`` uniform panels cover [lo, hi]; a graded end gets extra panels
    shrinking geometrically (``ratio``) down to relative width ``smallest``.
    If an endpoint exponent ``e`` is supplied, the innermost panel at that end
    uses a Gauss-Jacobi rule exact for |t - end|^e times a polynomial.
    ``interior`` adds extra breakpoints (e.g. where the integrand concentrates).
    """
    if not hi > lo:
        raise QuadratureError("need hi > lo")
    length = hi - lo
    bp = list(np.linspace(lo, hi, panels + 1))
    if interior is not None:
        bp.extend(float(v) for v in np.atleast_1d(interior) if lo < v < hi)
    first_panel = length / panels
    if grade_lo or lo_exponent is not None:
        offs = _geometric_offsets(first_panel * ratio, ratio, smallest * length)
        bp.extend(lo + offs)
    if grade_hi or hi_exponent is not None:
        offs = _geometric_offsets(first_panel * ratio, ratio, smallest * length)
        bp.extend(hi - offs)
    bp = np.unique(np.asarray(bp))
    rule = composite_rule(bp, m)
    nodes, weights = [rule.nodes], [rule.weights]
    if lo_exponent is not None:
        # replace panel [bp0, bp1] by Gauss-Jacobi with weight (t - lo)^e
        h = bp[1] - bp[0]
        keep = nodes[0] > bp[1]
        gj = gauss_jacobi(m, 0.0, lo_exponent)
        d = 0.5 * h * (gj.nodes + 1.0)
        t = lo + d
        w = gj.weights * (0.5 * h) ** (lo_exponent + 1.0) / d ** lo_exponent
        nodes = [np.concatenate([t, nodes[0][keep]])]
        weights = [np.concatenate([w, weights[0][keep]])]
    if hi_exponent is not None:
        h = bp[-1] - bp[-2]
        keep = nodes[0] < bp[-2]
        gj = gauss_jacobi(m, hi_exponent, 0.0)
        d = 0.5 * h * (1.0 - gj.nodes)
        t = hi - d
        w = gj.weights * (0.5 * h) ** (hi_exponent + 1.0) / d ** hi_exponent
        nodes = [np.concatenate([nodes[0][keep], t])]
        weights = [np.concatenate([weights[0][keep], w])]
    x, w = nodes[0], weights[0]
    idx = np.argsort(x)
    return QuadratureRule(x[idx], w[idx], (lo, hi))


def halfline_rule(m: int = 16, scale: float = 1.0, panels: int = 48,
                  width: float = 2.0) -> QuadratureRule:
    """Rule for int_0^inf under the map x = -scale*log(1 - t).

    The t-interval is cut at t_k = 1 - exp(-k*width), i.e. geometric grading
    toward t = 1, with m-point Gauss-Legendre on each panel.  In x this is a
    uniform panel rule of spacing scale*width out to panels*width*scale;
    grading in t removes the log singularity that polynomial decay factors
    produce at t = 1 under a single global Gauss rule.
    """
    bp = scale * width * np.arange(panels + 1)
    return replace(composite_rule(bp, m), domain=(0.0, math.inf))


# ---------------------------------------------------------------------------
# Series acceleration
# ---------------------------------------------------------------------------

def wynn_epsilon(partial_sums):
    """Wynn's epsilon algorithm on a sequence of partial sums.

    ``partial_sums`` has the sequence along axis 0; trailing axes are treated
    as independent sequences.  Returns ``(estimate, error_estimate)`` where the
    estimate is the even-column entry whose difference from its neighbour in
    the same column is smallest.
    """
    s = np.asarray(partial_sums, dtype=float)
    scalar = s.ndim == 1
    if scalar:
        s = s[:, None]
    n = s.shape[0]
    best = s[-1].copy()
    best_err = np.abs(s[-1] - s[-2]) if n > 1 else np.full(s.shape[1:], np.inf)
    prev = np.zeros((n + 1,) + s.shape[1:])
    cur = s.copy()
    k = 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        while cur.shape[0] > 1:
            diff = cur[1:] - cur[:-1]
            nxt = prev[1:cur.shape[0]] + 1.0 / diff
            prev, cur = cur, nxt
            k += 1
            if k % 2 == 0 and cur.shape[0] >= 2:
                err = np.abs(cur[-1] - cur[-2])
                ok = np.isfinite(err) & (err < best_err)
                best = np.where(ok, cur[-1], best)
                best_err = np.where(ok, err, best_err)
    if scalar:
        return float(best[0]), float(best_err[0])
    return best, best_err


# ---------------------------------------------------------------------------
# Half-line integration
# ---------------------------------------------------------------------------

def _halfline_exponential(f, tol, scale, m, origin_exponent, max_panels):
    # panels of width 2*scale in x (geometric in t under the log map); march
    # until four consecutive panels are negligible, error from an m/2 rule
    width = 2.0 * scale
    hi_rule = gauss_legendre(m)
    lo_rule = gauss_legendre(max(2, m // 2))

    def panel(k, rule):
        lo = k * width
        if k == 0 and origin_exponent is not None:
            gj = gauss_jacobi(rule.order, 0.0, origin_exponent)
            t = 0.5 * width * (gj.nodes + 1.0)
            vals = np.asarray(f(t), dtype=float) / t ** origin_exponent
            return float(vals @ gj.weights) * (0.5 * width) ** (origin_exponent + 1.0)
        t = lo + 0.5 * width * (rule.nodes + 1.0)
        return float(np.asarray(f(t), dtype=float) @ rule.weights) * 0.5 * width

    total = coarse = 0.0
    quiet = 0
    evals = 0
    for k in range(max_panels):
        v_hi = panel(k, hi_rule)
        v_lo = panel(k, lo_rule)
        evals += hi_rule.order + lo_rule.order
        total += v_hi
        coarse += v_lo
        quiet = quiet + 1 if abs(v_hi) <= 1e-3 * tol else 0
        if quiet >= 4:
            err = abs(total - coarse)
            return IntegralEstimate(total, err, evals, err <= tol)
    return IntegralEstimate(total, abs(total - coarse) + abs(v_hi), evals, False)


def integrate_halfline(f: Callable, decay_hint: str = "exponential", tol: float = 1e-10, *,
                       scale: float = 1.0, x_max: float = 4000.0, tail_constant: float = 1.0,
                       origin_exponent: float | None = None, m: int = 20,
                       max_panels: int = 4000) -> IntegralEstimate:
    """int_0^inf f(x) dx.

    ``decay_hint='exponential'``: x = -s*log(1-t) map with t-panels graded
    geometrically toward t = 1 (uniform x-panels of width 2s), marching until
    the contributions are negligible; the error estimate compares m-point and
    m/2-point panel rules.

    ``decay_hint='oscillatory'``: for integrands oscillating in sqrt(x) with
    algebraic decay (Bessel hard-edge integrands).  With x = t^2 the integral is
    split into half-period panels [k*pi, (k+1)*pi] in t; partial sums are
    accelerated with Wynn's epsilon.  Panels stop at t = sqrt(x_max); if the
    accelerated sum has not settled, ``tail_constant * x_max**-0.25`` is added
    to the error estimate and ``converged`` is False.  ``origin_exponent`` e
    declares f(x) ~ x^e at 0 (e > -1) so the first panel is integrated exactly
    for that power.
    """
    if not tol > 0:
        raise QuadratureError("tol must be positive")
    if decay_hint == "exponential":
        return _halfline_exponential(f, tol, scale, m, origin_exponent, max_panels)
    if decay_hint != "oscillatory":
        raise QuadratureError(f"unknown decay hint {decay_hint!r}")

    gl = gauss_legendre(m)
    t_max = math.sqrt(x_max)

    def g(t):
        t = np.asarray(t, dtype=float)
        return 2.0 * t * np.asarray(f(t * t), dtype=float)

    width = math.pi
    # first panel
    evals = 0
    if origin_exponent is not None:
        e = 2.0 * origin_exponent + 1.0  # g(t) ~ t^e
        gj = gauss_jacobi(m, 0.0, e)
        t = 0.5 * width * (gj.nodes + 1.0)
        vals = g(t) / t ** e
        first = float(vals @ gj.weights) * (0.5 * width) ** (e + 1.0)
    else:
        t = 0.5 * width * (gl.nodes + 1.0)
        first = float(g(t) @ gl.weights) * 0.5 * width
    evals += m
    sums = [first]
    total = first
    est, err = first, math.inf
    k = 1
    block = 16
    while k * width < t_max:
        ks = np.arange(k, min(k + block, int(math.ceil(t_max / width))))
        if len(ks) == 0:
            break
        lo = ks * width
        tt = (lo[:, None] + 0.5 * width * (gl.nodes[None, :] + 1.0)).ravel()
        vals = g(tt).reshape(len(ks), m) @ gl.weights * 0.5 * width
        evals += tt.size
        for v in vals:
            total += float(v)
            sums.append(total)
        k += len(ks)
        if len(sums) >= 12:
            est, err = wynn_epsilon(np.array(sums[-40:]))
            if err <= 0.1 * tol:
                return IntegralEstimate(est, err, evals, True)
    est, err = wynn_epsilon(np.array(sums[-40:]))
    converged = err <= tol
    if not converged:
        err = err + tail_constant * x_max ** -0.25
    return IntegralEstimate(est, err, evals, converged)


# ---------------------------------------------------------------------------
# Double integrals
# ---------------------------------------------------------------------------

def integrate_double(f: Callable, domain, tol: float = 1e-6, *, order: int = 32,
                     max_order: int = 512, panels: int = 4) -> IntegralEstimate:
    """Tensor-product integral of f(X, Y) (vectorised, broadcasting).

    ``domain`` is ((x0, x1), (y0, y1)) with finite ends, or the string
    'quarter-plane' for [0, inf)^2 (exponential map).  The error estimate is
    the change under order doubling.
    """
    if not tol > 0:
        raise QuadratureError("tol must be positive")

    def rules(n):
        if domain == "quarter-plane":
            r = halfline_rule(max(2, n // 4))
            return r, r
        (x0, x1), (y0, y1) = domain
        per = max(2, n // panels)
        rx = composite_rule(np.linspace(x0, x1, panels + 1), per)
        ry = composite_rule(np.linspace(y0, y1, panels + 1), per)
        return rx, ry

    prev = None
    evals = 0
    n = order
    while n <= max_order:
        rx, ry = rules(n)
        vals = np.asarray(f(rx.nodes[:, None], ry.nodes[None, :]), dtype=float)
        vals = np.broadcast_to(vals, (rx.order, ry.order))
        val = float(rx.weights @ vals @ ry.weights)
        evals += rx.order * ry.order
        if prev is not None and abs(val - prev) <= tol:
            return IntegralEstimate(val, abs(val - prev), evals, True)
        prev = val
        n *= 2
    return IntegralEstimate(prev, math.inf if prev is None else abs(val - prev), evals, False)
