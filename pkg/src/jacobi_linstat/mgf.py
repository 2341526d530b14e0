"""Exact finite-N moment-generating functions of linear statistics.

For a test function F and the ensemble's scaling s(x), the generating
function is G(f) = E prod_j (1 + f(x_j)) with f(x) = exp(-lam F(s(x))) - 1.
Each G is a Fredholm determinant of a finite-rank operator sum_i u_i (x) v_i,
so det(I + T) = det(delta_ij + int v_i u_j).  For beta = 1, 4 the
determinant equals G^2.

Left/right families (phi are the ensemble's orthonormal weighted functions):

* beta = 2, rank N:   u_j = phi_j,  v_j = phi_j f.
* beta = 4, rank 2N+2:  u_j = (1-x^2) phi_j,  v_j = phi_j f + (eps phi_j) f'/2
  for j <= 2N; u_{2N+1} = eps phi_{2N+1},
  v_{2N+1} = C_{2N} [phi_{2N} f + (eps phi_{2N}) f'/2].
* beta = 1, rank N+1:  u_j = (1-x^2) phi_j,
  v_j = phi_j (f^2 + 2f) + (eps phi_j) f' + eps(phi_j f) f' for j < N;
  u_N = eps phi_N, v_N = C_N [same with phi_{N-1}].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .ensemble import EnsembleSpec, ParameterError, StatResult, TestFunction
from .kernels import EpsilonTransform, PhiFamily, c_constant, full_kernel
from .quadrature import QuadratureRule, gauss_jacobi, graded_rule

__all__ = [
    "MgfError",
    "MgfRequest",
    "GramDeterminantProblem",
    "TraceLogResult",
    "gram_rule",
    "gram_problem",
    "mgf_exact",
    "log_mgf_exact",
    "nystrom_det",
    "trace_log_terms",
    "cumulants",
    "verify_skew_gram",
]

MAX_N = 200
ENDPOINT_TOL = 1e-10
MIN_SQUARE = 1e-12


class MgfError(ArithmeticError):
    """Numerical failure: negative or tiny [G]^2, endpoint condition, bad grid."""


@dataclass(frozen=True)
class MgfRequest:
    spec: EnsembleSpec
    F: TestFunction
    lam: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.lam):
            raise ParameterError("lambda must be finite")
        if self.spec.N > MAX_N:
            raise ParameterError(f"N above {MAX_N} is not supported")

    def with_lambda(self, lam: float) -> "MgfRequest":
        return MgfRequest(self.spec, self.F, float(lam))


# ---------------------------------------------------------------------------
# Induced functions of x
# ---------------------------------------------------------------------------

def _scaled(spec: EnsembleSpec, F: TestFunction):
    """F(s(x)) and its x-derivative as callables of x."""
    ds = spec.scale_derivative()

    def Fx(x):
        return F(spec.scale(x))

    def dFx(x):
        return F.derivative(spec.scale(x)) * ds

    return Fx, dFx


def _f_pair(spec, F, lam):
    Fx, dFx = _scaled(spec, F)

    def f(x):
        return np.expm1(-lam * Fx(x))

    def df(x):
        return -lam * dFx(x) * np.exp(-lam * Fx(x))

    return f, df


def _check_endpoints(spec, F, lam):
    if spec.beta == 2 or lam == 0:
        return
    f, _ = _f_pair(spec, F, lam)
    ends = np.abs(f(np.array([-1.0, 1.0])))
    if np.any(ends > ENDPOINT_TOL):
        raise MgfError(f"f must vanish at x = +-1 for beta = {spec.beta} "
                       f"(|f(-1)|, |f(1)| = {ends[0]:.2e}, {ends[1]:.2e}); "
                       "use a test function with F(0) = 0 at the edge or faster decay")


# ---------------------------------------------------------------------------
# Quadrature grid for Gram entries
# ---------------------------------------------------------------------------

def _layout(spec, F, refine, full=False):
    """Window and breakpoint sets for the Gram rule (None if the window is empty)."""
    if full or not F.decays:
        x0, x1 = -1.0, 1.0
    else:
        x0, x1 = spec.window(F.support)
    if not x1 > x0:
        return None
    deg = {2: spec.N, 4: 2 * spec.N + 2, 1: spec.N + 1}[spec.beta]
    n_cheb = refine * max(64, 2 * deg)
    cheb = -np.cos(np.pi * np.arange(1, n_cheb) / n_cheb)
    length_s = (x1 - x0) * spec.scale_factor
    n_uni = min(4096, refine * max(8, int(math.ceil(4.0 * length_s))))
    return x0, x1, cheb, n_uni


def gram_rule(spec: EnsembleSpec, F: TestFunction, refine: int = 1, m: int = 16,
              full: bool = False) -> Optional[QuadratureRule]:
    """Composite Gauss-Legendre rule on the support window of f.

    Breakpoints combine Chebyshev-spaced panels (resolving the degree-2N
    functions), uniform panels in the scaled variable (resolving F) and
    geometric grading toward an included endpoint, where the innermost panel is
    Gauss-Jacobi for beta = 2 (exponent a at +1, b at -1).  Returns None when
    the window is empty (F vanishes identically).
    """
    lay = _layout(spec, F, refine, full)
    if lay is None:
        return None
    x0, x1, cheb, n_uni = lay
    lo_exp = hi_exp = None
    if spec.beta == 2:
        lo_exp = spec.b if x0 == -1.0 else None
        hi_exp = spec.a if x1 == 1.0 else None
    return graded_rule(x0, x1, panels=n_uni, m=m,
                       grade_lo=x0 == -1.0, grade_hi=x1 == 1.0,
                       lo_exponent=lo_exp, hi_exponent=hi_exp, interior=cheb,
                       smallest=1e-12)


# ---------------------------------------------------------------------------
# Gram problem
# ---------------------------------------------------------------------------

@dataclass
class GramDeterminantProblem:
    """Finite-rank operator I + sum_i u_i (x) v_i sampled on a rule.

    ``left`` and ``right`` have shape (rank, nodes).
    """

    left: np.ndarray
    right: np.ndarray
    rule: Optional[QuadratureRule]
    beta: int

    @property
    def rank(self) -> int:
        return self.left.shape[0]

    def matrix(self) -> np.ndarray:
        """A_ij = int v_i u_j."""
        if self.rule is None:
            return np.zeros((self.rank, self.rank))
        return (self.right * self.rule.weights) @ self.left.T

    def determinant(self) -> float:
        return float(np.linalg.det(np.eye(self.rank) + self.matrix()))

    def permuted(self, perm) -> "GramDeterminantProblem":
        perm = np.asarray(perm)
        return GramDeterminantProblem(self.left[perm], self.right[perm], self.rule, self.beta)


class _GramBuilder:
    """Caches phi / eps phi on the rule nodes for repeated Gram assembly."""

    def __init__(self, spec: EnsembleSpec, F: TestFunction, refine: int = 1, m: int = 16):
        self.spec = spec
        self.rule = gram_rule(spec, F, refine, m)
        self.family = PhiFamily.for_spec(spec)
        N = spec.N
        if self.rule is None:
            return
        x0, x1, cheb, n_uni = _layout(spec, F, refine)
        self.breakpoints = np.concatenate([np.linspace(x0, x1, n_uni + 1), cheb])
        x = self.rule.nodes
        fam = self.family
        self.phi = fam.values(x)
        if spec.beta != 2:
            self.phi1 = fam.values(x, shift=1.0)  # (1-x^2) phi_j
            self.eps = fam.epsilon(x)
        if spec.beta == 4:
            self.c = c_constant("symplectic", 2 * N, spec.a, spec.b)
        elif spec.beta == 1:
            self.c = c_constant("orthogonal", N, spec.a, spec.b)

    def _eps_phi_times(self, h: Callable, n: int):
        """eps(phi_j h) at the rule nodes for j <= n."""
        fam = self.family
        et = EpsilonTransform(lambda t: fam.poly(t, n) * h(t)[None, :], *fam.exponents,
                              support=self.rule.domain, breakpoints=self.breakpoints,
                              panels=2)
        return et(self.rule.nodes)

    def build(self, mult, dmult=None, eps_inner=None, eps_outer=None) -> GramDeterminantProblem:
        """Left/right families with v = phi*mult + (eps phi)*dmult + eps(phi*eps_inner)*eps_outer."""
        spec, N = self.spec, self.spec.N
        if self.rule is None:
            r = {2: N, 4: 2 * N + 2, 1: N + 1}[spec.beta]
            z = np.zeros((r, 0))
            return GramDeterminantProblem(z, z, None, spec.beta)
        x = self.rule.nodes
        mv = mult(x)
        if spec.beta == 2:
            return GramDeterminantProblem(self.phi, self.phi * mv, self.rule, 2)
        dv = dmult(x)
        if spec.beta == 4:
            top = 2 * N
            left = np.vstack([self.phi1[: top + 1], self.eps[top + 1][None, :]])
            right = self.phi[: top + 1] * mv + self.eps[: top + 1] * dv
            extra = self.c * right[top]
            return GramDeterminantProblem(left, np.vstack([right, extra[None, :]]), self.rule, 4)
        # beta = 1
        left = np.vstack([self.phi1[:N], self.eps[N][None, :]])
        right = self.phi[:N] * mv + self.eps[:N] * dv
        if eps_inner is not None:
            right = right + self._eps_phi_times(eps_inner, N - 1) * eps_outer(x)
        extra = self.c * right[N - 1]
        return GramDeterminantProblem(left, np.vstack([right, extra[None, :]]), self.rule, 1)


def _mgf_functions(spec, f, df):
    """(mult, dmult, eps_inner, eps_outer) for the generating-function Gram."""
    if spec.beta == 2:
        return f, None, None, None
    if spec.beta == 4:
        return f, (lambda x: 0.5 * df(x)), None, None
    return (lambda x: f(x) * (f(x) + 2.0)), df, f, df


def gram_problem(req: MgfRequest, refine: int = 1, m: int = 16,
                 _builder: Optional[_GramBuilder] = None) -> GramDeterminantProblem:
    """Assemble the finite-rank problem whose determinant is G (beta=2) or G^2."""
    spec = req.spec
    _check_endpoints(spec, req.F, req.lam)
    builder = _builder or _GramBuilder(spec, req.F, refine, m)
    f, df = _f_pair(spec, req.F, req.lam)
    return builder.build(*_mgf_functions(spec, f, df))


def _det_to_mgf(det, beta):
    if beta == 2:
        return det
    if not det > MIN_SQUARE:
        raise MgfError(f"[G]^2 = {det:.3e} is not positive; quadrature failure")
    return math.sqrt(det)


def mgf_exact(req: MgfRequest, refine: int = 1, m: int = 16) -> float:
    """G_N(f) = E prod (1 + f(x_j)) from the Gram determinant."""
    if req.lam == 0:
        return 1.0
    det = gram_problem(req, refine, m).determinant()
    return _det_to_mgf(det, req.spec.beta)


def log_mgf_exact(req: MgfRequest, refine: int = 1, m: int = 16) -> float:
    g = mgf_exact(req, refine, m)
    if not g > 0:
        raise MgfError("generating function is not positive")
    return math.log(g)


# ---------------------------------------------------------------------------
# Nystrom oracle
# ---------------------------------------------------------------------------

def nystrom_det(req: MgfRequest, order: int = 512) -> float:
    """det(I + T) by Nystrom discretisation of the full operator.

    T is assembled pointwise from the full finite-N kernel K:

    * beta = 2:  T(x, y) = K(x, y) f(y)
    * beta = 4:  T = 2 K f - K eps f'
    * beta = 1:  T = K (f^2 + 2f) - K eps f' - K f eps f'

    where (K eps)(x, y) = -[eps K(x, .)](y) and (K f eps)(x, y) =
    -[eps (K(x, .) f)](y) are obtained by applying the eps engine to the
    functions z -> K(x_i, z) (times f) for every grid node x_i.  Only the
    window where f, f' are non-zero contributes.  For beta = 1, 4 the result
    is [G]^2.
    """
    if order < 64:
        raise ParameterError("Nystrom order must be at least 64")
    spec = req.spec
    if req.lam == 0:
        return 1.0
    _check_endpoints(spec, req.F, req.lam)
    rule = _nystrom_rule(spec, req.F, order)
    if rule is None:
        return 1.0
    x, w = rule.nodes, rule.weights
    f, df = _f_pair(spec, req.F, req.lam)
    fx, dfx = f(x), df(x)
    K = full_kernel(spec, x[:, None], x[None, :])
    if spec.beta == 2:
        T = K * fx[None, :]
    else:
        fam = PhiFamily.for_spec(spec)
        coef = _kernel_coefficients(spec, fam, x)  # K(x_i, z) = coef_i . poly(z) w(z)
        ek = EpsilonTransform(lambda t: coef @ fam.poly(t), *fam.exponents,
                              panels=max(512, 4 * (fam.max_degree + 1)))
        k_eps = -ek(x)  # (K eps)(x_i, y_k)
        if spec.beta == 4:
            T = 2.0 * K * fx[None, :] - k_eps * dfx[None, :]
        else:
            ekf = EpsilonTransform(lambda t: (coef @ fam.poly(t)) * f(t)[None, :],
                                   *fam.exponents, support=rule.domain,
                                   panels=max(512, 4 * (fam.max_degree + 1)))
            kf_eps = -ekf(x)
            T = K * (fx * (fx + 2.0))[None, :] - k_eps * dfx[None, :] - kf_eps * dfx[None, :]
    sw = np.sqrt(w)
    A = sw[:, None] * T * sw[None, :]
    mat = np.eye(len(x)) + A
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or cond > 1e12:
        raise MgfError(f"ill-conditioned Nystrom matrix (cond {cond:.2e})")
    return float(np.linalg.det(mat))


def _nystrom_rule(spec, F, order, m=16):
    """Graded Gauss-Legendre rule with about ``order`` nodes on the window of f."""
    if F.decays:
        x0, x1 = spec.window(F.support)
    else:
        x0, x1 = -1.0, 1.0
    if not x1 > x0:
        return None
    grade_lo, grade_hi = x0 == -1.0, x1 == 1.0
    n_grade = 12 * (grade_lo + grade_hi)
    panels = max(4, order // m - n_grade)
    return graded_rule(x0, x1, panels=panels, m=m, grade_lo=grade_lo, grade_hi=grade_hi,
                       smallest=1e-10)


def _kernel_coefficients(spec, fam, x):
    """Coefficients c_ij with K(x_i, z) = sum_j c_ij p_j(z) w(z)."""
    N = spec.N
    phi1 = fam.values(x, shift=1.0)  # (deg+1, n)
    coef = np.zeros((len(x), fam.max_degree + 1))
    if spec.beta == 4:
        coef[:, : 2 * N + 1] = 0.5 * phi1[: 2 * N + 1].T
        c = c_constant("symplectic", 2 * N, spec.a, spec.b)
        coef[:, 2 * N] += 0.5 * c * fam.epsilon(x)[2 * N + 1]
    else:
        coef[:, :N] = phi1[:N].T
        c = c_constant("orthogonal", N, spec.a, spec.b)
        coef[:, N - 1] += c * fam.epsilon(x)[N]
    return coef


# ---------------------------------------------------------------------------
# Trace-log expansion
# ---------------------------------------------------------------------------

@dataclass
class TraceLogResult:
    traces: list
    partial_sums: list
    spectral_radius: float
    reliable: bool
    log_det: float


def trace_log_terms(req: MgfRequest, k_max: int = 4, refine: int = 1) -> TraceLogResult:
    """Tr T^k for k = 1..k_max and the partial sums of log det(I + T).

    The traces are those of the Gram matrix, whose non-zero spectrum equals
    that of T.  ``reliable`` is False when the spectral radius is >= 1.
    """
    if not 1 <= k_max <= 6:
        raise ParameterError("k_max must be between 1 and 6")
    prob = gram_problem(req, refine)
    A = prob.matrix()
    traces, sums = [], []
    P = np.eye(A.shape[0])
    total = 0.0
    for k in range(1, k_max + 1):
        P = P @ A
        t = float(np.trace(P))
        traces.append(t)
        total += (-1) ** (k + 1) * t / k
        sums.append(total)
    rho = float(np.max(np.abs(np.linalg.eigvals(A)))) if A.size else 0.0
    sign, logdet = np.linalg.slogdet(np.eye(A.shape[0]) + A)
    return TraceLogResult(traces, sums, rho, rho < 1.0,
                          float(logdet) if sign > 0 else math.nan)


# ---------------------------------------------------------------------------
# Cumulants
# ---------------------------------------------------------------------------

def _trace_cumulants(spec, F, builder):
    """Mean and variance from the small-lambda expansion of the Gram matrix."""
    Fx, dFx = _scaled(spec, F)
    if spec.beta == 2:
        A1 = builder.build(Fx).matrix()
        A2 = builder.build(lambda x: Fx(x) ** 2).matrix()
        return float(np.trace(A1)), float(np.trace(A2) - np.sum(A1 * A1.T))
    if spec.beta == 4:
        A = builder.build(Fx, lambda x: 0.5 * dFx(x)).matrix()
        A_sq = builder.build(lambda x: Fx(x) ** 2, lambda x: Fx(x) * dFx(x)).matrix()
        return 0.5 * float(np.trace(A)), 0.5 * float(np.trace(A_sq) - np.sum(A * A.T))
    A1 = builder.build(lambda x: -2.0 * Fx(x), lambda x: -dFx(x)).matrix()
    A2 = builder.build(lambda x: 2.0 * Fx(x) ** 2, lambda x: Fx(x) * dFx(x),
                       Fx, dFx).matrix()
    return -0.5 * float(np.trace(A1)), float(np.trace(A2)) - 0.5 * float(np.sum(A1 * A1.T))


def _richardson(values):
    """Richardson table for estimates with error series in h^2, h^4, ..."""
    table = [list(values)]
    for k in range(1, len(values)):
        prev = table[-1]
        fac = 4.0 ** k
        table.append([(fac * prev[i + 1] - prev[i]) / (fac - 1.0) for i in range(len(prev) - 1)])
    return table


def cumulants(spec: EnsembleSpec, F: TestFunction, method: str = "auto", *,
              h: float = 1e-3, levels: int = 3, refine: int = 1,
              rel_tol: float = 1e-6) -> StatResult:
    """Mean and variance of sum_j F(s(x_j)) at finite N.

    ``method='trace'`` uses the closed trace forms from the lambda-expansion
    of the Gram matrix; ``method='fd'`` uses Richardson-extrapolated central
    differences of log G in lambda (steps h, h/2, h/4 for ``levels=3``).
    ``auto`` picks trace for beta = 2 and fd otherwise.  The result's
    ``details['unstable']`` flags disagreement between the last two
    Richardson levels beyond ``rel_tol``.
    """
    if method == "auto":
        method = "trace" if spec.beta == 2 else "fd"
    builder = _GramBuilder(spec, F, refine)
    if builder.rule is None:
        return StatResult(0.0, 0.0, provenance="exact-N", details=dict(method=method))
    if method == "trace":
        mean, var = _trace_cumulants(spec, F, builder)
        return StatResult(mean, var, 1e-12 * max(1.0, abs(mean)), 1e-12 * max(1.0, abs(var)),
                          "exact-N", details=dict(method="trace", N=spec.N))
    if method != "fd":
        raise ParameterError("method must be 'auto', 'trace' or 'fd'")

    def logg(lam):
        req = MgfRequest(spec, F, lam)
        det = gram_problem(req, _builder=builder).determinant()
        g = _det_to_mgf(det, spec.beta)
        return math.log(g)

    steps = [h / 2 ** k for k in range(levels)]
    d1, d2 = [], []
    for s in steps:
        gp, gm = logg(s), logg(-s)
        d1.append((gp - gm) / (2 * s))
        d2.append((gp + gm) / (s * s))  # log G(0) = 0
    t1, t2 = _richardson(d1), _richardson(d2)
    mean, var = -t1[-1][0], t2[-1][0]
    err_m = abs(t1[-1][0] - t1[-2][-1]) if levels > 1 else math.inf
    err_v = abs(t2[-1][0] - t2[-2][-1]) if levels > 1 else math.inf
    unstable = err_m > rel_tol * max(1.0, abs(mean)) or err_v > rel_tol * max(1.0, abs(var))
    return StatResult(mean, var, err_m, err_v, "exact-N",
                      details=dict(method="fd", N=spec.N, h=h, levels=levels,
                                   unstable=bool(unstable)))


# ---------------------------------------------------------------------------
# Skew-orthogonal structure check
# ---------------------------------------------------------------------------

def _block_identity(n):
    J = np.zeros((n, n))
    for i in range(0, n - 1, 2):
        J[i, i + 1] = 1.0
        J[i + 1, i] = -1.0
    return J


@dataclass
class SkewGramReport:
    matrix: np.ndarray
    deviation: float
    antisymmetry: float


def _half_rule(side, e, m):
    """Nodes/weights with sum w g(x) = int over the half-interval of d^e g.

    side 'hi' is [0, 1] with d = 1 - x; 'lo' is [-1, 0] with d = 1 + x.
    """
    if side == "hi":
        r = gauss_jacobi(m, e, 0.0)
        return 0.5 * (1.0 + r.nodes), r.weights * 2.0 ** (-e - 1.0)
    r = gauss_jacobi(m, 0.0, e)
    return 0.5 * (r.nodes - 1.0), r.weights * 2.0 ** (-e - 1.0)


class _EndpointBasis:
    """Functions built from one weighted family, split at x = 0 into pieces d^e g.

    Every function is a dict side -> list of (exponent, g) with g analytic on
    that half (g maps x of shape (n,) to (degrees, n)).
    """

    def __init__(self, fam: PhiFamily, m: int = 40):
        self.fam = fam
        self.m = m
        self.n = fam.max_degree
        self.pa, self.pb = fam.poly_params
        self.ea, self.eb = fam.exponents
        tot = gauss_jacobi(m, self.ea, self.eb)
        self.T = fam.poly(tot.nodes) @ tot.weights  # int phi_j

    def _p(self, x):
        return self.fam.poly(x, self.n)

    def _dp(self, x):
        from .specfun import jacobi_orthonormal_deriv_all
        return jacobi_orthonormal_deriv_all(self.n, self.pa, self.pb, x)

    def _own(self, side):
        return self.ea if side == "hi" else self.eb

    def _other(self, side, x, shift=0.0):
        # remaining weight factor, analytic on the half
        if side == "hi":
            return (1.0 + x) ** (self.eb + shift)
        return (1.0 - x) ** (self.ea + shift)

    def phi(self):
        return {s: [(self._own(s), lambda x, s=s: self._p(x) * self._other(s, x))]
                for s in ("lo", "hi")}

    def phi1(self):
        """(1 - x^2) phi_j."""
        return {s: [(self._own(s) + 1.0, lambda x, s=s: self._p(x) * self._other(s, x, 1.0))]
                for s in ("lo", "hi")}

    def dphi1(self):
        """d/dx (1 - x^2) phi_j from differentiated recurrences."""
        out = {}
        for s in ("lo", "hi"):
            e = self._own(s)
            sg = -1.0 if s == "hi" else 1.0  # d'(x)
            oe = (self.eb if s == "hi" else self.ea) + 1.0
            osg = 1.0 if s == "hi" else -1.0  # derivative sign of the other factor base

            def g(x, s=s, e=e, sg=sg, oe=oe, osg=osg):
                d = 1.0 - x if s == "hi" else 1.0 + x
                p, dp = self._p(x), self._dp(x)
                G = p * self._other(s, x, 1.0)
                dG = dp * self._other(s, x, 1.0) + p * osg * oe * self._other(s, x, 0.0)
                return (e + 1.0) * sg * G + d * dG

            out[s] = [(e, g)]
        return out

    def eps_phi(self):
        """eps phi_j = +-T_j/2 plus d^{e+1} times a tail cofactor."""
        gs = gauss_jacobi(self.m, 0.0, self.ea)
        sh, wh = 0.5 * (1.0 + gs.nodes), gs.weights * 2.0 ** (-self.ea - 1.0)
        gl = gauss_jacobi(self.m, 0.0, self.eb)
        sl, wl = 0.5 * (1.0 + gl.nodes), gl.weights * 2.0 ** (-self.eb - 1.0)
        half_T = 0.5 * self.T

        def tail_hi(x):
            # int_x^1 phi = (1-x)^{ea+1} int_0^1 s^ea p(t) (1+t)^eb ds, t = 1-(1-x)s
            d = (1.0 - x)[:, None] * sh[None, :]
            t = 1.0 - d
            v = self._p(t.ravel()).reshape(-1, *t.shape) * (2.0 - d) ** self.eb
            return -(v @ wh)

        def tail_lo(x):
            d = (1.0 + x)[:, None] * sl[None, :]
            t = -1.0 + d
            v = self._p(t.ravel()).reshape(-1, *t.shape) * (2.0 - d) ** self.ea
            return v @ wl

        const_hi = lambda x: np.repeat(half_T[:, None], len(x), axis=1)
        const_lo = lambda x: np.repeat(-half_T[:, None], len(x), axis=1)
        return {"hi": [(0.0, const_hi), (self.ea + 1.0, tail_hi)],
                "lo": [(0.0, const_lo), (self.eb + 1.0, tail_lo)]}

    def pair(self, A, B, rows, cols):
        """Matrix of int A_i B_k over [-1, 1] for the listed degrees."""
        out = np.zeros((len(rows), len(cols)))
        for s in ("lo", "hi"):
            for ea, ga in A[s]:
                for eb, gb in B[s]:
                    x, w = _half_rule(s, ea + eb, self.m)
                    out += (ga(x)[rows] * w) @ gb(x)[cols].T
        return out


def verify_skew_gram(beta: int, N: int, a: float, b: float, full_output: bool = False):
    """Max deviation of the skew pairing matrix from the block form [[0,1],[-1,0]].

    beta = 4: M_jk = int (psi_j psi_k' - psi_k psi_j'), j, k < 2N, with
    psi_{2i+1} = (1-x^2) phi_{2i+1} / sqrt2 and psi_{2i} = -eps phi_{2i+1} / sqrt2.
    beta = 1: M_jk = int psi_j eps psi_k, j, k < N, with psi_{2i} = phi_{2i},
    psi_{2i+1} = [(1-x^2) phi_{2i}]' and eps psi_{2i+1} = (1-x^2) phi_{2i}.

    Integrals are split at x = 0; on each half every factor is written as
    (distance to the endpoint)^e times an analytic function and each product is
    integrated by Gauss-Jacobi with the summed exponent.
    """
    if beta not in (1, 4):
        raise ParameterError("skew structure exists for beta = 1, 4 only")
    spec = EnsembleSpec(beta, a, b, N)
    eb = _EndpointBasis(PhiFamily.for_spec(spec))
    s2 = 0.5  # product of two 1/sqrt2 factors
    if beta == 4:
        n = 2 * N
        odd = np.arange(1, n, 2)
        M = np.zeros((n, n))
        phi, phi1, dphi1, eps = eb.phi(), eb.phi1(), eb.dphi1(), eb.eps_phi()
        # psi_odd = phi1/sqrt2, psi_odd' = dphi1/sqrt2; psi_even = -eps/sqrt2, psi_even' = -phi/sqrt2
        oo = eb.pair(phi1, dphi1, odd, odd) * s2
        M[1::2, 1::2] = oo - oo.T
        oe = -eb.pair(phi1, phi, odd, odd) * s2  # int psi_odd psi_even'
        eo = -eb.pair(eps, dphi1, odd, odd) * s2  # int psi_even psi_odd'
        M[1::2, 0::2] = oe - eo.T
        M[0::2, 1::2] = eo - oe.T
        ee = eb.pair(eps, phi, odd, odd) * s2  # int psi_even psi_even'
        M[0::2, 0::2] = ee - ee.T
    else:
        n = N
        even = np.arange(0, n, 2)
        M = np.zeros((n, n))
        phi, phi1, dphi1, eps = eb.phi(), eb.phi1(), eb.dphi1(), eb.eps_phi()
        M[0::2, 0::2] = eb.pair(phi, eps, even, even)
        M[0::2, 1::2] = eb.pair(phi, phi1, even, even)
        M[1::2, 0::2] = eb.pair(dphi1, eps, even, even)
        M[1::2, 1::2] = eb.pair(dphi1, phi1, even, even)
    J = _block_identity(n)
    dev = float(np.max(np.abs(M - J)))
    anti = float(np.max(np.abs(M + M.T)))
    if full_output:
        return SkewGramReport(M, dev, anti)
    return dev
