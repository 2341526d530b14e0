"""Large-N predictions for the mean and variance of scaled linear statistics.

Bulk predictions use the sine kernel, hard-edge predictions the Bessel kernel
of order a (JUE), a-1 (JSE) or a+1 (JOE) together with

    Jb(x) = int_0^{sqrt x} J_alpha(t) dt,  E(x) = 1 - 2 Jb(x),
    L(x, y) = int_0^x sqrt(y/z) K_B(y, z) dz - int_x^inf sqrt(y/z) K_B(y, z) dz.

Every prediction carries its individual terms so that each can be checked
separately.  Bulk double integrals over x, y are reduced to single integrals
in u = y - x of correlation functions of F and F'.  Edge integrals use a
composite Gauss-Legendre rule in t = sqrt(x), graded toward the origin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre

from .ensemble import ParameterError, TestFunction
from .kernels import _bessel_kernel_outer, bessel_kernel, l_kernel
from .quadrature import QuadratureError, gauss_legendre
from .specfun import bessel_j, bessel_j_integral, sine_integral

__all__ = [
    "StatPrediction",
    "jue_bulk",
    "jue_edge",
    "jse_bulk",
    "jse_edge",
    "joe_bulk",
    "joe_edge",
    "predict",
]

_M = 16


@dataclass
class StatPrediction:
    """Limiting mean and variance with a per-term breakdown."""

    mean: float
    variance: float
    quadrature_error: float
    regime: str
    ensemble: str
    order_parameter: float | None = None
    mean_terms: dict = field(default_factory=dict)
    variance_terms: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return dict(mean=self.mean, variance=self.variance,
                    quadrature_error=self.quadrature_error, regime=self.regime,
                    ensemble=self.ensemble, order_parameter=self.order_parameter,
                    mean_terms=dict(self.mean_terms),
                    variance_terms=dict(self.variance_terms))


def _composite(breaks, m=_M):
    breaks = np.asarray(breaks, dtype=float)
    gl = gauss_legendre(m)
    lo, hi = breaks[:-1], breaks[1:]
    half = 0.5 * (hi - lo)
    x = (lo[:, None] + half[:, None] * (gl.nodes[None, :] + 1.0)).ravel()
    w = (half[:, None] * gl.weights[None, :]).ravel()
    return x, w


def _check_support(F: TestFunction, regime: str):
    if not F.decays:
        raise ParameterError(f"{F.name!r} does not decay; not admissible for asymptotics")
    if regime not in F.domain:
        raise ParameterError(f"{F.name!r} is not meant for the {regime} regime")


def _is_zero(F):
    return F.support[1] <= F.support[0]


def _zero_prediction(regime, ensemble, order=None):
    return StatPrediction(0.0, 0.0, 0.0, regime, ensemble, order)


# ---------------------------------------------------------------------------
# Bulk
# ---------------------------------------------------------------------------

def _bulk_parts(F: TestFunction, width: float):
    """Correlation integrals needed by the bulk predictions.

    Returns int F, int F^2, int sinc^2(u) C(u) du, int Si^2(u) C'(u) du and
    int sgn(u) sinc(u) D(u) du with C(u) = int F(y+u) F(y) dy,
    C'(u) = int F'(y+u) F'(y) dy and D(u) = int F(x+u) F'(x) dx.
    """
    lo, hi = F.support
    W = hi - lo
    n_pan = max(8, int(math.ceil(W / width)))
    y, wy = _composite(np.linspace(lo, hi, n_pan + 1))
    # u in [-W, W] with a breakpoint at 0
    u_pos, wu_pos = _composite(np.linspace(0.0, W, n_pan + 1))
    u = np.concatenate([-u_pos[::-1], u_pos])
    wu = np.concatenate([wu_pos[::-1], wu_pos])
    Fy, dFy = F(y), F.derivative(y)
    shifted = y[None, :] + u[:, None]
    C = F(shifted) @ (wy * Fy)
    Cd = F.derivative(shifted) @ (wy * dFy)
    D = F(shifted) @ (wy * dFy)
    sinc = np.sinc(u / math.pi) / math.pi  # sin(u) / (pi u)
    si = sine_integral(u)
    return dict(
        int_F=float(wy @ Fy),
        int_F2=float(wy @ Fy ** 2),
        k2=float(wu @ (sinc ** 2 * C)),
        si2=float(wu @ (si ** 2 * Cd)),
        chi=float(wu @ (np.sign(u) * sinc * D)),
    )


def _bulk(F, ensemble, disable_chi=False, width=0.125):
    _check_support(F, "bulk")
    if _is_zero(F):
        return _zero_prediction("bulk", ensemble)
    fine = _bulk_terms(_bulk_parts(F, width), ensemble, disable_chi)
    coarse = _bulk_terms(_bulk_parts(F, 2 * width), ensemble, disable_chi)
    err = max(abs(fine[0] - coarse[0]), abs(fine[1] - coarse[1]))
    mean_terms, var_terms = fine[2], fine[3]
    return StatPrediction(fine[0], fine[1], err, "bulk", ensemble, None, mean_terms, var_terms)


def _bulk_terms(p, ensemble, disable_chi):
    mean_jue = p["int_F"] / math.pi
    var_jue = p["int_F2"] / math.pi - p["k2"]
    if ensemble == "JUE":
        mt = dict(sine_density=mean_jue)
        vt = dict(sine_diagonal=p["int_F2"] / math.pi, sine_squared=-p["k2"])
    elif ensemble == "JSE":
        mt = dict(half_jue=0.5 * mean_jue)
        vt = dict(half_jue=0.5 * var_jue, si_squared=-p["si2"] / (8.0 * math.pi ** 2))
    else:
        mt = dict(jue=mean_jue)
        vt = dict(twice_jue=2.0 * var_jue,
                  chi=0.0 if disable_chi else -0.5 * p["chi"],
                  si_squared=-p["si2"] / (2.0 * math.pi ** 2))
    return sum(mt.values()), sum(vt.values()), mt, vt


def jue_bulk(F: TestFunction) -> StatPrediction:
    """mean = (1/pi) int F; variance = (1/pi) int F^2 - int int K_sine^2 F F."""
    return _bulk(F, "JUE")


def jse_bulk(F: TestFunction) -> StatPrediction:
    """Half the JUE mean; half the JUE variance minus (1/8pi^2) int int Si^2(x-y) F' F'."""
    return _bulk(F, "JSE")


def joe_bulk(F: TestFunction, disable_chi: bool = False) -> StatPrediction:
    """JUE mean; twice the JUE variance minus the sign term and (1/2pi^2) int int Si^2 F' F'.

    The sign term is (1/2) int [int sgn(y-x) K_sine(x,y) F(y) dy] F'(x) dx.
    """
    return _bulk(F, "JOE", disable_chi)


# ---------------------------------------------------------------------------
# Hard edge
# ---------------------------------------------------------------------------

def _edge_breaks(t_max, width, grade=1e-7, ratio=0.2):
    """Panel breakpoints on [0, t_max]: uniform of ``width``, graded toward t = 0."""
    n_pan = max(4, int(math.ceil(t_max / width)))
    bp = list(np.linspace(0.0, t_max, n_pan + 1))
    d = bp[1] * ratio
    while d > grade * t_max:
        bp.append(d)
        d *= ratio
    return np.unique(bp)


def _edge_rule(t_max, width, grade=1e-7, ratio=0.2):
    """Rule in t on [0, t_max], uniform panels of ``width`` graded toward t = 0."""
    return _composite(_edge_breaks(t_max, width, grade, ratio))


def _cumulative_weights(breaks, m=_M):
    """W with (W @ h)[k] = int_0^{t_k} h(t) dt for h sampled on the composite rule.

    Within a panel the integral up to a node uses the Legendre interpolant of
    the panel's m samples (spectral integration matrix).
    """
    gl = gauss_legendre(m)
    V = legendre.legvander(gl.nodes, m - 1)
    eye = np.eye(m)
    Vint = np.stack([legendre.legval(gl.nodes, legendre.legint(eye[k], lbnd=-1))
                     for k in range(m)], axis=1)
    Q = Vint @ np.linalg.inv(V)
    half = 0.5 * np.diff(breaks)
    n_pan = len(half)
    W = np.zeros((n_pan * m, n_pan * m))
    for p in range(n_pan):
        rows = slice(p * m, (p + 1) * m)
        W[rows, :p * m] = np.repeat(half[:p], m) * np.tile(gl.weights, p)
        W[rows, rows] = half[p] * Q
    return W


class _EdgeGrid:
    """Quadrature grid on x = t^2 with everything the edge terms need."""

    def __init__(self, F, alpha, width, disable_L=False):
        self.breaks = _edge_breaks(math.sqrt(F.support[1]), width)
        t, wt = _composite(self.breaks)
        self.alpha = alpha
        self.t = t
        self.x = t * t
        self.wt = wt
        self.w = 2.0 * t * wt  # dx = 2 t dt
        self.F = F(self.x)
        self.dF = F.derivative(self.x)
        self.K = _bessel_kernel_outer(alpha, self.x, self.x)
        self.Kd = np.diag(self.K).copy()
        self.j = bessel_j(alpha, t)
        self.E = 1.0 - 2.0 * bessel_j_integral(alpha, t)
        if disable_L:
            self.L = np.zeros_like(self.K)
        else:
            L, err = l_kernel(alpha, self.x[:, None], self.x[None, :], tol=1e-6,
                              full_output=True)
            self.L = L
            self.l_error = float(np.max(err))
        self.Ld = np.diag(self.L).copy()
        self._cum = None

    def single(self, v):
        return float(self.w @ v)

    def double(self, M):
        return float(self.w @ M @ self.w)

    @property
    def cumulative(self):
        """Matrix W with (W @ h)[k] = int_0^{t_k} h(t) dt."""
        if self._cum is None:
            self._cum = _cumulative_weights(self.breaks)
        return self._cum

    def sign_inner(self, func):
        """P(x_i) = int_0^inf sgn(y - x_i) g_i(y) dy for g_i(t^2) 2t = func(x_i, t)."""
        H = func(self.x[:, None], self.t[None, :])
        return H @ self.wt - 2.0 * np.sum(H * self.cumulative, axis=1)


def _jue_edge_parts(g: _EdgeGrid):
    mean = g.single(g.Kd * g.F)
    diag = g.single(g.Kd * g.F ** 2)
    sq = g.double(g.K ** 2 * np.outer(g.F, g.F))
    return mean, diag, sq


# Far-endpoint constants: eps phi_j near x = 1 tends to (E + (-1)^j) times the
# edge scale, the (-1)^j coming from the reflected endpoint x = -1.  The
# printed limits keep only E, which is the sigma = 0 case below.
_SIGMA = {"JSE": (-1.0, 1.0), "JOE": (1.0, -1.0)}


def _edge_operator(g: _EdgeGrid, ensemble, sigma):
    """Mean and variance from the limiting finite-rank trace formulas.

    ``sigma`` = (s_x, s_z) are the endpoint constants of the eps phi factors
    carried by the first and second kernel argument.
    """
    sx_, sz_ = sigma
    sx = np.sqrt(g.x)
    S = (sx[:, None] / sx[None, :]) * g.K
    Fv, dF, w = g.F, g.dF, g.w
    if ensemble == "JSE":
        K = 0.5 * S + np.outer(g.E + sx_, g.j / sx) / 16.0
        Ke = 0.25 * g.L.T - np.outer(g.E + sx_, g.E + sz_) / 16.0
        T1 = (2.0 * K * Fv + Ke * dF) * w
        T2 = (2.0 * K * Fv ** 2 + 2.0 * Ke * (Fv * dF)) * w
        return 0.5 * np.trace(T1), 0.5 * (np.trace(T2) - np.sum(T1 * T1.T))
    K = S + np.outer(g.E + sx_, g.j / sx) / 8.0
    Ke = 0.5 * g.L.T - np.outer(g.E + sx_, g.E + sz_) / 8.0
    H = K * (2.0 * g.t * Fv)
    KFe = H @ g.cumulative.T - 0.5 * (H @ g.wt)[:, None]
    T1 = (-2.0 * K * Fv - Ke * dF) * w
    T2 = (2.0 * K * Fv ** 2 + Ke * (Fv * dF) + KFe * dF) * w
    return -0.5 * np.trace(T1), np.trace(T2) - 0.5 * np.sum(T1 * T1.T)


def _edge_terms(F, ensemble, alpha, width, disable_L, disable_chi, form):
    g = _EdgeGrid(F, alpha, width, disable_L)
    mu, diag, sq = _jue_edge_parts(g)
    var_jue = diag - sq
    x, Fv, dF, K, L, j, E = g.x, g.F, g.dF, g.K, g.L, g.j, g.E
    sx = np.sqrt(x)
    root_ratio = sx[:, None] / sx[None, :]  # sqrt(x/y)
    Lt = L.T
    if ensemble == "JUE":
        mt = dict(bessel_density=mu)
        vt = dict(bessel_diagonal=diag, bessel_squared=-sq)
    elif ensemble == "JSE":
        mt = dict(half_jue=0.5 * mu, l_diagonal=g.single(g.Ld * dF) / 8.0)
        vt = dict(
            half_jue=0.5 * var_jue,
            k_l=-0.25 * g.double(root_ratio * K * L * np.outer(dF, Fv)),
            j_k_e=-0.125 * g.double((j[:, None] / sx[None, :]) * K
                                    * (E * Fv)[:, None] * Fv[None, :]),
            j_e_l_antisym=g.double((j / sx * Fv)[:, None] * (E * dF)[None, :] * (L - Lt)) / 32.0,
            l_l=-g.double(L * Lt * np.outer(dF, dF)) / 32.0,
            e_e_l=-g.double((E * dF)[:, None] * (E * dF)[None, :] * L) / 64.0,
            l_diagonal=0.25 * g.single(g.Ld * Fv * dF),
        )
    else:
        def chi_k(xx, tt):
            # sqrt(x/y) K(x, y) F(y) dy with y = t^2: 2 sqrt(x) K(x, t^2) F(t^2) dt
            return 2.0 * np.sqrt(xx) * bessel_kernel(alpha, xx, tt * tt) * F(tt * tt)

        def chi_j(xx, tt):
            # J(sqrt y)/sqrt(y) F(y) dy = 2 J(t) F(t^2) dt
            return np.broadcast_to(2.0 * bessel_j(alpha, tt) * F(tt * tt),
                                   np.broadcast_shapes(np.shape(xx), np.shape(tt)))

        if disable_chi:
            chi1 = chi2 = 0.0
        else:
            chi1 = -0.5 * g.single(g.sign_inner(chi_k) * dF)
            chi2 = -g.single(g.sign_inner(chi_j) * j / sx * Fv) / 16.0
        mt = dict(jue=mu, l_diagonal=0.25 * g.single(g.Ld * dF))
        vt = dict(
            twice_jue=2.0 * var_jue,
            l_diagonal=0.5 * g.single(g.Ld * Fv * dF),
            chi_k=chi1,
            chi_j=chi2,
            j_k_e=-0.5 * g.double((j[:, None] / sx[None, :]) * K * Fv[:, None]
                                  * (E * Fv)[None, :]),
            j_e_l_antisym=g.double((j / sx * Fv)[:, None] * (E * dF)[None, :] * (L - Lt)) / 8.0,
            l_l=-g.double(L * Lt * np.outer(dF, dF)) / 8.0,
            e_e_l=-g.double((E * dF)[:, None] * (E * dF)[None, :] * L) / 16.0,
            k_l=-g.double(root_ratio * K * L * np.outer(dF, Fv)),
        )
    if ensemble != "JUE" and form == "corrected":
        if ensemble == "JSE":
            # the j_k_e term with E evaluated at y, where the kernel expansion puts it
            vt["j_k_e_argument"] = -0.125 * g.double(
                (j[:, None] / sx[None, :]) * K * Fv[:, None] * (E * Fv)[None, :]) - vt["j_k_e"]
        m0, v0 = _edge_operator(g, ensemble, (0.0, 0.0))
        m1, v1 = _edge_operator(g, ensemble, _SIGMA[ensemble])
        mt["far_endpoint"] = float(m1 - m0)
        vt["far_endpoint"] = float(v1 - v0)
    return sum(mt.values()), sum(vt.values()), mt, vt


_FORMS = ("corrected", "verbatim")


def _edge(F, ensemble, alpha, disable_L=False, disable_chi=False, form="corrected",
          width=0.25):
    _check_support(F, "edge")
    if alpha <= -1:
        raise ParameterError(f"Bessel order {alpha:g} must exceed -1")
    if form not in _FORMS:
        raise ParameterError(f"form must be one of {_FORMS}")
    if _is_zero(F):
        return _zero_prediction("edge", ensemble, alpha)
    if ensemble != "JUE" and not F.edge_admissible_for_skew():
        raise ParameterError(f"{ensemble} edge predictions need F(0) = 0")
    fine = _edge_terms(F, ensemble, alpha, width, disable_L, disable_chi, form)
    coarse = _edge_terms(F, ensemble, alpha, 2 * width, disable_L, disable_chi, form)
    err = max(abs(fine[0] - coarse[0]), abs(fine[1] - coarse[1]))
    return StatPrediction(fine[0], fine[1], err, "edge", ensemble, alpha, fine[2], fine[3])


def jue_edge(F: TestFunction, a: float) -> StatPrediction:
    """mean = int K_B^{(a)}(x,x) F; variance = int K_B(x,x) F^2 - int int K_B^2 F F."""
    return _edge(F, "JUE", float(a))


def jse_edge(F: TestFunction, a: float, disable_L: bool = False,
             form: str = "corrected") -> StatPrediction:
    """Symplectic hard-edge prediction with Bessel order a - 1 (needs F(0) = 0).

    The seven classical variance terms are always reported.  With
    ``form='corrected'`` (default) two further terms are added:
    ``j_k_e_argument`` evaluates the E factor of the ``j_k_e`` term at the
    second variable, and ``far_endpoint`` adds the constants (-1)^j in the
    edge limit of eps phi_j coming from the opposite endpoint.  Only the
    corrected sum matches finite-N values as N grows; ``form='verbatim'``
    returns the classical terms alone.
    """
    return _edge(F, "JSE", float(a) - 1.0, disable_L=disable_L, form=form)


def joe_edge(F: TestFunction, a: float, disable_L: bool = False,
             disable_chi: bool = False, form: str = "corrected") -> StatPrediction:
    """Orthogonal hard-edge prediction with Bessel order a + 1 (needs F(0) = 0).

    The nine classical variance terms are always reported; ``form='corrected'``
    adds the ``far_endpoint`` term (see ``jse_edge``).
    """
    return _edge(F, "JOE", float(a) + 1.0, disable_L=disable_L, disable_chi=disable_chi,
                 form=form)


def predict(beta: int, regime: str, F: TestFunction, a: float = 0.0,
            form: str = "corrected") -> StatPrediction:
    """Dispatch on (beta, regime); ``form`` only affects beta = 1, 4 at the edge."""
    if beta not in (1, 2, 4):
        raise ParameterError("beta must be 1, 2 or 4")
    if regime == "bulk":
        return {2: jue_bulk, 4: jse_bulk, 1: joe_bulk}[beta](F)
    if regime == "edge":
        if beta == 2:
            return jue_edge(F, a)
        return {4: jse_edge, 1: joe_edge}[beta](F, a, form=form)
    raise ParameterError("regime must be 'bulk' or 'edge'")
