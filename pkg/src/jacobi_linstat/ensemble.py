"""Ensemble specifications, test functions and result containers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "ParameterError",
    "EnsembleSpec",
    "TestFunction",
    "StatResult",
    "make_test_function",
    "TEST_FUNCTIONS",
]

ENSEMBLE_NAMES = {1: "JOE", 2: "JUE", 4: "JSE"}
BETA_OF_NAME = {v.lower(): k for k, v in ENSEMBLE_NAMES.items()}


class ParameterError(ValueError):
    """Parameters outside the admissible range of an ensemble or function."""


@dataclass(frozen=True)
class EnsembleSpec:
    """Jacobi beta-ensemble with weight parameters and a scaling regime.

    Weight conventions: beta = 2, 4 use (1-x)^a (1+x)^b; beta = 1 uses
    (1-x)^{a/2} (1+x)^{b/2}.  Admissible ranges are a, b > -1 (beta=2),
    a, b > 0 (beta=4) and a, b > -2 with N even (beta=1).

    The bulk scaling is s = c x with c = N (beta = 1, 2) or 2N (beta = 4);
    the hard-edge scaling at x = 1 is s = c (1 - x) with c = 2N^2 or 8N^2.
    """

    beta: int
    a: float
    b: float
    N: int
    regime: str = "bulk"

    def __post_init__(self):
        if self.beta not in (1, 2, 4):
            raise ParameterError("beta must be 1, 2 or 4")
        if int(self.N) != self.N or self.N < 1:
            raise ParameterError("N must be a positive integer")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ParameterError("a, b must be finite")
        lower = {2: -1.0, 4: 0.0, 1: -2.0}[self.beta]
        if self.a <= lower or self.b <= lower:
            raise ParameterError(f"{self.name} needs a, b > {lower:g}")
        if self.beta == 1 and self.N % 2:
            raise ParameterError("the orthogonal ensemble is only handled for even N")
        if self.regime not in ("bulk", "edge"):
            raise ParameterError("regime must be 'bulk' or 'edge'")

    @property
    def name(self) -> str:
        return ENSEMBLE_NAMES[self.beta]

    @property
    def scale_factor(self) -> float:
        N = self.N
        if self.regime == "bulk":
            return 2.0 * N if self.beta == 4 else float(N)
        return 8.0 * N * N if self.beta == 4 else 2.0 * N * N

    @property
    def bessel_order(self) -> float:
        """Order of the limiting hard-edge Bessel kernel (a, a-1, a+1)."""
        return {2: self.a, 4: self.a - 1.0, 1: self.a + 1.0}[self.beta]

    def with_(self, **changes) -> "EnsembleSpec":
        d = dict(beta=self.beta, a=self.a, b=self.b, N=self.N, regime=self.regime)
        d.update(changes)
        return EnsembleSpec(**d)

    def scale(self, x):
        """Map eigenvalue positions x in [-1, 1] to the scaled variable s."""
        x = np.asarray(x, dtype=float)
        c = self.scale_factor
        return c * x if self.regime == "bulk" else c * (1.0 - x)

    def scale_derivative(self) -> float:
        """ds/dx (a constant)."""
        c = self.scale_factor
        return c if self.regime == "bulk" else -c

    def unscale(self, s):
        s = np.asarray(s, dtype=float)
        c = self.scale_factor
        return s / c if self.regime == "bulk" else 1.0 - s / c

    def window(self, support):
        """Interval of x in [-1, 1] whose image lies in the s-interval ``support``."""
        lo, hi = support
        if self.regime == "bulk":
            x0 = float(self.unscale(lo)) if np.isfinite(lo) else -1.0
            x1 = float(self.unscale(hi)) if np.isfinite(hi) else 1.0
        else:
            x0 = float(self.unscale(hi)) if np.isfinite(hi) else -1.0
            x1 = float(self.unscale(max(lo, 0.0)))
        return max(-1.0, x0), min(1.0, x1)

    def as_dict(self) -> dict:
        return dict(beta=self.beta, ensemble=self.name, a=self.a, b=self.b, N=self.N,
                    regime=self.regime)


@dataclass(frozen=True)
class TestFunction:
    """Linear-statistic function F of the scaled variable with derivative dF.

    ``support`` is an s-interval outside which |F| and |F'| are below 1e-16
    relative to their maxima (infinite ends mean no decay).  ``domain`` says
    which regimes the function is meant for.
    """

    name: str
    F: Callable
    dF: Callable
    support: tuple
    domain: tuple = ("bulk", "edge")
    params: dict = field(default_factory=dict)

    def __call__(self, s):
        return self.F(np.asarray(s, dtype=float))

    def derivative(self, s):
        return self.dF(np.asarray(s, dtype=float))

    @property
    def decays(self) -> bool:
        return bool(np.isfinite(self.support[0]) and np.isfinite(self.support[1]))

    def scaled(self, factor: float) -> "TestFunction":
        """The function c*F (used for linearity checks)."""
        F, dF = self.F, self.dF
        return TestFunction(f"{factor:g}*{self.name}", lambda s: factor * F(s),
                            lambda s: factor * dF(s), self.support, self.domain,
                            dict(self.params, factor=factor))

    def __add__(self, other: "TestFunction") -> "TestFunction":
        lo = min(self.support[0], other.support[0])
        hi = max(self.support[1], other.support[1])
        return TestFunction(f"{self.name}+{other.name}",
                            lambda s: self.F(s) + other.F(s),
                            lambda s: self.dF(s) + other.dF(s), (lo, hi),
                            tuple(d for d in self.domain if d in other.domain))

    def edge_admissible_for_skew(self) -> bool:
        """F(0) = 0, needed at the hard edge for beta = 1, 4."""
        return abs(float(self.F(np.array(0.0)))) < 1e-14


_LOG_TINY = 16.0 * math.log(10.0)  # exp(-_LOG_TINY) = 1e-16


def _gauss(width=1.0, center=0.0):
    w, c = float(width), float(center)
    if w <= 0:
        raise ParameterError("width must be positive")
    r = w * math.sqrt(_LOG_TINY + 2.0)
    return TestFunction(
        "gauss",
        lambda s: np.exp(-((s - c) / w) ** 2),
        lambda s: -2.0 * (s - c) / w ** 2 * np.exp(-((s - c) / w) ** 2),
        (c - r, c + r), ("bulk", "edge"), dict(width=w, center=c))


def _xgauss(width=1.0):
    w = float(width)
    if w <= 0:
        raise ParameterError("width must be positive")
    r = w * math.sqrt(_LOG_TINY + 4.0)
    return TestFunction(
        "xgauss",
        lambda s: (s / w) * np.exp(-(s / w) ** 2),
        lambda s: (1.0 - 2.0 * (s / w) ** 2) / w * np.exp(-(s / w) ** 2),
        (-r, r), ("bulk",), dict(width=w))


def _xexp(scale=1.0):
    t = float(scale)
    if t <= 0:
        raise ParameterError("scale must be positive")
    return TestFunction(
        "xexp",
        lambda s: (s / t) * np.exp(-s / t),
        lambda s: (1.0 - s / t) / t * np.exp(-s / t),
        (0.0, 48.0 * t), ("edge",), dict(scale=t))


def _x2exp(scale=1.0):
    t = float(scale)
    if t <= 0:
        raise ParameterError("scale must be positive")
    return TestFunction(
        "x2exp",
        lambda s: (s / t) ** 2 * np.exp(-s / t),
        lambda s: (2.0 * s / t - (s / t) ** 2) / t * np.exp(-s / t),
        (0.0, 52.0 * t), ("edge",), dict(scale=t))


def _exp(scale=1.0):
    t = float(scale)
    if t <= 0:
        raise ParameterError("scale must be positive")
    return TestFunction(
        "exp",
        lambda s: np.exp(-s / t),
        lambda s: -np.exp(-s / t) / t,
        (0.0, 38.0 * t), ("edge",), dict(scale=t))


def _bump(radius=1.0, center=0.0):
    """C-infinity bump exp(1 - 1/(1 - u^2)), u = (s - center)/radius, |u| < 1."""
    R, c = float(radius), float(center)
    if R <= 0:
        raise ParameterError("radius must be positive")

    def F(s):
        u = (np.asarray(s, dtype=float) - c) / R
        out = np.zeros_like(u)
        m = np.abs(u) < 1.0
        out[m] = np.exp(1.0 - 1.0 / (1.0 - u[m] ** 2))
        return out

    def dF(s):
        u = (np.asarray(s, dtype=float) - c) / R
        out = np.zeros_like(u)
        m = np.abs(u) < 1.0
        q = 1.0 - u[m] ** 2
        out[m] = np.exp(1.0 - 1.0 / q) * (-2.0 * u[m] / q ** 2) / R
        return out

    return TestFunction("bump", F, dF, (c - R, c + R), ("bulk", "edge"),
                        dict(radius=R, center=c))


def _zero():
    return TestFunction("zero", lambda s: np.zeros_like(s, dtype=float),
                        lambda s: np.zeros_like(s, dtype=float), (0.0, 0.0), ("bulk", "edge"))


def _one():
    return TestFunction("one", lambda s: np.ones_like(s, dtype=float),
                        lambda s: np.zeros_like(s, dtype=float), (-math.inf, math.inf),
                        ("bulk", "edge"))


TEST_FUNCTIONS = {
    "gauss": _gauss,
    "xgauss": _xgauss,
    "xexp": _xexp,
    "x2exp": _x2exp,
    "exp": _exp,
    "bump": _bump,
    "zero": _zero,
    "one": _one,
}


def make_test_function(name: str, **params) -> TestFunction:
    """Build one of the named test functions (see ``TEST_FUNCTIONS``)."""
    try:
        factory = TEST_FUNCTIONS[name]
    except KeyError:
        raise ParameterError(f"unknown test function {name!r}; "
                             f"choose from {sorted(TEST_FUNCTIONS)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ParameterError(f"bad parameters for {name!r}: {exc}") from None


@dataclass
class StatResult:
    """Mean and variance of a linear statistic with error estimates.

    ``provenance`` is one of 'exact-N', 'asymptotic', 'monte-carlo'.
    """

    mean: float
    variance: float
    mean_error: float = 0.0
    variance_error: float = 0.0
    provenance: str = "exact-N"
    seed: Optional[int] = None
    details: dict = field(default_factory=dict)

    @property
    def error_estimate(self) -> float:
        return max(self.mean_error, self.variance_error)

    def as_dict(self) -> dict:
        d = dict(mean=self.mean, variance=self.variance, mean_error=self.mean_error,
                 variance_error=self.variance_error, provenance=self.provenance)
        if self.seed is not None:
            d["seed"] = self.seed
        d.update(self.details)
        return d
