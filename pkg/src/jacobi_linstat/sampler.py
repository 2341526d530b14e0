"""Metropolis-within-Gibbs sampling of Jacobi beta-ensemble eigenvalues.

The target is the unnormalised log-density

    beta * sum_{j<k} log|x_j - x_k| + sum_j log w(x_j),   x in (-1, 1)^N,

with w(x) = (1-x)^a (1+x)^b for beta = 2, 4 and (1-x)^{a/2} (1+x)^{b/2} for
beta = 1.  One sweep proposes a reflected Gaussian move for each coordinate
in turn.  The proposal scale is adapted (Robbins-Monro, target acceptance
0.35) during burn-in only and frozen afterwards.

Chain c of a run with seed s uses ``numpy.random.PCG64(s ^ splitmix64(c))``,
where splitmix64 is the standard 64-bit finaliser (see ``chain_seed``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .ensemble import EnsembleSpec, ParameterError, TestFunction

__all__ = [
    "SamplerError",
    "McResult",
    "Chain",
    "chain_seed",
    "log_density",
    "sample_chain",
    "linear_statistic",
    "estimate_stats",
]

_MASK = (1 << 64) - 1
TARGET_ACCEPTANCE = 0.35
ACCEPTANCE_RANGE = (0.1, 0.6)
MAX_SCALE = 2.0
RESYNC_SWEEPS = 1000
DRIFT_TOL = 1e-8
NON_MIXING_Z = 5.0


class SamplerError(RuntimeError):
    """Proposal adaptation failed or the incremental log-density drifted."""


def splitmix64(c: int) -> int:
    z = (int(c) + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def chain_seed(seed: int, c: int) -> int:
    """64-bit seed of chain ``c``: seed XOR splitmix64(c)."""
    return (int(seed) & _MASK) ^ splitmix64(c)


def _weight_exponents(spec: EnsembleSpec):
    if spec.beta == 1:
        return 0.5 * spec.a, 0.5 * spec.b
    return spec.a, spec.b


def log_density(x, spec: EnsembleSpec) -> float:
    """Unnormalised log joint density (-inf outside the open cube or on coincidence)."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) >= 1.0):
        return -math.inf
    ea, eb = _weight_exponents(spec)
    d = np.abs(x[:, None] - x[None, :])[np.triu_indices(len(x), 1)]
    if d.size and d.min() < 1e-300:
        return -math.inf
    return float(spec.beta * np.log(d).sum()
                 + ea * np.log1p(-x).sum() + eb * np.log1p(x).sum())


def _reflect(y: float) -> float:
    """Fold y into [-1, 1] by repeated reflection at the endpoints."""
    y = (y + 1.0) % 4.0
    if y > 2.0:
        y = 4.0 - y
    return y - 1.0


class Chain:
    """One Metropolis-within-Gibbs chain; diagnostics are kept as attributes."""

    def __init__(self, spec: EnsembleSpec, seed: int, scale: float | None = None):
        self.spec = spec
        self.seed = int(seed) & _MASK
        self.rng = np.random.Generator(np.random.PCG64(self.seed))
        N = spec.N
        # Chebyshev points: close to the equilibrium profile of every ensemble
        self.x = np.cos(np.pi * (np.arange(N) + 0.5) / N)[::-1].copy()
        self.scale = float(scale) if scale is not None else 1.0 / N
        self.logp = log_density(self.x, spec)
        self.ea, self.eb = _weight_exponents(spec)
        self.proposed = 0
        self.accepted = 0
        self.burn_in_acceptance = None
        self.max_drift = 0.0
        self.sweeps = 0

    def _logw(self, y):
        return self.ea * math.log1p(-y) + self.eb * math.log1p(y)

    def sweep(self) -> int:
        """Update every coordinate once; returns the number of accepted moves."""
        x, N, beta = self.x, self.spec.N, self.spec.beta
        z = self.rng.standard_normal(N)
        logu = np.log(self.rng.random(N))
        acc = 0
        for i in range(N):
            xi = x[i]
            y = _reflect(xi + self.scale * z[i])
            if not -1.0 < y < 1.0:
                continue
            dn = np.abs(y - x)
            do = np.abs(xi - x)
            dn[i] = do[i] = 1.0
            if dn.min() < 1e-300:
                continue
            delta = beta * float(np.log(dn / do).sum()) + self._logw(y) - self._logw(xi)
            if logu[i] < delta:
                x[i] = y
                self.logp += delta
                acc += 1
        self.sweeps += 1
        if self.sweeps % RESYNC_SWEEPS == 0:
            self.resync()
        return acc

    def resync(self) -> float:
        """Recompute the log-density from scratch; returns the incremental drift."""
        full = log_density(self.x, self.spec)
        drift = abs(full - self.logp)
        self.max_drift = max(self.max_drift, drift)
        if drift > DRIFT_TOL * max(1.0, abs(full)):
            raise SamplerError(f"incremental log-density drifted by {drift:.3g}")
        self.logp = full
        return drift

    def burn(self, n_sweeps: int):
        """Burn-in with scale adaptation; checks acceptance over the final quarter.

        High acceptance is accepted when the scale has reached its cap: a
        reflected proposal of scale 2 is already close to an independent draw
        (for a flat target every move is accepted at any scale).
        """
        N = self.spec.N
        tail = max(1, n_sweeps // 4)
        tail_acc = 0
        log_s = math.log(self.scale)
        for k in range(n_sweeps):
            rate = self.sweep() / N
            if k >= n_sweeps - tail:
                tail_acc += rate
            log_s += (rate - TARGET_ACCEPTANCE) / (k + 1.0) ** 0.6
            log_s = min(log_s, math.log(MAX_SCALE))
            self.scale = math.exp(log_s)
        if n_sweeps > 0:
            self.burn_in_acceptance = tail_acc / tail
            lo, hi = ACCEPTANCE_RANGE
            capped = self.scale >= MAX_SCALE * (1 - 1e-12)
            if self.burn_in_acceptance < lo or (self.burn_in_acceptance > hi and not capped):
                raise SamplerError(
                    f"acceptance {self.burn_in_acceptance:.3f} outside [{lo}, {hi}] "
                    f"after adaptation (scale {self.scale:.3g})")

    def samples(self, n_samples: int, thin: int = 1) -> Iterator[np.ndarray]:
        N = self.spec.N
        for _ in range(n_samples):
            for _ in range(thin):
                self.accepted += self.sweep()
                self.proposed += N
            yield self.x.copy()

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else float("nan")


def _check_counts(n_samples, burn_in, thin):
    if int(n_samples) != n_samples or n_samples < 1:
        raise ParameterError("n_samples must be a positive integer")
    if int(burn_in) != burn_in or burn_in < 0:
        raise ParameterError("burn_in must be a non-negative integer")
    if int(thin) != thin or thin < 1:
        raise ParameterError("thin must be a positive integer")


def sample_chain(spec: EnsembleSpec, n_samples: int, burn_in: int = 1000, thin: int = 1,
                 seed: int = 0) -> Iterator[np.ndarray]:
    """Yield ``n_samples`` configurations, one every ``thin`` sweeps after burn-in."""
    _check_counts(n_samples, burn_in, thin)
    chain = Chain(spec, seed)
    chain.burn(int(burn_in))
    yield from chain.samples(int(n_samples), int(thin))


def linear_statistic(config, spec: EnsembleSpec, F: TestFunction | None) -> float:
    """sum_j F(s_j) with s the regime scaling of ``spec``; F = None means F = 1."""
    config = np.asarray(config, dtype=float)
    if F is None:
        return float(config.shape[-1])
    return float(np.sum(F(spec.scale(config)), axis=-1))


@dataclass
class McResult:
    """Monte Carlo estimates of the mean, variance and MGF of a linear statistic."""

    n_samples: int
    empirical_mean: float
    empirical_variance: float
    stderr_mean: float
    stderr_variance: float
    seed: int
    mgf: dict = field(default_factory=dict)
    mgf_stderr: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def non_mixing(self) -> bool:
        return bool(self.diagnostics.get("non_mixing", False))

    def as_dict(self) -> dict:
        return dict(n_samples=self.n_samples, empirical_mean=self.empirical_mean,
                    empirical_variance=self.empirical_variance,
                    stderr_mean=self.stderr_mean, stderr_variance=self.stderr_variance,
                    seed=self.seed,
                    mgf={repr(k): v for k, v in self.mgf.items()},
                    mgf_stderr={repr(k): v for k, v in self.mgf_stderr.items()},
                    diagnostics=dict(self.diagnostics))


def _batch_means(series: Sequence[np.ndarray]):
    """Pooled batch means over chains (batch size ~ sqrt of the chain length)."""
    out = []
    for s in series:
        n = len(s)
        size = max(1, int(math.isqrt(n)))
        nb = n // size
        out.append(s[:nb * size].reshape(nb, size).mean(axis=1))
    return np.concatenate(out)


def _stderr(series):
    bm = _batch_means(series)
    if len(bm) < 2:
        return float("nan")
    return float(bm.std(ddof=1) / math.sqrt(len(bm)))


def _run_chain(spec, F, n, burn_in, thin, seed):
    chain = Chain(spec, seed)
    chain.burn(burn_in)
    stats = np.fromiter((linear_statistic(x, spec, F) for x in chain.samples(n, thin)),
                        dtype=float, count=n)
    info = dict(acceptance_rate=chain.acceptance_rate,
                burn_in_acceptance=chain.burn_in_acceptance,
                scale=chain.scale, max_logdensity_drift=chain.max_drift)
    return stats, info


def estimate_stats(spec: EnsembleSpec, F: TestFunction, n_samples: int, chains: int = 4,
                   seed: int = 0, burn_in: int = 1000, thin: int = 2,
                   lambdas: Sequence[float] = (), strict: bool = False) -> McResult:
    """Mean, variance and E[exp(-lambda S)] of S = sum F(s_j) from independent chains.

    ``n_samples`` retained configurations are split evenly over ``chains``.
    Standard errors use pooled batch means.  Chains whose means disagree with
    the pooled mean by more than 5 of their own standard errors set the
    ``non_mixing`` flag; with ``strict`` this raises ``SamplerError``.
    """
    _check_counts(n_samples, burn_in, thin)
    if int(chains) != chains or chains < 2:
        raise ParameterError("at least two chains are needed")
    chains = int(chains)
    per = -(-int(n_samples) // chains)
    runs = [_run_chain(spec, F, per, int(burn_in), int(thin), chain_seed(seed, c))
            for c in range(chains)]
    series = [r[0] for r in runs]
    allv = np.concatenate(series)
    n = len(allv)
    mean = float(allv.mean())
    var = float(allv.var(ddof=1)) if n > 1 else 0.0
    if var == 0.0:
        se_m = se_v = 0.0
    else:
        se_m = _stderr(series)
        se_v = _stderr([(s - mean) ** 2 for s in series])
    mgf, mgf_se = {}, {}
    for lam in lambdas:
        e = [np.exp(-float(lam) * s) for s in series]
        mgf[float(lam)] = float(np.concatenate(e).mean())
        mgf_se[float(lam)] = _stderr(e) if var > 0 else 0.0
    chain_means = [float(s.mean()) for s in series]
    chain_se = [_stderr([s]) if var > 0 else 0.0 for s in series]
    z = [abs(m - mean) / se if se > 0 else 0.0 for m, se in zip(chain_means, chain_se)]
    diag = dict(
        chains=chains, burn_in=int(burn_in), thin=int(thin),
        acceptance_rate=float(np.mean([r[1]["acceptance_rate"] for r in runs])),
        chain_info=[r[1] for r in runs],
        chain_means=chain_means,
        between_chain_z=max(z),
        effective_sample_size=(var / se_m ** 2 if se_m > 0 else float(n)),
        non_mixing=bool(max(z) > NON_MIXING_Z),
    )
    res = McResult(n, mean, var, se_m, se_v, int(seed) & _MASK, mgf, mgf_se, diag)
    if strict and res.non_mixing:
        raise SamplerError(f"chains disagree (max z = {max(z):.2f})")
    return res
