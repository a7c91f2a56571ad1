"""Two-parameter Weibull baseline fitted by maximum likelihood."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

BETA_TOL = 1e-10


class WeibullFitError(ValueError):
    pass


@dataclass(frozen=True)
class WeibullModel:
    """Shape ``beta`` and scale ``eta`` (characteristic life, input time units)."""

    beta: float
    eta: float

    def __post_init__(self):
        if not (self.beta > 0 and self.eta > 0):
            raise WeibullFitError(f"beta and eta must be positive, got beta={self.beta}, eta={self.eta}")

    def cdf(self, t):
        return weibull_cdf(self, t)

    def quantile(self, p: float) -> float:
        """Time by which a fraction ``p`` of the population has failed."""
        if not 0 <= p < 1:
            raise ValueError(f"p must lie in [0, 1), got {p}")
        return self.eta * (-math.log1p(-p)) ** (1.0 / self.beta)


def weibull_cdf(m: WeibullModel, t):
    """F(t) = 1 - exp(-(t/eta)^beta); accepts scalars or arrays."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise ValueError("weibull_cdf is undefined for negative t")
    out = -np.expm1(-((arr / m.eta) ** m.beta))
    return float(out) if out.ndim == 0 else out


def weibull_baseline_residual(m: WeibullModel, elapsed: float) -> float:
    """Population baseline: every unit is expected to reach the characteristic life."""
    if elapsed < 0:
        raise ValueError(f"elapsed must be >= 0, got {elapsed}")
    return max(m.eta - elapsed, 0.0)


def log_likelihood(times, beta: float, eta: float) -> float:
    t = np.asarray(times, dtype=float)
    z = t / eta
    return float(t.size * math.log(beta / eta) + (beta - 1) * np.log(z).sum() - (z**beta).sum())


def score(times, beta: float, eta: float) -> np.ndarray:
    """Gradient of the log-likelihood with respect to (beta, eta)."""
    t = np.asarray(times, dtype=float)
    n = t.size
    z = t / eta
    lz = np.log(z)
    zb = z**beta
    d_beta = n / beta + lz.sum() - (zb * lz).sum()
    d_eta = (beta / eta) * (zb.sum() - n)
    return np.array([d_beta, d_eta])


def _profile(beta: float, log_t: np.ndarray) -> tuple[float, float]:
    """Profile equation g(beta) and its derivative; log_t is pre-centred for stability."""
    w = np.exp(beta * (log_t - log_t.max()))
    s0 = w.sum()
    m1 = (w * log_t).sum() / s0
    m2 = (w * log_t**2).sum() / s0
    g = m1 - 1.0 / beta - log_t.mean()
    dg = (m2 - m1 * m1) + 1.0 / beta**2
    return g, dg


def fit_weibull_mle(failure_times: Sequence[float]) -> WeibullModel:
    """Maximum-likelihood (beta, eta) for complete (uncensored) failure times.

    beta solves the profile-likelihood equation

        sum(t^b ln t) / sum(t^b) - 1/b - mean(ln t) = 0

    which is strictly increasing in b; it is bracketed, bisected, then
    polished with Newton steps until successive iterates differ by less than
    1e-10.  eta then follows in closed form as (mean(t^b))^(1/b).
    """
    t = np.asarray(failure_times, dtype=float)
    if t.ndim != 1 or t.size < 3:
        raise WeibullFitError(f"need at least 3 failure times, got {t.size}")
    if not np.all(np.isfinite(t)) or np.any(t <= 0):
        raise WeibullFitError("failure times must be finite and > 0")
    if np.all(t == t[0]):
        raise WeibullFitError("all failure times identical: shape parameter is unbounded")

    scale = math.exp(np.log(t).mean())
    log_t = np.log(t / scale)

    lo, hi = 1e-3, 1.0
    while _profile(hi, log_t)[0] < 0:
        lo, hi = hi, hi * 2
        if hi > 1e8:
            raise WeibullFitError("failed to bracket the shape parameter")
    while _profile(lo, log_t)[0] > 0:
        lo /= 2
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _profile(mid, log_t)[0] < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-6 * hi:
            break

    beta = 0.5 * (lo + hi)
    for _ in range(100):
        g, dg = _profile(beta, log_t)
        nxt = beta - g / dg
        if not lo <= nxt <= hi:
            nxt = 0.5 * (lo + hi)
        if g < 0:
            lo = beta
        else:
            hi = beta
        done = abs(nxt - beta) < BETA_TOL
        beta = nxt
        if done:
            break

    zmax = log_t.max()
    eta_scaled = math.exp(zmax + math.log(np.exp(beta * (log_t - zmax)).mean()) / beta)
    return WeibullModel(float(beta), float(eta_scaled * scale))


def decile_table(m: WeibullModel) -> list[tuple[float, float]]:
    """(probability, time) pairs at F = 0.1 .. 0.9."""
    return [(p / 10, m.quantile(p / 10)) for p in range(1, 10)]
