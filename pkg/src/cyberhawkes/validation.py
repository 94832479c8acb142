"""Goodness of fit: time rescaling, KS test against Exp(1), predictive bands."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .errors import DomainError
from .model import EventStream, PhaseOneParams, ReactionParams, integrated_intensity
from .simulation import simulate_count_distribution


@dataclass(frozen=True)
class KsReport:
    statistic: float
    p_value: float
    n: int
    rejected_at_5pct: bool

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "p_value": self.p_value,
                "n": self.n, "rejected_at_5pct": self.rejected_at_5pct}


@dataclass(frozen=True)
class PredictiveBand:
    low: float
    high: float
    observed: int
    inside: bool
    n_paths: int
    horizon: float

    def to_dict(self) -> dict:
        return {"p5": self.low, "p95": self.high, "observed": self.observed,
                "inside": self.inside, "n_paths": self.n_paths,
                "horizon": self.horizon}


def rescale_times(p: PhaseOneParams, ev: EventStream,
                  r: Optional[ReactionParams] = None) -> np.ndarray:
    """Compensator from t0 to each internal event time.

    Under the true model these are the jump times of a unit-rate Poisson
    process. Constant marks at the parameter means are used.
    """
    t = ev.internal_times
    if r is None:
        return _kernels.compensator_at_events_fast(
            t, ev.external_times, ev.t0, p.lambda0, p.mbar, p.m, p.delta)
    plain = EventStream(ev.t0, ev.t0, ev.tau, t, ev.external_times)
    return np.array([integrated_intensity(p, r, plain, ev.t0, tk) for tk in t])


def rescaled_interarrivals(p: PhaseOneParams, ev: EventStream,
                           r: Optional[ReactionParams] = None) -> np.ndarray:
    """Increments of the rescaled times, starting from zero."""
    return np.diff(rescale_times(p, ev, r), prepend=0.0)


def kolmogorov_sf(x: float, terms: int = 100, tol: float = 1e-10) -> float:
    """P(K > x) for the limiting Kolmogorov distribution."""
    if x <= 0:
        return 1.0
    if x < 0.2:
        # the alternating series converges too slowly here; the tail is 1
        # to double precision below this point
        return 1.0
    total = 0.0
    for k in range(1, terms + 1):
        term = math.exp(-2.0 * k * k * x * x)
        total += term if k % 2 else -term
        if term < tol:
            break
    return min(max(2.0 * total, 0.0), 1.0)


def ks_exp1(theta) -> KsReport:
    """Two-sided one-sample KS test of ``theta`` against Exp(1)."""
    x = np.sort(np.asarray(theta, dtype=np.float64))
    n = x.size
    if n == 0:
        raise DomainError("KS test needs at least one observation")
    cdf = -np.expm1(-np.maximum(x, 0.0))
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))
    pval = kolmogorov_sf(math.sqrt(n) * d)
    return KsReport(d, pval, n, pval < 0.05)


def predictive_check(p: PhaseOneParams, ev: EventStream, n_paths: int = 10000,
                     seed: int = 0, r: Optional[ReactionParams] = None,
                     condition_on_history: bool = True) -> PredictiveBand:
    """5-95% simulated band for the count on (ev.s, ev.tau] vs the observed count.

    With ``condition_on_history`` the paths start from the excitation left
    by the events on [t0, s].
    """
    history = None
    if condition_on_history:
        history = ev.with_window(ev.s, ev.s)
    dist = simulate_count_distribution(p, r, ev.tau, n_paths, seed,
                                       start=ev.s, history=history)
    low, high = dist.percentile([5, 95])
    observed = ev.count_internal(ev.s, ev.tau)
    return PredictiveBand(float(low), float(high), observed,
                          bool(low <= observed <= high), n_paths, ev.tau - ev.s)
