"""Closed-form conditional means of the intensity and of the counting process.

Given the state (s, lambda_s, N_s), the conditional mean intensity solves a
linear ODE in each phase:

    phase one:  d/dt E[lambda] = (rho*mbar + delta*lambda0) - (delta - m) E[lambda]
    phase two:  d/dt E[lambda] = alpha0*delta*lambda0 - (delta - m_al) E[lambda]

and at the switch the mean jumps to (alpha0 - alpha1)*lambda0 + alpha1*E[lambda_{ell-}].
The mean count is the integral of the mean intensity. When the decay rate and
the mark (nearly) coincide the linear-growth solution is used instead of the
exponential one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError
from .model import EventStream, PhaseOneParams, ReactionParams, intensity_at

# |delta - mark| / delta below this uses the linear-growth branch
SINGULAR_RTOL = 1e-6


@dataclass(frozen=True)
class ConditioningState:
    """Information at the conditioning time: s, lambda_s and N_s."""

    s: float
    lambda_s: float
    n_s: int = 0

    def __post_init__(self):
        if not np.isfinite(self.s) or not np.isfinite(self.lambda_s):
            raise DomainError("conditioning state must be finite")
        if self.lambda_s < 0:
            raise DomainError("lambda_s must be >= 0")
        if self.n_s < 0:
            raise DomainError("n_s must be >= 0")

    @classmethod
    def initial(cls, p: PhaseOneParams, s: float = 0.0) -> "ConditioningState":
        """Forecast from scratch: no prior events, intensity at baseline."""
        return cls(s, p.lambda0, 0)


def conditioning_from_stream(p: PhaseOneParams, r: Optional[ReactionParams],
                             ev: EventStream,
                             s: Optional[float] = None) -> ConditioningState:
    """State at ``s`` (default ``ev.s``) built from the observed history."""
    s = ev.s if s is None else float(s)
    lam = intensity_at(p, r, ev, s)
    n = int(np.searchsorted(ev.internal_times, s, side="right"))
    return ConditioningState(s, lam, n)


def _relax(drive, rate, start, x, delta):
    """Mean intensity and its integral after time x for y' = drive - rate*y.

    All arguments broadcast. ``rate`` close to zero relative to ``delta``
    switches to y = start + drive*x.
    """
    drive, rate, start, x = np.broadcast_arrays(
        *(np.asarray(v, dtype=np.float64) for v in (drive, rate, start, x)))
    singular = np.abs(rate) < SINGULAR_RTOL * delta
    safe = np.where(singular, 1.0, rate)
    level = drive / safe
    decay = np.exp(-safe * x)
    lam = np.where(singular, start + drive * x, level + (start - level) * decay)
    area = np.where(singular,
                    start * x + 0.5 * drive * x * x,
                    level * x + (start - level) * (-np.expm1(-safe * x)) / safe)
    return lam, area


def _phase_one(p: PhaseOneParams, start, x):
    return _relax(p.rho * p.mbar + p.delta * p.lambda0, p.delta - p.m,
                  start, x, p.delta)


def _phase_two(p: PhaseOneParams, alpha0, m_al, start, x):
    return _relax(np.multiply(alpha0, p.delta * p.lambda0),
                  p.delta - np.asarray(m_al, dtype=np.float64),
                  start, x, p.delta)


def _check_times(st: ConditioningState, t) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < st.s):
        raise DomainError("t must be >= the conditioning time s")
    return t


def two_phase_moments(p: PhaseOneParams, st: ConditioningState, t, ell,
                      alpha0, alpha1, m_al):
    """(E[lambda_t | F_s], E[N_t | F_s]) with reaction inputs broadcast.

    ``alpha0``, ``alpha1`` and ``m_al`` may be arrays, which lets a whole
    grid of reaction parameters be evaluated in one call.
    """
    t = _check_times(st, t)
    if st.s >= ell:
        lam, area = _phase_two(p, alpha0, m_al, st.lambda_s, t - st.s)
        return lam, st.n_s + area
    # phase one up to min(t, ell)
    x1 = np.minimum(t, ell) - st.s
    lam1, area1 = _phase_one(p, st.lambda_s, x1)
    lam_ell, area_ell = _phase_one(p, st.lambda_s, ell - st.s)
    start = (np.subtract(alpha0, alpha1) * p.lambda0
             + np.multiply(alpha1, lam_ell))
    x2 = np.maximum(t - ell, 0.0)
    lam2, area2 = _phase_two(p, alpha0, m_al, start, x2)
    after = t >= ell
    lam = np.where(after, lam2, lam1)
    count = np.where(after, st.n_s + area_ell + area2, st.n_s + area1)
    return lam, count


def _moments(p, r, st, t):
    if r is None:
        t = _check_times(st, t)
        lam, area = _phase_one(p, st.lambda_s, t - st.s)
        return lam, st.n_s + area
    r.check_against(p)
    return two_phase_moments(p, st, t, r.ell, r.alpha0, r.alpha1, r.m_al)


def _scalar(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def expected_lambda(p: PhaseOneParams, r: Optional[ReactionParams],
                    st: ConditioningState, t):
    """E[lambda_t | F_s]; ``t`` may be a scalar or an array."""
    return _scalar(_moments(p, r, st, t)[0])


def expected_count(p: PhaseOneParams, r: Optional[ReactionParams],
                   st: ConditioningState, t):
    """E[N_t | F_s]; ``t`` may be a scalar or an array."""
    return _scalar(_moments(p, r, st, t)[1])


def increment_grid(s: float, step: float, horizon: float) -> np.ndarray:
    """Points s, s+step, ... up to horizon; a trailing partial step is dropped."""
    if not step > 0:
        raise DomainError("grid step must be > 0")
    n = int(np.floor((horizon - s) / step + 1e-9))
    return s + step * np.arange(max(n, 0) + 1)


def expected_increments(p: PhaseOneParams, r: Optional[ReactionParams],
                        st: ConditioningState, step: float,
                        horizon: float) -> np.ndarray:
    """Expected counts on consecutive intervals of length ``step`` from s."""
    grid = increment_grid(st.s, step, horizon)
    counts = np.atleast_1d(expected_count(p, r, st, grid))
    return np.diff(counts)
