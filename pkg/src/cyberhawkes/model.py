"""Parameter and event types and the piecewise two-phase intensity.

Time is measured in days and all rates are per day. Kernel sums use the
strict inequality T < t, so the intensity is the left-continuous version
and an event never excites itself at its own time. Internal events at or
after the switch time ``ell`` use the post-switch mark.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .errors import DomainError, SupercriticalError


def _check_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise DomainError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class PhaseOneParams:
    """First-phase parameters: baseline, external rate and marks, decay."""

    lambda0: float
    rho: float
    mbar: float
    m: float
    delta: float

    def __post_init__(self):
        for name in ("lambda0", "rho", "mbar", "m", "delta"):
            object.__setattr__(self, name, float(getattr(self, name)))
        _check_finite(lambda0=self.lambda0, rho=self.rho, mbar=self.mbar,
                      m=self.m, delta=self.delta)
        if self.lambda0 <= 0:
            raise DomainError("lambda0 must be > 0")
        if self.delta <= 0:
            raise DomainError("delta must be > 0")
        if self.rho < 0 or self.mbar < 0 or self.m < 0:
            raise DomainError("rho, mbar and m must be >= 0")

    @property
    def phi_norm(self) -> float:
        return self.m / self.delta

    def as_dict(self) -> dict:
        return {"lambda0": self.lambda0, "rho": self.rho, "mbar": self.mbar,
                "m": self.m, "delta": self.delta}


@dataclass(frozen=True)
class ReactionParams:
    """Second-phase controls applied from the switch time ``ell`` on.

    ``alpha0`` scales the baseline, ``alpha1`` scales the excitation carried
    over from before the switch and ``m_al`` is the post-switch internal mark.
    """

    ell: float
    alpha0: float
    alpha1: float
    m_al: float

    def __post_init__(self):
        for name in ("ell", "alpha0", "alpha1", "m_al"):
            object.__setattr__(self, name, float(getattr(self, name)))
        _check_finite(ell=self.ell, alpha0=self.alpha0, alpha1=self.alpha1,
                      m_al=self.m_al)
        if self.ell <= 0:
            raise DomainError("ell must be > 0")
        if not (0.0 <= self.alpha0 <= 1.0 and 0.0 <= self.alpha1 <= 1.0):
            raise DomainError("alpha0 and alpha1 must lie in [0, 1]")
        if self.alpha0 == 0.0 and self.alpha1 == 0.0:
            raise DomainError("alpha0 and alpha1 cannot both be zero")
        if self.m_al < 0:
            raise DomainError("m_al must be >= 0")

    def check_against(self, p: PhaseOneParams) -> None:
        """Raise DomainError unless the post-switch mark is at most ``p.m``."""
        if self.m_al > p.m * (1 + 1e-12):
            raise DomainError(f"m_al={self.m_al} exceeds m={p.m}")

    def as_dict(self) -> dict:
        return {"ell": self.ell, "alpha0": self.alpha0,
                "alpha1": self.alpha1, "m_al": self.m_al}


_MARK_CODES = {"constant": _kernels.MARK_CONSTANT,
               "exponential": _kernels.MARK_EXPONENTIAL,
               "lognormal": _kernels.MARK_LOGNORMAL}


@dataclass(frozen=True)
class MarkDistribution:
    """Jump-size law. ``shape`` is the log-scale sigma for lognormal marks."""

    kind: str
    mean: float
    shape: float = 1.0

    def __post_init__(self):
        if self.kind not in _MARK_CODES:
            raise DomainError(f"unknown mark kind {self.kind!r}")
        if not (math.isfinite(self.mean) and self.mean > 0):
            raise DomainError("mark mean must be > 0")
        if self.kind == "lognormal" and not self.shape > 0:
            raise DomainError("lognormal shape must be > 0")

    @property
    def code(self) -> int:
        return _MARK_CODES[self.kind]

    @property
    def variance(self) -> float:
        if self.kind == "constant":
            return 0.0
        if self.kind == "exponential":
            return self.mean ** 2
        return self.mean ** 2 * math.expm1(self.shape ** 2)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "constant":
            return np.full(size, self.mean)
        if self.kind == "exponential":
            return rng.exponential(self.mean, size)
        mu = math.log(self.mean) - 0.5 * self.shape ** 2
        return rng.lognormal(mu, self.shape, size)


def _frozen_array(values, name: str) -> np.ndarray:
    arr = np.array(values if values is not None else [], dtype=np.float64)
    if arr.ndim != 1:
        raise DomainError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class EventStream:
    """Attack (internal) and vulnerability (external) times on [t0, tau].

    ``s`` splits the window into a conditioning history [t0, s] and the
    fitting or forecasting window (s, tau]. Optional marks are per-event
    jump sizes; when absent the parameter means are used.
    """

    t0: float
    s: float
    tau: float
    internal_times: np.ndarray
    external_times: np.ndarray
    internal_marks: Optional[np.ndarray] = None
    external_marks: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("t0", "s", "tau"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.t0 <= self.s <= self.tau):
            raise DomainError("window must satisfy t0 <= s <= tau")
        for name in ("internal_times", "external_times"):
            arr = _frozen_array(getattr(self, name), name)
            if arr.size and (arr[0] < self.t0 or arr[-1] > self.tau):
                raise DomainError(f"{name} must lie in [t0, tau]")
            if np.any(np.diff(arr) <= 0):
                raise DomainError(f"{name} must be strictly increasing")
            object.__setattr__(self, name, arr)
        for name, ref in (("internal_marks", self.internal_times),
                          ("external_marks", self.external_times)):
            marks = getattr(self, name)
            if marks is None:
                continue
            arr = _frozen_array(marks, name)
            if arr.shape != ref.shape:
                raise DomainError(f"{name} length does not match times")
            if np.any(arr < 0):
                raise DomainError(f"{name} must be >= 0")
            object.__setattr__(self, name, arr)

    def count_internal(self, a: float, b: float) -> int:
        """Number of internal events in (a, b]."""
        t = self.internal_times
        return int(np.searchsorted(t, b, "right") - np.searchsorted(t, a, "right"))

    def count_external(self, a: float, b: float) -> int:
        """Number of external events in (a, b]."""
        t = self.external_times
        return int(np.searchsorted(t, b, "right") - np.searchsorted(t, a, "right"))

    def with_window(self, s: float, tau: Optional[float] = None) -> "EventStream":
        """Same events with a new split point (and optionally a shorter end)."""
        tau = self.tau if tau is None else tau
        keep_i = self.internal_times <= tau
        keep_e = self.external_times <= tau
        return EventStream(
            self.t0, s, tau, self.internal_times[keep_i],
            self.external_times[keep_e],
            None if self.internal_marks is None else self.internal_marks[keep_i],
            None if self.external_marks is None else self.external_marks[keep_e])

    def __eq__(self, other):
        if not isinstance(other, EventStream):
            return NotImplemented

        def same(x, y):
            if x is None or y is None:
                return x is None and y is None
            return np.array_equal(x, y)

        return ((self.t0, self.s, self.tau) == (other.t0, other.s, other.tau)
                and same(self.internal_times, other.internal_times)
                and same(self.external_times, other.external_times)
                and same(self.internal_marks, other.internal_marks)
                and same(self.external_marks, other.external_marks))

    __hash__ = None


# ---------------------------------------------------------------------------
# weights and kernel sums

def _internal_weights(p: PhaseOneParams, r: Optional[ReactionParams],
                      ev: EventStream) -> np.ndarray:
    if ev.internal_marks is not None:
        return np.asarray(ev.internal_marks)
    w = np.full(ev.internal_times.shape, p.m)
    if r is not None:
        w[ev.internal_times >= r.ell] = r.m_al
    return w


def _external_weights(p: PhaseOneParams, ev: EventStream) -> np.ndarray:
    if ev.external_marks is not None:
        return np.asarray(ev.external_marks)
    return np.full(ev.external_times.shape, p.mbar)


def _kernel_sum(times, weights, delta, t) -> float:
    mask = times < t
    if not mask.any():
        return 0.0
    return float(np.sum(weights[mask] * np.exp(-delta * (t - times[mask]))))


def _excitation_left_of(p, r, ev, t):
    # internal and external excitation at t with events strictly before t
    w_int = _internal_weights(p, r, ev)
    w_ext = _external_weights(p, ev)
    return (_kernel_sum(ev.internal_times, w_int, p.delta, t),
            _kernel_sum(ev.external_times, w_ext, p.delta, t))


def _carry_at_switch(p, r, ev) -> float:
    # alpha1 * (lambda_{ell-} - lambda0): excitation frozen at the switch
    exc_int, exc_ext = _excitation_left_of(p, r, ev, r.ell)
    return r.alpha1 * (exc_int + exc_ext)


def intensity_at(p: PhaseOneParams, r: Optional[ReactionParams],
                 ev: EventStream, t: float) -> float:
    """Conditional intensity at time ``t`` given all events strictly before."""
    if t < ev.t0:
        raise DomainError(f"t={t} precedes window origin t0={ev.t0}")
    if r is not None:
        r.check_against(p)
    if r is None or t < r.ell:
        exc_int, exc_ext = _excitation_left_of(p, r, ev, t)
        return p.lambda0 + exc_int + exc_ext
    carry = _carry_at_switch(p, r, ev)
    if t == r.ell:
        return r.alpha0 * p.lambda0 + carry
    post = ev.internal_times >= r.ell
    w_int = _internal_weights(p, r, ev)[post]
    return (r.alpha0 * p.lambda0 + carry * math.exp(-p.delta * (t - r.ell))
            + _kernel_sum(ev.internal_times[post], w_int, p.delta, t))


def intensity_path(p: PhaseOneParams, r: Optional[ReactionParams],
                   ev: EventStream, grid) -> np.ndarray:
    """Vectorised intensity on an ascending grid (same convention as intensity_at)."""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size and grid[0] < ev.t0:
        raise DomainError("grid precedes window origin")
    if np.any(np.diff(grid) < 0):
        raise DomainError("grid must be ascending")
    w_int = _internal_weights(p, r, ev)
    w_ext = _external_weights(p, ev)
    if r is None:
        return (p.lambda0
                + _kernels.excitation_on_grid(ev.internal_times, w_int, p.delta, grid)
                + _kernels.excitation_on_grid(ev.external_times, w_ext, p.delta, grid))
    r.check_against(p)
    out = np.empty_like(grid)
    before = grid < r.ell
    g1 = grid[before]
    out[before] = (p.lambda0
                   + _kernels.excitation_on_grid(ev.internal_times, w_int, p.delta, g1)
                   + _kernels.excitation_on_grid(ev.external_times, w_ext, p.delta, g1))
    g2 = grid[~before]
    if g2.size:
        carry = _carry_at_switch(p, r, ev)
        post = ev.internal_times >= r.ell
        out[~before] = (r.alpha0 * p.lambda0
                        + carry * np.exp(-p.delta * (g2 - r.ell))
                        + _kernels.excitation_on_grid(ev.internal_times[post],
                                                      w_int[post], p.delta, g2))
    return out


def _window_integral(times, weights, delta, a, b) -> float:
    # sum_{T<b} w (e^{-delta(max(a,T)-T)} - e^{-delta(b-T)}) / delta
    mask = times < b
    if not mask.any():
        return 0.0
    t = times[mask]
    lo = np.maximum(a, t)
    return float(np.sum(weights[mask] * (np.exp(-delta * (lo - t))
                                         - np.exp(-delta * (b - t)))) / delta)


def _integral_phase_one(p, r, ev, a, b):
    w_int = _internal_weights(p, r, ev)
    w_ext = _external_weights(p, ev)
    return (p.lambda0 * (b - a)
            + _window_integral(ev.internal_times, w_int, p.delta, a, b)
            + _window_integral(ev.external_times, w_ext, p.delta, a, b))


def _integral_phase_two(p, r, ev, a, b):
    carry = _carry_at_switch(p, r, ev)
    post = ev.internal_times >= r.ell
    w_int = _internal_weights(p, r, ev)[post]
    decay = (math.exp(-p.delta * (a - r.ell))
             - math.exp(-p.delta * (b - r.ell))) / p.delta
    return (r.alpha0 * p.lambda0 * (b - a) + carry * decay
            + _window_integral(ev.internal_times[post], w_int, p.delta, a, b))


def integrated_intensity(p: PhaseOneParams, r: Optional[ReactionParams],
                         ev: EventStream, a: float, b: float) -> float:
    """Exact compensator increment over [a, b]."""
    if b < a:
        raise DomainError(f"interval end {b} precedes start {a}")
    if a < ev.t0:
        raise DomainError(f"a={a} precedes window origin t0={ev.t0}")
    if a == b:
        return 0.0
    if r is None or b <= r.ell:
        return _integral_phase_one(p, r, ev, a, b)
    r.check_against(p)
    if a >= r.ell:
        return _integral_phase_two(p, r, ev, a, b)
    return (_integral_phase_one(p, r, ev, a, r.ell)
            + _integral_phase_two(p, r, ev, r.ell, b))


def phi_norm(p: PhaseOneParams) -> float:
    """Branching ratio of the internal kernel."""
    return p.m / p.delta


def phibar_norm(p: PhaseOneParams) -> float:
    """Integrated external kernel per external event."""
    return p.mbar / p.delta


def ergodicity_ratio(p: PhaseOneParams) -> float:
    """Long-run mean intensity (rho*mbar/delta + lambda0) / (1 - m/delta)."""
    phi = phi_norm(p)
    if phi >= 1.0:
        raise SupercriticalError(
            f"branching ratio {phi:.4g} >= 1: no stationary mean intensity")
    return (p.rho * phibar_norm(p) + p.lambda0) / (1.0 - phi)


def decompose_intensity(p: PhaseOneParams, ev: EventStream, grid) -> np.ndarray:
    """Baseline, internal and external shares of the intensity, one row per time.

    Columns are (baseline, internal, external) and each row sums to one.
    """
    grid = np.asarray(grid, dtype=np.float64)
    order = np.argsort(grid, kind="stable")
    g = grid[order]
    exc_int = _kernels.excitation_on_grid(
        ev.internal_times, _internal_weights(p, None, ev), p.delta, g)
    exc_ext = _kernels.excitation_on_grid(
        ev.external_times, _external_weights(p, ev), p.delta, g)
    total = p.lambda0 + exc_int + exc_ext
    fractions = np.empty((g.size, 3))
    fractions[:, 0] = p.lambda0 / total
    fractions[:, 1] = exc_int / total
    fractions[:, 2] = exc_ext / total
    out = np.empty_like(fractions)
    out[order] = fractions
    return out
