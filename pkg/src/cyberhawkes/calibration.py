"""First-phase calibration: likelihood and mean-square-error objectives.

All objectives treat marks as deterministic (equal to their means) and
condition on the history [t0, s] of the stream; the fit window is (s, tau].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .errors import DomainError, SupercriticalError
from .expectation import ConditioningState, expected_count, increment_grid
from .model import EventStream, PhaseOneParams, ergodicity_ratio, intensity_at
from .optimize import OptimizerOptions, minimize

METHODS = ("likelihood", "mse_int", "mse_ext")
STRATEGIES = ("full5", "injected_rho", "injected_rho_mbar")
EXPOSURES = ("window", "last_event")
PARAM_NAMES = ("lambda0", "rho", "mbar", "m", "delta")

DEFAULT_DELTA_STEP = 2.0


# ---------------------------------------------------------------------------
# objectives

def neg_log_likelihood(p: PhaseOneParams, ev: EventStream,
                       exposure: str = "window") -> float:
    """Exact -ln L of the first phase over (s, tau].

    ``exposure`` selects the Poisson exposure of the external term:
    ``"window"`` uses tau - s, ``"last_event"`` uses the span between the
    last external events at or before tau and at or before s.
    Returns +inf for inadmissible parameters.
    """
    if exposure not in EXPOSURES:
        raise DomainError(f"unknown exposure {exposure!r}")
    return float(_kernels.neg_log_likelihood_core(
        ev.internal_times, ev.external_times, ev.t0, ev.s, ev.tau,
        p.lambda0, p.rho, p.mbar, p.m, p.delta, EXPOSURES.index(exposure)))


def _interval_counts(times: np.ndarray, grid: np.ndarray) -> np.ndarray:
    return np.diff(np.searchsorted(times, grid, side="right"))


def _mse_terms(p: PhaseOneParams, ev: EventStream, step: float):
    grid = increment_grid(ev.s, step, ev.tau)
    if grid.size < 2:
        raise DomainError("window holds less than one full interval")
    n_s = int(np.searchsorted(ev.internal_times, ev.s, side="right"))
    st = ConditioningState(ev.s, intensity_at(p, None, ev, ev.s), n_s)
    observed = _interval_counts(ev.internal_times, grid)
    ext_obs = _interval_counts(ev.external_times, grid)
    # far-off optimizer probes can overflow; they just score +inf
    with np.errstate(over="ignore", invalid="ignore"):
        expected = np.diff(expected_count(p, None, st, grid))
        internal = float(np.sum((expected - observed) ** 2))
        external = float(np.sum((p.rho * step - ext_obs) ** 2))
    if not math.isfinite(internal):
        internal = math.inf
    return internal, external


def mse_int(p: PhaseOneParams, ev: EventStream,
            step: float = DEFAULT_DELTA_STEP) -> float:
    """Squared error of expected vs observed internal counts per interval."""
    internal, _ = _mse_terms(p, ev, step)
    return internal / (ev.tau - ev.s)


def mse_ext(p: PhaseOneParams, ev: EventStream,
            step: float = DEFAULT_DELTA_STEP) -> float:
    """mse_int plus the squared error of external counts against rho*step."""
    internal, external = _mse_terms(p, ev, step)
    return (internal + external) / (ev.tau - ev.s)


# ---------------------------------------------------------------------------
# parametrisations

@dataclass(frozen=True)
class _Layout:
    """Maps a free-parameter vector to PhaseOneParams for one strategy."""

    free: Tuple[str, ...]
    fixed: Dict[str, float]
    rho_mbar: Optional[float] = None

    def to_params(self, x) -> PhaseOneParams:
        values = dict(self.fixed)
        values.update(zip(self.free, map(float, x)))
        if self.rho_mbar is not None:
            values["mbar"] = self.rho_mbar / values["rho"]
        return PhaseOneParams(**values)

    def to_vector(self, p: PhaseOneParams) -> np.ndarray:
        return np.array([getattr(p, name) for name in self.free])


def _layout(strategy: str, ev: EventStream, external: bool,
            rho_mbar: Optional[float]) -> _Layout:
    if not external:
        return _Layout(("lambda0", "m", "delta"), {"rho": 0.0, "mbar": 0.0})
    if strategy == "full5":
        return _Layout(PARAM_NAMES, {})
    rho_hat = injected_rho(ev)
    if rho_hat <= 0:
        raise DomainError("injected strategies need at least one external event")
    if strategy == "injected_rho":
        return _Layout(("lambda0", "mbar", "m", "delta"), {"rho": rho_hat})
    if strategy == "injected_rho_mbar":
        if rho_mbar is None or not rho_mbar > 0:
            raise DomainError("injected_rho_mbar needs a positive rho_mbar value")
        return _Layout(("lambda0", "rho", "m", "delta"), {}, float(rho_mbar))
    raise DomainError(f"unknown strategy {strategy!r}")


def injected_rho(ev: EventStream) -> float:
    """Observed external rate over the whole stream [t0, tau]."""
    span = ev.tau - ev.t0
    if span <= 0:
        raise DomainError("empty observation window")
    return ev.count_external(-np.inf, ev.tau) / span


def default_init(ev: EventStream) -> PhaseOneParams:
    """Moment-style starting point built from the observed rates."""
    span = ev.tau - ev.s if ev.tau > ev.s else ev.tau - ev.t0
    span = max(span, 1e-9)
    rate_int = max(ev.count_internal(ev.s, ev.tau), 1) / span
    rate_ext = max(ev.count_external(ev.s, ev.tau) / span, 1e-3)
    lambda0 = 0.5 * rate_int
    delta = 1.0
    share = 1.0 - lambda0 / rate_int
    mark = 0.5 * delta * share
    return PhaseOneParams(lambda0, rate_ext, mark, mark, delta)


# ---------------------------------------------------------------------------
# results

@dataclass
class CalibrationResult:
    params: PhaseOneParams
    method: str
    strategy: str
    external: bool
    neg_log_lik: float
    mse_int_per_event: float
    mse_ext_per_event: float
    phi_norm: float
    phibar_norm: float
    rho_phibar: float
    ergodicity_ratio: Optional[float]
    converged: bool
    iterations: int
    delta_step: float
    exposure: str
    ci95: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    ci_reliable: Optional[bool] = None
    trace: Sequence[float] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "params": self.params.as_dict(),
            "method": self.method,
            "strategy": self.strategy,
            "external": self.external,
            "neg_log_lik": _json_float(self.neg_log_lik),
            "mse_int_per_event": _json_float(self.mse_int_per_event),
            "mse_ext_per_event": _json_float(self.mse_ext_per_event),
            "phi_norm": self.phi_norm,
            "phibar_norm": self.phibar_norm,
            "rho_phibar": self.rho_phibar,
            "ergodicity_ratio": self.ergodicity_ratio,
            "converged": self.converged,
            "iterations": self.iterations,
            "delta_step": self.delta_step,
            "exposure": self.exposure,
            "ci95": {k: [float(a), float(b)] for k, (a, b) in self.ci95.items()},
            "ci_reliable": self.ci_reliable,
        }


def _json_float(x: float):
    return float(x) if math.isfinite(x) else None


def diagnostics(p: PhaseOneParams, ev: EventStream, step: float,
                exposure: str = "window") -> dict:
    """Fit-quality and endogeneity summaries recomputed from ``p``."""
    n_events = max(ev.count_internal(ev.s, ev.tau), 1)
    try:
        ratio = ergodicity_ratio(p)
    except SupercriticalError:
        ratio = None
    try:
        internal, external = _mse_terms(p, ev, step)
        width = ev.tau - ev.s
        mse_i = internal / width / n_events
        mse_e = (internal + external) / width / n_events
    except DomainError:
        mse_i = mse_e = float("nan")
    return {
        "neg_log_lik": neg_log_likelihood(p, ev, exposure),
        "mse_int_per_event": mse_i,
        "mse_ext_per_event": mse_e,
        "phi_norm": p.m / p.delta,
        "phibar_norm": p.mbar / p.delta,
        "rho_phibar": p.rho * p.mbar / p.delta,
        "ergodicity_ratio": ratio,
    }


# ---------------------------------------------------------------------------
# fitting

def _objective(method: str, ev: EventStream, step: float, exposure: str):
    if method == "likelihood":
        return lambda p: neg_log_likelihood(p, ev, exposure)
    if method == "mse_int":
        return lambda p: mse_int(p, ev, step)
    if method == "mse_ext":
        return lambda p: mse_ext(p, ev, step)
    raise DomainError(f"unknown method {method!r}")


def fit(ev: EventStream, method: str = "likelihood", strategy: str = "full5",
        init: Optional[PhaseOneParams] = None,
        opts: Optional[OptimizerOptions] = None, *, external: bool = True,
        rho_mbar: Optional[float] = None,
        delta_step: float = DEFAULT_DELTA_STEP, exposure: str = "window",
        with_ci: bool = True, n_starts: int = 3) -> CalibrationResult:
    """Calibrate the first phase on (ev.s, ev.tau].

    ``external=False`` fits the plain self-exciting model: external events
    are ignored and rho, mbar are fixed at zero. The search is repeated
    from ``n_starts`` starting points that rescale the time constants of
    ``init``; the lowest objective wins. Confidence intervals are computed
    for likelihood fits only.
    """
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}")
    if strategy not in STRATEGIES:
        raise DomainError(f"unknown strategy {strategy!r}")
    if not delta_step > 0:
        raise DomainError("delta_step must be > 0")
    opts = opts or OptimizerOptions()
    if not external:
        ev = EventStream(ev.t0, ev.s, ev.tau, ev.internal_times, [])
    layout = _layout(strategy, ev, external, rho_mbar)
    init = init or default_init(ev)
    values = init.as_dict()
    values.update(layout.fixed)
    if layout.rho_mbar is not None:
        values["mbar"] = layout.rho_mbar / values["rho"]
    init = PhaseOneParams(**values)
    target = _objective(method, ev, delta_step, exposure)

    def objective(x):
        try:
            return target(layout.to_params(x))
        except DomainError:
            return math.inf

    outcome = None
    for start in _start_points(init, n_starts):
        trial = minimize(objective, layout.to_vector(start), opts)
        if outcome is None or trial.fun < outcome.fun:
            outcome = trial
    p_hat = layout.to_params(outcome.x)
    diag = diagnostics(p_hat, ev, delta_step, exposure)
    result = CalibrationResult(
        params=p_hat, method=method, strategy=strategy, external=external,
        converged=outcome.converged, iterations=outcome.iterations,
        delta_step=delta_step, exposure=exposure, trace=outcome.trace, **diag)
    if method == "likelihood" and with_ci:
        ci, reliable = _layout_intervals(layout, p_hat, ev, exposure)
        result.ci95, result.ci_reliable = ci, reliable
    return result


_TIME_SCALES = (1.0, 0.2, 5.0, 0.05, 20.0)


def _start_points(init: PhaseOneParams, n_starts: int):
    # same branching ratios, different decay speeds
    if not 1 <= n_starts <= len(_TIME_SCALES):
        raise DomainError(f"n_starts must be in [1, {len(_TIME_SCALES)}]")
    for f in _TIME_SCALES[:n_starts]:
        yield PhaseOneParams(init.lambda0, init.rho, init.mbar * f,
                             init.m * f, init.delta * f)


def delta_sweep(ev: EventStream, steps: Sequence[float], method: str = "mse_ext",
                strategy: str = "full5", init: Optional[PhaseOneParams] = None,
                opts: Optional[OptimizerOptions] = None,
                rho_mbar: Optional[float] = None, n_starts: int = 3):
    """One MSE fit per interval length; returns [(step, result), ...]."""
    return [(step, fit(ev, method, strategy, init, opts, rho_mbar=rho_mbar,
                       delta_step=step, with_ci=False, n_starts=n_starts))
            for step in steps]


# ---------------------------------------------------------------------------
# confidence intervals

def finite_difference_hessian(f, theta) -> np.ndarray:
    """Central-difference Hessian with steps max(1e-4 |theta_i|, 1e-6)."""
    theta = np.asarray(theta, dtype=np.float64)
    n = theta.size
    h = np.maximum(1e-4 * np.abs(theta), 1e-6)
    f0 = f(theta)
    H = np.empty((n, n))

    def shifted(i, si, j=None, sj=0):
        x = theta.copy()
        x[i] += si * h[i]
        if j is not None:
            x[j] += sj * h[j]
        return f(x)

    for i in range(n):
        H[i, i] = (shifted(i, 1) - 2 * f0 + shifted(i, -1)) / h[i] ** 2
        for j in range(i + 1, n):
            val = (shifted(i, 1, j, 1) - shifted(i, 1, j, -1)
                   - shifted(i, -1, j, 1) + shifted(i, -1, j, -1))
            H[i, j] = H[j, i] = val / (4 * h[i] * h[j])
    return H


def _intervals_from_hessian(names, theta, H):
    try:
        np.linalg.cholesky(H)
        reliable = bool(np.all(np.isfinite(H)))
    except np.linalg.LinAlgError:
        reliable = False
    try:
        cov = np.linalg.inv(H)
        var = np.diag(cov)
    except np.linalg.LinAlgError:
        var = np.full(len(names), np.nan)
    ci = {}
    for name, est, v in zip(names, theta, var):
        half = 1.96 * math.sqrt(v) if v > 0 else math.nan
        ci[name] = (est - half, est + half)
    if any(math.isnan(lo) for lo, _ in ci.values()):
        reliable = False
    return ci, reliable


def _layout_intervals(layout: _Layout, p_hat: PhaseOneParams, ev: EventStream,
                      exposure: str):
    def f(x):
        try:
            return neg_log_likelihood(layout.to_params(x), ev, exposure)
        except DomainError:
            return math.inf

    theta = layout.to_vector(p_hat)
    return _intervals_from_hessian(layout.free, theta,
                                   finite_difference_hessian(f, theta))


def confidence_intervals(p_hat: PhaseOneParams, ev: EventStream,
                         free: Sequence[str] = PARAM_NAMES,
                         exposure: str = "window"):
    """Wald 95% intervals from the Hessian of -ln L at a likelihood optimum.

    Returns ({name: (low, high)}, reliable). ``reliable`` is False when the
    Hessian is not positive definite; affected intervals are NaN.
    Parameters not listed in ``free`` are held at their ``p_hat`` values.
    """
    unknown = set(free) - set(PARAM_NAMES)
    if unknown:
        raise DomainError(f"unknown parameters {sorted(unknown)}")
    fixed = {k: v for k, v in p_hat.as_dict().items() if k not in free}
    layout = _Layout(tuple(free), fixed)
    return _layout_intervals(layout, p_hat, ev, exposure)
