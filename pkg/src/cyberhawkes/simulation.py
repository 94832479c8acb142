"""Seeded thinning simulation of the two-phase process."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .errors import DomainError, ExplosionError
from .model import (EventStream, MarkDistribution, PhaseOneParams,
                    ReactionParams, intensity_at, intensity_path)
from .rng import path_generator

PHASE_BEFORE = 0
PHASE_AFTER = 1

DEFAULT_EVENT_CAP = 1_000_000


@dataclass(frozen=True, eq=False)
class Trajectory:
    events: EventStream
    phase_labels: np.ndarray
    seed: int
    path_index: int = 0
    grid: Optional[np.ndarray] = None
    intensity: Optional[np.ndarray] = None

    def count_at(self, t) -> np.ndarray:
        """Internal events in [t0, t]."""
        return np.searchsorted(self.events.internal_times, t, side="right")


@dataclass(frozen=True, eq=False)
class CountDistribution:
    horizon: float
    counts: np.ndarray
    n_paths: int

    def percentile(self, level) -> np.ndarray | float:
        """Empirical percentile(s), ``level`` in [0, 100]."""
        out = np.percentile(self.counts, level)
        return float(out) if np.ndim(out) == 0 else out

    def mean(self) -> float:
        return float(np.mean(self.counts))

    def std_error(self) -> float:
        if self.n_paths < 2:
            return float("nan")
        return float(np.std(self.counts, ddof=1) / np.sqrt(self.n_paths))


def _external_times(gen: np.random.Generator, rho: float, a: float,
                    b: float) -> np.ndarray:
    if rho == 0.0 or b <= a:
        return np.empty(0)
    n = gen.poisson(rho * (b - a))
    return np.sort(a + (b - a) * gen.random(n))


def simulate_external(rho: float, window: Tuple[float, float], seed: int,
                      path_index: int = 0) -> np.ndarray:
    """Homogeneous Poisson(rho) times on [a, b], ascending."""
    a, b = map(float, window)
    if b < a:
        raise DomainError("window end precedes start")
    if rho < 0:
        raise DomainError("rho must be >= 0")
    return _external_times(path_generator(seed, path_index), rho, a, b)


def _mark_args(dist: Optional[MarkDistribution], default_mean: float):
    if dist is None:
        return _kernels.MARK_CONSTANT, float(default_mean), 1.0
    return dist.code, dist.mean, dist.shape


def _initial_excitation(p, history: Optional[EventStream], a: float):
    if history is None:
        return 0.0, 0.0
    if history.t0 > a:
        raise DomainError("history starts after the simulation window")
    grid = np.array([a])
    w_int = (history.internal_marks if history.internal_marks is not None
             else np.full(history.internal_times.shape, p.m))
    w_ext = (history.external_marks if history.external_marks is not None
             else np.full(history.external_times.shape, p.mbar))
    # events exactly at a have not yet excited the left limit at a, so
    # include them by evaluating just after a
    grid = np.nextafter(grid, np.inf)
    exc_int = _kernels.excitation_on_grid(history.internal_times, w_int,
                                          p.delta, grid)[0]
    exc_ext = _kernels.excitation_on_grid(history.external_times, w_ext,
                                          p.delta, grid)[0]
    return float(exc_int), float(exc_ext)


def _run_path(p, r, a, b, gen, marks, history, event_cap, record):
    if r is not None:
        r.check_against(p)
        if history is not None and r.ell <= a:
            return _run_after_switch(p, r, a, b, gen, marks, history,
                                     event_cap, record)
    ext_end = b if r is None else min(b, r.ell)
    external = _external_times(gen, p.rho, a, ext_end)
    if r is not None:
        external = external[external < r.ell]
    ext_dist, bl_dist, al_dist = marks if marks is not None else (None,) * 3
    if ext_dist is None:
        ext_marks = np.full(external.shape, p.mbar)
    else:
        ext_marks = ext_dist.sample(gen, external.size)
    kind_bl, mean_bl, shape_bl = _mark_args(bl_dist, p.m)
    kind_al, mean_al, shape_al = _mark_args(al_dist, r.m_al if r else 0.0)
    init_int, init_ext = _initial_excitation(p, history, a)
    status, times, ymarks, n = _kernels.thin_two_phase(
        gen, a, b, p.lambda0, p.delta, external, ext_marks,
        r is not None, r.ell if r else np.inf,
        r.alpha0 if r else 1.0, r.alpha1 if r else 1.0,
        kind_bl, mean_bl, shape_bl, kind_al, mean_al, shape_al,
        init_int, init_ext, int(event_cap), record)
    if status == _kernels.SIM_EXPLODED:
        raise ExplosionError(
            f"event cap {event_cap} exceeded on [{a}, {b}]; "
            f"branching ratio m/delta = {p.m / p.delta:.3g}")
    return external, ext_marks, times, ymarks, n


def _run_after_switch(p, r, a, b, gen, marks, history, event_cap, record):
    # Only second-phase dynamics remain: baseline alpha0*lambda0, marks m_al,
    # no external input, and the excitation left by the history as the start.
    if history.t0 > a:
        raise DomainError("history starts after the simulation window")
    start = np.nextafter(a, np.inf)
    excess = intensity_at(p, r, history, start) - r.alpha0 * p.lambda0
    al_dist = marks[2] if marks is not None else None
    kind_al, mean_al, shape_al = _mark_args(al_dist, r.m_al)
    external = np.empty(0)
    status, times, ymarks, n = _kernels.thin_two_phase(
        gen, a, b, r.alpha0 * p.lambda0, p.delta, external, external,
        False, np.inf, 1.0, 1.0, kind_al, mean_al, shape_al,
        kind_al, mean_al, shape_al, max(excess, 0.0), 0.0, int(event_cap), record)
    if status == _kernels.SIM_EXPLODED:
        raise ExplosionError(f"event cap {event_cap} exceeded on [{a}, {b}]")
    return external, external, times, ymarks, n


def simulate_two_phase(p: PhaseOneParams, r: Optional[ReactionParams],
                       window: Tuple[float, float], seed: int,
                       marks: Optional[Sequence[Optional[MarkDistribution]]] = None,
                       *, path_index: int = 0,
                       history: Optional[EventStream] = None,
                       event_cap: int = DEFAULT_EVENT_CAP,
                       intensity_grid=None) -> Trajectory:
    """One seeded path on ``window`` = (a, b).

    ``marks`` is an optional (external, before-switch, after-switch) triple
    of mark laws; missing entries default to constant marks at the
    parameter means. ``history`` supplies events before ``a`` whose
    excitation carries into the window.
    """
    a, b = map(float, window)
    if b < a:
        raise DomainError("window end precedes start")
    gen = path_generator(seed, path_index)
    external, ext_marks, times, ymarks, _ = _run_path(
        p, r, a, b, gen, marks, history, event_cap, True)
    random_marks = marks is not None and any(m is not None for m in marks)
    ev = EventStream(a, a, b, times, external,
                     ymarks if random_marks else None,
                     ext_marks if random_marks else None)
    labels = np.full(times.shape, PHASE_BEFORE, dtype=np.int8)
    if r is not None:
        labels[times >= r.ell] = PHASE_AFTER
    grid = lam = None
    if intensity_grid is not None:
        grid = np.asarray(intensity_grid, dtype=np.float64)
        lam = intensity_path(p, r, ev, grid)
    return Trajectory(ev, labels, int(seed), path_index, grid, lam)


def simulate_counts_on_grid(p: PhaseOneParams, r: Optional[ReactionParams],
                            grid, n_paths: int, seed: int, *, start: float = 0.0,
                            marks=None, history: Optional[EventStream] = None,
                            event_cap: int = DEFAULT_EVENT_CAP) -> np.ndarray:
    """Counts in (start, t] for every grid time t, one row per path."""
    grid = np.asarray(grid, dtype=np.float64)
    if n_paths < 1:
        raise DomainError("n_paths must be >= 1")
    b = float(grid.max()) if grid.size else start
    out = np.empty((n_paths, grid.size), dtype=np.int64)
    for i in range(n_paths):
        gen = path_generator(seed, i)
        _, _, times, _, _ = _run_path(p, r, start, b, gen, marks, history,
                                      event_cap, True)
        out[i] = np.searchsorted(times, grid, side="right")
    return out


def simulate_count_distribution(p: PhaseOneParams, r: Optional[ReactionParams],
                                horizon: float, n_paths: int, seed: int, *,
                                start: float = 0.0, marks=None,
                                history: Optional[EventStream] = None,
                                event_cap: int = DEFAULT_EVENT_CAP
                                ) -> CountDistribution:
    """Terminal counts on (start, horizon] over ``n_paths`` seeded paths."""
    if n_paths < 1:
        raise DomainError("n_paths must be >= 1")
    if horizon < start:
        raise DomainError("horizon precedes start")
    counts = np.empty(n_paths, dtype=np.int64)
    for i in range(n_paths):
        gen = path_generator(seed, i)
        counts[i] = _run_path(p, r, start, horizon, gen, marks, history,
                              event_cap, False)[4]
    return CountDistribution(float(horizon), counts, n_paths)
