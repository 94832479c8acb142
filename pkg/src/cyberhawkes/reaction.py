"""Choosing reaction parameters under a daily assistance capacity.

Expected daily claims after the switch must not exceed the capacity left
once the backlog accumulated before the switch is spread over the remaining
days. Feasibility is checked on a grid of (alpha0, alpha1); the post-switch
mark is only lowered when no grid point works with the original mark.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import DomainError, InfeasibleScenarioError
from .expectation import ConditioningState, expected_count, two_phase_moments
from .model import PhaseOneParams, ReactionParams
from .simulation import simulate_two_phase

# slack on the capacity comparison to absorb rounding in the closed form
FEASIBILITY_TOL = 1e-12


@dataclass(frozen=True)
class CapacityScenario:
    capacity: float
    ell: float
    tau: float
    grid_step: float = 0.01
    m_al_grid_step: Optional[float] = None

    def __post_init__(self):
        if not self.capacity > 0:
            raise DomainError("capacity must be > 0")
        if not 0 < self.ell < self.tau:
            raise DomainError("need 0 < ell < tau")
        if not 0 < self.grid_step <= 1:
            raise DomainError("grid_step must lie in (0, 1]")
        if self.m_al_grid_step is not None and not self.m_al_grid_step > 0:
            raise DomainError("m_al_grid_step must be > 0")


@dataclass
class ReactionSelection:
    diminished_capacity: float
    alpha0_grid: np.ndarray
    alpha1_grid: np.ndarray
    feasible_grid: np.ndarray  # [i0, i1] for alpha0_grid[i0], alpha1_grid[i1]
    frontier: List[Tuple[float, float]]
    chosen: Optional[Tuple[float, float, float]]
    feasible: bool
    m_al: float
    increments: Optional[np.ndarray] = None
    days: np.ndarray = field(default_factory=lambda: np.empty(0))

    def feasible_points(self) -> List[Tuple[float, float]]:
        i0, i1 = np.nonzero(self.feasible_grid)
        return [(float(self.alpha0_grid[a]), float(self.alpha1_grid[b]))
                for a, b in zip(i0, i1)]

    def to_dict(self) -> dict:
        out = {
            "diminished_capacity": self.diminished_capacity,
            "feasible": self.feasible,
            "m_al": self.m_al,
            "chosen": None,
            "frontier": [list(pt) for pt in self.frontier],
            "n_feasible_points": int(self.feasible_grid.sum()),
        }
        if self.chosen is not None:
            a0, a1, mal = self.chosen
            out["chosen"] = {"alpha0": a0, "alpha1": a1, "m_al": mal}
        if self.increments is not None:
            out["increments"] = [float(x) for x in self.increments]
            out["days"] = [float(x) for x in self.days]
        return out


def _start(p: PhaseOneParams) -> ConditioningState:
    return ConditioningState.initial(p, 0.0)


def diminished_capacity(p: PhaseOneParams, sc: CapacityScenario) -> float:
    """Daily capacity left after absorbing the expected backlog at ell."""
    n_ell = expected_count(p, None, _start(p), sc.ell)
    backlog = max(0.0, n_ell - sc.capacity * sc.ell)
    c_d = sc.capacity - backlog / (sc.tau - sc.ell)
    if c_d <= 0:
        raise InfeasibleScenarioError(
            f"expected backlog {backlog:.4g} exhausts the capacity "
            f"(diminished capacity {c_d:.4g})")
    return c_d


def reaction_days(sc: CapacityScenario) -> np.ndarray:
    """Day starts ell, ell+1, ... whose next full day ends by tau."""
    n = int(np.floor(sc.tau - sc.ell + 1e-9))
    return sc.ell + np.arange(n, dtype=np.float64)


def daily_increments(p: PhaseOneParams, sc: CapacityScenario, alpha0, alpha1,
                     m_al) -> np.ndarray:
    """E[N_{t+1} - N_t] for t in reaction_days; extra leading axis over days.

    ``alpha0``, ``alpha1`` and ``m_al`` broadcast against each other, so the
    result has shape (n_days,) + broadcast shape.
    """
    days = reaction_days(sc)
    edges = np.append(days, days[-1] + 1.0) if days.size else days
    shape = np.broadcast(np.asarray(alpha0), np.asarray(alpha1),
                         np.asarray(m_al)).shape
    t = edges.reshape((-1,) + (1,) * len(shape))
    _, counts = two_phase_moments(p, _start(p), t, sc.ell, alpha0, alpha1, m_al)
    counts = np.broadcast_to(counts, (edges.size,) + shape)
    return np.diff(counts, axis=0)


def is_feasible(p: PhaseOneParams, sc: CapacityScenario, alpha0: float,
                alpha1: float, m_al: float) -> bool:
    """True iff every expected daily increment after ell is within capacity."""
    ReactionParams(sc.ell, alpha0, alpha1, m_al).check_against(p)
    c_d = diminished_capacity(p, sc)
    inc = daily_increments(p, sc, alpha0, alpha1, m_al)
    return bool(np.all(inc <= c_d + FEASIBILITY_TOL))


def _alpha_grid(step: float) -> np.ndarray:
    n = int(round(1.0 / step))
    return np.round(np.linspace(0.0, 1.0, n + 1), 12)


def _scan(p, sc, c_d, grid, m_al):
    a0 = grid[:, None]
    a1 = grid[None, :]
    inc = daily_increments(p, sc, a0, a1, m_al)
    feasible = np.all(inc <= c_d + FEASIBILITY_TOL, axis=0)
    feasible[0, 0] = False  # no reaction at all is not admissible
    return feasible


def _frontier(grid, feasible) -> List[Tuple[float, float]]:
    n = grid.size
    out = []
    for i0, i1 in zip(*np.nonzero(feasible)):
        up0 = i0 + 1 < n and feasible[i0 + 1, i1]
        up1 = i1 + 1 < n and feasible[i0, i1 + 1]
        if not up0 and not up1:
            out.append((float(grid[i0]), float(grid[i1])))
    return out


def _lexicographic_choice(grid, feasible):
    # largest alpha1 first, then largest alpha0
    for i1 in range(grid.size - 1, -1, -1):
        rows = np.nonzero(feasible[:, i1])[0]
        if rows.size:
            return float(grid[rows[-1]]), float(grid[i1])
    return None


def select_reaction(p: PhaseOneParams, sc: CapacityScenario) -> ReactionSelection:
    """Cheapest feasible reaction on the grid.

    Keeps m_al = m while any (alpha0, alpha1) is feasible and picks the
    largest alpha1, then the largest alpha0. Otherwise lowers m_al step by
    step over ]0, m[ and repeats the scan.
    """
    c_d = diminished_capacity(p, sc)
    grid = _alpha_grid(sc.grid_step)
    m_step = sc.m_al_grid_step if sc.m_al_grid_step is not None else p.m / 20
    candidates = [p.m]
    if p.m > 0 and m_step > 0:
        k = np.arange(1, int(np.ceil(p.m / m_step)))
        candidates += [float(v) for v in p.m - k * m_step if v > 0]
    feasible = None
    for m_al in candidates:
        feasible = _scan(p, sc, c_d, grid, m_al)
        choice = _lexicographic_choice(grid, feasible)
        if choice is not None:
            a0, a1 = choice
            inc = daily_increments(p, sc, a0, a1, m_al)
            return ReactionSelection(c_d, grid, grid, feasible,
                                     _frontier(grid, feasible),
                                     (a0, a1, m_al), True, m_al, inc,
                                     reaction_days(sc))
    return ReactionSelection(c_d, grid, grid, feasible, [], None, False,
                             candidates[-1])


def first_capacity_breach(p: PhaseOneParams, capacity: float, horizon: float,
                          mode: str = "expectation", seed: Optional[int] = None,
                          r: Optional[ReactionParams] = None) -> Optional[int]:
    """First integer day t with cumulative count above capacity * t.

    ``mode="expectation"`` uses the closed-form mean; ``mode="trajectory"``
    uses one seeded simulated path. Returns None when no breach occurs up to
    ``horizon``.
    """
    if not capacity > 0:
        raise DomainError("capacity must be > 0")
    days = np.arange(1, int(np.floor(horizon)) + 1, dtype=np.float64)
    if days.size == 0:
        return None
    if mode == "expectation":
        counts = np.atleast_1d(expected_count(p, r, _start(p), days))
    elif mode == "trajectory":
        if seed is None:
            raise DomainError("trajectory mode needs a seed")
        tr = simulate_two_phase(p, r, (0.0, float(days[-1])), seed)
        counts = tr.count_at(days)
    else:
        raise DomainError(f"unknown mode {mode!r}")
    over = np.nonzero(counts > capacity * days)[0]
    return int(days[over[0]]) if over.size else None
