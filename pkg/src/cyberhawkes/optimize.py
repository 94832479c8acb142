"""Derivative-free minimisation of positive parameter vectors."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List

import numpy as np
from scipy.optimize import minimize as _scipy_minimize

from .errors import ConvergenceError, DomainError

# stand-in for +inf so simplex arithmetic stays finite
_PENALTY = 1e300


@dataclass(frozen=True)
class OptimizerOptions:
    max_iterations: int = 2000
    ftol: float = 1e-8
    xtol: float = 1e-8
    restarts: int = 3
    log_transform: bool = True
    initial_step: float = 0.3

    def __post_init__(self):
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be >= 1")
        if not (self.ftol > 0 and self.xtol > 0 and self.initial_step > 0):
            raise DomainError("tolerances and initial step must be > 0")
        if self.restarts < 0:
            raise DomainError("restarts must be >= 0")


@dataclass
class OptimizeOutcome:
    x: np.ndarray
    fun: float
    converged: bool
    iterations: int
    evaluations: int
    trace: List[float] = field(default_factory=list)


def _simplex(z0: np.ndarray, step: float, log_space: bool) -> np.ndarray:
    n = z0.size
    simplex = np.tile(z0, (n + 1, 1))
    for i in range(n):
        if log_space:
            simplex[i + 1, i] += step
        else:
            simplex[i + 1, i] += step * max(abs(z0[i]), 1.0)
    return simplex


def minimize(objective: Callable[[np.ndarray], float], x0,
             opts: OptimizerOptions = OptimizerOptions()) -> OptimizeOutcome:
    """Nelder-Mead on ``objective`` with optional log reparametrisation.

    With ``log_transform`` every coordinate of ``x0`` must be positive and
    the search runs over log(x), which keeps iterates positive. After the
    first run the simplex is rebuilt around the best point ``restarts``
    times; the best vertex over all runs is returned.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    log_space = opts.log_transform
    if log_space and np.any(x0 <= 0):
        raise DomainError("log-transformed start must be strictly positive")

    to_x = np.exp if log_space else (lambda z: z)
    n_evals = 0

    def wrapped(z):
        nonlocal n_evals
        n_evals += 1
        with np.errstate(over="ignore"):
            x = to_x(z)
        val = objective(x)
        return float(val) if np.isfinite(val) else _PENALTY

    z = np.log(x0) if log_space else x0.copy()
    best_f = wrapped(z)
    if best_f >= _PENALTY:
        probes = [wrapped(v) for v in _simplex(z, opts.initial_step, log_space)[1:]]
        if min(probes, default=_PENALTY) >= _PENALTY:
            raise ConvergenceError("objective is not finite at the start or any probe")
    best_z = z
    trace: List[float] = []
    iterations = 0
    converged = False

    def record(intermediate_result):
        trace.append(float(intermediate_result.fun))

    for _ in range(opts.restarts + 1):
        res = _scipy_minimize(
            wrapped, best_z, method="Nelder-Mead", callback=record,
            options={"maxiter": opts.max_iterations, "xatol": opts.xtol,
                     "fatol": opts.ftol, "adaptive": best_z.size > 3,
                     "initial_simplex": _simplex(best_z, opts.initial_step,
                                                 log_space)})
        iterations += int(res.nit)
        converged = bool(res.success)
        improved = res.fun < best_f
        if res.fun <= best_f:
            best_f, best_z = float(res.fun), np.asarray(res.x)
        if not improved and converged:
            break

    if best_f >= _PENALTY:
        raise ConvergenceError("no finite objective value found")
    return OptimizeOutcome(to_x(best_z), best_f, converged, iterations,
                           n_evals, trace)
