import math

import numpy as np
import pytest

from cyberhawkes import ConvergenceError, DomainError, OptimizerOptions, minimize


def test_quadratic_recovers_minimum():
    target = np.array([0.7, 2.5, 0.05, 11.0])
    out = minimize(lambda x: float(np.sum((x - target) ** 2)), np.ones(4),
                   OptimizerOptions(ftol=1e-14, xtol=1e-10))
    np.testing.assert_allclose(out.x, target, atol=1e-5)
    assert out.converged


def test_linear_space_allows_negative_values():
    target = np.array([-3.0, 4.0])
    out = minimize(lambda x: float(np.sum((x - target) ** 2)), np.zeros(2),
                   OptimizerOptions(log_transform=False, ftol=1e-14, xtol=1e-10))
    np.testing.assert_allclose(out.x, target, atol=1e-5)


def test_trace_never_increases():
    def rosen(x):
        return float((1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2)

    out = minimize(rosen, np.array([0.5, 2.0]), OptimizerOptions(restarts=0))
    assert len(out.trace) > 10
    assert np.all(np.diff(out.trace) <= 0)


def test_non_finite_everywhere_raises():
    with pytest.raises(ConvergenceError):
        minimize(lambda x: math.inf, np.ones(3))


def test_non_finite_region_is_avoided():
    # infinite to the left of 1, minimum at 2
    def f(x):
        return math.inf if x[0] < 1.0 else (x[0] - 2.0) ** 2

    out = minimize(f, np.array([1.5]), OptimizerOptions(ftol=1e-14, xtol=1e-10))
    assert out.x[0] == pytest.approx(2.0, abs=1e-5)


def test_log_start_must_be_positive():
    with pytest.raises(DomainError):
        minimize(lambda x: 0.0, np.array([1.0, 0.0]))


def test_bad_options():
    with pytest.raises(DomainError):
        OptimizerOptions(max_iterations=0)
    with pytest.raises(DomainError):
        OptimizerOptions(restarts=-1)
