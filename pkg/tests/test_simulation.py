import numpy as np
import pytest

from conftest import BENCH
from cyberhawkes import (ConditioningState, ExplosionError, MarkDistribution,
                         PhaseOneParams, ReactionParams, expected_count,
                         ks_exp1, rescaled_interarrivals,
                         simulate_count_distribution, simulate_counts_on_grid,
                         simulate_external, simulate_two_phase)
from cyberhawkes.simulation import PHASE_AFTER, PHASE_BEFORE


def test_external_empty_when_rate_zero():
    assert simulate_external(0.0, (0.0, 100.0), seed=1).size == 0


def test_external_mean_count():
    counts = np.array([simulate_external(2.0, (0.0, 5.0), seed=s).size
                       for s in range(10_000)])
    se = counts.std(ddof=1) / np.sqrt(counts.size)
    assert abs(counts.mean() - 10.0) < 3 * se


def test_external_deterministic():
    a = simulate_external(1.5, (0.0, 50.0), seed=9)
    b = simulate_external(1.5, (0.0, 50.0), seed=9)
    assert a.tobytes() == b.tobytes()
    assert np.all(np.diff(a) > 0)


def test_trajectory_deterministic(bench, bench_reaction):
    a = simulate_two_phase(bench, bench_reaction, (0, 30), seed=4)
    b = simulate_two_phase(bench, bench_reaction, (0, 30), seed=4)
    assert a.events == b.events
    c = simulate_two_phase(bench, bench_reaction, (0, 30), seed=5)
    assert not a.events == c.events


def test_path_streams_are_order_independent(bench):
    full = simulate_counts_on_grid(bench, None, [5.0, 10.0], 20, seed=3)
    single = simulate_two_phase(bench, None, (0, 10), seed=3, path_index=7)
    assert full[7, 1] == single.events.internal_times.size


def test_labels_and_external_cut(bench, bench_reaction):
    tr = simulate_two_phase(bench, bench_reaction, (0, 40), seed=2)
    times = tr.events.internal_times
    assert np.all(np.diff(times) > 0)
    assert np.all(tr.phase_labels[times < 3.0] == PHASE_BEFORE)
    assert np.all(tr.phase_labels[times >= 3.0] == PHASE_AFTER)
    assert np.all(tr.events.external_times < 3.0)


def test_poisson_special_case():
    p = PhaseOneParams(1.0, 0.0, 0.0, 0.0, 1.0)
    dist = simulate_count_distribution(p, None, 10.0, 10_000, seed=0)
    assert abs(dist.mean() - 10.0) < 3 * dist.std_error()


def test_single_path_distribution(bench):
    dist = simulate_count_distribution(bench, None, 10.0, 1, seed=0)
    assert dist.counts.shape == (1,)
    lo, hi = dist.percentile([5, 95])
    assert lo == hi == dist.counts[0]


def test_percentiles_monotone(bench):
    dist = simulate_count_distribution(bench, None, 20.0, 500, seed=1)
    q = dist.percentile([5, 25, 50, 75, 95])
    assert np.all(np.diff(q) >= 0)


def test_explosion_cap():
    p = PhaseOneParams(1.0, 0.0, 0.0, 3.0, 1.0)
    with pytest.raises(ExplosionError):
        simulate_two_phase(p, None, (0.0, 100.0), seed=0, event_cap=1000)


def test_random_marks_keep_the_mean(bench):
    marks = (MarkDistribution("exponential", bench.mbar),
             MarkDistribution("lognormal", bench.m, 0.5), None)
    dist = simulate_count_distribution(bench, None, 10.0, 10_000, seed=8, marks=marks)
    want = expected_count(bench, None, ConditioningState.initial(bench), 10.0)
    assert abs(dist.mean() - want) < 3 * dist.std_error()


@pytest.mark.slow
def test_two_phase_below_one_phase(bench, bench_reaction):
    one = simulate_count_distribution(bench, None, 10.0, 10_000, seed=0)
    two = simulate_count_distribution(bench, bench_reaction, 10.0, 10_000, seed=0)
    assert two.mean() < one.mean()


@pytest.mark.slow
def test_grid_means_match_closed_form(bench, bench_reaction):
    grid = np.arange(1.0, 11.0)
    counts = simulate_counts_on_grid(bench, bench_reaction, grid, 10_000, seed=21)
    want = expected_count(bench, bench_reaction,
                          ConditioningState.initial(bench), grid)
    se = counts.std(axis=0, ddof=1) / np.sqrt(counts.shape[0])
    assert np.all(np.abs(counts.mean(axis=0) - want) < 3 * se)


@pytest.mark.slow
def test_variance_grows_with_m():
    low = PhaseOneParams(0.6, 0.2, 0.8, 0.3, 1.5)
    high = PhaseOneParams(0.6, 0.2, 0.8, 0.9, 1.5)
    v_low = simulate_count_distribution(low, None, 30.0, 10_000, seed=0).counts.var()
    v_high = simulate_count_distribution(high, None, 30.0, 10_000, seed=0).counts.var()
    assert v_high > v_low


@pytest.mark.slow
def test_reaction_monotonicity(bench):
    def mean(a0, a1):
        r = ReactionParams(3.0, a0, a1, bench.m)
        return simulate_count_distribution(bench, r, 10.0, 10_000, seed=0).mean()

    assert mean(0.5, 1.0) < mean(1.0, 1.0)
    assert mean(1.0, 0.5) <= mean(1.0, 1.0)


@pytest.mark.slow
def test_thinning_exactness_by_rescaling():
    # true-parameter rescaling must give Exp(1) gaps: the KS test should
    # reject near its nominal 5% rate
    p = PhaseOneParams(**BENCH)
    rejections = 0
    n = 200
    for seed in range(n):
        ev = simulate_two_phase(p, None, (0.0, 365.0), seed=seed).events
        rejections += ks_exp1(rescaled_interarrivals(p, ev)).rejected_at_5pct
    sigma = np.sqrt(0.05 * 0.95 / n)
    assert abs(rejections / n - 0.05) <= 3 * sigma
