import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import BENCH, stream
from oracles import brute_neg_log_likelihood, random_instance
from cyberhawkes import (DomainError, EventStream, PhaseOneParams,
                         confidence_intervals, fit, mse_ext, mse_int,
                         neg_log_likelihood, simulate_external,
                         simulate_two_phase)
from cyberhawkes.calibration import (delta_sweep, finite_difference_hessian,
                                     injected_rho)

# frozen oracle outputs
NO_EVENTS = (1.0 + 1.0) * 2.0                              # 4.0
ONE_EVENT = 2.0 + 0.5 * (1 - math.exp(-1.0)) - math.log(1.0) + 0.5 * 2.0   # 3.31606


class TestLikelihood:
    def test_no_events(self):
        p = PhaseOneParams(1.0, 1.0, 0.3, 0.3, 1.0)
        ev = EventStream(0.0, 0.0, 2.0, np.array([]), np.array([]))
        assert neg_log_likelihood(p, ev) == pytest.approx(NO_EVENTS, rel=1e-12)

    def test_one_event(self):
        p = PhaseOneParams(1.0, 0.5, 0.0, 0.5, 1.0)
        ev = EventStream(0.0, 0.0, 2.0, np.array([1.0]), np.array([]))
        assert neg_log_likelihood(p, ev) == pytest.approx(ONE_EVENT, rel=1e-12)
        assert ONE_EVENT == pytest.approx(3.31606, abs=1e-5)

    def test_zero_rate_with_externals_is_infinite(self):
        p = PhaseOneParams(1.0, 0.0, 0.5, 0.5, 1.0)
        assert neg_log_likelihood(p, stream([1.0], [0.5], tau=2.0)) == math.inf

    def test_history_conditions_the_window(self):
        p = PhaseOneParams(**BENCH)
        ev = stream([0.5, 1.5, 2.5], [1.0], s=2.0, tau=4.0)
        theta = tuple(p.as_dict().values())
        want = brute_neg_log_likelihood(theta, [0.5, 1.5, 2.5], [1.0], 2.0, 4.0)
        assert neg_log_likelihood(p, ev) == pytest.approx(want, rel=1e-9)

    def test_last_event_exposure(self):
        p = PhaseOneParams(1.0, 0.5, 0.2, 0.2, 1.0)
        ev = stream([], [1.0, 3.0, 7.0], s=2.0, tau=9.0)
        window = neg_log_likelihood(p, ev, "window")
        last = neg_log_likelihood(p, ev, "last_event")
        # exposure 7 - 1 instead of 9 - 2
        assert last - window == pytest.approx(0.5 * (6.0 - 7.0), rel=1e-12)
        with pytest.raises(DomainError):
            neg_log_likelihood(p, ev, "other")

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_matches_brute_force(self, seed):
        theta, internal, external, s, tau = random_instance(np.random.default_rng(seed))
        ev = EventStream(0.0, s, tau, internal, external)
        got = neg_log_likelihood(PhaseOneParams(*theta), ev)
        want = brute_neg_log_likelihood(theta, internal, external, s, tau)
        assert got == pytest.approx(want, rel=1e-6)


class TestMse:
    def test_perfect_fit_is_zero(self):
        # two internal and one external event in every 2-day interval
        internal = np.concatenate([[k + 0.3, k + 1.3] for k in range(0, 10, 2)])
        external = np.arange(0.5, 10, 2.0)
        ev = EventStream(0.0, 0.0, 10.0, internal, external)
        p = PhaseOneParams(1.0, 0.5, 0.0, 0.0, 1.0)
        assert mse_int(p, ev, 2.0) == pytest.approx(0.0, abs=1e-20)
        assert mse_ext(p, ev, 2.0) == pytest.approx(0.0, abs=1e-20)

    def test_external_penalty(self):
        ev = EventStream(0.0, 0.0, 4.0, np.array([]), np.array([0.5, 1.0, 1.5]))
        p = PhaseOneParams(1e-9, 1.0, 0.0, 0.0, 1.0)
        # intervals hold 3 and 0 external events against 2 expected each
        assert mse_ext(p, ev, 2.0) - mse_int(p, ev, 2.0) == pytest.approx(
            (1.0 + 4.0) / 4.0, rel=1e-9)

    def test_needs_one_interval(self):
        p = PhaseOneParams(**BENCH)
        with pytest.raises(DomainError):
            mse_int(p, stream([1.0], tau=1.5), 2.0)


class TestStrategies:
    def test_injected_rho_is_the_observed_rate(self):
        ext = simulate_external(0.7, (0.0, 200.0), seed=3)
        ev = EventStream(0.0, 100.0, 200.0, np.array([50.0, 150.0]), ext)
        assert injected_rho(ev) == ext.size / 200.0
        res = fit(ev, "likelihood", "injected_rho", with_ci=False, n_starts=1)
        assert res.params.rho == ext.size / 200.0

    def test_injected_product(self, bench):
        ev = simulate_two_phase(bench, None, (0.0, 400.0), seed=1).events.with_window(200)
        res = fit(ev, "likelihood", "injected_rho_mbar", rho_mbar=0.16,
                  with_ci=False, n_starts=1)
        assert res.params.rho * res.params.mbar == pytest.approx(0.16, rel=1e-9)
        with pytest.raises(DomainError):
            fit(ev, "likelihood", "injected_rho_mbar", with_ci=False)

    def test_unknown_method(self, bench):
        ev = stream([1.0, 2.0], tau=5.0)
        with pytest.raises(DomainError):
            fit(ev, "least_squares")
        with pytest.raises(DomainError):
            fit(ev, "likelihood", "full7")

    def test_without_external_terms(self, bench):
        ev = simulate_two_phase(bench, None, (0.0, 300.0), seed=2).events.with_window(100)
        res = fit(ev, external=False, with_ci=False, n_starts=1)
        assert res.params.rho == 0.0 and res.params.mbar == 0.0
        assert res.external is False


class TestConfidenceIntervals:
    def test_hessian_of_quadratic(self):
        A = np.array([[2.0, 0.5], [0.5, 1.0]])
        H = finite_difference_hessian(lambda x: 0.5 * x @ A @ x, np.array([1.0, 3.0]))
        np.testing.assert_allclose(H, A, rtol=1e-5)

    def test_pure_external_poisson(self):
        ext = simulate_external(2.0, (0.0, 300.0), seed=0)
        ev = EventStream(0.0, 0.0, 300.0, np.array([]), ext)
        n = ext.size
        rho_hat = n / 300.0
        p_hat = PhaseOneParams(1.0, rho_hat, 0.0, 0.0, 1.0)
        ci, reliable = confidence_intervals(p_hat, ev, free=("rho",))
        assert reliable
        half = 1.96 * rho_hat / math.sqrt(n)
        assert ci["rho"][0] == pytest.approx(rho_hat - half, rel=1e-5)
        assert ci["rho"][1] == pytest.approx(rho_hat + half, rel=1e-5)

    def test_unknown_name(self, bench):
        with pytest.raises(DomainError):
            confidence_intervals(bench, stream([1.0]), free=("kappa",))

    @pytest.mark.slow
    def test_intervals_shrink_with_window(self, bench):
        widths = []
        for tau in (400.0, 800.0, 1600.0):
            ev = simulate_two_phase(bench, None, (0.0, tau), seed=7).events
            ci, reliable = confidence_intervals(bench, ev)
            assert reliable
            widths.append([hi - lo for lo, hi in ci.values()])
        widths = np.array(widths)
        assert np.all(np.diff(widths, axis=0) < 0)


@pytest.fixture(scope="module")
def sample():
    p = PhaseOneParams(**BENCH)
    return simulate_two_phase(p, None, (0.0, 1095.0), seed=0).events.with_window(548)


@pytest.mark.slow
class TestFits:
    def test_likelihood_recovers_truth(self, sample):
        res = fit(sample)
        assert res.ci_reliable
        for name, true in BENCH.items():
            lo, hi = res.ci95[name]
            assert lo <= getattr(res.params, name) <= hi
            assert lo <= true <= hi
        assert res.converged

    def test_likelihood_has_lowest_nll(self, sample):
        results = {m: fit(sample, m, with_ci=False) for m in ("likelihood", "mse_int", "mse_ext")}
        best = results["likelihood"].neg_log_lik
        assert all(best <= r.neg_log_lik for r in results.values())

    def test_diagnostics_recomputed(self, sample):
        res = fit(sample, "mse_ext", with_ci=False)
        assert res.neg_log_lik == pytest.approx(neg_log_likelihood(res.params, sample))
        assert res.phi_norm == pytest.approx(res.params.m / res.params.delta)
        assert res.ci95 == {}

    def test_delta_sweep_shape(self, sample):
        out = delta_sweep(sample, [1.0, 4.0], n_starts=1)
        assert [step for step, _ in out] == [1.0, 4.0]
        assert all(res.delta_step == step for step, res in out)

    def test_regime_misidentification_example(self):
        p = PhaseOneParams(5.0, 40.0, 10.0, 0.5, 0.7)
        ev = simulate_two_phase(p, None, (0.0, 3.0), seed=1).events
        with_ext = fit(ev, with_ci=False)
        without = fit(ev, external=False, with_ci=False)
        assert with_ext.phi_norm < 1 < without.phi_norm


@pytest.mark.slow
def test_likelihood_beats_mse_int_on_every_parameter():
    p = PhaseOneParams(**BENCH)
    truth = np.array(list(BENCH.values()))
    est = {"likelihood": [], "mse_int": []}
    for seed in range(100, 150):
        ev = simulate_two_phase(p, None, (0.0, 1095.0), seed=seed).events.with_window(548)
        for method in est:
            res = fit(ev, method, with_ci=False)
            est[method].append(list(res.params.as_dict().values()))
    # mse_int can wander off to huge values along flat directions
    with np.errstate(over="ignore"):
        rmse = {m: np.sqrt(np.mean((np.array(v) - truth) ** 2, axis=0))
                for m, v in est.items()}
    assert np.all(rmse["likelihood"] < rmse["mse_int"])
