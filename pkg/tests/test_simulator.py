import itertools
from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import binom, chisquare

from fleetq.errors import InvalidInputError, OracleSizeError
from fleetq.prob_core import FleetScenario
from fleetq.queue_bound import waiting_bound
from fleetq.simulator import (
    SimConfig,
    SimScenario,
    lindley_oracle,
    make_rng,
    queue_exceedance,
    replicate_seed,
    run_queue,
    run_replications,
    sample_binomial,
    simulate,
    splitmix64,
    summarize,
    sweep_fleet,
)


def lindley_step(x, a, m):
    return max(0, x - m) + a


class TestRng:
    def test_splitmix_reference_values(self):
        # first outputs of the SplitMix64 reference generator seeded with 0
        assert splitmix64(0) == 0xE220A8397B1DCDAF
        assert splitmix64(0x9E3779B97F4A7C15) == 0x6E789E6AA1B965F4

    def test_replicate_seed_is_stream_of_splitmix(self):
        assert replicate_seed(0, 0) == 0xE220A8397B1DCDAF
        assert len({replicate_seed(42, i) for i in range(1000)}) == 1000

    def test_trivial_probabilities(self):
        rng = make_rng(1)
        assert sample_binomial(1000, 0.0, rng) == 0
        assert sample_binomial(5, 1.0, rng) == 5
        assert sample_binomial(0, 0.5, rng) == 0

    @pytest.mark.parametrize("n", [12, 1000])
    def test_empirical_mean(self, n):
        rng = make_rng(7)
        draws = np.array([sample_binomial(n, 0.1, rng) for _ in range(100_000)])
        sd = np.sqrt(n * 0.1 * 0.9)
        assert abs(draws.mean() - n * 0.1) <= 3 * sd / np.sqrt(draws.size)
        if n == 1000:
            assert abs(draws.mean() - 100) <= 1

    def test_small_n_uses_bernoulli_trials(self):
        a, b = make_rng(3), make_rng(3)
        x = sample_binomial(10, 0.3, a)
        assert x == int(np.count_nonzero(b.random(10) < 0.3))


class TestSimulate:
    def test_no_demand(self):
        cfg = SimConfig(SimScenario(1000, 0.0, 10), 365)
        r = simulate(cfg)
        assert r.requests_total == 0 and set(r.queue_trajectory) == {0}

    def test_deterministic_demand_hand_trace(self):
        cfg = SimConfig(SimScenario(3, 1.0, 3), 10)
        r = simulate(cfg)
        assert r.wait_histogram == {0: 27}
        assert r.residual_queue == 3
        assert r.requests_total == 30 and r.served_total == 27
        assert r.queue_trajectory == [3] * 10

    def test_backlog_hand_trace(self):
        # fleet of 2, three requests a day: one request slips per day
        r = run_queue(2, [3, 3, 3, 0, 0])
        assert r.queue_trajectory == [3, 4, 5, 3, 1]
        assert r.wait_histogram == {0: 3, 1: 5}
        assert r.residual_queue == 1

    def test_reproducible(self):
        cfg = SimConfig(FleetScenario(1000, 0.1, 105), 365, 3, base_seed=99)
        assert simulate(cfg, 2) == simulate(cfg, 2)
        assert simulate(cfg, 1) != simulate(cfg, 2)

    def test_parallel_matches_serial(self):
        cfg = SimConfig(FleetScenario(200, 0.1, 21), 60, 6, base_seed=5)
        assert run_replications(cfg, workers=2) == run_replications(cfg, workers=1)

    def test_config_validation(self):
        with pytest.raises(InvalidInputError):
            SimConfig(FleetScenario(10, 0.1), 10)
        with pytest.raises(InvalidInputError):
            SimConfig(FleetScenario(10, 0.1, 2), 0)
        with pytest.raises(InvalidInputError):
            SimScenario(10, 1.5, 2)

    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 12), st.lists(st.integers(0, 20), min_size=1, max_size=40))
    def test_conservation_and_trajectory_law(self, m, arrivals):
        r = run_queue(m, arrivals)
        assert r.requests_total == r.served_total + r.residual_queue
        assert sum(r.wait_histogram.values()) == r.served_total
        x = 0
        for a, stored in zip(arrivals, r.queue_trajectory):
            x = lindley_step(x, a, m)
            assert stored == x
        assert r.residual_queue == r.queue_trajectory[-1]
        # worst-case wait of a served request is bounded by the queue ahead of it
        if r.wait_histogram and m:
            assert max(r.wait_histogram) <= max(r.queue_trajectory) // m

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 10), st.lists(st.integers(0, 15), min_size=1, max_size=40))
    def test_more_vehicles_never_hurt(self, m, arrivals):
        small, big = run_queue(m, arrivals), run_queue(m + 1, arrivals)
        assert all(b <= s for s, b in zip(small.queue_trajectory, big.queue_trajectory))
        for k in range(0, 8):
            assert big.waiting_at_least(k) + big.residual_queue <= small.waiting_at_least(k) + small.residual_queue


class TestAgainstBound:
    @pytest.mark.slow
    def test_fleet_121_next_morning_service(self):
        cfg = SimConfig(FleetScenario(1000, 0.1, 121), 365, 200, base_seed=2024)
        results = run_replications(cfg)
        frac, hw = summarize(results, 1)
        assert frac + hw < 0.05
        assert waiting_bound(cfg.scenario, 1) < 0.05

    def test_queue_exceedance_below_bound(self):
        cfg = SimConfig(FleetScenario(1000, 0.1, 110), 365, 40, base_seed=11)
        results = run_replications(cfg)
        for k in (1, 2):
            freq, hw = queue_exceedance(results, 110, k)
            assert freq - hw <= waiting_bound(cfg.scenario, k)


class TestSweep:
    def test_full_fleet_never_waits(self):
        cfg = SimConfig(FleetScenario(50, 0.3, 50), 100, 5, base_seed=1)
        rows = sweep_fleet(cfg, [50], [0, 1, 2])
        assert [r.fraction for r in rows] == [0.0, 0.0, 0.0]

    def test_critical_load_has_next_morning_failures(self):
        cfg = SimConfig(FleetScenario(1000, 0.1, 100), 365, 20, base_seed=3)
        (row,) = sweep_fleet(cfg, [100], [0])
        assert row.fraction > 0

    def test_monotone_in_m_and_k(self):
        cfg = SimConfig(FleetScenario(1000, 0.1, 10), 365, 20, base_seed=8)
        rows = sweep_fleet(cfg, list(range(10, 101, 10)), [1, 3], censor_conservative=True)
        by_k = {k: [r.fraction for r in rows if r.k == k] for k in (1, 3)}
        for fr in by_k.values():
            assert all(b <= a for a, b in zip(fr, fr[1:]))
        assert all(b <= a for a, b in zip(by_k[1], by_k[3]))

    def test_rejects_fleet_outside_population(self):
        cfg = SimConfig(FleetScenario(10, 0.1, 1), 5)
        with pytest.raises(InvalidInputError):
            sweep_fleet(cfg, [11], [1])


def brute_force_pmf(n, p, m, horizon):
    """Exact law of X_horizon with rational weights, independent of numpy."""
    p = Fraction(str(p))
    pa = [comb(n, a) * p**a * (1 - p) ** (n - a) for a in range(n + 1)]
    pmf = {}
    for seq in itertools.product(range(n + 1), repeat=horizon):
        w = Fraction(1)
        x = 0
        for a in seq:
            w *= pa[a]
            x = lindley_step(x, a, m)
        pmf[x] = pmf.get(x, 0) + w
    return pmf


class TestOracle:
    def test_size_limit(self):
        with pytest.raises(OracleSizeError):
            lindley_oracle(13, 0.1, 2, 3)
        with pytest.raises(OracleSizeError):
            lindley_oracle(3, 0.1, 2, 7)

    def test_one_day_is_binomial(self):
        r = lindley_oracle(2, 0.5, 2, 1)
        np.testing.assert_allclose(r.pmf, binom.pmf(np.arange(3), 2, 0.5), atol=1e-15)

    def test_against_rational_enumeration(self):
        r = lindley_oracle(3, 0.3, 1, 3)
        exact = brute_force_pmf(3, 0.3, 1, 3)
        for x, w in exact.items():
            assert r.pmf[x] == pytest.approx(float(w), abs=1e-15)
        assert r.pmf.sum() == pytest.approx(1.0, abs=1e-14)

    def test_small_instance_respects_bound(self):
        r = lindley_oracle(3, 0.3, 1, 3)
        sc = FleetScenario(3, 0.3, 1)
        for k in (1, 2, 3):
            assert r.prob_exceeds(k * 1) <= waiting_bound(sc, k)

    def test_max_form_matches_recursion(self):
        r = lindley_oracle(12, 0.1, 2, 4)
        assert r.max_abs_diff <= 1e-12
        np.testing.assert_allclose(r.pmf, r.pmf_max_form, atol=1e-12)

    @pytest.mark.slow
    def test_simulated_distribution_matches_oracle(self):
        n, p, m, h = 6, 0.4, 3, 4
        oracle = lindley_oracle(n, p, m, h)
        cfg = SimConfig(FleetScenario(n, p, m), h, 100_000, base_seed=123)
        finals = np.array([simulate(cfg, i).queue_trajectory[-1] for i in range(cfg.replications)])
        observed = np.bincount(finals, minlength=oracle.pmf.size).astype(float)
        expected = oracle.pmf * finals.size
        # pool the sparse right tail so every expected count is at least 5
        keep = np.flatnonzero(expected >= 5)
        cut = keep.max()
        obs = np.append(observed[:cut], observed[cut:].sum())
        exp = np.append(expected[:cut], expected[cut:].sum())
        mask = exp > 0
        _, pval = chisquare(obs[mask], exp[mask] * obs[mask].sum() / exp[mask].sum())
        assert pval > 0.001
