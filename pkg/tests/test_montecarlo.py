"""
Tests for the Monte Carlo oracle.

Property 1: Determinism
    Records depend only on (params, base seed, trial index), never on the
    chunk size or worker count.

Property 2: Exact baselines
    Without jammers every outage event reduces to the presence or absence
    of relays, which has a closed Poisson form.
"""
import math

import numpy as np
import pytest

from core.channel import CategorizeMethod
from core.exceptions import ConfigError, ErrorCodes
from core.gamma_approx import eve_signal_moments, interference_moments
from core.geometry import Point
from core.montecarlo import (
    Histogram,
    PowerVariable,
    Target,
    TrialPlan,
    build_histogram,
    empirical_moments,
    estimate_cop,
    estimate_cop_curve,
    estimate_sop_multi,
    estimate_sop_single,
    estimate_sop_single_grid,
    simulate_trials,
    trial_rng,
)
from core.outage import EstimateMethod
from core.specfun import GammaParams

EVE = Point(15.0, 0.0)


def _within(estimate, expected, sigmas=4.0):
    n = estimate.meta["trials"]
    spread = math.sqrt(expected * (1.0 - expected) / n)
    return abs(estimate.value - expected) <= sigmas * spread


# ============================================================================
# Plans and streams
# ============================================================================


class TestTrialPlan:
    @pytest.mark.parametrize(
        "kwargs",
        [{"trials": 0}, {"base_seed": -1}, {"base_seed": 2 ** 64}, {"chunk_size": 0}, {"workers": -1}],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            TrialPlan(**kwargs)

    def test_for_target_fills_in(self):
        plan = TrialPlan(trials=10).for_target(Target.COP)
        assert plan.target is Target.COP

    def test_for_target_conflict(self):
        plan = TrialPlan(trials=10, target=Target.SOP_MULTI)
        with pytest.raises(ConfigError) as exc_info:
            plan.for_target(Target.COP)
        assert exc_info.value.error_code == ErrorCodes.INVALID_PLAN

    def test_to_dict(self):
        data = TrialPlan(trials=10, eve=EVE, variable=PowerVariable.TZ).to_dict()
        assert data["eve"] == {"x": 15.0, "y": 0.0}
        assert data["variable"] == "Tz"
        assert data["method"] == "thinned"


class TestTrialRng:
    def test_same_trial_same_stream(self):
        assert trial_rng(5, 17).random() == trial_rng(5, 17).random()

    def test_trials_differ(self):
        assert trial_rng(5, 17).random() != trial_rng(5, 18).random()

    def test_seeds_differ(self):
        assert trial_rng(5, 17).random() != trial_rng(6, 17).random()


class TestDeterminism:
    def test_chunk_size_does_not_matter(self, small_params):
        coarse = simulate_trials(small_params, TrialPlan(trials=60, chunk_size=60), "dest")
        fine = simulate_trials(small_params, TrialPlan(trials=60, chunk_size=7), "dest")
        np.testing.assert_array_equal(coarse, fine)

    def test_prefix_stability(self, small_params):
        short = simulate_trials(small_params, TrialPlan(trials=20, chunk_size=6), "multi")
        long = simulate_trials(small_params, TrialPlan(trials=50, chunk_size=6), "multi")
        np.testing.assert_array_equal(short, long[:20])

    @pytest.mark.slow
    def test_worker_count_does_not_matter(self, small_params):
        serial = simulate_trials(small_params, TrialPlan(trials=400, chunk_size=50, workers=1), "eve", [EVE])
        pooled = simulate_trials(small_params, TrialPlan(trials=400, chunk_size=50, workers=2), "eve", [EVE])
        np.testing.assert_array_equal(serial, pooled)

    def test_unknown_kind(self, small_params):
        with pytest.raises(ValueError):
            simulate_trials(small_params, TrialPlan(trials=5), "relay")

    def test_eve_kind_needs_positions(self, small_params):
        with pytest.raises(ConfigError):
            simulate_trials(small_params, TrialPlan(trials=5), "eve")


# ============================================================================
# Estimators
# ============================================================================


class TestEstimators:
    def test_confidence_half_width(self, small_params):
        estimate = estimate_cop(small_params, 0.1, TrialPlan(trials=500, base_seed=3))
        p = estimate.value
        assert estimate.ci_half_width == pytest.approx(1.96 * math.sqrt(p * (1.0 - p) / 500))
        assert estimate.method is EstimateMethod.MONTE_CARLO

    def test_cop_without_jammers(self, small_params):
        plan = TrialPlan(trials=4000, base_seed=1, nja=True)
        estimate = estimate_cop(small_params, 0.1, plan)
        assert _within(estimate, math.exp(-small_params.mean_relay_count))

    def test_cop_without_jammers_trust_marks(self, small_params):
        plan = TrialPlan(trials=2000, base_seed=2, nja=True, method=CategorizeMethod.TRUST)
        estimate = estimate_cop(small_params, 0.1, plan)
        assert _within(estimate, math.exp(-small_params.mean_relay_count))

    def test_sop_single_without_jammers(self, small_params):
        plan = TrialPlan(trials=4000, base_seed=4, nja=True)
        estimate = estimate_sop_single(small_params, EVE, 1.0, plan)
        assert _within(estimate, -math.expm1(-small_params.mean_relay_count))

    def test_sop_multi_without_jammers(self, small_params):
        plan = TrialPlan(trials=3000, base_seed=5, nja=True)
        estimate = estimate_sop_multi(small_params, 1.0, plan)
        relays = -math.expm1(-small_params.mean_relay_count)
        eves = -math.expm1(-small_params.lam_e * small_params.annulus.area())
        assert _within(estimate, relays * eves)

    def test_cop_curve_nondecreasing(self, small_params):
        estimates = estimate_cop_curve(small_params, [0.01, 0.1, 1.0, 10.0], TrialPlan(trials=800, base_seed=6))
        values = [e.value for e in estimates]
        assert values == sorted(values)

    def test_sop_grid_shape_and_order(self, small_params):
        eves = [Point(5.0, 0.0), Point(15.0, 0.0)]
        grid = estimate_sop_single_grid(small_params, eves, [0.1, 1.0, 10.0], TrialPlan(trials=300, base_seed=7))
        assert len(grid) == 2 and all(len(row) == 3 for row in grid)
        for row in grid:
            values = [e.value for e in row]
            assert values == sorted(values, reverse=True)
        assert grid[1][0].meta["eve_distance"] == 15.0

    def test_exact_phase_runs(self, small_params):
        plan = TrialPlan(trials=200, base_seed=8, exact_phase=True)
        estimate = estimate_sop_single(small_params, EVE, 1.0, plan)
        assert 0.0 <= estimate.value <= 1.0


# ============================================================================
# Moments and histograms
# ============================================================================


class TestMoments:
    def test_eve_signal_mean_matches_campbell(self, small_params, cache):
        plan = TrialPlan(trials=4000, base_seed=9, eve=EVE)
        result = empirical_moments(small_params, PowerVariable.TZ, plan)
        expected = eve_signal_moments(small_params, EVE, cache).mean
        assert abs(result.moments.mean - expected) <= 4.0 * result.mean_standard_error

    def test_dest_interference_mean_matches_campbell(self, small_params, cache):
        plan = TrialPlan(trials=4000, base_seed=10)
        result = empirical_moments(small_params, "Iy", plan)
        expected = interference_moments(small_params, small_params.dest, exact=True, cache=cache).mean
        assert abs(result.moments.mean - expected) <= 4.0 * result.mean_standard_error

    @pytest.mark.slow
    def test_dest_interference_variance_matches_campbell(self, small_params, cache):
        dense = small_params.with_overrides(c_q=0.2)
        plan = TrialPlan(trials=200_000, base_seed=11)
        result = empirical_moments(dense, PowerVariable.IY, plan)
        expected = interference_moments(dense, dense.dest, exact=True, cache=cache).variance
        assert result.moments.variance == pytest.approx(expected, rel=0.05)

    def test_eve_variable_needs_position(self, small_params):
        with pytest.raises(ConfigError):
            empirical_moments(small_params, PowerVariable.IZ, TrialPlan(trials=10))

    def test_to_dict(self, small_params):
        result = empirical_moments(small_params, PowerVariable.TY, TrialPlan(trials=50))
        data = result.to_dict()
        assert set(data) == {"mean", "variance", "mean_standard_error", "samples"}
        assert data["samples"] == 50


class TestHistogram:
    def test_bins_cover_most_mass(self, rng):
        hist = build_histogram(rng.gamma(2.0, 3.0, 5000))
        assert hist.counts.size == 100
        assert hist.edges[0] == 0.0
        assert 0.99 <= hist.probabilities.sum() <= 1.0

    def test_matching_model_is_close(self, rng):
        model = GammaParams(2.0, 3.0)
        hist = build_histogram(rng.gamma(2.0, 3.0, 20000))
        assert hist.l1_distance(model) < 0.2
        assert hist.l1_distance(model) < hist.l1_distance(GammaParams(0.5, 12.0))

    def test_all_zero_samples(self):
        hist = build_histogram(np.zeros(10))
        assert hist.edges[-1] == 1.0
        assert isinstance(hist, Histogram)
        assert hist.counts.sum() == 10
