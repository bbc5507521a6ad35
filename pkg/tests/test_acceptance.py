"""
End-to-end checks of the closed forms against simulation at the default
scenario (lambda = 0.2, L1 = 6, L2 = 100, LG = 5, d = 60, c_q = 0.01).

Property 1: Bound ordering
    The multi-eavesdropper bound rises with K, stays above the simulated
    SOP, and its K-truncation error is bounded by the Poisson tail.

Property 2: Known model gaps
    The moment-matched Gamma laws are loose in this regime. The relay sum
    at the destination has a Gamma shape of at most 1/5 and a mean of
    3 N P_R g against the coherent-sum mean (N + N^2 pi/4) P_R g, N the
    mean relay count and g the mean path gain.
    The interference at a receiver inside the jammer field is dominated by
    the nearest jammer, which collapses its fitted shape. The tolerances
    below are therefore expected failures, each with the measured value.
"""
import math
import warnings

import pytest

from core.exceptions import TruncationWarning
from core.gamma_approx import dest_signal_params, interference_params
from core.geometry import Point
from core.montecarlo import (
    PowerVariable,
    TrialPlan,
    build_histogram,
    estimate_cop,
    estimate_sop_multi,
    estimate_sop_single,
    sample_power,
)
from core.outage import cop_closed, relay_count_pmf, sop_multi_upper_by_k, sop_single_closed
from core.params import SystemParams, db_to_linear

pytestmark = pytest.mark.slow

TRIALS = 20_000
K_VALUES = (1, 5, 10, 11, 15, 20)
BOUND_QUADRATURE = {
    "radial_nodes": 32,
    "angular_nodes": 64,
    "rtol": 1e-3,
    "max_doublings": 3,
    "inner_rtol": 1e-4,
}
FIT_TOLERANCE = 0.15
GAP_TOLERANCE = 0.1
K_STABILITY = 1e-3


@pytest.fixture(scope="module")
def scenario() -> SystemParams:
    return SystemParams()


@pytest.fixture(scope="module")
def bound_by_k(scenario):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        estimates = sop_multi_upper_by_k(scenario, 1.0, K_VALUES, **BOUND_QUADRATURE)
    return {k: e.value for k, e in zip(K_VALUES, estimates)}


@pytest.fixture(scope="module")
def destination_samples(scenario):
    plan = TrialPlan(trials=TRIALS, base_seed=21)
    return {
        PowerVariable.TY: sample_power(scenario, PowerVariable.TY, plan),
        PowerVariable.IY: sample_power(scenario, PowerVariable.IY, plan),
    }


# ============================================================================
# Multi-eavesdropper bound
# ============================================================================


class TestBoundAgainstSimulation:
    def test_nondecreasing_in_k(self, bound_by_k):
        values = [bound_by_k[k] for k in K_VALUES]
        assert values == sorted(values)
        assert 0.0 < values[0] < values[-1] < 1.0

    def test_truncation_gap_within_poisson_tail(self, scenario, bound_by_k):
        pmf = relay_count_pmf(scenario.mean_relay_count, 15)
        tail = scenario.lam_e * scenario.annulus.area() * pmf[11:].sum()
        assert bound_by_k[15] - bound_by_k[11] <= tail

    def test_bound_above_simulation(self, scenario, bound_by_k):
        simulated = estimate_sop_multi(scenario, 1.0, TrialPlan(trials=TRIALS, base_seed=22))
        assert bound_by_k[20] >= simulated.value - simulated.ci_half_width

    @pytest.mark.xfail(
        strict=True,
        reason="Poisson(4.52) relay count still carries ~1.6e-3 of bound between K=11 and K=15",
    )
    def test_stable_beyond_k11(self, bound_by_k):
        assert bound_by_k[15] - bound_by_k[11] <= K_STABILITY


# ============================================================================
# Gamma fits at the destination
# ============================================================================


class TestDestinationFits:
    @pytest.mark.xfail(strict=True, reason="relay-sum Gamma fit is loose; measured L1 distance 0.93")
    def test_signal_histogram(self, scenario, destination_samples):
        hist = build_histogram(destination_samples[PowerVariable.TY])
        assert hist.l1_distance(dest_signal_params(scenario)) <= FIT_TOLERANCE

    @pytest.mark.xfail(strict=True, reason="heavy-tailed interference; measured L1 distance 0.45")
    def test_interference_histogram(self, scenario, destination_samples):
        hist = build_histogram(destination_samples[PowerVariable.IY])
        fitted = interference_params(scenario, scenario.dest)
        assert hist.l1_distance(fitted) <= FIT_TOLERANCE

    def test_interference_mean_matches_fit(self, scenario, destination_samples):
        samples = destination_samples[PowerVariable.IY]
        fitted = interference_params(scenario, scenario.dest, exact=True)
        spread = 4.0 * samples.std(ddof=1) / math.sqrt(samples.size)
        assert abs(samples.mean() - fitted.shape * fitted.scale) <= spread


# ============================================================================
# Closed forms against simulation
# ============================================================================


class TestClosedFormGaps:
    @pytest.mark.xfail(strict=True, reason="COP closed form is off by 0.29 at -20 dB")
    def test_cop(self, scenario):
        beta = db_to_linear(-20.0)
        simulated = estimate_cop(scenario, beta, TrialPlan(trials=TRIALS, base_seed=23))
        assert abs(cop_closed(scenario, beta).value - simulated.value) <= GAP_TOLERANCE

    @pytest.mark.xfail(strict=True, reason="eavesdropper interference shape collapses to 0.0024; 0.965 vs 0.047")
    def test_sop_single(self, scenario):
        eve = Point(45.0, 0.0)
        simulated = estimate_sop_single(scenario, eve, 1.0, TrialPlan(trials=TRIALS, base_seed=24))
        assert abs(sop_single_closed(scenario, eve, 1.0).value - simulated.value) <= GAP_TOLERANCE

    def test_sop_drops_at_protected_zone_centre(self, scenario):
        # no jammer within LG of the centre keeps the interference shape away from zero
        values = {z: sop_single_closed(scenario, Point(z, 0.0), 1.0).value for z in (45.0, 60.0, 75.0)}
        assert values[60.0] < 0.5 < min(values[45.0], values[75.0])
        shape = sop_single_closed(scenario, Point(60.0, 0.0), 1.0).meta["interference"]["shape"]
        assert shape > 50 * sop_single_closed(scenario, Point(45.0, 0.0), 1.0).meta["interference"]["shape"]
