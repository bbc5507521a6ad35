"""
SocSec Monte Carlo Oracle

Trial-level simulation of the second hop, used to check the closed forms.

Each trial owns a counter-based Philox stream derived from
(base_seed, trial index), so the per-trial records, and every estimate
computed from them, are bit-identical for any worker count or chunk size.

Property 1: Determinism
    Same (params, plan) gives identical estimates regardless of workers.

Property 2: Confidence
    ci_half_width = 1.96 * sqrt(p (1 - p) / n).
"""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Optional, Sequence

import numpy as np

from core.channel import CategorizeMethod, categorize, simulate_dest, simulate_eves, sir
from core.exceptions import ConfigError, ErrorCodes
from core.gamma_approx import MomentPair
from core.geometry import Point, as_points
from core.outage import EstimateMethod, OutageEstimate
from core.parallel import TrialExecutor, chunk_ranges
from core.params import SystemParams, linear_to_db
from core.specfun import GammaParams, gamma_cdf

logger = logging.getLogger(__name__)

Z_95 = 1.96
HISTOGRAM_BINS = 100
HISTOGRAM_PERCENTILE = 99.5


class Target(Enum):
    COP = "cop"
    SOP_SINGLE = "sop_single"
    SOP_MULTI = "sop_multi"
    MOMENTS = "moments"


class PowerVariable(Enum):
    TY = "Ty"
    IY = "Iy"
    TZ = "Tz"
    IZ = "Iz"


@dataclass(frozen=True)
class TrialPlan:
    """
    How many trials to run and how.

    Attributes:
        trials: Number of independent realizations
        base_seed: Root of the per-trial seed derivation
        target: What the plan estimates; None accepts any estimator
        eve: Eavesdropper position for single-eavesdropper targets
        variable: Power variable for MOMENTS
        workers: Process count (1 runs inline, 0 uses every CPU)
        chunk_size: Trials per worker task
        method: Relay/jammer sampling path
        nja: Drop jammers
        exact_phase: Simulate per-relay phases for the eavesdropper signal
    """

    trials: int = 100_000
    base_seed: int = 0
    target: Optional[Target] = None
    eve: Optional[Point] = None
    variable: Optional[PowerVariable] = None
    workers: int = 1
    chunk_size: int = 5_000
    method: CategorizeMethod = CategorizeMethod.THINNED
    nja: bool = False
    exact_phase: bool = False

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not 0 <= self.base_seed < 2 ** 64:
            raise ValueError("base_seed must be a 64-bit unsigned integer")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be at least 1")
        if self.workers < 0:
            raise ValueError("workers must be non-negative")

    def for_target(self, target: Target) -> "TrialPlan":
        if self.target is None:
            return dataclasses.replace(self, target=target)
        if self.target is not target:
            raise ConfigError(
                f"Plan targets {self.target.value}, not {target.value}",
                error_code=ErrorCodes.INVALID_PLAN,
            )
        return self

    def to_dict(self) -> dict[str, Any]:
        return {
            "trials": self.trials,
            "base_seed": self.base_seed,
            "target": self.target.value if self.target else None,
            "eve": self.eve.to_dict() if self.eve else None,
            "variable": self.variable.value if self.variable else None,
            "workers": self.workers,
            "chunk_size": self.chunk_size,
            "method": self.method.value,
            "nja": self.nja,
            "exact_phase": self.exact_phase,
        }


def trial_rng(base_seed: int, trial: int) -> np.random.Generator:
    """Philox stream for one trial."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(base_seed, spawn_key=(trial,))))


# ======================================================================
# Trial execution
# ======================================================================


@dataclass(frozen=True)
class _ChunkTask:
    params: SystemParams
    kind: str
    eves: np.ndarray
    start: int
    stop: int
    base_seed: int
    method: str
    nja: bool
    exact_phase: bool


def _simulate_chunk(task: _ChunkTask) -> np.ndarray:
    """
    Records for trials [start, stop).

    kind "dest": columns (T_y, I_y)
    kind "eve": columns (T_z..., I_z...) for each fixed eavesdropper
    kind "multi": one column, the largest eavesdropper SIR (0 without eavesdroppers)
    """
    params = task.params
    rows = []
    for trial in range(task.start, task.stop):
        rng = trial_rng(task.base_seed, trial)
        nodes = categorize(
            params,
            rng,
            method=task.method,
            nja=task.nja,
            with_eavesdroppers=task.kind == "multi",
        )
        if task.kind == "dest":
            powers = simulate_dest(params, nodes, rng)
            rows.append(np.array([powers.signal, powers.interference]))
        elif task.kind == "eve":
            t, i = simulate_eves(params, nodes, task.eves, rng, exact_phase=task.exact_phase)
            rows.append(np.concatenate([t, i]))
        else:
            t, i = simulate_eves(params, nodes, nodes.eavesdroppers, rng, exact_phase=task.exact_phase)
            ratios = np.atleast_1d(sir(t, i))
            rows.append(np.array([ratios.max() if ratios.size else 0.0]))
    return np.vstack(rows) if rows else np.empty((0, 0))


def simulate_trials(
    params: SystemParams,
    plan: TrialPlan,
    kind: str,
    eves: Optional[Sequence[Point]] = None,
) -> np.ndarray:
    """
    Raw per-trial records in trial order.

    Args:
        kind: "dest", "eve" or "multi" (see _simulate_chunk)
        eves: Fixed eavesdropper positions for kind "eve"
    """
    if kind not in ("dest", "eve", "multi"):
        raise ValueError(f"Unknown record kind: {kind}")
    eve_arr = as_points(np.array([[p.x, p.y] for p in eves])) if eves else np.empty((0, 2))
    if kind == "eve" and eve_arr.shape[0] == 0:
        raise ConfigError("Eavesdropper positions required", error_code=ErrorCodes.INVALID_PLAN)
    tasks = [
        _ChunkTask(
            params=params,
            kind=kind,
            eves=eve_arr,
            start=start,
            stop=stop,
            base_seed=plan.base_seed,
            method=plan.method.value,
            nja=plan.nja,
            exact_phase=plan.exact_phase,
        )
        for start, stop in chunk_ranges(plan.trials, plan.chunk_size)
    ]
    logger.info(f"Simulating {plan.trials} trials ({kind}) in {len(tasks)} chunks, workers={plan.workers}")
    blocks = TrialExecutor(max_workers=plan.workers).map(_simulate_chunk, tasks)
    return np.concatenate(blocks, axis=0)


def _proportion(indicator: np.ndarray, meta: dict[str, Any]) -> OutageEstimate:
    n = indicator.size
    p = float(np.count_nonzero(indicator)) / n
    half = Z_95 * math.sqrt(p * (1.0 - p) / n)
    return OutageEstimate(value=p, method=EstimateMethod.MONTE_CARLO, ci_half_width=half, meta={**meta, "trials": n})


# ======================================================================
# Estimators
# ======================================================================


def estimate_cop_curve(params: SystemParams, betas: Sequence[float], plan: TrialPlan) -> list[OutageEstimate]:
    """Empirical P(SIR_y < beta) for each beta from one set of trials."""
    plan = plan.for_target(Target.COP)
    records = simulate_trials(params, plan, "dest")
    ratios = sir(records[:, 0], records[:, 1])
    base = {"base_seed": plan.base_seed, "nja": plan.nja}
    return [
        _proportion(ratios < beta, {**base, "beta": beta, "beta_db": linear_to_db(beta)})
        for beta in betas
    ]


def estimate_cop(params: SystemParams, beta: float, plan: TrialPlan) -> OutageEstimate:
    return estimate_cop_curve(params, [beta], plan)[0]


def estimate_sop_single_grid(
    params: SystemParams,
    eves: Sequence[Point],
    betas: Sequence[float],
    plan: TrialPlan,
) -> list[list[OutageEstimate]]:
    """Empirical P(SIR_z > beta_e); result[j][b] for eves[j], betas[b]."""
    plan = plan.for_target(Target.SOP_SINGLE)
    records = simulate_trials(params, plan, "eve", eves)
    n_eve = len(eves)
    results = []
    for j, eve in enumerate(eves):
        ratios = sir(records[:, j], records[:, n_eve + j])
        base = {"base_seed": plan.base_seed, "eve": eve.to_dict(), "eve_distance": eve.norm(), "nja": plan.nja}
        results.append(
            [
                _proportion(ratios > beta, {**base, "beta_e": beta, "beta_e_db": linear_to_db(beta)})
                for beta in betas
            ]
        )
    return results


def estimate_sop_single(params: SystemParams, eve: Point, beta_e: float, plan: TrialPlan) -> OutageEstimate:
    return estimate_sop_single_grid(params, [eve], [beta_e], plan)[0][0]


def estimate_sop_multi_curve(params: SystemParams, betas: Sequence[float], plan: TrialPlan) -> list[OutageEstimate]:
    """Empirical P(some eavesdropper has SIR > beta_e)."""
    plan = plan.for_target(Target.SOP_MULTI)
    records = simulate_trials(params, plan, "multi")
    best = records[:, 0]
    base = {"base_seed": plan.base_seed, "lam_e": params.lam_e, "nja": plan.nja}
    return [
        _proportion(best > beta, {**base, "beta_e": beta, "beta_e_db": linear_to_db(beta)})
        for beta in betas
    ]


def estimate_sop_multi(params: SystemParams, beta_e: float, plan: TrialPlan) -> OutageEstimate:
    return estimate_sop_multi_curve(params, [beta_e], plan)[0]


# ======================================================================
# Moments and histograms
# ======================================================================


@dataclass(frozen=True)
class Histogram:
    """Fixed-bin histogram; probabilities are counts over the full sample size."""

    edges: np.ndarray
    counts: np.ndarray
    total: int

    @property
    def probabilities(self) -> np.ndarray:
        return self.counts / self.total

    def l1_distance(self, model: GammaParams) -> float:
        return histogram_l1_distance(self, model)

    def model_probabilities(self, model: GammaParams) -> np.ndarray:
        return np.diff(np.asarray(gamma_cdf(self.edges, model)))


def build_histogram(samples: np.ndarray, bins: int = HISTOGRAM_BINS) -> Histogram:
    """Uniform bins on [0, 99.5th percentile]."""
    upper = float(np.percentile(samples, HISTOGRAM_PERCENTILE))
    if upper <= 0:
        upper = float(samples.max()) if samples.max() > 0 else 1.0
    edges = np.linspace(0.0, upper, bins + 1)
    counts, _ = np.histogram(samples, bins=edges)
    return Histogram(edges=edges, counts=counts, total=int(samples.size))


def histogram_l1_distance(hist: Histogram, model: GammaParams) -> float:
    """Sum over bins of |empirical - model| bin probability."""
    return float(np.sum(np.abs(hist.probabilities - hist.model_probabilities(model))))


@dataclass(frozen=True)
class MomentResult:
    moments: MomentPair
    histogram: Histogram
    mean_standard_error: float
    samples: int

    def to_dict(self) -> dict[str, Any]:
        return {
            **self.moments.to_dict(),
            "mean_standard_error": self.mean_standard_error,
            "samples": self.samples,
        }


def sample_power(params: SystemParams, variable: PowerVariable, plan: TrialPlan) -> np.ndarray:
    """Per-trial samples of one power variable."""
    if variable in (PowerVariable.TY, PowerVariable.IY):
        records = simulate_trials(params, plan, "dest")
        return records[:, 0] if variable is PowerVariable.TY else records[:, 1]
    if plan.eve is None:
        raise ConfigError(
            f"{variable.value} needs an eavesdropper position in the plan",
            error_code=ErrorCodes.INVALID_PLAN,
        )
    records = simulate_trials(params, plan, "eve", [plan.eve])
    return records[:, 0] if variable is PowerVariable.TZ else records[:, 1]


def empirical_moments(
    params: SystemParams,
    variable: PowerVariable | str,
    plan: TrialPlan,
) -> MomentResult:
    """Sample mean, variance and a 100-bin histogram of a power variable."""
    variable = PowerVariable(variable)
    plan = plan.for_target(Target.MOMENTS)
    samples = sample_power(params, variable, plan)
    n = samples.size
    variance = float(np.var(samples, ddof=1)) if n > 1 else 0.0
    return MomentResult(
        moments=MomentPair(mean=float(np.mean(samples)), variance=variance),
        histogram=build_histogram(samples),
        mean_standard_error=math.sqrt(variance / n),
        samples=n,
    )


__all__ = [
    "Target",
    "PowerVariable",
    "TrialPlan",
    "trial_rng",
    "simulate_trials",
    "estimate_cop",
    "estimate_cop_curve",
    "estimate_sop_single",
    "estimate_sop_single_grid",
    "estimate_sop_multi",
    "estimate_sop_multi_curve",
    "Histogram",
    "build_histogram",
    "histogram_l1_distance",
    "MomentResult",
    "sample_power",
    "empirical_moments",
]
