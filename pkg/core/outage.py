"""
SocSec Outage Probabilities

Closed-form connection outage (COP) at the destination, secrecy outage (SOP)
against a single eavesdropper, and the upper bound on the SOP against a
Poisson field of eavesdroppers.

Property 1: Range
    Every estimate lies in [0, 1].

Property 2: Orderings
    COP is nondecreasing in beta; SOP is nonincreasing in beta_e; the
    multi-eavesdropper bound is nondecreasing in lam_e and in K.

Property 3: No-jammer baseline
    With lam_J = 0 the interference vanishes: COP = exp(-Lambda_R) and the
    single-eavesdropper SOP is 1 - exp(-Lambda_R), Lambda_R the mean relay
    count.
"""
from __future__ import annotations

import logging
import math
import threading
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Hashable, Optional, Sequence

import numpy as np
from scipy import special

from core.exceptions import ErrorCodes, GeometryError, NonConvergentError, TruncationWarning
from core.gamma_approx import (
    IntegralCache,
    dest_signal_params,
    dgr_cdf,
    dgr_sf,
    eve_signal_params,
    interference_params,
    jammer_region,
    q_moment,
)
from core.geometry import FlabellateAnnulus, Kernel, Point, polar_integral, sector_rule
from core.params import SystemParams, linear_to_db
from core.parallel import TrialExecutor, chunk_ranges

logger = logging.getLogger(__name__)

TRUNCATION_TOLERANCE = 1e-6
OUTER_RADIAL_NODES = 64
OUTER_ANGULAR_NODES = 128
OUTER_RTOL = 1e-4
OUTER_MAX_DOUBLINGS = 2
INNER_RTOL = 1e-5
INNER_MAX_LEVEL = 10
# the two row integrals are differenced, so each runs this much tighter
INNER_SPLIT_RTOL_FACTOR = 1e-2
# poles farther than this many cutout radii use the fixed product rule
CUTOUT_NEAR_FACTOR = 3.0
CUTOUT_POLE_BLOCK = 32
RELAY_SAMPLES = 16
OUTER_ROWS_PER_TASK = 4


class EstimateMethod(Enum):
    CLOSED_FORM = "closed-form"
    MONTE_CARLO = "monte-carlo"
    UPPER_BOUND = "upper-bound"


@dataclass
class OutageEstimate:
    """A probability with its provenance."""

    value: float
    method: EstimateMethod
    ci_half_width: float = 0.0
    meta: dict[str, Any] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"Probability must lie in [0, 1], got {self.value}")
        if self.ci_half_width < 0:
            raise ValueError("ci_half_width must be non-negative")

    def to_dict(self) -> dict[str, Any]:
        return {
            "value": self.value,
            "method": self.method.value,
            "ci_half_width": self.ci_half_width,
            "meta": self.meta,
            "warnings": list(self.warnings),
        }


def _check_threshold(value: float, name: str) -> None:
    if math.isnan(value) or value < 0:
        raise ValueError(f"{name} must be non-negative, got {value}")


def _no_jammers(params: SystemParams, nja: bool) -> bool:
    return nja or params.lam_j <= 0


# ======================================================================
# Connection outage
# ======================================================================


def cop_closed(
    params: SystemParams,
    beta: float,
    nja: bool = False,
    exact_jammer_region: bool = False,
    cache: Optional[IntegralCache] = None,
) -> OutageEstimate:
    """
    P(SIR at the destination < beta) from the Gamma approximation.

    Args:
        params: Scenario
        beta: Linear SIR threshold
        nja: Drop all jammers
        exact_jammer_region: Integrate interference over the exact annulus
            minus protected disk instead of the sector decomposition
    """
    _check_threshold(beta, "beta")
    meta: dict[str, Any] = {"beta": beta, "beta_db": linear_to_db(beta), "nja": nja}
    if beta == 0:
        return OutageEstimate(0.0, EstimateMethod.CLOSED_FORM, meta=meta)
    if params.lam_r <= 0:
        return OutageEstimate(1.0, EstimateMethod.CLOSED_FORM, meta=meta)
    if _no_jammers(params, nja):
        # outage only when the relay set is empty
        meta["mean_relay_count"] = params.mean_relay_count
        return OutageEstimate(math.exp(-params.mean_relay_count), EstimateMethod.CLOSED_FORM, meta=meta)

    t = dest_signal_params(params, cache)
    i = interference_params(params, params.dest, exact=exact_jammer_region, cache=cache)
    meta.update(
        {
            "signal": t.to_dict(),
            "interference": i.to_dict(),
            "q": beta * i.scale / t.scale,
        }
    )
    return OutageEstimate(dgr_cdf(t, i, beta), EstimateMethod.CLOSED_FORM, meta=meta)


def cop_curve(params: SystemParams, betas: Sequence[float], **kwargs: Any) -> list[OutageEstimate]:
    return [cop_closed(params, beta, **kwargs) for beta in betas]


# ======================================================================
# Single eavesdropper
# ======================================================================


def sop_single_closed(
    params: SystemParams,
    eve: Point,
    beta_e: float,
    nja: bool = False,
    linear_nu_tz: bool = False,
    exact_jammer_region: bool = False,
    cache: Optional[IntegralCache] = None,
) -> OutageEstimate:
    """
    P(SIR at the eavesdropper > beta_e) from the Gamma approximation.

    Raises:
        GeometryError: If the eavesdropper is outside the annulus.
    """
    _check_threshold(beta_e, "beta_e")
    if not params.annulus.contains_point(eve):
        raise GeometryError(
            f"Eavesdropper ({eve.x}, {eve.y}) must lie in the annulus [{params.l1}, {params.l2}]",
            error_code=ErrorCodes.REGION_INVALID,
            region="annulus",
        )
    meta: dict[str, Any] = {
        "beta_e": beta_e,
        "beta_e_db": linear_to_db(beta_e),
        "eve": eve.to_dict(),
        "eve_distance": eve.norm(),
        "nja": nja,
        "linear_nu_tz": linear_nu_tz,
    }
    if math.isinf(beta_e) or params.lam_r <= 0:
        return OutageEstimate(0.0, EstimateMethod.CLOSED_FORM, meta=meta)
    if _no_jammers(params, nja):
        meta["mean_relay_count"] = params.mean_relay_count
        value = -math.expm1(-params.mean_relay_count)
        return OutageEstimate(value, EstimateMethod.CLOSED_FORM, meta=meta)

    t = eve_signal_params(params, eve, linear_nu_tz=linear_nu_tz, cache=cache)
    i = interference_params(params, eve, exact=exact_jammer_region, cache=cache)
    meta.update(
        {
            "signal": t.to_dict(),
            "interference": i.to_dict(),
            "q": beta_e * i.scale / t.scale,
        }
    )
    return OutageEstimate(dgr_sf(t, i, beta_e), EstimateMethod.CLOSED_FORM, meta=meta)


def sop_single_curve(
    params: SystemParams, eve: Point, betas: Sequence[float], **kwargs: Any
) -> list[OutageEstimate]:
    return [sop_single_closed(params, eve, beta, **kwargs) for beta in betas]


# ======================================================================
# Multiple eavesdroppers
# ======================================================================


def relay_count_pmf(mean_count: float, k_max: int) -> np.ndarray:
    """Poisson probabilities of k = 1..k_max relays."""
    k = np.arange(1, k_max + 1, dtype=float)
    if mean_count <= 0:
        return np.zeros(k_max)
    return np.exp(-mean_count + k * math.log(mean_count) - special.gammaln(k + 1.0))


@dataclass(frozen=True)
class _OuterGrid:
    radii: np.ndarray
    radial_weights: np.ndarray
    angles: np.ndarray
    angular_weights: np.ndarray


def _outer_grid(params: SystemParams, radial_nodes: int, angular_nodes: int, symmetric: bool) -> _OuterGrid:
    """Composite Gauss-Legendre in |z| split at the protected zone, trapezoid in angle."""
    cuts = [params.l1, params.d - params.lg, params.d + params.lg, params.l2]
    total = params.l2 - params.l1
    radii, weights = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        n = max(8, int(round(radial_nodes * (b - a) / total)))
        x, w = np.polynomial.legendre.leggauss(n)
        radii.append(0.5 * (b - a) * x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    step = 2.0 * math.pi / angular_nodes
    if symmetric:
        half = angular_nodes // 2
        angles = np.arange(half + 1) * step
        ang_w = np.full(half + 1, 2.0 * step)
        ang_w[0] = step
        if angular_nodes % 2 == 0:
            ang_w[-1] = step
    else:
        angles = np.arange(angular_nodes) * step
        ang_w = np.full(angular_nodes, step)
    return _OuterGrid(np.concatenate(radii), np.concatenate(weights), angles, ang_w)


@dataclass(frozen=True)
class _RowTask:
    """A block of outer radial nodes for one worker."""

    params: SystemParams
    betas: tuple[float, ...]
    k_max: int
    radii: tuple[float, ...]
    radial_weights: tuple[float, ...]
    angles: tuple[float, ...]
    angular_weights: tuple[float, ...]
    relay_samples: Optional[tuple[np.ndarray, ...]]
    inner_rtol: float
    inner_max_level: int = INNER_MAX_LEVEL


def _exceed_kernel(params: SystemParams, betas: np.ndarray, strengths: np.ndarray) -> Kernel:
    """
    Kernel g(r) = 1 / (1 + S r^alpha / (beta P_j)) for a jammer at distance r.

    ``strengths`` has shape (k_max,) or (k_max, n_samples); the kernel maps
    n distances to shape (n_beta, k_max, n), averaging over samples.
    """
    scaled_beta = (betas * params.p_j).reshape((-1,) + (1,) * strengths.ndim + (1,))
    s = strengths[None, ..., None]

    def kernel(r: np.ndarray) -> np.ndarray:
        path = r ** params.alpha
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(scaled_beta > 0, s * path / scaled_beta, np.inf)
        value = 1.0 / (1.0 + ratio)
        if value.ndim == 4:
            value = value.mean(axis=2)
        return value

    return kernel


@dataclass(frozen=True)
class _Cutout:
    """The sector around the protected zone with its far-field product rule."""

    region: FlabellateAnnulus
    center: Point
    reach: float
    points: np.ndarray
    weights: np.ndarray

    @classmethod
    def of(cls, params: SystemParams) -> "_Cutout":
        region = jammer_region(params).cutout
        center = Point(params.d, 0.0)
        corners = [
            Point.polar(radius, angle)
            for radius in (region.inner, region.outer)
            for angle in (region.angle_lo, region.angle_hi)
        ]
        reach = max(center.distance_to(corner) for corner in corners)
        points, weights = sector_rule(region)
        return cls(region, center, reach, points, weights)


def _row_inner_integrals(
    params: SystemParams,
    radius: float,
    angles: np.ndarray,
    kernel: Kernel,
    cutout: _Cutout,
    rtol: float,
    max_level: int,
) -> np.ndarray:
    """
    Jammer-region integrals of the kernel about every pole of one outer row,
    shape (n_beta, k_max, n_angles).

    The region is the annulus minus the cutout sector. The annulus integral
    depends only on |z| and is done once per row; the cutout integral uses a
    fixed product rule, vectorized over angles, for poles far from it and
    the adaptive polar rule for the rest.
    """
    pole_tol = rtol * INNER_SPLIT_RTOL_FACTOR
    row_pole = Point(radius, 0.0)
    whole = np.asarray(
        polar_integral(
            params.annulus, row_pole, kernel, guard=params.guard, rtol=pole_tol, max_level=max_level
        )
    )
    xs = radius * np.cos(angles)
    ys = radius * np.sin(angles)
    removed = np.empty(whole.shape + (angles.size,))
    near = np.hypot(xs - cutout.center.x, ys - cutout.center.y) < CUTOUT_NEAR_FACTOR * cutout.reach

    for j in np.flatnonzero(near):
        removed[..., j] = polar_integral(
            cutout.region, Point(xs[j], ys[j]), kernel, guard=params.guard, rtol=pole_tol, max_level=max_level
        )
    far = np.flatnonzero(~near)
    for start in range(0, far.size, CUTOUT_POLE_BLOCK):
        idx = far[start:start + CUTOUT_POLE_BLOCK]
        dist = np.hypot(xs[idx, None] - cutout.points[None, :, 0], ys[idx, None] - cutout.points[None, :, 1])
        values = kernel(np.maximum(dist, params.guard).ravel())
        removed[..., idx] = values.reshape(values.shape[:-1] + dist.shape) @ cutout.weights
    return np.maximum(whole[..., None] - removed, 0.0)


def _exceed_probability_rows(task: _RowTask) -> np.ndarray:
    """
    Sum over the task's nodes of w(z) exp(-lam_J * inner(z)) for every
    (beta, k); returns shape (n_beta, k_max).
    """
    if task.relay_samples is not None:
        return _sampled_probability_rows(task)
    params = task.params
    betas = np.asarray(task.betas, dtype=float)
    ks = np.arange(1, task.k_max + 1, dtype=float)
    angles = np.asarray(task.angles, dtype=float)
    angular_weights = np.asarray(task.angular_weights, dtype=float)
    cutout = _Cutout.of(params)
    disk_area = math.pi * params.l1 ** 2
    total = np.zeros((betas.size, task.k_max))

    for radius, w_r in zip(task.radii, task.radial_weights):
        q1 = q_moment(params, Point(radius, 0.0), 1)
        kernel = _exceed_kernel(params, betas, ks * params.p_r * q1 / disk_area)
        inner = _row_inner_integrals(
            params, radius, angles, kernel, cutout, task.inner_rtol, task.inner_max_level
        )
        total += w_r * radius * (np.exp(-params.lam_j * inner) @ angular_weights)
    return total


def _sampled_probability_rows(task: _RowTask) -> np.ndarray:
    """Per-node variant for drawn relay layouts; the kernel depends on the angle."""
    params = task.params
    betas = np.asarray(task.betas, dtype=float)
    region = jammer_region(params)
    total = np.zeros((betas.size, task.k_max))

    for radius, w_r in zip(task.radii, task.radial_weights):
        for angle, w_a in zip(task.angles, task.angular_weights):
            z = Point.polar(radius, angle)
            kernel = _exceed_kernel(params, betas, _sampled_strengths(params, z, task.relay_samples))
            inner = region.polar_integral(
                z, kernel, guard=params.guard, rtol=task.inner_rtol, max_level=task.inner_max_level
            )
            total += w_r * radius * w_a * np.exp(-params.lam_j * np.asarray(inner))
    return total


def _sampled_strengths(params: SystemParams, z: Point, samples: tuple[np.ndarray, ...]) -> np.ndarray:
    """P_R sum d^-alpha for each (k, sample); shape (k_max, n_samples)."""
    rows = []
    for positions in samples:
        dist = np.hypot(positions[..., 0] - z.x, positions[..., 1] - z.y)
        rows.append(params.p_r * np.sum(dist ** (-params.alpha), axis=-1))
    return np.stack(rows, axis=0)


def _draw_relay_samples(params: SystemParams, k_max: int, n_samples: int, seed: int) -> tuple[np.ndarray, ...]:
    rng = np.random.default_rng(seed)
    samples = []
    for k in range(1, k_max + 1):
        pts = params.relay_region.sample_uniform(n_samples * k, rng)
        samples.append(pts.reshape(n_samples, k, 2))
    return tuple(samples)


class TermsCache:
    """
    Memo of multi-eavesdropper terms.

    The terms do not depend on lam_e, which only scales the bound exponent,
    so the key carries the scenario with lam_e zeroed.
    """

    def __init__(self) -> None:
        self._values: dict[Hashable, np.ndarray] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    @staticmethod
    def key(params: SystemParams, betas: np.ndarray, k_max: int, **settings: Any) -> Hashable:
        return (
            params.with_overrides(lam_e=0.0),
            tuple(betas.tolist()),
            k_max,
            tuple(sorted(settings.items())),
        )

    def get(self, key: Hashable) -> Optional[np.ndarray]:
        value = self._values.get(key)
        if value is None:
            self.misses += 1
            return None
        self.hits += 1
        return value.copy()

    def put(self, key: Hashable, value: np.ndarray) -> None:
        with self._lock:
            self._values.setdefault(key, value.copy())

    def clear(self) -> None:
        with self._lock:
            self._values.clear()
            self.hits = 0
            self.misses = 0

    def __len__(self) -> int:
        return len(self._values)


_terms_cache = TermsCache()


def terms_cache() -> TermsCache:
    return _terms_cache


def clear_terms_cache() -> None:
    _terms_cache.clear()


def multi_sop_terms(
    params: SystemParams,
    betas: Sequence[float],
    k_max: int,
    relay_sampling: bool = False,
    workers: int = 1,
    radial_nodes: int = OUTER_RADIAL_NODES,
    angular_nodes: int = OUTER_ANGULAR_NODES,
    rtol: float = OUTER_RTOL,
    max_doublings: int = OUTER_MAX_DOUBLINGS,
    inner_rtol: float = INNER_RTOL,
    inner_max_level: int = INNER_MAX_LEVEL,
    relay_samples: int = RELAY_SAMPLES,
    seed: int = 0,
) -> np.ndarray:
    """
    Per-k contributions to the bound exponent, shape (n_beta, k_max).

    Entry [b, k-1] is p_k times the annulus integral of the probability that
    an eavesdropper at z beats betas[b] given k relays. The bound is
    1 - exp(-lam_e * sum_k entry). Results are memoized per scenario with
    lam_e ignored; the worker count is not part of the key.

    Raises:
        NonConvergentError: If doubling the outer grid never reaches ``rtol``,
            or an inner polar integral exhausts ``inner_max_level``.
    """
    betas_arr = np.asarray(betas, dtype=float)
    pmf = relay_count_pmf(params.mean_relay_count, k_max)
    if params.lam_j <= 0:
        return np.tile(pmf * params.annulus.area(), (betas_arr.size, 1))

    key = TermsCache.key(
        params,
        betas_arr,
        k_max,
        relay_sampling=relay_sampling,
        radial_nodes=radial_nodes,
        angular_nodes=angular_nodes,
        rtol=rtol,
        max_doublings=max_doublings,
        inner_rtol=inner_rtol,
        inner_max_level=inner_max_level,
        relay_samples=relay_samples if relay_sampling else None,
        seed=seed if relay_sampling else None,
    )
    cached = _terms_cache.get(key)
    if cached is not None:
        logger.debug("Multi-eavesdropper terms served from cache")
        return cached

    samples = _draw_relay_samples(params, k_max, relay_samples, seed) if relay_sampling else None
    symmetric = samples is None
    executor = TrialExecutor(max_workers=workers)
    previous: Optional[np.ndarray] = None

    for level in range(max_doublings + 1):
        grid = _outer_grid(params, radial_nodes * 2 ** level, angular_nodes * 2 ** level, symmetric)
        size = OUTER_ROWS_PER_TASK
        tasks = [
            _RowTask(
                params=params,
                betas=tuple(betas_arr.tolist()),
                k_max=k_max,
                radii=tuple(grid.radii[start:stop].tolist()),
                radial_weights=tuple(grid.radial_weights[start:stop].tolist()),
                angles=tuple(grid.angles.tolist()),
                angular_weights=tuple(grid.angular_weights.tolist()),
                relay_samples=samples,
                inner_rtol=inner_rtol,
                inner_max_level=inner_max_level,
            )
            for start, stop in chunk_ranges(len(grid.radii), size)
        ]
        # task boundaries and reduction order do not depend on the worker count
        integral = np.zeros((betas_arr.size, k_max))
        for block in executor.map(_exceed_probability_rows, tasks):
            integral += block
        terms = integral * pmf[None, :]
        logger.debug(f"Outer grid level {level}: {len(grid.radii)}x{len(grid.angles)} nodes")
        if previous is not None:
            new_sum = terms.sum(axis=1)
            old_sum = previous.sum(axis=1)
            change = np.max(np.abs(new_sum - old_sum) / np.maximum(np.abs(new_sum), 1e-300))
            if change <= rtol:
                _terms_cache.put(key, terms)
                return terms
        previous = terms

    raise NonConvergentError(
        f"Outer eavesdropper integral did not reach rtol={rtol}",
        error_code=ErrorCodes.QUADRATURE_NOT_CONVERGED,
        iterations=max_doublings,
        last_estimate=float(previous.sum()) if previous is not None else None,
    )


def bound_estimate(
    params: SystemParams, beta_e: float, terms: np.ndarray, k: int, meta: dict[str, Any]
) -> OutageEstimate:
    partial = terms[:k]
    exponent = params.lam_e * float(partial.sum())
    estimate = OutageEstimate(
        value=-math.expm1(-exponent),
        method=EstimateMethod.UPPER_BOUND,
        meta={**meta, "beta_e": beta_e, "beta_e_db": linear_to_db(beta_e), "K": k, "exponent": exponent},
    )
    total = float(partial.sum())
    if total > 0 and partial[-1] > TRUNCATION_TOLERANCE * total:
        message = (
            f"Relay-count truncation at K={k}: last term is {partial[-1] / total:.3g} of the sum"
        )
        warnings.warn(message, TruncationWarning, stacklevel=3)
        estimate.warnings.append(message)
    return estimate


def sop_multi_upper_curve(
    params: SystemParams,
    betas: Sequence[float],
    k: int = 20,
    relay_sampling: bool = False,
    workers: int = 1,
    **quadrature: Any,
) -> list[OutageEstimate]:
    """Upper bound on the multi-eavesdropper SOP for several thresholds at once."""
    if k < 1:
        raise ValueError("K must be at least 1")
    for beta in betas:
        _check_threshold(beta, "beta_e")
    meta = {
        "mean_relay_count": params.mean_relay_count,
        "lam_e": params.lam_e,
        "relay_sampling": relay_sampling,
    }
    if params.lam_e == 0:
        return [
            OutageEstimate(0.0, EstimateMethod.UPPER_BOUND, meta={**meta, "beta_e": b, "K": k})
            for b in betas
        ]
    terms = multi_sop_terms(params, betas, k, relay_sampling=relay_sampling, workers=workers, **quadrature)
    return [bound_estimate(params, b, terms[row], k, meta) for row, b in enumerate(betas)]


def sop_multi_upper(
    params: SystemParams,
    beta_e: float,
    k: int = 20,
    relay_sampling: bool = False,
    workers: int = 1,
    **quadrature: Any,
) -> OutageEstimate:
    """
    Upper bound on the probability that some eavesdropper beats beta_e.

    The relay count is conditioned on k = 1..K (Poisson with mean
    lam_R pi l1^2) and the relay sum is replaced by its conditional mean
    k P_R Q_z(1) / (pi l1^2), unless ``relay_sampling`` averages over drawn
    k-relay layouts instead. A TruncationWarning is emitted when the k = K
    term exceeds 1e-6 of the kept sum.
    """
    return sop_multi_upper_curve(params, [beta_e], k, relay_sampling, workers, **quadrature)[0]


def sop_multi_upper_by_k(
    params: SystemParams,
    beta_e: float,
    k_values: Sequence[int],
    relay_sampling: bool = False,
    workers: int = 1,
    **quadrature: Any,
) -> list[OutageEstimate]:
    """The bound for several truncation points, sharing one integration."""
    _check_threshold(beta_e, "beta_e")
    k_max = max(k_values)
    meta = {"mean_relay_count": params.mean_relay_count, "lam_e": params.lam_e, "relay_sampling": relay_sampling}
    if params.lam_e == 0:
        return [OutageEstimate(0.0, EstimateMethod.UPPER_BOUND, meta={**meta, "K": k}) for k in k_values]
    terms = multi_sop_terms(params, [beta_e], k_max, relay_sampling=relay_sampling, workers=workers, **quadrature)[0]
    return [bound_estimate(params, beta_e, terms, k, meta) for k in k_values]


__all__ = [
    "EstimateMethod",
    "OutageEstimate",
    "cop_closed",
    "cop_curve",
    "sop_single_closed",
    "sop_single_curve",
    "relay_count_pmf",
    "multi_sop_terms",
    "TermsCache",
    "terms_cache",
    "clear_terms_cache",
    "bound_estimate",
    "sop_multi_upper",
    "sop_multi_upper_curve",
    "sop_multi_upper_by_k",
]
