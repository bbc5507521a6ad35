"""
SocSec Gamma Approximation

Moment-matched Gamma laws for the four power variables and the CDF of the
ratio of two independent Gamma variables.

Property 1: Moment round trip
    fit_gamma(MomentPair(nu * theta, nu * theta^2)) returns (nu, theta).

Property 2: Implied moments
    Every *_params function returns the Gamma law whose mean and variance
    equal the matching *_moments function.

Property 3: Ratio CDF
    dgr_cdf(T, I, beta) = P(T / I < beta), nondecreasing in beta, invariant
    under a common rescaling of both scales.
"""
from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass
from typing import Hashable, Optional

from scipy import special

from core.exceptions import DegenerateFitError, ErrorCodes, GeometryError
from core.geometry import (
    DbarDecomposition,
    Disk,
    ORIGIN,
    Point,
    PuncturedAnnulus,
    Region,
    dbar_decompose,
    radial_integral,
)
from core.params import SystemParams
from core.specfun import GammaParams, hyp2f1

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MomentPair:
    mean: float
    variance: float

    def to_dict(self) -> dict[str, float]:
        return {"mean": self.mean, "variance": self.variance}


def fit_gamma(m: MomentPair) -> GammaParams:
    """Shape mean^2 / variance, scale variance / mean."""
    if not (m.mean > 0 and m.variance > 0 and math.isfinite(m.mean) and math.isfinite(m.variance)):
        raise DegenerateFitError(
            f"Cannot fit a Gamma law to mean={m.mean}, variance={m.variance}",
            error_code=ErrorCodes.DEGENERATE_MOMENTS,
            mean=m.mean,
            variance=m.variance,
        )
    return GammaParams(shape=m.mean ** 2 / m.variance, scale=m.variance / m.mean)


# ======================================================================
# Integral cache
# ======================================================================


class IntegralCache:
    """
    Memo of radial integrals keyed by (region, pole, exponent, guard).

    Reads are plain dict lookups; writes take the lock.
    """

    def __init__(self) -> None:
        self._values: dict[Hashable, float] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def radial_integral(self, region: Hashable, pole: Point, exponent: float, guard: float) -> float:
        key = (region, pole, float(exponent), float(guard))
        value = self._values.get(key)
        if value is not None:
            self.hits += 1
            return value
        self.misses += 1
        if isinstance(region, DbarDecomposition):
            value = region.radial_integral(pole, exponent, guard=guard)
        else:
            value = radial_integral(region, pole, exponent, guard=guard)
        with self._lock:
            self._values.setdefault(key, value)
        return value

    def clear(self) -> None:
        with self._lock:
            self._values.clear()
            self.hits = 0
            self.misses = 0

    def __len__(self) -> int:
        return len(self._values)


_default_cache = IntegralCache()


def default_cache() -> IntegralCache:
    return _default_cache


def clear_cache() -> None:
    _default_cache.clear()


# ======================================================================
# Region integrals
# ======================================================================


def q_moment(params: SystemParams, pole: Point, n: int, cache: Optional[IntegralCache] = None) -> float:
    """
    Integral over the relay disk of |x - pole|^(-n * alpha).

    Raises:
        GeometryError: If the pole lies in the closed relay disk.
    """
    if params.relay_region.contains_point(pole):
        raise GeometryError(
            f"Pole ({pole.x}, {pole.y}) lies inside the relay disk",
            error_code=ErrorCodes.POLE_INSIDE_REGION,
            region="relay_disk",
        )
    cache = cache if cache is not None else _default_cache
    return cache.radial_integral(params.relay_region, pole, n * params.alpha, 0.0)


def jammer_region(params: SystemParams, exact: bool = False) -> Region | DbarDecomposition:
    """The jammer region: sector decomposition by default, exact punctured annulus on request."""
    if exact:
        return PuncturedAnnulus(ORIGIN, params.l1, params.l2, Disk(params.dest, params.lg))
    return dbar_decompose(params.l1, params.l2, params.d, params.lg)


def jammer_integrals(
    params: SystemParams,
    receiver: Point,
    exact: bool = False,
    cache: Optional[IntegralCache] = None,
) -> tuple[float, float]:
    """Integrals of max(d, guard)^(-alpha) and ^(-2 alpha) over the jammer region."""
    cache = cache if cache is not None else _default_cache
    region = jammer_region(params, exact)
    j1 = cache.radial_integral(region, receiver, params.alpha, params.guard)
    j2 = cache.radial_integral(region, receiver, 2.0 * params.alpha, params.guard)
    return j1, j2


def _require_relays(params: SystemParams) -> None:
    if params.lam_r <= 0:
        raise DegenerateFitError(
            "Relay density is zero; signal power is identically zero",
            error_code=ErrorCodes.NO_RELAYS,
            mean=0.0,
            variance=0.0,
        )


# ======================================================================
# Destination signal
# ======================================================================


def dest_signal_moments(params: SystemParams, cache: Optional[IntegralCache] = None) -> MomentPair:
    """Mean 3 lam_R P_R Q(1), variance 9 lam_R P_R^2 (5 lam_R Q(1)^2 + Q(2))."""
    _require_relays(params)
    q1 = q_moment(params, params.dest, 1, cache)
    q2 = q_moment(params, params.dest, 2, cache)
    lam_r, p_r = params.lam_r, params.p_r
    return MomentPair(
        mean=3.0 * lam_r * p_r * q1,
        variance=9.0 * lam_r * p_r ** 2 * (5.0 * lam_r * q1 ** 2 + q2),
    )


def dest_signal_params(params: SystemParams, cache: Optional[IntegralCache] = None) -> GammaParams:
    _require_relays(params)
    q1 = q_moment(params, params.dest, 1, cache)
    q2 = q_moment(params, params.dest, 2, cache)
    lam_r = params.lam_r
    spread = 5.0 * lam_r * q1 ** 2 + q2
    return GammaParams(shape=lam_r * q1 ** 2 / spread, scale=3.0 * params.p_r * spread / q1)


# ======================================================================
# Interference
# ======================================================================


def interference_moments(
    params: SystemParams,
    receiver: Point,
    exact: bool = False,
    cache: Optional[IntegralCache] = None,
) -> MomentPair:
    """Campbell mean lam_J P_j J1 and variance 2 lam_J P_j^2 J2."""
    j1, j2 = jammer_integrals(params, receiver, exact, cache)
    return MomentPair(
        mean=params.lam_j * params.p_j * j1,
        variance=2.0 * params.lam_j * params.p_j ** 2 * j2,
    )


def interference_params(
    params: SystemParams,
    receiver: Point,
    exact: bool = False,
    cache: Optional[IntegralCache] = None,
) -> GammaParams:
    """
    Gamma law of the aggregate jamming power at a receiver.

    Integrates over the three-sector decomposition unless ``exact`` is set.

    Raises:
        DegenerateFitError: If the jammer density is zero.
    """
    if params.lam_j <= 0:
        raise DegenerateFitError(
            "Jammer density is zero; interference is identically zero",
            error_code=ErrorCodes.DEGENERATE_MOMENTS,
            mean=0.0,
            variance=0.0,
        )
    j1, j2 = jammer_integrals(params, receiver, exact, cache)
    return GammaParams(
        shape=params.lam_j * j1 ** 2 / (2.0 * j2),
        scale=2.0 * params.p_j * j2 / j1,
    )


# ======================================================================
# Eavesdropper signal
# ======================================================================


def eve_signal_moments(params: SystemParams, eve: Point, cache: Optional[IntegralCache] = None) -> MomentPair:
    _require_relays(params)
    q1 = q_moment(params, eve, 1, cache)
    q2 = q_moment(params, eve, 2, cache)
    lam_r, p_r = params.lam_r, params.p_r
    return MomentPair(
        mean=p_r * lam_r * q1,
        variance=p_r ** 2 * (lam_r ** 2 * q1 ** 2 + 2.0 * lam_r * q2),
    )


def eve_signal_params(
    params: SystemParams,
    eve: Point,
    linear_nu_tz: bool = False,
    cache: Optional[IntegralCache] = None,
) -> GammaParams:
    """
    Gamma law of the relay power leaking to an eavesdropper.

    The default shape lam_R Q(1)^2 / (lam_R Q(1)^2 + 2 Q(2)) matches the
    exact mean and variance of T(z). ``linear_nu_tz`` uses the unsquared
    numerator lam_R Q(1) instead.
    """
    _require_relays(params)
    q1 = q_moment(params, eve, 1, cache)
    q2 = q_moment(params, eve, 2, cache)
    lam_r = params.lam_r
    spread = lam_r * q1 ** 2 + 2.0 * q2
    numerator = lam_r * q1 if linear_nu_tz else lam_r * q1 ** 2
    return GammaParams(shape=numerator / spread, scale=params.p_r * spread / q1)


# ======================================================================
# Ratio CDF
# ======================================================================


def _ratio_tail(nu_a: float, nu_b: float, q: float) -> float:
    """P(A / B >= beta) for q = beta theta_B / theta_A, via the 2F1 closed form."""
    total = nu_a + nu_b
    log_prefactor = (
        nu_a * math.log(q)
        + special.gammaln(total)
        - math.log(nu_b)
        - total * math.log1p(q)
        - special.gammaln(nu_a)
        - special.gammaln(nu_b)
    )
    return math.exp(log_prefactor) * hyp2f1(1.0, total, nu_b + 1.0, 1.0 / (q + 1.0))


def dgr_cdf(t: GammaParams, i: GammaParams, beta: float) -> float:
    """
    P(T / I < beta) for independent Gamma T and I.

    With q = beta theta_I / theta_T the value is
    1 - q^nu_T Gamma(nu_T + nu_I) / (nu_I (q + 1)^(nu_T + nu_I) Gamma(nu_T) Gamma(nu_I))
        * 2F1(1, nu_T + nu_I; nu_I + 1; 1 / (q + 1)).
    For q < 1 the same form is evaluated with the roles of T and I swapped
    at threshold 1 / beta, keeping the series argument at most 1/2.
    """
    if beta < 0 or math.isnan(beta):
        raise ValueError(f"beta must be non-negative, got {beta}")
    if beta == 0:
        return 0.0
    if math.isinf(beta):
        return 1.0
    q = beta * i.scale / t.scale
    if q >= 1.0:
        value = 1.0 - _ratio_tail(t.shape, i.shape, q)
    else:
        value = _ratio_tail(i.shape, t.shape, 1.0 / q)
    return min(1.0, max(0.0, value))


def dgr_sf(t: GammaParams, i: GammaParams, beta: float) -> float:
    """P(T / I >= beta); the complement of dgr_cdf without cancellation."""
    if beta < 0 or math.isnan(beta):
        raise ValueError(f"beta must be non-negative, got {beta}")
    if beta == 0:
        return 1.0
    if math.isinf(beta):
        return 0.0
    q = beta * i.scale / t.scale
    if q >= 1.0:
        value = _ratio_tail(t.shape, i.shape, q)
    else:
        value = 1.0 - _ratio_tail(i.shape, t.shape, 1.0 / q)
    return min(1.0, max(0.0, value))


__all__ = [
    "MomentPair",
    "IntegralCache",
    "fit_gamma",
    "default_cache",
    "clear_cache",
    "q_moment",
    "jammer_region",
    "jammer_integrals",
    "dest_signal_moments",
    "dest_signal_params",
    "interference_moments",
    "interference_params",
    "eve_signal_moments",
    "eve_signal_params",
    "dgr_cdf",
    "dgr_sf",
]
