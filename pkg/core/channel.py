"""
SocSec Channel Synthesis

One realization of the second hop: legitimate nodes are split into relays
and jammers by their social trust mark and position, relays beamform towards
the destination, and jammers outside the protected zone radiate interference.

All functions take an explicit numpy Generator; no module state is shared.
Node collections are (n, 2) float arrays.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np

from core.exceptions import ErrorCodes, GeometryError
from core.geometry import (
    Disk,
    ORIGIN,
    Point,
    PointsLike,
    as_points,
    distances,
    sample_ppp,
    sample_ppp_excluding,
)
from core.params import SystemParams

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


class CategorizeMethod(Enum):
    """How relays and jammers are drawn."""

    THINNED = "thinned"
    TRUST = "trust"


@dataclass(frozen=True, eq=False)
class NodeSet:
    """One realization of categorized node positions."""

    relays: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    jammers: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    eavesdroppers: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))

    def __post_init__(self) -> None:
        for name in ("relays", "jammers", "eavesdroppers"):
            object.__setattr__(self, name, as_points(getattr(self, name)))

    @property
    def counts(self) -> dict[str, int]:
        return {
            "relays": int(self.relays.shape[0]),
            "jammers": int(self.jammers.shape[0]),
            "eavesdroppers": int(self.eavesdroppers.shape[0]),
        }

    def validate(self, params: SystemParams) -> None:
        """
        Check every node against its role region.

        Raises:
            GeometryError: If any node lies outside its region.
        """
        if not np.all(params.relay_region.contains(self.relays)):
            raise GeometryError("Relay outside the relay disk",
                                error_code=ErrorCodes.REGION_INVALID, region="relays")
        if self.jammers.shape[0]:
            if not np.all(params.annulus.contains(self.jammers)):
                raise GeometryError("Jammer outside the annulus",
                                    error_code=ErrorCodes.REGION_INVALID, region="jammers")
            if np.any(distances(self.jammers, params.dest) < params.lg):
                raise GeometryError("Jammer inside the protected zone",
                                    error_code=ErrorCodes.PROTECTED_ZONE_OVERLAP, region="jammers")
        if not np.all(params.annulus.contains(self.eavesdroppers)):
            raise GeometryError("Eavesdropper outside the annulus",
                                error_code=ErrorCodes.REGION_INVALID, region="eavesdroppers")


def categorize(
    params: SystemParams,
    rng: np.random.Generator,
    method: Union[CategorizeMethod, str] = CategorizeMethod.THINNED,
    nja: bool = False,
    with_eavesdroppers: bool = True,
) -> NodeSet:
    """
    Draw relays, jammers and eavesdroppers for one realization.

    THINNED samples each role from its own PPP. TRUST samples the full node
    process on Disk(o, l2), attaches a uniform trust mark to every node and
    applies the two thresholds; both give the same joint law.
    """
    method = CategorizeMethod(method)
    protected = params.protected_zone

    if method is CategorizeMethod.THINNED:
        relays = sample_ppp(params.relay_region, params.lam_r, rng)
        jammers = sample_ppp_excluding(params.annulus, params.lam_j, protected, rng)
    else:
        nodes = sample_ppp(Disk(ORIGIN, params.l2), params.lam, rng)
        trust = rng.random(nodes.shape[0])
        radius = np.hypot(nodes[:, 0], nodes[:, 1])
        relays = nodes[(trust >= params.c1) & (radius <= params.l1)]
        jam_mask = (trust >= params.c2) & (trust < params.c1) & (radius >= params.l1)
        jammers = nodes[jam_mask]
        jammers = jammers[~protected.contains(jammers)]

    if nja:
        jammers = np.empty((0, 2))
    eavesdroppers = (
        sample_ppp(params.annulus, params.lam_e, rng) if with_eavesdroppers else np.empty((0, 2))
    )
    return NodeSet(relays=relays, jammers=jammers, eavesdroppers=eavesdroppers)


# ======================================================================
# Powers
# ======================================================================


def signal_power_dest(
    relays: PointsLike,
    dest: Point,
    p_r: float,
    alpha: float,
    rng: np.random.Generator,
    envelopes: Optional[np.ndarray] = None,
) -> float:
    """
    Coherently combined relay power at the destination.

    T(y) = p_r * (sum |H_i| d_i^(-alpha/2))^2 with |H_i|^2 ~ Exp(1).
    ``envelopes`` overrides the fading amplitudes.
    """
    dist = distances(relays, dest)
    if dist.size == 0:
        return 0.0
    amp = np.sqrt(rng.exponential(1.0, dist.size)) if envelopes is None else np.asarray(envelopes, float)
    return float(p_r * np.sum(amp * dist ** (-alpha / 2.0)) ** 2)


def signal_power_eve(
    relays: PointsLike,
    eve: PointsLike,
    p_r: float,
    alpha: float,
    rng: np.random.Generator,
    exact_phase: bool = False,
) -> ArrayLike:
    """
    Relay signal power leaking to one or more eavesdroppers.

    Given the relay positions, T(z) is exponential with mean
    p_r * sum d^(-alpha). With ``exact_phase`` the beamforming phases matched
    to the destination and complex Gaussian relay-to-eve channels are drawn
    explicitly instead.
    """
    eves = as_points(eve)
    rel = as_points(relays)
    n_eve = eves.shape[0]
    if rel.shape[0] == 0:
        result = np.zeros(n_eve)
    else:
        dist = np.hypot(eves[:, None, 0] - rel[None, :, 0], eves[:, None, 1] - rel[None, :, 1])
        gain = dist ** (-alpha)
        if exact_phase:
            phases = rng.uniform(0.0, 2.0 * np.pi, rel.shape[0])
            channel = (rng.standard_normal(gain.shape) + 1j * rng.standard_normal(gain.shape)) / np.sqrt(2.0)
            field_sum = np.sum(np.exp(-1j * phases)[None, :] * channel * np.sqrt(gain), axis=1)
            result = p_r * np.abs(field_sum) ** 2
        else:
            result = rng.exponential(1.0, n_eve) * p_r * np.sum(gain, axis=1)
    return float(result[0]) if isinstance(eve, Point) else result


def interference_power(
    jammers: PointsLike,
    receiver: PointsLike,
    p_j: float,
    alpha: float,
    guard: float,
    rng: np.random.Generator,
    fading: Optional[np.ndarray] = None,
) -> ArrayLike:
    """
    Aggregate jamming power sum p_j h max(d, guard)^(-alpha), h ~ Exp(1).

    Vectorized over receivers; ``fading`` overrides h (shape (n_receivers,
    n_jammers) or broadcastable to it).
    """
    rx = as_points(receiver)
    jam = as_points(jammers)
    if jam.shape[0] == 0:
        result = np.zeros(rx.shape[0])
    else:
        dist = np.hypot(rx[:, None, 0] - jam[None, :, 0], rx[:, None, 1] - jam[None, :, 1])
        h = rng.exponential(1.0, dist.shape) if fading is None else np.broadcast_to(fading, dist.shape)
        result = p_j * np.sum(h * np.maximum(dist, guard) ** (-alpha), axis=1)
    return float(result[0]) if isinstance(receiver, Point) else result


def sir(signal: ArrayLike, interference: ArrayLike) -> ArrayLike:
    """
    Signal-to-interference ratio.

    I = 0 gives +inf when T > 0 and 0 when T = 0.
    """
    t = np.asarray(signal, dtype=float)
    i = np.asarray(interference, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(i > 0, t / np.where(i > 0, i, 1.0), np.where(t > 0, np.inf, 0.0))
    return float(ratio) if ratio.ndim == 0 else ratio


# ======================================================================
# Realization helpers
# ======================================================================


@dataclass(frozen=True)
class DestPowers:
    signal: float
    interference: float

    @property
    def sir(self) -> float:
        return sir(self.signal, self.interference)


def simulate_dest(params: SystemParams, nodes: NodeSet, rng: np.random.Generator) -> DestPowers:
    """T(y) and I(y) for one realization."""
    dest = params.dest
    t = signal_power_dest(nodes.relays, dest, params.p_r, params.alpha, rng)
    i = interference_power(nodes.jammers, dest, params.p_j, params.alpha, params.guard, rng)
    return DestPowers(signal=t, interference=i)


def simulate_eves(
    params: SystemParams,
    nodes: NodeSet,
    eves: PointsLike,
    rng: np.random.Generator,
    exact_phase: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """T(z) and I(z) at each eavesdropper position for one realization."""
    points = as_points(eves)
    if points.shape[0] == 0:
        return np.zeros(0), np.zeros(0)
    t = signal_power_eve(nodes.relays, points, params.p_r, params.alpha, rng, exact_phase=exact_phase)
    i = interference_power(nodes.jammers, points, params.p_j, params.alpha, params.guard, rng)
    return np.asarray(t), np.asarray(i)


__all__ = [
    "CategorizeMethod",
    "NodeSet",
    "DestPowers",
    "categorize",
    "signal_power_dest",
    "signal_power_eve",
    "interference_power",
    "sir",
    "simulate_dest",
    "simulate_eves",
]
