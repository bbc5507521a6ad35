"""
SocSec Planar Geometry

Regions of the plane, homogeneous Poisson point process sampling, and polar
quadrature of radial kernels over regions.

A radial integral about a pole p is evaluated as

    integral_region f(|x - p|) dx = integral_0^inf f(r) m(r) r dr

where m(r) is the angular measure of the circle of radius r about p that lies
inside the region. m(r) is computed exactly from the crossings of that circle
with the region boundary, so the only numerical step is a one-dimensional
Gauss-Legendre rule over radius split at every point where m(r) loses
smoothness.

Property 1: PPP counts
    sample_ppp draws a Poisson count with mean density * area and places the
    points i.i.d. uniformly on the region.

Property 2: Decomposition
    dbar_decompose returns three disjoint annular sectors inside the annulus
    that avoid the protected disk around the destination.
"""
from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Union

import numpy as np

from core.exceptions import DomainError, ErrorCodes, GeometryError, NonConvergentError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

# Gauss-Legendre nodes per panel
GL_ORDER = 16

Kernel = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Point:
    """A location in the plane (meters)."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"Point coordinates must be finite, got ({self.x}, {self.y})")

    @classmethod
    def polar(cls, radius: float, angle: float) -> "Point":
        return cls(radius * math.cos(angle), radius * math.sin(angle))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def distance_to(self, other: "Point") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def to_dict(self) -> dict[str, float]:
        return {"x": self.x, "y": self.y}


ORIGIN = Point(0.0, 0.0)

PointsLike = Union[Point, np.ndarray]


def as_points(points: PointsLike) -> np.ndarray:
    """Return points as a float array of shape (n, 2)."""
    if isinstance(points, Point):
        return points.as_array().reshape(1, 2)
    return np.asarray(points, dtype=float).reshape(-1, 2)


def distances(points: PointsLike, pole: Point) -> np.ndarray:
    pts = as_points(points)
    return np.hypot(pts[:, 0] - pole.x, pts[:, 1] - pole.y)


# ======================================================================
# Regions
# ======================================================================


class Region(ABC):
    """
    Abstract planar region.

    Concrete regions describe their boundary as full circles and straight
    segments. Extra circle arcs that are not part of the boundary only add
    harmless breakpoints to the arc-measure computation.
    """

    @abstractmethod
    def area(self) -> float:
        """Exact area in square meters."""

    @abstractmethod
    def contains(self, points: PointsLike) -> np.ndarray:
        """Closed-set membership test, one boolean per point."""

    @abstractmethod
    def sample_uniform(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw n i.i.d. uniform points as an (n, 2) array."""

    @abstractmethod
    def boundary_circles(self) -> list[tuple[Point, float]]:
        """Circles (center, radius) carrying the curved boundary."""

    def boundary_segments(self) -> list[tuple[Point, float, float, float]]:
        """Straight boundary pieces as (origin, direction, s_lo, s_hi)."""
        return []

    def contains_point(self, point: Point) -> bool:
        return bool(self.contains(point)[0])

    def max_distance(self, pole: Point) -> float:
        return max(pole.distance_to(c) + radius for c, radius in self.boundary_circles())

    def arc_measure(self, pole: Point, r: Union[float, np.ndarray]) -> np.ndarray:
        """
        Angular measure (radians) of the circle of radius r about the pole
        that lies inside the region. Vectorized over r.
        """
        radii = np.atleast_1d(np.asarray(r, dtype=float))
        p = pole.as_array()
        candidates: list[np.ndarray] = []

        with np.errstate(divide="ignore", invalid="ignore"):
            for center, radius in self.boundary_circles():
                offset = center.as_array() - p
                dist = float(np.hypot(offset[0], offset[1]))
                if dist == 0.0:
                    continue
                psi = math.atan2(offset[1], offset[0])
                kappa = (radii ** 2 + dist ** 2 - radius ** 2) / (2.0 * radii * dist)
                delta = np.where(np.abs(kappa) <= 1.0, np.arccos(np.clip(kappa, -1.0, 1.0)), np.nan)
                candidates.append(psi + delta)
                candidates.append(psi - delta)

            for origin, direction, s_lo, s_hi in self.boundary_segments():
                e = np.array([math.cos(direction), math.sin(direction)])
                w = origin.as_array() - p
                b = float(e @ w)
                disc = b * b - float(w @ w) + radii ** 2
                root = np.sqrt(np.where(disc >= 0.0, disc, np.nan))
                for sign in (1.0, -1.0):
                    s = -b + sign * root
                    valid = (s >= s_lo - 1e-12) & (s <= s_hi + 1e-12)
                    ang = np.arctan2(w[1] + s * e[1], w[0] + s * e[0])
                    candidates.append(np.where(valid, ang, np.nan))

        m = radii.shape[0]
        if candidates:
            angles = np.mod(np.stack(candidates, axis=1), TWO_PI)
            angles = np.where(np.isnan(angles), TWO_PI, angles)
        else:
            angles = np.empty((m, 0))
        grid = np.concatenate([np.zeros((m, 1)), angles, np.full((m, 1), TWO_PI)], axis=1)
        grid.sort(axis=1)
        lengths = np.diff(grid, axis=1)
        mids = 0.5 * (grid[:, :-1] + grid[:, 1:])
        xs = p[0] + radii[:, None] * np.cos(mids)
        ys = p[1] + radii[:, None] * np.sin(mids)
        inside = self.contains(np.stack([xs.ravel(), ys.ravel()], axis=1)).reshape(mids.shape)
        return np.sum(lengths * inside, axis=1)

    def radial_breakpoints(self, pole: Point) -> np.ndarray:
        """Radii about the pole where the arc measure loses smoothness."""
        p = pole.as_array()
        points: list[float] = []
        for center, radius in self.boundary_circles():
            dist = pole.distance_to(center)
            points.extend([abs(dist - radius), dist + radius])
        for origin, direction, s_lo, s_hi in self.boundary_segments():
            e = np.array([math.cos(direction), math.sin(direction)])
            w = origin.as_array() - p
            points.append(float(np.hypot(*(w + s_lo * e))))
            points.append(float(np.hypot(*(w + s_hi * e))))
            foot = -float(e @ w)
            if s_lo < foot < s_hi:
                points.append(float(np.hypot(*(w + foot * e))))
        return np.unique(np.asarray(points, dtype=float))


def _check_radii(inner: float, outer: float, name: str) -> None:
    if not (math.isfinite(inner) and math.isfinite(outer)):
        raise GeometryError(f"{name} radii must be finite", error_code=ErrorCodes.REGION_INVALID, region=name)
    if inner < 0 or inner >= outer:
        raise GeometryError(
            f"{name} requires 0 <= inner < outer, got inner={inner}, outer={outer}",
            error_code=ErrorCodes.REGION_INVALID,
            region=name,
        )


def _sample_annular_sector(
    center: Point,
    inner: float,
    outer: float,
    angle_lo: float,
    angle_hi: float,
    n: int,
    rng: np.random.Generator,
) -> np.ndarray:
    u = rng.random(n)
    radii = np.sqrt(inner ** 2 + u * (outer ** 2 - inner ** 2))
    angles = angle_lo + rng.random(n) * (angle_hi - angle_lo)
    return np.stack([center.x + radii * np.cos(angles), center.y + radii * np.sin(angles)], axis=1)


@dataclass(frozen=True)
class Disk(Region):
    center: Point
    radius: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise GeometryError(
                f"Disk radius must be positive, got {self.radius}",
                error_code=ErrorCodes.REGION_INVALID,
                region="Disk",
            )

    def area(self) -> float:
        return math.pi * self.radius ** 2

    def contains(self, points: PointsLike) -> np.ndarray:
        return distances(points, self.center) <= self.radius

    def sample_uniform(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return _sample_annular_sector(self.center, 0.0, self.radius, 0.0, TWO_PI, n, rng)

    def boundary_circles(self) -> list[tuple[Point, float]]:
        return [(self.center, self.radius)]


@dataclass(frozen=True)
class Annulus(Region):
    center: Point
    inner: float
    outer: float

    def __post_init__(self) -> None:
        _check_radii(self.inner, self.outer, "Annulus")

    def area(self) -> float:
        return math.pi * (self.outer ** 2 - self.inner ** 2)

    def contains(self, points: PointsLike) -> np.ndarray:
        dist = distances(points, self.center)
        return (dist >= self.inner) & (dist <= self.outer)

    def sample_uniform(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return _sample_annular_sector(self.center, self.inner, self.outer, 0.0, TWO_PI, n, rng)

    def boundary_circles(self) -> list[tuple[Point, float]]:
        circles = [(self.center, self.outer)]
        if self.inner > 0:
            circles.append((self.center, self.inner))
        return circles


@dataclass(frozen=True)
class FlabellateAnnulus(Region):
    """Annular sector covering angles [angle_lo, angle_hi] about the center."""

    center: Point
    inner: float
    outer: float
    angle_lo: float
    angle_hi: float

    def __post_init__(self) -> None:
        _check_radii(self.inner, self.outer, "FlabellateAnnulus")
        if not self.angle_lo < self.angle_hi <= self.angle_lo + TWO_PI + 1e-12:
            raise GeometryError(
                f"FlabellateAnnulus requires angle_lo < angle_hi <= angle_lo + 2pi, "
                f"got [{self.angle_lo}, {self.angle_hi}]",
                error_code=ErrorCodes.REGION_INVALID,
                region="FlabellateAnnulus",
            )

    @property
    def span(self) -> float:
        return self.angle_hi - self.angle_lo

    def area(self) -> float:
        return 0.5 * self.span * (self.outer ** 2 - self.inner ** 2)

    def contains(self, points: PointsLike) -> np.ndarray:
        pts = as_points(points)
        dx = pts[:, 0] - self.center.x
        dy = pts[:, 1] - self.center.y
        dist = np.hypot(dx, dy)
        in_ring = (dist >= self.inner) & (dist <= self.outer)
        if self.span >= TWO_PI:
            return in_ring
        offset = np.mod(np.arctan2(dy, dx) - self.angle_lo, TWO_PI)
        # angle_lo itself can land at 2pi after the modulo
        in_wedge = (offset <= self.span) | (offset >= TWO_PI - 1e-12)
        return in_ring & in_wedge

    def sample_uniform(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return _sample_annular_sector(
            self.center, self.inner, self.outer, self.angle_lo, self.angle_hi, n, rng
        )

    def boundary_circles(self) -> list[tuple[Point, float]]:
        circles = [(self.center, self.outer)]
        if self.inner > 0:
            circles.append((self.center, self.inner))
        return circles

    def boundary_segments(self) -> list[tuple[Point, float, float, float]]:
        if self.span >= TWO_PI:
            return []
        return [
            (self.center, self.angle_lo, self.inner, self.outer),
            (self.center, self.angle_hi, self.inner, self.outer),
        ]


@dataclass(frozen=True)
class PuncturedAnnulus(Region):
    """Annulus with a disk removed; the hole must lie inside the annulus."""

    center: Point
    inner: float
    outer: float
    hole: Disk

    def __post_init__(self) -> None:
        _check_radii(self.inner, self.outer, "PuncturedAnnulus")
        offset = self.center.distance_to(self.hole.center)
        if offset - self.hole.radius < self.inner or offset + self.hole.radius > self.outer:
            raise GeometryError(
                "Hole must lie inside the annulus",
                error_code=ErrorCodes.PROTECTED_ZONE_OVERLAP,
                region="PuncturedAnnulus",
            )

    def area(self) -> float:
        return math.pi * (self.outer ** 2 - self.inner ** 2) - self.hole.area()

    def contains(self, points: PointsLike) -> np.ndarray:
        dist = distances(points, self.center)
        in_ring = (dist >= self.inner) & (dist <= self.outer)
        return in_ring & (distances(points, self.hole.center) >= self.hole.radius)

    def sample_uniform(self, n: int, rng: np.random.Generator) -> np.ndarray:
        kept: list[np.ndarray] = []
        count = 0
        while count < n:
            batch = max(16, int(1.2 * (n - count)) + 8)
            pts = _sample_annular_sector(self.center, self.inner, self.outer, 0.0, TWO_PI, batch, rng)
            pts = pts[~self.hole.contains(pts)]
            kept.append(pts)
            count += pts.shape[0]
        return np.concatenate(kept, axis=0)[:n] if kept else np.empty((0, 2))

    def boundary_circles(self) -> list[tuple[Point, float]]:
        circles = [(self.center, self.outer), (self.hole.center, self.hole.radius)]
        if self.inner > 0:
            circles.append((self.center, self.inner))
        return circles


# ======================================================================
# Point processes
# ======================================================================


def area(region: Region) -> float:
    return region.area()


def sample_ppp(region: Region, density: float, rng: np.random.Generator) -> np.ndarray:
    """Sample a homogeneous PPP of the given density on the region."""
    if density < 0:
        raise DomainError(f"PPP density must be non-negative, got {density}", function="sample_ppp")
    if density == 0:
        return np.empty((0, 2))
    n = int(rng.poisson(density * region.area()))
    return region.sample_uniform(n, rng)


def sample_ppp_excluding(
    region: Region,
    density: float,
    hole: Region,
    rng: np.random.Generator,
) -> np.ndarray:
    """PPP on the region with the points inside the hole removed."""
    points = sample_ppp(region, density, rng)
    if points.shape[0] == 0:
        return points
    return points[~hole.contains(points)]


# ======================================================================
# Polar quadrature
# ======================================================================


@lru_cache(maxsize=None)
def _gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def _unit_panels(panels: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = _gauss_legendre(order)
    width = 1.0 / panels
    starts = np.arange(panels) * width
    u = (starts[:, None] + 0.5 * (x[None, :] + 1.0) * width).ravel()
    wu = np.tile(0.5 * w * width, panels)
    return u, wu


def _map_interval(
    a: float, b: float, panels: int, order: int, grading: float
) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and dr-weights on [a, b]."""
    u, wu = _unit_panels(panels, order)
    if a > 0:
        # geometric in r, smoothstep in u to soften endpoint square-root kinks
        log_ratio = math.log(b / a)
        h = u * u * (3.0 - 2.0 * u)
        r = a * np.exp(h * log_ratio)
        dr = r * log_ratio * 6.0 * u * (1.0 - u)
    else:
        r = b * u ** grading
        dr = b * grading * u ** (grading - 1.0)
    return r, wu * dr


@dataclass(frozen=True)
class RadialRule:
    """
    Quadrature rule for radial kernels about a pole.

    ``sum(weights * f(nodes))`` approximates the region integral of
    ``f(max(|x - pole|, guard))``.
    """

    nodes: np.ndarray
    weights: np.ndarray

    def apply(self, kernel: Kernel) -> np.ndarray:
        if self.nodes.size == 0:
            values = np.asarray(kernel(np.ones(1)))
            return np.zeros(values.shape[:-1]) if values.ndim > 1 else np.zeros(())
        return np.asarray(kernel(self.nodes)) @ self.weights


def radial_rule(
    region: Region,
    pole: Point,
    guard: float = 0.0,
    panels: int = 4,
    order: int = GL_ORDER,
    singular_exponent: float | None = None,
) -> RadialRule:
    """Build a composite rule with the given number of panels per interval."""
    r_max = region.max_distance(pole)
    edges = [0.0, r_max]
    if 0 < guard < r_max:
        edges.append(guard)
    edges.extend(bp for bp in region.radial_breakpoints(pole) if 0 < bp < r_max)
    edges_arr = np.unique(np.asarray(edges))

    grading = 2.0
    if guard == 0 and singular_exponent is not None and singular_exponent < 2:
        grading = max(2.0, 4.0 / (2.0 - singular_exponent))

    node_parts: list[np.ndarray] = []
    weight_parts: list[np.ndarray] = []
    for a, b in zip(edges_arr[:-1], edges_arr[1:]):
        if b - a <= 1e-12 * r_max:
            continue
        if region.arc_measure(pole, 0.5 * (a + b))[0] == 0.0:
            continue
        r, dr = _map_interval(float(a), float(b), panels, order, grading)
        m = region.arc_measure(pole, r)
        node_parts.append(np.maximum(r, guard))
        weight_parts.append(dr * m * r)

    if not node_parts:
        return RadialRule(np.empty(0), np.empty(0))
    return RadialRule(np.concatenate(node_parts), np.concatenate(weight_parts))


def polar_integral(
    region: Region,
    pole: Point,
    kernel: Kernel,
    guard: float = 0.0,
    rtol: float = 1e-6,
    max_level: int = 10,
    singular_exponent: float | None = None,
) -> Union[float, np.ndarray]:
    """
    Integrate a radial kernel over a region, doubling the panel count until
    successive estimates agree to ``rtol``.

    The kernel may return an array of shape (..., n) for n nodes, in which
    case the result has shape (...) and every component must
    settle to ``rtol`` relative to its own size.
    """
    previous: np.ndarray | None = None
    for level in range(max_level + 1):
        rule = radial_rule(region, pole, guard, panels=2 ** level, singular_exponent=singular_exponent)
        estimate = rule.apply(kernel)
        if previous is not None:
            magnitude = np.abs(estimate)
            floor = 1e-12 * float(np.max(magnitude))
            if np.all(np.abs(estimate - previous) <= rtol * np.maximum(magnitude, floor)):
                logger.debug(f"polar_integral converged at level {level} ({rule.nodes.size} nodes)")
                return float(estimate) if np.ndim(estimate) == 0 else estimate
        previous = estimate
    raise NonConvergentError(
        f"Polar quadrature did not reach rtol={rtol} about pole ({pole.x}, {pole.y})",
        error_code=ErrorCodes.QUADRATURE_NOT_CONVERGED,
        iterations=max_level,
        last_estimate=float(np.max(np.abs(previous))) if previous is not None else None,
    )


def radial_integral(
    region: Region,
    pole: Point,
    exponent: float,
    guard: float = 0.0,
    rtol: float = 1e-6,
) -> float:
    """
    Integral over the region of max(|x - pole|, guard)^(-exponent).

    Raises:
        NonConvergentError: If the pole lies in the closed region, guard is
            zero and exponent >= 2 (the integral diverges).
    """
    if exponent <= 0:
        raise DomainError(f"exponent must be positive, got {exponent}", function="radial_integral")
    if guard < 0:
        raise DomainError(f"guard must be non-negative, got {guard}", function="radial_integral")
    if guard == 0 and exponent >= 2 and region.contains_point(pole):
        raise NonConvergentError(
            f"Kernel r^-{exponent} diverges at pole ({pole.x}, {pole.y}) inside the region",
            error_code=ErrorCodes.DIVERGENT_INTEGRAL,
        )
    return float(
        polar_integral(
            region,
            pole,
            lambda r: r ** (-exponent),
            guard=guard,
            rtol=rtol,
            singular_exponent=exponent,
        )
    )


def sector_rule(sector: FlabellateAnnulus, order: int = GL_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """
    Fixed Gauss-Legendre product rule over an annular sector.

    Returns points of shape (order^2, 2) and area weights; accurate for
    integrands that are smooth on the sector, i.e. poles well outside it.
    """
    x, w = _gauss_legendre(order)
    half_r = 0.5 * (sector.outer - sector.inner)
    half_a = 0.5 * sector.span
    r = sector.inner + half_r * (x + 1.0)
    a = sector.angle_lo + half_a * (x + 1.0)
    rr, aa = np.meshgrid(r, a, indexing="ij")
    points = np.stack(
        [sector.center.x + rr * np.cos(aa), sector.center.y + rr * np.sin(aa)], axis=-1
    ).reshape(-1, 2)
    weights = (np.outer(half_r * w * r, half_a * w)).ravel()
    return points, weights


# ======================================================================
# Jammer region decomposition
# ======================================================================


@dataclass(frozen=True)
class DbarDecomposition:
    """Three annular sectors approximating the annulus minus the protected disk."""

    pieces: tuple[FlabellateAnnulus, FlabellateAnnulus, FlabellateAnnulus]
    sector_half_angle: float

    def area(self) -> float:
        return sum(piece.area() for piece in self.pieces)

    def contains(self, points: PointsLike) -> np.ndarray:
        result = np.zeros(as_points(points).shape[0], dtype=bool)
        for piece in self.pieces:
            result |= piece.contains(points)
        return result

    @property
    def enclosing(self) -> Annulus:
        """The full annulus the three sectors are cut from."""
        near, far, _ = self.pieces
        return Annulus(near.center, near.inner, far.outer)

    @property
    def cutout(self) -> FlabellateAnnulus:
        """The sector around the protected disk; enclosing minus cutout equals the pieces."""
        near, far, _ = self.pieces
        return FlabellateAnnulus(near.center, near.outer, far.inner, near.angle_lo, near.angle_hi)

    def polar_integral(
        self,
        pole: Point,
        kernel: Kernel,
        guard: float = 0.0,
        rtol: float = 1e-6,
        max_level: int = 10,
    ) -> Union[float, np.ndarray]:
        return sum(
            polar_integral(piece, pole, kernel, guard=guard, rtol=rtol, max_level=max_level)
            for piece in self.pieces
        )

    def radial_integral(self, pole: Point, exponent: float, guard: float = 0.0, rtol: float = 1e-6) -> float:
        return sum(radial_integral(piece, pole, exponent, guard=guard, rtol=rtol) for piece in self.pieces)


def dbar_decompose(l1: float, l2: float, d: float, lg: float) -> DbarDecomposition:
    """
    Split the annulus [l1, l2] minus Disk((d, 0), lg) into three sectors.

    The sector half-angle arcsin(lg / d) is the angle of the tangent lines
    from the origin to the protected disk.

    Raises:
        GeometryError: If the protected disk touches the annulus boundary.
    """
    if lg <= 0:
        raise GeometryError(f"Protected zone radius must be positive, got {lg}",
                            error_code=ErrorCodes.PROTECTED_ZONE_OVERLAP)
    if l1 >= d - lg or d + lg >= l2:
        raise GeometryError(
            f"Protected zone (d={d}, lg={lg}) must lie strictly inside annulus [{l1}, {l2}]",
            error_code=ErrorCodes.PROTECTED_ZONE_OVERLAP,
            details={"l1": l1, "l2": l2, "d": d, "lg": lg},
        )
    theta = math.asin(lg / d)
    pieces = (
        FlabellateAnnulus(ORIGIN, l1, d - lg, -theta, theta),
        FlabellateAnnulus(ORIGIN, d + lg, l2, -theta, theta),
        FlabellateAnnulus(ORIGIN, l1, l2, theta, TWO_PI - theta),
    )
    return DbarDecomposition(pieces=pieces, sector_half_angle=theta)


def punctured_annulus_integral(
    l1: float,
    l2: float,
    hole_center: Point,
    hole_radius: float,
    pole: Point,
    exponent: float,
    guard: float = 0.0,
    rtol: float = 1e-6,
) -> float:
    """Radial integral over the exact annulus-minus-disk region."""
    region = PuncturedAnnulus(ORIGIN, l1, l2, Disk(hole_center, hole_radius))
    return radial_integral(region, pole, exponent, guard=guard, rtol=rtol)


__all__ = [
    "Point",
    "ORIGIN",
    "Region",
    "Disk",
    "Annulus",
    "FlabellateAnnulus",
    "PuncturedAnnulus",
    "DbarDecomposition",
    "RadialRule",
    "as_points",
    "distances",
    "area",
    "sample_ppp",
    "sample_ppp_excluding",
    "radial_rule",
    "polar_integral",
    "radial_integral",
    "sector_rule",
    "dbar_decompose",
    "punctured_annulus_integral",
]
