"""
SocSec Special Functions

Gamma law helpers, the regularized incomplete Gamma function and the Gauss
hypergeometric series used by the outage closed forms.

The incomplete Gamma function follows the classic split: power series for
the lower function when x < nu + 1, modified Lentz continued fraction for the
upper function otherwise.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import special

from core.exceptions import DomainError, ErrorCodes, NonConvergentError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

_EPS = 1e-16
_TINY = 1e-300
_MAX_GAMMA_ITER = 10_000
HYP2F1_MAX_TERMS = 1_000_000
HYP2F1_RTOL = 1e-15
EULER_THRESHOLD = 0.75


@dataclass(frozen=True)
class GammaParams:
    """Shape/scale pair of a Gamma law."""

    shape: float
    scale: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.shape) and self.shape > 0):
            raise ValueError(f"Gamma shape must be positive and finite, got {self.shape}")
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"Gamma scale must be positive and finite, got {self.scale}")

    @property
    def mean(self) -> float:
        return self.shape * self.scale

    @property
    def variance(self) -> float:
        return self.shape * self.scale ** 2

    def to_dict(self) -> dict[str, float]:
        return {"shape": self.shape, "scale": self.scale}


def log_gamma(x: ArrayLike) -> ArrayLike:
    return special.gammaln(x)


def gamma_pdf(x: ArrayLike, p: GammaParams) -> ArrayLike:
    """Gamma density; vectorized over x."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise DomainError("gamma_pdf requires x >= 0", error_code=ErrorCodes.SPECFUN_DOMAIN, function="gamma_pdf")
    nu, theta = p.shape, p.scale
    with np.errstate(divide="ignore"):
        log_density = (
            (nu - 1.0) * np.log(arr) - arr / theta - nu * math.log(theta) - special.gammaln(nu)
        )
    density = np.exp(log_density)
    at_zero = arr == 0
    if np.any(at_zero):
        if nu < 1:
            zero_value = math.inf
        elif nu == 1:
            zero_value = 1.0 / theta
        else:
            zero_value = 0.0
        density = np.where(at_zero, zero_value, density)
    return float(density) if density.ndim == 0 else density


def _lower_series(nu: float, x: float) -> float:
    """Regularized lower incomplete Gamma by power series."""
    term = 1.0 / nu
    total = term
    denom = nu
    for _ in range(_MAX_GAMMA_ITER):
        denom += 1.0
        term *= x / denom
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise NonConvergentError(
            f"Incomplete gamma series did not converge for nu={nu}, x={x}",
            error_code=ErrorCodes.SERIES_NOT_CONVERGED,
            iterations=_MAX_GAMMA_ITER,
        )
    return total * math.exp(-x + nu * math.log(x) - special.gammaln(nu))


def _upper_continued_fraction(nu: float, x: float) -> float:
    """Regularized upper incomplete Gamma by modified Lentz."""
    b = x + 1.0 - nu
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_GAMMA_ITER + 1):
        an = -i * (i - nu)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise NonConvergentError(
            f"Incomplete gamma continued fraction did not converge for nu={nu}, x={x}",
            error_code=ErrorCodes.SERIES_NOT_CONVERGED,
            iterations=_MAX_GAMMA_ITER,
        )
    return math.exp(-x + nu * math.log(x) - special.gammaln(nu)) * h


def _check_gamma_args(nu: float, x: float, name: str) -> None:
    if not nu > 0:
        raise DomainError(f"{name} requires nu > 0, got {nu}", error_code=ErrorCodes.SPECFUN_DOMAIN, function=name)
    if not x >= 0:
        raise DomainError(f"{name} requires x >= 0, got {x}", error_code=ErrorCodes.SPECFUN_DOMAIN, function=name)


def reg_upper_gamma(nu: float, x: float) -> float:
    """Gamma(nu, x) / Gamma(nu)."""
    _check_gamma_args(nu, x, "reg_upper_gamma")
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < nu + 1.0:
        return min(1.0, max(0.0, 1.0 - _lower_series(nu, x)))
    return min(1.0, max(0.0, _upper_continued_fraction(nu, x)))


def reg_lower_gamma(nu: float, x: float) -> float:
    """gamma(nu, x) / Gamma(nu)."""
    _check_gamma_args(nu, x, "reg_lower_gamma")
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < nu + 1.0:
        return min(1.0, max(0.0, _lower_series(nu, x)))
    return min(1.0, max(0.0, 1.0 - _upper_continued_fraction(nu, x)))


def gamma_cdf(x: ArrayLike, p: GammaParams) -> ArrayLike:
    """Gamma CDF; vectorized over x."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise DomainError("gamma_cdf requires x >= 0", error_code=ErrorCodes.SPECFUN_DOMAIN, function="gamma_cdf")
    values = np.array([reg_lower_gamma(p.shape, float(v) / p.scale) for v in arr.ravel()])
    values = values.reshape(arr.shape)
    return float(values) if values.ndim == 0 else values


def _is_nonpositive_integer(value: float) -> bool:
    return value <= 0 and float(value).is_integer()


def _gauss_series(a: float, b: float, c: float, x: float) -> float:
    term = 1.0
    total = 1.0
    for k in range(HYP2F1_MAX_TERMS):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * x
        total += term
        if term == 0.0 or abs(term) < HYP2F1_RTOL * abs(total):
            return total
    raise NonConvergentError(
        f"hyp2f1({a}, {b}; {c}; {x}) exceeded {HYP2F1_MAX_TERMS} terms",
        error_code=ErrorCodes.SERIES_NOT_CONVERGED,
        iterations=HYP2F1_MAX_TERMS,
        last_estimate=total,
    )


def hyp2f1(a: float, b: float, c: float, x: float) -> float:
    """
    Gauss hypergeometric function 2F1(a, b; c; x) for 0 <= x < 1.

    Summed as a Gauss series; above x = 0.75 the Euler transformation
    2F1(a, b; c; x) = (1 - x)^(c - a - b) 2F1(c - a, c - b; c; x) is applied.
    """
    if not 0 <= x < 1:
        raise DomainError(f"hyp2f1 requires 0 <= x < 1, got {x}",
                          error_code=ErrorCodes.SPECFUN_DOMAIN, function="hyp2f1")
    if _is_nonpositive_integer(c):
        raise DomainError(f"hyp2f1 requires c not a nonpositive integer, got {c}",
                          error_code=ErrorCodes.SPECFUN_DOMAIN, function="hyp2f1")
    if x == 0:
        return 1.0
    if x > EULER_THRESHOLD:
        return (1.0 - x) ** (c - a - b) * _gauss_series(c - a, c - b, c, x)
    return _gauss_series(a, b, c, x)


__all__ = [
    "GammaParams",
    "log_gamma",
    "gamma_pdf",
    "gamma_cdf",
    "reg_upper_gamma",
    "reg_lower_gamma",
    "hyp2f1",
]
