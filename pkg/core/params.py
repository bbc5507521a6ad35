"""
SocSec Scenario Parameters

SystemParams holds every constant of the two-hop relay scenario: node density,
the two social-trust thresholds, radii of the relay disk, the jammer annulus
and the protected zone, the path-loss exponent and the transmit powers.

Powers are stored in linear milliwatts. Configuration files may give them as
``"10dBm"`` strings; see :func:`parse_power`.
"""
from __future__ import annotations

import dataclasses
import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Union

import yaml

from core.exceptions import ConfigError, ErrorCodes
from core.geometry import Annulus, Disk, Point, ORIGIN

logger = logging.getLogger(__name__)

_POWER_PATTERN = re.compile(r"^\s*([-+]?\d*\.?\d+(?:[eE][-+]?\d+)?)\s*(dbm|mw)?\s*$", re.I)
_RATIO_PATTERN = re.compile(r"^\s*([-+]?\d*\.?\d+(?:[eE][-+]?\d+)?)\s*(db)?\s*$", re.I)

# Accepted spellings in configuration files
FIELD_ALIASES: dict[str, str] = {
    "lambda": "lam",
    "lambda_e": "lam_e",
    "L1": "l1",
    "L2": "l2",
    "LG": "lg",
    "dest_distance": "d",
    "P_R": "p_r",
    "P_j": "p_j",
    "C1": "c1",
    "C2": "c2",
}


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw: float) -> float:
    return 10.0 * math.log10(mw)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(value: float) -> float:
    if value <= 0:
        return -math.inf
    return 10.0 * math.log10(value)


def parse_power(value: Union[str, float, int]) -> float:
    """
    Parse a power value into linear milliwatts.

    Numbers are taken as milliwatts. Strings may carry a ``dBm`` or ``mW``
    suffix (case-insensitive).

    Raises:
        ConfigError: If the value cannot be parsed.
    """
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    match = _POWER_PATTERN.match(str(value))
    if match is None:
        raise ConfigError(
            f"Cannot parse power value: {value!r}",
            error_code=ErrorCodes.POWER_UNPARSEABLE,
        )
    number = float(match.group(1))
    unit = (match.group(2) or "mw").lower()
    return dbm_to_mw(number) if unit == "dbm" else number


def parse_ratio(value: Union[str, float, int]) -> float:
    """Parse a threshold given as a linear number or a ``"-19dB"`` string."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    match = _RATIO_PATTERN.match(str(value))
    if match is None:
        raise ConfigError(
            f"Cannot parse threshold value: {value!r}",
            error_code=ErrorCodes.CONFIG_INVALID,
        )
    number = float(match.group(1))
    return db_to_linear(number) if match.group(2) else number


@dataclass(frozen=True)
class SystemParams:
    """
    Scenario constants.

    Attributes:
        lam: Density of the legitimate node process (nodes/m^2)
        c1: Trust threshold above which a node inside the relay disk relays
        c2: Trust threshold above which a node in the annulus jams
        l1: Relay disk radius (m)
        l2: Outer radius of the jammer annulus (m)
        lg: Protected zone radius around the destination (m)
        d: Source to destination distance (m)
        alpha: Path-loss exponent
        p_r: Relay transmit power (mW)
        p_j: Jammer transmit power (mW)
        lam_e: Eavesdropper density (nodes/m^2)
        guard: Minimum distance used in path-loss evaluation (m)
    """

    lam: float = 0.2
    c1: float = 0.8
    c2: float = 0.79
    l1: float = 6.0
    l2: float = 100.0
    lg: float = 5.0
    d: float = 60.0
    alpha: float = 4.0
    p_r: float = 10.0
    p_j: float = 10.0 ** 0.1
    lam_e: float = 0.0005
    guard: float = 0.5

    def __post_init__(self) -> None:
        for name in ("lam", "c1", "c2", "l1", "l2", "lg", "d", "alpha",
                     "p_r", "p_j", "lam_e", "guard"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if not 0 <= self.c2 <= self.c1 <= 1:
            raise ValueError("trust thresholds must satisfy 0 <= c2 <= c1 <= 1")
        if self.l1 <= 0 or self.lg <= 0:
            raise ValueError("l1 and lg must be positive")
        if self.l1 >= self.d - self.lg:
            raise ValueError("protected zone must lie outside the relay disk (l1 < d - lg)")
        if self.d + self.lg >= self.l2:
            raise ValueError("protected zone must lie inside the annulus (d + lg < l2)")
        if self.alpha <= 2:
            raise ValueError("alpha must exceed 2")
        if self.p_r <= 0 or self.p_j <= 0:
            raise ValueError("powers must be positive")
        if self.lam_e < 0:
            raise ValueError("lam_e must be non-negative")
        if self.guard < 0:
            raise ValueError("guard must be non-negative")

    # ------------------------------------------------------------------
    # Derived quantities
    # ------------------------------------------------------------------

    @property
    def lam_r(self) -> float:
        """Relay density (1 - c1) * lam."""
        return (1.0 - self.c1) * self.lam

    @property
    def lam_j(self) -> float:
        """Jammer density (c1 - c2) * lam."""
        return (self.c1 - self.c2) * self.lam

    @property
    def c_q(self) -> float:
        return self.c1 - self.c2

    @property
    def mean_relay_count(self) -> float:
        return self.lam_r * math.pi * self.l1 ** 2

    @property
    def dest(self) -> Point:
        return Point(self.d, 0.0)

    @property
    def relay_region(self) -> Disk:
        return Disk(ORIGIN, self.l1)

    @property
    def annulus(self) -> Annulus:
        return Annulus(ORIGIN, self.l1, self.l2)

    @property
    def protected_zone(self) -> Disk:
        return Disk(self.dest, self.lg)

    # ------------------------------------------------------------------
    # Construction helpers
    # ------------------------------------------------------------------

    def with_overrides(self, **overrides: Any) -> "SystemParams":
        """
        Return a copy with some fields replaced.

        ``c_q`` is accepted as a pseudo-field and sets ``c2 = c1 - c_q`` after
        any ``c1`` override is applied.
        """
        normalized = _normalize_keys(overrides)
        c_q = normalized.pop("c_q", None)
        updated = dataclasses.replace(self, **normalized) if normalized else self
        if c_q is not None:
            updated = dataclasses.replace(updated, c2=updated.c1 - float(c_q))
        return updated

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SystemParams":
        return cls().with_overrides(**data)

    @classmethod
    def from_yaml(cls, file_path: Union[str, Path]) -> "SystemParams":
        path = Path(file_path)
        if not path.exists():
            raise ConfigError(
                f"Scenario file not found: {file_path}",
                error_code=ErrorCodes.CONFIG_FILE_NOT_FOUND,
                file_path=str(file_path),
            )
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
        return cls.from_dict(data.get("scenario", data))

    def to_dict(self) -> dict[str, Any]:
        data = dataclasses.asdict(self)
        data.update(
            {
                "lam_r": self.lam_r,
                "lam_j": self.lam_j,
                "c_q": self.c_q,
                "p_r_dbm": mw_to_dbm(self.p_r),
                "p_j_dbm": mw_to_dbm(self.p_j),
            }
        )
        return data


_FIELD_NAMES = {f.name for f in dataclasses.fields(SystemParams)}


def _normalize_keys(data: dict[str, Any]) -> dict[str, Any]:
    normalized: dict[str, Any] = {}
    for key, value in data.items():
        name = FIELD_ALIASES.get(key, key)
        if name not in _FIELD_NAMES and name != "c_q":
            raise ConfigError(
                f"Unknown scenario field: {key}",
                error_code=ErrorCodes.CONFIG_INVALID,
                field_name=key,
            )
        if name in ("p_r", "p_j"):
            normalized[name] = parse_power(value)
        else:
            try:
                normalized[name] = float(value)
            except (TypeError, ValueError) as e:
                raise ConfigError(
                    f"Scenario field {key} must be numeric, got {value!r}",
                    error_code=ErrorCodes.CONFIG_INVALID,
                    field_name=key,
                ) from e
    return normalized


def is_scenario_field(name: str) -> bool:
    return FIELD_ALIASES.get(name, name) in _FIELD_NAMES or name == "c_q"


__all__ = [
    "SystemParams",
    "FIELD_ALIASES",
    "dbm_to_mw",
    "mw_to_dbm",
    "db_to_linear",
    "linear_to_db",
    "parse_power",
    "parse_ratio",
    "is_scenario_field",
]
