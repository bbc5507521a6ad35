"""
SocSec Experiments

Experiment configurations, the nine built-in presets, and the runner that
evaluates closed forms and Monte Carlo estimates over a sweep grid.

Config files are YAML or JSON (both parsed with yaml.safe_load):

    preset: fig4            # optional base
    metric: cop             # histogram | cop | sop_single | sop_multi
    scenario: {L1: 6, P_R: 10dBm}
    sweep: {variable: beta_db, start: -30, stop: 0, num: 21}
    series: [{label: base, overrides: {c1: 0.9}, nja: false}]
    thresholds: {beta: -19dB, beta_e: 0dB, eve_distance: 45, eve_angle: 0, K: 20}
    mode: both
    trials: 100000
    seed: 0
    compat: {linear_nu_tz: false, relay_sampling: false}

Sweep variables are a scenario field (l1, lg, c1, c_q, lam_e, ...) or one of
beta_db, beta_e_db, eve_distance, eve_angle, K.
"""
from __future__ import annotations

import dataclasses
import logging
import math
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
import yaml

from core.channel import CategorizeMethod
from core.exceptions import (
    ConfigError,
    DegenerateFitError,
    ErrorCodes,
    GeometryError,
    NonConvergentError,
)
from core.gamma_approx import (
    dest_signal_params,
    eve_signal_params,
    interference_params,
)
from core.geometry import Point
from core.montecarlo import (
    Histogram,
    PowerVariable,
    TrialPlan,
    empirical_moments,
    estimate_cop_curve,
    estimate_sop_multi_curve,
    estimate_sop_single_grid,
)
from core.outage import (
    EstimateMethod,
    OutageEstimate,
    bound_estimate,
    cop_closed,
    multi_sop_terms,
    sop_single_closed,
)
from core.parallel import WORKERS_ENV, default_workers
from core.params import SystemParams, db_to_linear, is_scenario_field, linear_to_db, parse_ratio

logger = logging.getLogger(__name__)

THRESHOLD_VARIABLES = ("beta_db", "beta_e_db", "eve_distance", "eve_angle", "K")

# thresholds are swept in dB
SWEEP_ALIASES = {"beta": "beta_db", "beta_e": "beta_e_db", "k": "K"}

EVE_PLACEMENT_NOTE = (
    "eavesdropper placed at polar(|z|, eve_angle); eve_angle 0 puts it on the "
    "source-destination axis on the destination side"
)


class Mode(Enum):
    CLOSED = "closed"
    MC = "mc"
    BOTH = "both"

    @property
    def closed(self) -> bool:
        return self in (Mode.CLOSED, Mode.BOTH)

    @property
    def monte_carlo(self) -> bool:
        return self in (Mode.MC, Mode.BOTH)


class Metric(Enum):
    HISTOGRAM = "histogram"
    COP = "cop"
    SOP_SINGLE = "sop_single"
    SOP_MULTI = "sop_multi"


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "variable", SWEEP_ALIASES.get(self.variable, self.variable))
        if not self.values:
            raise ValueError("sweep grid must be nonempty")
        if self.variable not in THRESHOLD_VARIABLES and not is_scenario_field(self.variable):
            raise ValueError(f"unknown sweep variable: {self.variable}")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SweepSpec":
        variable = data.get("variable")
        if variable is None:
            raise ConfigError("sweep.variable is required", error_code=ErrorCodes.CONFIG_INVALID, field_name="sweep")
        if "values" in data:
            values = [float(v) for v in data["values"]]
        elif "start" in data and "stop" in data:
            start, stop = float(data["start"]), float(data["stop"])
            if "num" in data:
                values = np.linspace(start, stop, int(data["num"])).tolist()
            else:
                step = float(data.get("step", 1.0))
                count = int(math.floor((stop - start) / step + 1e-9)) + 1
                values = [start + i * step for i in range(count)]
        else:
            raise ConfigError(
                "sweep needs values or start/stop",
                error_code=ErrorCodes.CONFIG_INVALID,
                field_name="sweep",
            )
        return cls(variable=str(variable), values=tuple(values))

    def to_dict(self) -> dict[str, Any]:
        return {"variable": self.variable, "values": list(self.values)}


@dataclass(frozen=True)
class SeriesSpec:
    """One curve: scenario overrides plus optional baseline and position."""

    label: str = "base"
    overrides: tuple[tuple[str, float], ...] = ()
    nja: bool = False
    eve_distance: Optional[float] = None

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SeriesSpec":
        overrides = tuple(sorted((str(k), v) for k, v in (data.get("overrides") or {}).items()))
        distance = data.get("eve_distance")
        return cls(
            label=str(data.get("label", "base")),
            overrides=overrides,
            nja=bool(data.get("nja", False)),
            eve_distance=float(distance) if distance is not None else None,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "label": self.label,
            "overrides": dict(self.overrides),
            "nja": self.nja,
            "eve_distance": self.eve_distance,
        }


@dataclass(frozen=True)
class CompatFlags:
    linear_nu_tz: bool = False
    nja: bool = False
    relay_sampling: bool = False
    exact_phase: bool = False
    exact_jammer_region: bool = False
    categorize: str = CategorizeMethod.THINNED.value

    def __post_init__(self) -> None:
        CategorizeMethod(self.categorize)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CompatFlags":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(
                f"Unknown compat flags: {sorted(unknown)}",
                error_code=ErrorCodes.CONFIG_INVALID,
                field_name="compat",
            )
        return cls(**data)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one CSV."""

    name: str
    metric: Metric
    params: SystemParams = field(default_factory=SystemParams)
    sweep: Optional[SweepSpec] = None
    series: tuple[SeriesSpec, ...] = (SeriesSpec(),)
    mode: Mode = Mode.BOTH
    description: str = ""
    trials: int = 100_000
    seed: int = 0
    workers: int = 1
    chunk_size: int = 5_000
    beta_db: float = -19.0
    beta_e_db: float = 0.0
    eve_distance: float = 45.0
    eve_angle: float = 0.0
    k: int = 20
    variable: PowerVariable = PowerVariable.TY
    compat: CompatFlags = field(default_factory=CompatFlags)
    output_path: Optional[str] = None

    def __post_init__(self) -> None:
        if self.metric is not Metric.HISTOGRAM and self.sweep is None:
            raise ValueError(f"metric {self.metric.value} needs a sweep")
        if not self.series:
            raise ValueError("at least one series is required")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.k < 1:
            raise ValueError("K must be at least 1")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be at least 1")
        if self.workers < 0:
            raise ValueError("workers must be non-negative")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.sweep is not None and self.sweep.variable == "K":
            if any(v < 1 or not float(v).is_integer() for v in self.sweep.values):
                raise ValueError("K sweep values must be positive integers")
        for series in self.series:
            self.params.with_overrides(**dict(series.overrides))

    def replace(self, **changes: Any) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    @property
    def output(self) -> Path:
        return Path(self.output_path or f"results/{self.name}.csv")

    def plan(self, **overrides: Any) -> TrialPlan:
        base = dict(
            trials=self.trials,
            base_seed=self.seed,
            workers=self.workers,
            chunk_size=self.chunk_size,
            method=CategorizeMethod(self.compat.categorize),
            exact_phase=self.compat.exact_phase,
        )
        base.update(overrides)
        return TrialPlan(**base)

    @classmethod
    def from_dict(cls, data: dict[str, Any], base: Optional["ExperimentConfig"] = None) -> "ExperimentConfig":
        """Build a config from parsed file content, layered over ``base``."""
        data = dict(data)
        data.pop("preset", None)
        if base is None:
            base = _skeleton(data)
        changes: dict[str, Any] = {}
        try:
            if "name" in data:
                changes["name"] = str(data["name"])
            if "description" in data:
                changes["description"] = str(data["description"])
            if "metric" in data:
                changes["metric"] = Metric(data["metric"])
            if "scenario" in data:
                changes["params"] = base.params.with_overrides(**(data["scenario"] or {}))
            if "sweep" in data:
                changes["sweep"] = SweepSpec.from_dict(data["sweep"]) if data["sweep"] else None
            if "series" in data:
                changes["series"] = tuple(SeriesSpec.from_dict(s) for s in data["series"])
            if "mode" in data:
                changes["mode"] = Mode(data["mode"])
            for key in ("trials", "seed", "workers", "chunk_size"):
                if key in data:
                    changes[key] = int(data[key])
            thresholds = data.get("thresholds") or {}
            if "beta" in thresholds:
                changes["beta_db"] = linear_to_db(parse_ratio(thresholds["beta"]))
            if "beta_e" in thresholds:
                changes["beta_e_db"] = linear_to_db(parse_ratio(thresholds["beta_e"]))
            if "eve_distance" in thresholds:
                changes["eve_distance"] = float(thresholds["eve_distance"])
            if "eve_angle" in thresholds:
                changes["eve_angle"] = float(thresholds["eve_angle"])
            if "K" in thresholds:
                changes["k"] = int(thresholds["K"])
            if "variable" in data:
                changes["variable"] = PowerVariable(data["variable"])
            if "compat" in data:
                merged = {**base.compat.to_dict(), **(data["compat"] or {})}
                changes["compat"] = CompatFlags.from_dict(merged)
            if "output" in data:
                changes["output_path"] = str(data["output"])
            return dataclasses.replace(base, **changes)
        except ConfigError:
            raise
        except (ValueError, TypeError, KeyError) as e:
            raise ConfigError(
                f"Invalid experiment configuration: {e}",
                error_code=ErrorCodes.CONFIG_INVALID,
            ) from e

    @classmethod
    def from_file(cls, file_path: Union[str, Path], defaults: Optional["RunDefaults"] = None) -> "ExperimentConfig":
        """
        Load a YAML or JSON experiment file.

        Layering, lowest first: preset named by ``preset`` (or a bare config
        for ``metric``), ``defaults``, then the file's own values.
        """
        path = Path(file_path)
        if not path.exists():
            raise ConfigError(
                f"Experiment config not found: {file_path}",
                error_code=ErrorCodes.CONFIG_FILE_NOT_FOUND,
                file_path=str(file_path),
            )
        with open(path, "r", encoding="utf-8") as f:
            try:
                data = yaml.safe_load(f) or {}
            except yaml.YAMLError as e:
                raise ConfigError(
                    f"Cannot parse {file_path}: {e}",
                    error_code=ErrorCodes.CONFIG_INVALID,
                    file_path=str(file_path),
                ) from e
        if not isinstance(data, dict):
            raise ConfigError("Experiment config must be a mapping", error_code=ErrorCodes.CONFIG_INVALID,
                              file_path=str(file_path))
        base = get_preset(data["preset"]) if "preset" in data else _skeleton(data)
        if defaults is not None:
            base = defaults.apply(base)
        return cls.from_dict(data, base)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "description": self.description,
            "metric": self.metric.value,
            "scenario": self.params.to_dict(),
            "sweep": self.sweep.to_dict() if self.sweep else None,
            "series": [s.to_dict() for s in self.series],
            "mode": self.mode.value,
            "trials": self.trials,
            "seed": self.seed,
            "workers": self.workers,
            "chunk_size": self.chunk_size,
            "thresholds": {
                "beta_db": self.beta_db,
                "beta_e_db": self.beta_e_db,
                "eve_distance": self.eve_distance,
                "eve_angle": self.eve_angle,
                "K": self.k,
            },
            "variable": self.variable.value,
            "compat": self.compat.to_dict(),
            "output": str(self.output),
        }


def _skeleton(data: dict[str, Any]) -> ExperimentConfig:
    """Bare config for a file that names no preset."""
    if "metric" not in data:
        raise ConfigError("metric is required", error_code=ErrorCodes.CONFIG_INVALID, field_name="metric")
    try:
        metric = Metric(data["metric"])
    except ValueError as e:
        raise ConfigError(str(e), error_code=ErrorCodes.CONFIG_INVALID, field_name="metric") from e
    sweep = None
    if metric is not Metric.HISTOGRAM:
        if not data.get("sweep"):
            raise ConfigError("sweep is required", error_code=ErrorCodes.CONFIG_INVALID, field_name="sweep")
        sweep = SweepSpec.from_dict(data["sweep"])
    return ExperimentConfig(name=str(data.get("name", "custom")), metric=metric, sweep=sweep)


@dataclass(frozen=True)
class RunDefaults:
    """
    Site defaults from config/socsec.yaml.

    Attributes:
        params: Base scenario
        trials: Monte Carlo trials per run
        seed: Base seed
        workers: Process count; SOCSEC_WORKERS takes precedence
        chunk_size: Trials per worker task
        log_level: Root log level name
        log_file: Optional rotating log file
    """

    params: SystemParams = field(default_factory=SystemParams)
    trials: int = 100_000
    seed: int = 0
    workers: int = 1
    chunk_size: int = 5_000
    log_level: str = "INFO"
    log_file: Optional[str] = None

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be at least 1")
        if self.log_level.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"unknown log level: {self.log_level}")

    def apply(self, config: ExperimentConfig) -> ExperimentConfig:
        return config.replace(
            params=self.params,
            trials=self.trials,
            seed=self.seed,
            workers=self.workers,
            chunk_size=self.chunk_size,
        )

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunDefaults":
        mc = data.get("monte_carlo") or {}
        log = data.get("logging") or {}
        workers = default_workers() if os.environ.get(WORKERS_ENV) else int(mc.get("workers", 1))
        try:
            return cls(
                params=SystemParams.from_dict(data.get("scenario") or {}),
                trials=int(mc.get("trials", 100_000)),
                seed=int(mc.get("seed", 0)),
                workers=workers,
                chunk_size=int(mc.get("chunk_size", 5_000)),
                log_level=str(log.get("log_level", "INFO")),
                log_file=log.get("log_file"),
            )
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid defaults: {e}", error_code=ErrorCodes.CONFIG_INVALID) from e

    @classmethod
    def from_yaml(cls, file_path: Union[str, Path]) -> "RunDefaults":
        path = Path(file_path)
        if not path.exists():
            raise ConfigError(
                f"Defaults file not found: {file_path}",
                error_code=ErrorCodes.CONFIG_FILE_NOT_FOUND,
                file_path=str(file_path),
            )
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
        return cls.from_dict(data)


# ======================================================================
# Presets
# ======================================================================


def _db_grid(start: float, stop: float, num: int) -> SweepSpec:
    return SweepSpec("beta_db", tuple(np.linspace(start, stop, num).tolist()))


def _beta_e_grid(start: float, stop: float, num: int) -> SweepSpec:
    return SweepSpec("beta_e_db", tuple(np.linspace(start, stop, num).tolist()))


def _trust_series(c1_values: tuple[float, ...], cq_values: tuple[float, ...],
                  distances: tuple[Optional[float], ...]) -> list[SeriesSpec]:
    series = []
    for c1 in c1_values:
        for cq in cq_values:
            for z in distances:
                label = f"c1={c1:g}, c_q={cq:g}" + (f", |z|={z:g} m" if z is not None else "")
                series.append(SeriesSpec(label=label, overrides=(("c1", c1), ("c_q", cq)), eve_distance=z))
    return series


def _build_presets() -> dict[str, ExperimentConfig]:
    presets: dict[str, ExperimentConfig] = {}

    presets["fig3"] = ExperimentConfig(
        name="fig3",
        metric=Metric.HISTOGRAM,
        description="Histogram of T(y) or I(y) against the fitted Gamma density",
        variable=PowerVariable.TY,
    )
    presets["fig4"] = ExperimentConfig(
        name="fig4",
        metric=Metric.COP,
        description="COP vs beta in [-30, 0] dB, closed form and Monte Carlo",
        sweep=_db_grid(-30.0, 0.0, 21),
    )
    presets["fig5"] = ExperimentConfig(
        name="fig5",
        metric=Metric.SOP_SINGLE,
        description="Single-eavesdropper SOP vs |z| at beta_e = 0 dB",
        sweep=SweepSpec("eve_distance", tuple(float(z) for z in range(20, 101, 5))),
    )

    c1_series = _trust_series((0.8, 0.9), (0.01,), (20.0, 60.0))
    c1_nja = [
        SeriesSpec(label=f"NJA c1={c1:g}, |z|={z:g} m", overrides=(("c1", c1), ("c_q", 0.01)), nja=True,
                   eve_distance=z)
        for c1 in (0.8, 0.9)
        for z in (20.0, 60.0)
    ]
    presets["fig6a"] = ExperimentConfig(
        name="fig6a",
        metric=Metric.SOP_SINGLE,
        description="SOP vs beta_e for c1 in {0.8, 0.9} and |z| in {20, 60} m, with NJA baseline",
        sweep=_beta_e_grid(-20.0, 20.0, 9),
        series=tuple(c1_series + c1_nja),
        mode=Mode.CLOSED,
    )

    cq_series = _trust_series((0.8,), (0.01, 0.05), (20.0, 60.0))
    cq_nja = [
        SeriesSpec(label=f"NJA |z|={z:g} m", overrides=(("c1", 0.8), ("c_q", 0.01)), nja=True, eve_distance=z)
        for z in (20.0, 60.0)
    ]
    presets["fig6b"] = ExperimentConfig(
        name="fig6b",
        metric=Metric.SOP_SINGLE,
        description="SOP vs beta_e for c_q in {0.01, 0.05} and |z| in {20, 60} m, with NJA baseline",
        sweep=_beta_e_grid(-20.0, 20.0, 9),
        series=tuple(cq_series + cq_nja),
        mode=Mode.CLOSED,
    )
    presets["fig7"] = ExperimentConfig(
        name="fig7",
        metric=Metric.SOP_MULTI,
        description="Multi-eavesdropper SOP bound vs relay-count truncation K, with a Monte Carlo reference",
        sweep=SweepSpec("K", tuple(float(k) for k in range(1, 21))),
    )
    presets["fig8"] = ExperimentConfig(
        name="fig8",
        metric=Metric.SOP_MULTI,
        description="Multi-eavesdropper SOP bound and Monte Carlo vs beta_e in [-10, 10] dB",
        sweep=_beta_e_grid(-10.0, 10.0, 9),
        k=11,
    )
    presets["fig9"] = ExperimentConfig(
        name="fig9",
        metric=Metric.COP,
        description="COP vs beta for c1 in {0.8, 0.9} and c_q in {0.01, 0.05}",
        sweep=_db_grid(-30.0, 0.0, 21),
        series=tuple(_trust_series((0.8, 0.9), (0.01, 0.05), (None,))),
        mode=Mode.CLOSED,
    )
    presets["fig10"] = ExperimentConfig(
        name="fig10",
        metric=Metric.SOP_MULTI,
        description="Multi-eavesdropper SOP vs beta_e for lam_e in {0.0005, 0.001} and c_q in {0.01, 0.05}",
        sweep=_beta_e_grid(-10.0, 10.0, 9),
        series=tuple(
            SeriesSpec(label=f"lam_e={lam_e:g}, c_q={cq:g}", overrides=(("c_q", cq), ("lam_e", lam_e)))
            for lam_e in (0.0005, 0.001)
            for cq in (0.01, 0.05)
        ),
        k=11,
    )
    return presets


_PRESETS = _build_presets()


def presets() -> list[ExperimentConfig]:
    """The built-in presets, in listing order."""
    return list(_PRESETS.values())


def preset_names() -> list[str]:
    return list(_PRESETS)


def get_preset(name: str) -> ExperimentConfig:
    try:
        return _PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"Unknown preset: {name} (available: {', '.join(_PRESETS)})",
            error_code=ErrorCodes.PRESET_NOT_FOUND,
            field_name="preset",
        ) from None


# ======================================================================
# Runner
# ======================================================================


@dataclass
class ResultRow:
    series: str
    sweep_variable: str
    sweep_value: float
    closed_form: Optional[float] = None
    monte_carlo: Optional[float] = None
    ci_half_width: Optional[float] = None

    @property
    def abs_gap(self) -> Optional[float]:
        if self.closed_form is None or self.monte_carlo is None:
            return None
        return abs(self.closed_form - self.monte_carlo)


@dataclass
class HistogramRows:
    histogram: Histogram
    gamma_probabilities: Optional[np.ndarray]


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list[ResultRow] = field(default_factory=list)
    histogram: Optional[HistogramRows] = None
    summary: dict[str, Any] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class _GridPoint:
    index: int
    value: float
    params: SystemParams
    beta: float
    beta_e: float
    eve: Point
    k: int


def _grid_points(config: ExperimentConfig, series: SeriesSpec) -> list[_GridPoint]:
    params = config.params.with_overrides(**dict(series.overrides))
    distance = series.eve_distance if series.eve_distance is not None else config.eve_distance
    points = []
    for index, value in enumerate(config.sweep.values):
        settings = {
            "beta_db": config.beta_db,
            "beta_e_db": config.beta_e_db,
            "eve_distance": distance,
            "eve_angle": config.eve_angle,
            "K": config.k,
        }
        point_params = params
        if config.sweep.variable in THRESHOLD_VARIABLES:
            settings[config.sweep.variable] = value
        else:
            point_params = params.with_overrides(**{config.sweep.variable: value})
        points.append(
            _GridPoint(
                index=index,
                value=value,
                params=point_params,
                beta=db_to_linear(settings["beta_db"]),
                beta_e=db_to_linear(settings["beta_e_db"]),
                eve=Point.polar(settings["eve_distance"], settings["eve_angle"]),
                k=int(settings["K"]),
            )
        )
    return points


def _group_by_params(points: list[_GridPoint]) -> list[list[_GridPoint]]:
    groups: dict[SystemParams, list[_GridPoint]] = {}
    for point in points:
        groups.setdefault(point.params, []).append(point)
    return list(groups.values())


def _closed_value(config: ExperimentConfig, series: SeriesSpec, point: _GridPoint) -> OutageEstimate:
    nja = series.nja or config.compat.nja
    if config.metric is Metric.COP:
        return cop_closed(point.params, point.beta, nja=nja,
                          exact_jammer_region=config.compat.exact_jammer_region)
    return sop_single_closed(
        point.params,
        point.eve,
        point.beta_e,
        nja=nja,
        linear_nu_tz=config.compat.linear_nu_tz,
        exact_jammer_region=config.compat.exact_jammer_region,
    )


def _closed_multi(config: ExperimentConfig, series: SeriesSpec, group: list[_GridPoint]) -> list[OutageEstimate]:
    params = group[0].params
    if series.nja or config.compat.nja:
        params = params.with_overrides(c2=params.c1)
    meta = {"mean_relay_count": params.mean_relay_count, "lam_e": params.lam_e,
            "relay_sampling": config.compat.relay_sampling}
    if params.lam_e == 0:
        return [OutageEstimate(0.0, EstimateMethod.UPPER_BOUND, meta=meta) for _ in group]
    betas = sorted({p.beta_e for p in group})
    k_max = max(p.k for p in group)
    terms = multi_sop_terms(
        params,
        betas,
        k_max,
        relay_sampling=config.compat.relay_sampling,
        workers=config.workers,
        seed=config.seed,
    )
    return [bound_estimate(params, p.beta_e, terms[betas.index(p.beta_e)], p.k, meta) for p in group]


def _mc_values(config: ExperimentConfig, series: SeriesSpec, group: list[_GridPoint]) -> list[OutageEstimate]:
    params = group[0].params
    plan = config.plan(nja=series.nja or config.compat.nja)
    if config.metric is Metric.COP:
        betas = sorted({p.beta for p in group})
        estimates = estimate_cop_curve(params, betas, plan)
        return [estimates[betas.index(p.beta)] for p in group]
    if config.metric is Metric.SOP_SINGLE:
        eves = sorted({p.eve for p in group}, key=lambda e: (e.x, e.y))
        betas = sorted({p.beta_e for p in group})
        grid = estimate_sop_single_grid(params, eves, betas, plan)
        return [grid[eves.index(p.eve)][betas.index(p.beta_e)] for p in group]
    betas = sorted({p.beta_e for p in group})
    estimates = estimate_sop_multi_curve(params, betas, plan)
    return [estimates[betas.index(p.beta_e)] for p in group]


def _point_label(series: SeriesSpec, variable: str, value: float) -> str:
    return f"series '{series.label}', {variable}={value:g}"


def _run_series(config: ExperimentConfig, series: SeriesSpec, result: ExperimentResult) -> None:
    points = _grid_points(config, series)
    rows = [ResultRow(series.label, config.sweep.variable, p.value) for p in points]
    for group in _group_by_params(points):
        if config.mode.closed:
            try:
                if config.metric is Metric.SOP_MULTI:
                    closed = _closed_multi(config, series, group)
                else:
                    closed = [_closed_value(config, series, p) for p in group]
            except NonConvergentError as e:
                where = _point_label(series, config.sweep.variable, group[0].value)
                raise NonConvergentError(
                    f"{e.message} at {where}",
                    error_code=e.error_code,
                    details={**e.details, "grid_point": where},
                ) from e
            for point, estimate in zip(group, closed):
                rows[point.index].closed_form = estimate.value
                result.warnings.extend(estimate.warnings)
        if config.mode.monte_carlo:
            for point, estimate in zip(group, _mc_values(config, series, group)):
                rows[point.index].monte_carlo = estimate.value
                rows[point.index].ci_half_width = estimate.ci_half_width
    result.rows.extend(rows)
    logger.info(f"Series '{series.label}': {len(rows)} grid points done")


def _fitted_summary(config: ExperimentConfig) -> dict[str, Any]:
    """Gamma fits at the base scenario, both eavesdropper-shape variants included."""
    params = config.params.with_overrides(**dict(config.series[0].overrides))
    distance = config.series[0].eve_distance or config.eve_distance
    eve = Point.polar(distance, config.eve_angle)
    fitted: dict[str, Any] = {}
    fits = {
        "Ty": lambda: dest_signal_params(params),
        "Iy": lambda: interference_params(params, params.dest, exact=config.compat.exact_jammer_region),
        "Tz": lambda: eve_signal_params(params, eve),
        "Tz_linear_nu": lambda: eve_signal_params(params, eve, linear_nu_tz=True),
        "Iz": lambda: interference_params(params, eve, exact=config.compat.exact_jammer_region),
    }
    for key, fit in fits.items():
        try:
            fitted[key] = fit().to_dict()
        except (DegenerateFitError, GeometryError, ValueError) as e:
            fitted[key] = None
            logger.warning(f"No Gamma fit for {key}: {e}")
    fitted["eve"] = eve.to_dict()
    return fitted


def _run_histogram(config: ExperimentConfig, result: ExperimentResult) -> None:
    params = config.params.with_overrides(**dict(config.series[0].overrides))
    eve = Point.polar(config.series[0].eve_distance or config.eve_distance, config.eve_angle)
    plan = config.plan(eve=eve, variable=config.variable, nja=config.compat.nja)
    sample = empirical_moments(params, config.variable, plan)

    model = None
    try:
        if config.variable is PowerVariable.TY:
            model = dest_signal_params(params)
        elif config.variable is PowerVariable.IY:
            model = interference_params(params, params.dest, exact=config.compat.exact_jammer_region)
        elif config.variable is PowerVariable.TZ:
            model = eve_signal_params(params, eve, linear_nu_tz=config.compat.linear_nu_tz)
        else:
            model = interference_params(params, eve, exact=config.compat.exact_jammer_region)
    except DegenerateFitError as e:
        logger.warning(f"No Gamma model for {config.variable.value}: {e}")

    result.histogram = HistogramRows(
        histogram=sample.histogram,
        gamma_probabilities=sample.histogram.model_probabilities(model) if model else None,
    )
    result.summary["empirical"] = sample.to_dict()
    result.summary["histogram_edges"] = {
        "bins": int(sample.histogram.counts.size),
        "upper": float(sample.histogram.edges[-1]),
    }
    result.summary["model"] = model.to_dict() if model else None
    result.summary["l1_distance"] = sample.histogram.l1_distance(model) if model else None


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """
    Evaluate a configuration.

    Raises:
        NonConvergentError: With the offending grid point in the message.
        ConfigError: For invalid combinations found while running.
    """
    logger.info(f"Running experiment {config.name} ({config.metric.value}, mode={config.mode.value})")
    result = ExperimentResult(config=config)
    result.summary.update(
        {
            "experiment": config.to_dict(),
            "eve_placement": EVE_PLACEMENT_NOTE,
            "fitted": _fitted_summary(config),
        }
    )
    if config.metric is Metric.HISTOGRAM:
        _run_histogram(config, result)
    else:
        for series in config.series:
            _run_series(config, series, result)
        result.summary["rows"] = len(result.rows)
        gaps = [row.abs_gap for row in result.rows if row.abs_gap is not None]
        if gaps:
            result.summary["max_abs_gap"] = max(gaps)
    if result.warnings:
        result.summary["warnings"] = sorted(set(result.warnings))
    logger.info(f"Experiment {config.name} finished")
    return result


__all__ = [
    "Mode",
    "Metric",
    "SweepSpec",
    "SeriesSpec",
    "CompatFlags",
    "ExperimentConfig",
    "RunDefaults",
    "ResultRow",
    "ExperimentResult",
    "THRESHOLD_VARIABLES",
    "presets",
    "preset_names",
    "get_preset",
    "run_experiment",
]
