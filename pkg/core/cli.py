"""
SocSec Command Line

    socsec presets
    socsec validate --preset fig4
    socsec run --preset fig4 --trials 20000 --seed 1 --workers 4
    socsec run --config config/experiments/l1_tradeoff.yaml --mode closed

Precedence, lowest first: built-in preset, config/socsec.yaml defaults,
experiment file, command-line flags. SOCSEC_WORKERS overrides the workers
default.

Exit codes: 0 ok, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
from pathlib import Path
from typing import Any, Optional, Sequence

from core.exceptions import ConfigError, GeometryError, NonConvergentError, SocSecError
from core.experiments import (
    ExperimentConfig,
    Mode,
    RunDefaults,
    get_preset,
    presets,
    run_experiment,
)
from core.montecarlo import PowerVariable
from core.params import linear_to_db, parse_ratio
from core.report import write_report
from utils.log import setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

DEFAULTS_ENV = "SOCSEC_DEFAULTS"
DEFAULTS_FILE = Path(__file__).resolve().parent.parent / "config" / "socsec.yaml"


def run(config: ExperimentConfig) -> dict[str, Any]:
    """Run one experiment and write its CSV and summary; returns the summary."""
    result = run_experiment(config)
    return write_report(result, config.output)


def _add_source_arguments(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", type=str, help="Built-in preset name (see `socsec presets`)")
    source.add_argument("--config", type=str, help="Experiment file (YAML or JSON)")
    parser.add_argument(
        "--defaults",
        type=str,
        default=os.environ.get(DEFAULTS_ENV, str(DEFAULTS_FILE)),
        help="Site defaults file (default: config/socsec.yaml)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="socsec",
        description="Secrecy outage analysis for trust-based cooperative beamforming and jamming",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  socsec presets
  socsec run --preset fig4
  socsec run --preset fig7 --beta-e 0dB
  socsec run --preset fig3 --variable Ty --trials 20000
        """,
    )
    parser.add_argument("--debug", action="store_true", help="Enable debug logging")
    parser.add_argument("--log-file", type=str, default=None, help="Also log to a rotating file")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("presets", help="List the built-in presets")

    validate = sub.add_parser("validate", help="Validate a configuration without running it")
    _add_source_arguments(validate)

    run_parser = sub.add_parser("run", help="Run an experiment and write CSV plus summary")
    _add_source_arguments(run_parser)
    run_parser.add_argument("--trials", type=int, help="Monte Carlo trials")
    run_parser.add_argument("--seed", type=int, help="Base seed")
    run_parser.add_argument("--workers", type=int, help="Worker processes (0 = all CPUs)")
    run_parser.add_argument("--chunk-size", type=int, help="Trials per worker task")
    run_parser.add_argument("--output", type=str, help="CSV path (summary goes to <output>.summary.json)")
    run_parser.add_argument("--mode", choices=[m.value for m in Mode], help="closed, mc or both")
    run_parser.add_argument("--nja", action="store_true", help="No-jammer baseline for every series")
    run_parser.add_argument("--linear-nu-tz", action="store_true", help="Use lam_R*Q(1) as the T(z) shape numerator")
    run_parser.add_argument("--variable", choices=[v.value for v in PowerVariable], help="Histogram variable")
    run_parser.add_argument("--beta", type=str, help="COP threshold, e.g. -19dB or 0.0126")
    run_parser.add_argument("--beta-e", type=str, help="Eavesdropper threshold, e.g. 0dB")
    run_parser.add_argument("--eve-distance", type=float, help="Eavesdropper distance |z| (m)")
    run_parser.add_argument("--eve-angle", type=float, help="Eavesdropper angle (rad)")
    run_parser.add_argument("--k", type=int, help="Relay-count truncation K")
    run_parser.add_argument("--relay-sampling", action="store_true", help="Average the bound over drawn relay layouts")
    run_parser.add_argument("--exact-phase", action="store_true", help="Simulate per-relay phases at eavesdroppers")
    run_parser.add_argument(
        "--exact-jammer-region", action="store_true", help="Integrate over the exact punctured annulus"
    )
    return parser


def load_defaults(args: argparse.Namespace) -> Optional[RunDefaults]:
    path = getattr(args, "defaults", None)
    if path and Path(path).exists():
        return RunDefaults.from_yaml(path)
    return None


def load_config(args: argparse.Namespace, defaults: Optional[RunDefaults] = None) -> ExperimentConfig:
    """Resolve preset or file, site defaults and flags into one config."""
    if args.preset:
        config = get_preset(args.preset)
        if defaults is not None:
            config = defaults.apply(config)
    else:
        config = ExperimentConfig.from_file(args.config, defaults)
    if getattr(args, "command", None) == "run":
        config = apply_flags(config, args)
    return config


def apply_flags(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    changes: dict[str, Any] = {}
    for flag, name in (("trials", "trials"), ("seed", "seed"), ("workers", "workers"),
                       ("chunk_size", "chunk_size"), ("eve_distance", "eve_distance"),
                       ("eve_angle", "eve_angle"), ("k", "k"), ("output", "output_path")):
        value = getattr(args, flag, None)
        if value is not None:
            changes[name] = value
    if args.mode:
        changes["mode"] = Mode(args.mode)
    if args.variable:
        changes["variable"] = PowerVariable(args.variable)
    if args.beta is not None:
        changes["beta_db"] = linear_to_db(parse_ratio(args.beta))
    if args.beta_e is not None:
        changes["beta_e_db"] = linear_to_db(parse_ratio(args.beta_e))

    compat: dict[str, Any] = {}
    for flag in ("nja", "linear_nu_tz", "relay_sampling", "exact_phase", "exact_jammer_region"):
        if getattr(args, flag, False):
            compat[flag] = True
    if compat:
        changes["compat"] = dataclasses.replace(config.compat, **compat)
    return config.replace(**changes) if changes else config


def _print_presets() -> None:
    for preset in presets():
        print(f"{preset.name:<7} {preset.description}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Main entry point.

    Returns:
        Exit code (0 for success, 2 for configuration errors, 3 for
        numerical failures).
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        defaults = load_defaults(args)
    except (ConfigError, ValueError) as e:
        setup_logging(debug=args.debug, log_file=args.log_file)
        logger.error(f"Invalid defaults file: {e}")
        return EXIT_CONFIG
    setup_logging(
        debug=args.debug,
        log_file=args.log_file or (defaults.log_file if defaults else None),
        level=defaults.log_level if defaults else "INFO",
    )

    if args.command == "presets":
        _print_presets()
        return EXIT_OK

    try:
        config = load_config(args, defaults)
        if args.command == "validate":
            print(json.dumps(config.to_dict(), indent=2, default=str))
            logger.info(f"Configuration {config.name} is valid")
            return EXIT_OK
        summary = run(config)
    except NonConvergentError as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL
    except (ConfigError, GeometryError, ValueError) as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG
    except SocSecError as e:
        logger.error(f"Run failed: {e}")
        return EXIT_NUMERICAL
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return 130

    print(json.dumps(summary, indent=2, default=str))
    return EXIT_OK


__all__ = ["main", "run", "build_parser", "load_config", "load_defaults", "apply_flags", "EXIT_OK", "EXIT_CONFIG", "EXIT_NUMERICAL"]
