"""
SocSec Result Reports

Writes experiment results to disk: one CSV of curve rows (or histogram
bins) and a summary JSON next to it.

Property 1: Byte-stable CSV
    Rows are written in series/grid order with "%.10g" formatting, so the
    same configuration and seed produce a byte-identical CSV.

Property 2: Summary linkage
    The summary records the SHA-256 of the CSV it describes.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Optional

from core.experiments import ExperimentResult, ResultRow
from utils.digest import compute_file_checksum

logger = logging.getLogger(__name__)

CURVE_COLUMNS = [
    "series",
    "sweep_variable",
    "sweep_value",
    "closed_form",
    "monte_carlo",
    "ci_half_width",
    "abs_gap",
]

HISTOGRAM_COLUMNS = ["bin_lo", "bin_hi", "empirical_probability", "gamma_probability"]


def format_number(value: Optional[float]) -> str:
    """'%.10g', empty for missing values."""
    if value is None:
        return ""
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    return "%.10g" % value


def summary_path(csv_path: Path) -> Path:
    return csv_path.with_name(csv_path.name + ".summary.json")


def _row_cells(row: ResultRow) -> list[str]:
    return [
        row.series,
        row.sweep_variable,
        format_number(row.sweep_value),
        format_number(row.closed_form),
        format_number(row.monte_carlo),
        format_number(row.ci_half_width),
        format_number(row.abs_gap),
    ]


class ReportWriter:
    """Serialize an ExperimentResult as CSV plus summary JSON."""

    def __init__(self, csv_path: Path) -> None:
        self.csv_path = Path(csv_path)

    def write(self, result: ExperimentResult) -> dict[str, Any]:
        """
        Write both files and return the summary.

        Returns:
            The summary dict as written to ``<csv>.summary.json``
        """
        self.csv_path.parent.mkdir(parents=True, exist_ok=True)
        if result.histogram is not None:
            self._write_histogram_csv(result)
        else:
            self._write_curve_csv(result)

        summary = dict(result.summary)
        summary["csv"] = str(self.csv_path)
        summary["csv_sha256"] = compute_file_checksum(str(self.csv_path))
        summary = _json_safe(summary)
        path = summary_path(self.csv_path)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(summary, f, indent=2, ensure_ascii=False)
        logger.info(f"Wrote {self.csv_path} and {path}")
        return summary

    def _write_curve_csv(self, result: ExperimentResult) -> None:
        with open(self.csv_path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(CURVE_COLUMNS)
            for row in result.rows:
                writer.writerow(_row_cells(row))

    def _write_histogram_csv(self, result: ExperimentResult) -> None:
        hist = result.histogram.histogram
        model = result.histogram.gamma_probabilities
        empirical = hist.probabilities
        with open(self.csv_path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(HISTOGRAM_COLUMNS)
            for b in range(hist.counts.size):
                writer.writerow(
                    [
                        format_number(float(hist.edges[b])),
                        format_number(float(hist.edges[b + 1])),
                        format_number(float(empirical[b])),
                        format_number(float(model[b])) if model is not None else "",
                    ]
                )


def _json_safe(value: Any) -> Any:
    """Replace non-finite floats with strings; JSON has no inf or nan."""
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if hasattr(value, "item") and callable(value.item):
        return _json_safe(value.item())
    return value


def write_report(result: ExperimentResult, csv_path: Optional[Path] = None) -> dict[str, Any]:
    return ReportWriter(csv_path or result.config.output).write(result)


__all__ = [
    "CURVE_COLUMNS",
    "HISTOGRAM_COLUMNS",
    "ReportWriter",
    "format_number",
    "summary_path",
    "write_report",
]
