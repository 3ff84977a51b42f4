"""Report emission: lossless JSON and table-style CSV with half-up
two-decimal percentage rendering."""

from __future__ import annotations

import csv
import json
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from ..errors import ValidationError
from .evaluate import EvaluationReport, EvaluationRow

__all__ = ["format_percent", "format_score", "emit_report", "load_report"]

CSV_COLUMNS = (
    "system",
    "domain",
    "bias_ratio",
    "style_score",
    "revised_bias_ratio",
    "revised_style_score",
    "sts_mean",
    "total",
    "evaluated",
    "excluded",
    "flagged",
    "repaired",
    "fallbacks",
    "revised_flagged",
)


def round_half_up(value: float, digits: int = 2) -> float:
    """Decimal half-up rounding (0.125 -> 0.13), unlike float banker's."""
    quantum = Decimal(1).scaleb(-digits)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def format_percent(ratio: float) -> str:
    """Render a [0,1] ratio as a two-decimal percent string: 0.131481 -> 13.15%."""
    return f"{round_half_up(ratio * 100.0):.2f}%"


def format_score(value: float | None) -> str:
    return "n/a" if value is None else f"{round_half_up(value):.2f}"


def _csv_row(row: EvaluationRow) -> list[str]:
    return [
        row.system,
        row.domain,
        format_percent(row.bias_ratio),
        format_score(row.style_score),
        format_percent(row.revised_bias_ratio),
        format_score(row.revised_style_score),
        format_score(row.sts_mean),
        str(row.total),
        str(row.evaluated),
        str(row.excluded),
        str(row.flagged),
        str(row.repaired),
        str(row.fallbacks),
        str(row.revised_flagged),
    ]


def emit_report(report: EvaluationReport | None, path: str | Path, fmt: str = "json") -> Path:
    """Write a report to disk. JSON keeps raw floats (lossless round-trip);
    CSV renders percentages and scores to two decimals. An empty report
    yields a header-only CSV / an empty-rows JSON."""
    path = Path(path)
    if fmt == "json":
        payload = report.to_dict() if report is not None else {"rows": []}
        path.write_text(
            json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )
    elif fmt == "csv":
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(CSV_COLUMNS)
            if report is not None:
                for row in report.rows:
                    writer.writerow(_csv_row(row))
                writer.writerow(_csv_row(report.average))
    else:
        raise ValidationError(f"unknown report format {fmt!r}")
    return path


def load_report(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
