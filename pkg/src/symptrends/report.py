"""CSV / JSON / Markdown renderers for study reports and diagnostics.

Renderers return bytes (UTF-8, LF line endings) and are pure functions of
their input; ``emit`` writes those bytes to a file or stdout.
"""

from __future__ import annotations

import csv
import io
import json
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

from .errors import IoFailure, RangeMismatch
from .series import DailySeries
from .stats import CorrelationResult, LagScanResult, WindowGap
from .surveillance import CaseSummary, StudyReport, StudyRow, SymptomSignal

FORMATS = ("csv", "json", "markdown")

TABLE_COLUMNS = [
    "symptom", "daily_r", "daily_p", "weekly_r", "weekly_p",
    "class_daily", "class_weekly", "total_rsv",
]
LAG_COLUMNS = ["best_lag", "best_lag_r"]


@dataclass(frozen=True)
class RenderTarget:
    format: str = "csv"
    destination: str | os.PathLike | None = None

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ValueError(f"unknown format {self.format!r}; choose from {FORMATS}")


def fmt_r(r: float) -> str:
    return f"{r:.3f}"


def fmt_p(p: float) -> str:
    return f"{p:.2e}"


def fmt_value(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def emit(data: bytes, destination: str | os.PathLike | None = None) -> None:
    """Write rendered bytes to ``destination``; None means standard output."""
    try:
        if destination is None:
            sys.stdout.buffer.write(data)
            sys.stdout.buffer.flush()
        else:
            Path(destination).write_bytes(data)
    except OSError as exc:
        raise IoFailure(f"cannot write output: {exc}") from exc


# -- generic tables ------------------------------------------------------------

def _csv_bytes(columns: Sequence[str], rows: Sequence[Sequence[str]]) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue().encode("utf-8")


def _md_cell(s: str) -> str:
    return s.replace("|", "\\|")


def _markdown_bytes(columns: Sequence[str], rows: Sequence[Sequence[str]], title: str | None = None) -> bytes:
    lines = []
    if title:
        lines += [f"## {title}", ""]
    lines.append("| " + " | ".join(_md_cell(c) for c in columns) + " |")
    lines.append("|" + "|".join("---" for _ in columns) + "|")
    for row in rows:
        lines.append("| " + " | ".join(_md_cell(c) for c in row) + " |")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _json_bytes(doc) -> bytes:
    return (json.dumps(doc, ensure_ascii=False, indent=2) + "\n").encode("utf-8")


def _num(cell: str):
    """The JSON twin of a formatted cell: same value a CSV reader would parse."""
    if cell == "":
        return None
    return int(cell) if cell.lstrip("-").isdigit() else float(cell)


# -- study table -------------------------------------------------------------

def _result_cells(res: CorrelationResult | None, error: str | None) -> tuple[str, str]:
    if res is None:
        return "", ""
    return fmt_r(res.rho), fmt_p(res.p_value)


def _class_cell(label: str | None, error: str | None) -> str:
    return label if label is not None else f"error:{error}"


def _row_cells(row: StudyRow, with_lag: bool) -> list[str]:
    dr, dp = _result_cells(row.daily, row.daily_error)
    wr, wp = _result_cells(row.weekly, row.weekly_error)
    cells = [
        row.display_name, dr, dp, wr, wp,
        _class_cell(row.class_daily, row.daily_error),
        _class_cell(row.class_weekly, row.weekly_error),
        f"{row.total_rsv:.1f}",
    ]
    if with_lag:
        if row.lag is None:
            cells += ["", ""]
        else:
            cells += [str(row.lag.best_lag), fmt_r(row.lag.best.rho)]
    return cells


def _raw(res: CorrelationResult | None):
    return None if res is None else asdict(res)


def render_table(report: StudyReport, target: RenderTarget | str = "csv") -> bytes:
    """Render the per-symptom correlation table; the all-symptoms row comes last.

    rho is printed with 3 decimals and p-values with 3 significant digits.
    JSON rows repeat the printed numbers and add full precision under ``raw``.
    """
    fmt = target if isinstance(target, str) else target.format
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    with_lag = report.config.max_lag > 0
    columns = TABLE_COLUMNS + (LAG_COLUMNS if with_lag else [])
    rows = [_row_cells(r, with_lag) for r in report.rows]

    if fmt == "csv":
        data = _csv_bytes(columns, rows)
    elif fmt == "markdown":
        headers = ["Symptom", "Daily r", "Daily p", "Weekly r", "Weekly p",
                   "Class (daily)", "Class (weekly)", "Total RSV"]
        if with_lag:
            headers += ["Best lag", "Best-lag r"]
        data = _markdown_bytes(headers, rows)
    else:
        out_rows = []
        for r, cells in zip(report.rows, rows):
            rec = {"id": r.symptom_id}
            for col, cell in zip(columns, cells):
                rec[col] = cell if col in ("symptom", "class_daily", "class_weekly") else _num(cell)
            rec["errors"] = {
                k: v for k, v in
                (("daily", r.daily_error), ("weekly", r.weekly_error), ("lag", r.lag_error))
                if v is not None
            }
            rec["raw"] = {
                "daily": _raw(r.daily),
                "weekly": _raw(r.weekly),
                "total_rsv": r.total_rsv,
            }
            if with_lag:
                rec["raw"]["lag"] = None if r.lag is None else {
                    "best_lag": r.lag.best_lag,
                    "entries": [asdict(e) for e in r.lag.entries],
                }
            out_rows.append(rec)
        data = _json_bytes({
            "n_daily": report.n_daily,
            "n_weekly": report.n_weekly,
            "config": report.config.to_dict(),
            "rows": out_rows,
        })

    if not isinstance(target, str) and target.destination is not None:
        emit(data, target.destination)
    return data


# -- plot data ---------------------------------------------------------------

def render_plot_data(
    signal: SymptomSignal,
    cases: DailySeries,
    target: RenderTarget | str = "csv",
) -> bytes:
    """Long-format ``(date, series_label, value)`` rows for one symptom panel."""
    fmt = target if isinstance(target, str) else target.format
    s = signal.daily
    if s.start != cases.start or len(s) != len(cases):
        raise RangeMismatch(
            f"signal {signal.symptom_id!r} covers {s.start}..{s.end}, cases cover {cases.start}..{cases.end}"
        )
    rows = []
    for series, label in ((s, signal.symptom_id), (cases, "cases")):
        for day, v in zip(series.dates, series.values):
            rows.append([day.isoformat(), label, fmt_value(v)])
    columns = ["date", "series_label", "value"]
    if fmt == "csv":
        data = _csv_bytes(columns, rows)
    elif fmt == "markdown":
        data = _markdown_bytes(columns, rows)
    elif fmt == "json":
        data = _json_bytes([
            {"date": d, "series_label": lab, "value": _num(v)} for d, lab, v in rows
        ])
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if not isinstance(target, str) and target.destination is not None:
        emit(data, target.destination)
    return data


def write_plot_panels(report: StudyReport, directory: str | os.PathLike, fmt: str = "csv") -> list[Path]:
    """One plot-data file per report row (each symptom plus all-symptoms)."""
    ext = {"csv": "csv", "json": "json", "markdown": "md"}[fmt]
    root = Path(directory)
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {root}: {exc}") from exc
    paths = []
    for row in report.rows:
        path = root / f"{row.symptom_id}.{ext}"
        render_plot_data(report.signals[row.symptom_id], report.cases, RenderTarget(fmt, path))
        paths.append(path)
    return paths


# -- diagnostics ---------------------------------------------------------------

def _render_records(columns, rows, fmt, title=None) -> bytes:
    if fmt == "csv":
        return _csv_bytes(columns, rows)
    if fmt == "markdown":
        return _markdown_bytes(columns, rows, title)
    return _json_bytes([
        {c: (_num(v) if c not in ("method", "date", "month", "status", "x", "y") else v)
         for c, v in zip(columns, row)}
        for row in rows
    ])


def _corr_row(res: CorrelationResult) -> list[str]:
    return [fmt_r(res.rho), fmt_p(res.p_value), str(res.n), res.method,
            str(res.lag_days), "degenerate" if res.degenerate else "ok"]


_CORR_COLUMNS = ["rho", "p_value", "n", "method", "lag_days", "status"]


def render_correlation(res: CorrelationResult, fmt: str = "csv", x: str = "x", y: str = "y") -> bytes:
    return _render_records(["x", "y"] + _CORR_COLUMNS, [[x, y] + _corr_row(res)], fmt)


def render_lag_scan(result: LagScanResult, fmt: str = "csv") -> bytes:
    rows = [_corr_row(e) for e in result.entries]
    data = _render_records(_CORR_COLUMNS, rows, fmt, title=f"best lag {result.best_lag}")
    if fmt == "json":
        doc = json.loads(data)
        data = _json_bytes({
            "best_lag": result.best_lag,
            "min_overlap": result.min_overlap,
            "entries": doc,
            "skipped": {str(k): v for k, v in sorted(result.skipped.items())},
        })
    return data


def render_rolling(windows, fmt: str = "csv") -> bytes:
    columns = ["date"] + _CORR_COLUMNS
    rows = []
    for start, res in windows:
        day = start.isoformat() if hasattr(start, "isoformat") else str(start)
        if isinstance(res, WindowGap):
            rows.append([day, "", "", str(res.n), "t_approx", "0", f"gap:{res.reason}"])
        else:
            rows.append([day] + _corr_row(res))
    return _render_records(columns, rows, fmt)


def render_case_summary(summary: CaseSummary, fmt: str = "csv") -> bytes:
    if fmt == "json":
        return _json_bytes({
            "peak_date": summary.peak_date.isoformat(),
            "peak_value": summary.peak_value,
            "monthly_totals": summary.monthly_totals,
        })
    rows = [["peak", summary.peak_date.isoformat(), fmt_value(summary.peak_value)]]
    rows += [["month", m, fmt_value(v)] for m, v in summary.monthly_totals.items()]
    return _render_records(["kind", "key", "value"], rows, fmt)
