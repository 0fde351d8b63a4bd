"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data/parse error, 3 statistical
degeneracy (constant series, no valid lag, ...).
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import os
import sys
from pathlib import Path

from . import __version__
from .errors import DataError, MalformedHeader, StatisticalError, SymptrendsError
from .ingest import (
    DEFAULT_CENSORED_VALUE,
    CaseColumnMap,
    load_trends_dir,
    parse_cases_csv,
    parse_manifest,
    parse_trends_csv,
)
from .report import (
    FORMATS,
    RenderTarget,
    emit,
    render_case_summary,
    render_correlation,
    render_lag_scan,
    render_rolling,
    render_table,
    write_plot_panels,
)
from .series import MISSING_POLICIES, DailySeries, align_pair
from .stats import DEFAULT_SEED, correlate, lag_scan, rolling_correlation
from .surveillance import STUDY_END, STUDY_START, StudyConfig, Thresholds, run_study, summarize_cases
from .synth import CASE_CURVES, TABLE_ORDER_TARGETS, generate_study_fixture

SEED_ENV = "SYMPTRENDS_SEED"
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_STATS = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _date(s: str) -> dt.date:
    try:
        return dt.date.fromisoformat(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a YYYY-MM-DD date: {s!r}") from None


def _add_output(p):
    p.add_argument("--format", choices=FORMATS, default="csv")
    p.add_argument("--output", "-o", help="output file (default: standard output)")


def _add_ingest(p):
    p.add_argument("--missing", choices=MISSING_POLICIES, default="error",
                   help="policy for absent dates (default: error)")
    p.add_argument("--censored-value", type=float, default=DEFAULT_CENSORED_VALUE,
                   help="value substituted for '<1' trend cells (default: 0.5)")
    p.add_argument("--date-column", default="date")
    p.add_argument("--value-column", default="cases")
    p.add_argument("--date-format", default="%Y-%m-%d")


def _add_pvalue(p):
    p.add_argument("--p-method", choices=("t", "exact", "mc"), default="t")
    p.add_argument("--mc-iters", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=None,
                   help=f"RNG seed for MC p-values (default: ${SEED_ENV} or {DEFAULT_SEED})")
    p.add_argument("--one-sided", action="store_true",
                   help="one-sided p for positive association (p/2 when rho > 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="symptrends", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("study", help="correlate keyword groups with case counts")
    p.add_argument("--manifest", required=True)
    p.add_argument("--trends-dir", required=True)
    p.add_argument("--cases", required=True)
    p.add_argument("--period", nargs=2, type=_date, metavar=("START", "END"),
                   default=(STUDY_START, STUDY_END))
    p.add_argument("--weekly-rsv", choices=("mean", "sum"), default="mean")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--high", type=float, default=0.5)
    p.add_argument("--moderate", type=float, default=0.3)
    p.add_argument("--max-lag", type=int, default=0)
    p.add_argument("--min-overlap", type=int, default=10)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--plot-dir", help="also write one long-format plot-data file per row here")
    _add_pvalue(p)
    _add_ingest(p)
    _add_output(p)

    for name, help_text in (
        ("correlate", "Spearman rho of two series files"),
        ("lag-scan", "rho across day offsets between two series"),
        ("rolling", "rho over sliding windows"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("x", help="trends export or date/value CSV")
        p.add_argument("y", help="trends export or date/value CSV")
        p.add_argument("--x-column", help="query column to use when x is a multi-column export")
        p.add_argument("--y-column", help="query column to use when y is a multi-column export")
        if name == "correlate":
            _add_pvalue(p)
        elif name == "lag-scan":
            p.add_argument("--max-lag", type=int, default=14)
            p.add_argument("--min-overlap", type=int, default=10)
        else:
            p.add_argument("--window", type=int, default=28)
            p.add_argument("--step", type=int, default=1)
        _add_ingest(p)
        _add_output(p)

    p = sub.add_parser("summarize-cases", help="peak day and monthly totals of a case file")
    p.add_argument("cases")
    _add_ingest(p)
    _add_output(p)

    p = sub.add_parser("synth", help="write a synthetic study fixture")
    p.add_argument("--out", required=True, help="directory to create")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--days", type=int, default=244)
    p.add_argument("--start", type=_date, default=STUDY_START)
    p.add_argument("--case-curve", choices=CASE_CURVES, default="bimodal")
    p.add_argument("--noise-scale", type=float, default=0.0)
    p.add_argument("--target", action="append", metavar="ID:RHO[:LAG]",
                   help="per-symptom target; repeatable (default: ten bundled symptoms)")

    p = sub.add_parser("validate", help="parse inputs without running statistics")
    p.add_argument("--manifest")
    p.add_argument("--trends-dir")
    p.add_argument("--cases")
    _add_ingest(p)
    return parser


# -- helpers -------------------------------------------------------------------

def _case_map(args) -> CaseColumnMap:
    return CaseColumnMap(args.date_column, args.value_column, args.date_format)


def _read_series(path: str, column: str | None, args) -> DailySeries:
    """A trends export (first or named query column) or a date/value CSV."""
    try:
        series = parse_trends_csv(path, args.censored_value, args.missing)
    except MalformedHeader:
        if column is not None:
            raise
        cmap = _case_map(args)
        with open(path, encoding="utf-8-sig", newline="") as fh:
            header = next(csv.reader(fh), [])
        if cmap.value_column not in header and len(header) == 2:
            cmap = CaseColumnMap(header[0].strip(), header[1].strip(), cmap.date_format)
        return parse_cases_csv(path, cmap, args.missing, label=Path(path).stem)
    if column is None:
        return series[0]
    for s in series:
        if s.label == column:
            return s
    raise UsageError(f"{path} has no query column {column!r}")


def _seed(args) -> int:
    return args.seed if args.seed is not None else default_seed()


def _parse_target(spec: str) -> tuple[str, float, int]:
    parts = spec.split(":")
    if len(parts) not in (2, 3):
        raise UsageError(f"target must look like ID:RHO[:LAG], got {spec!r}")
    try:
        return parts[0], float(parts[1]), int(parts[2]) if len(parts) == 3 else 0
    except ValueError:
        raise UsageError(f"bad number in target {spec!r}") from None


# -- subcommands -------------------------------------------------------------

def cmd_study(args) -> int:
    config = StudyConfig(
        start=args.period[0],
        end=args.period[1],
        p_method=args.p_method,
        mc_iterations=args.mc_iters,
        seed=_seed(args),
        weekly_mode=args.weekly_rsv,
        thresholds=Thresholds(args.high, args.moderate, args.alpha),
        max_lag=args.max_lag,
        min_overlap=args.min_overlap,
        alternative="greater" if args.one_sided else "two-sided",
        workers=args.workers,
    )
    manifest = parse_manifest(args.manifest)
    trends = load_trends_dir(args.trends_dir, args.censored_value, args.missing)
    cases = parse_cases_csv(args.cases, _case_map(args), args.missing)
    report = run_study(manifest, trends, cases, config)
    emit(render_table(report, args.format), args.output)
    if args.plot_dir:
        write_plot_panels(report, args.plot_dir, args.format)
    if all(r.daily is None and r.weekly is None for r in report.rows):
        errors = sorted({e for r in report.rows for e in (r.daily_error, r.weekly_error) if e})
        print(f"symptrends: no correlation could be computed: {', '.join(errors)}", file=sys.stderr)
        return EXIT_STATS
    return EXIT_OK


def cmd_correlate(args) -> int:
    x = _read_series(args.x, args.x_column, args)
    y = _read_series(args.y, args.y_column, args)
    res = correlate(
        align_pair(x, y), args.p_method, args.mc_iters, _seed(args),
        "greater" if args.one_sided else "two-sided",
    )
    emit(render_correlation(res, args.format, x.label, y.label), args.output)
    return EXIT_OK


def cmd_lag_scan(args) -> int:
    x = _read_series(args.x, args.x_column, args)
    y = _read_series(args.y, args.y_column, args)
    emit(render_lag_scan(lag_scan(x, y, args.max_lag, args.min_overlap), args.format), args.output)
    return EXIT_OK


def cmd_rolling(args) -> int:
    x = _read_series(args.x, args.x_column, args)
    y = _read_series(args.y, args.y_column, args)
    windows = rolling_correlation(align_pair(x, y), args.window, args.step)
    emit(render_rolling(windows, args.format), args.output)
    return EXIT_OK


def cmd_summarize_cases(args) -> int:
    cases = parse_cases_csv(args.cases, _case_map(args), args.missing)
    emit(render_case_summary(summarize_cases(cases), args.format), args.output)
    return EXIT_OK


def cmd_synth(args) -> int:
    targets = [_parse_target(t) for t in args.target] if args.target else TABLE_ORDER_TARGETS
    fixture = generate_study_fixture(
        targets, seed=_seed(args), n_days=args.days, start=args.start,
        case_curve=args.case_curve, noise_scale=args.noise_scale,
    )
    paths = fixture.write(args.out)
    print(f"wrote {paths['manifest']}, {paths['cases']} and "
          f"{len(fixture.trend_files)} export(s) in {paths['trends_dir']}", file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    if not (args.manifest or args.trends_dir or args.cases):
        raise UsageError("validate needs at least one of --manifest, --trends-dir, --cases")
    summary = []
    manifest = trends = None
    if args.manifest:
        manifest = parse_manifest(args.manifest)
        summary.append(f"manifest: {len(manifest)} symptoms, {manifest.total_variants} variants")
    if args.trends_dir:
        trends = load_trends_dir(args.trends_dir, args.censored_value, args.missing)
        summary.append(f"trends: {len(trends)} query series")
    if args.cases:
        cases = parse_cases_csv(args.cases, _case_map(args), args.missing)
        summary.append(f"cases: {len(cases)} days, {cases.start}..{cases.end}")
    if manifest is not None and trends is not None:
        missing = [v for e in manifest for v in e.variants if v not in trends]
        if missing:
            print(f"symptrends: variants without trend series: {missing}", file=sys.stderr)
            return EXIT_DATA
    sys.stdout.write("".join(line + "\n" for line in summary))
    return EXIT_OK


COMMANDS = {
    "study": cmd_study,
    "correlate": cmd_correlate,
    "lag-scan": cmd_lag_scan,
    "rolling": cmd_rolling,
    "summarize-cases": cmd_summarize_cases,
    "synth": cmd_synth,
    "validate": cmd_validate,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"symptrends: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StatisticalError as exc:
        print(f"symptrends: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_STATS
    except DataError as exc:
        print(f"symptrends: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SymptrendsError as exc:
        print(f"symptrends: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"symptrends: invalid argument: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
