"""End-to-end study: keyword groups -> symptom signals -> daily/weekly correlations."""

from __future__ import annotations

import datetime as dt
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DataError,
    MissingVariant,
    StatisticalError,
    TooShort,
)
from .ingest import SymptomManifest
from .series import (
    WEEKLY_MODES,
    AlignedPair,
    DailySeries,
    WeeklyMode,
    resample_weekly,
    sum_series,
    weekly_pair,
)
from .stats import (
    DEFAULT_SEED,
    CorrelationResult,
    LagScanResult,
    correlate,
    lag_scan,
    normalize_method,
)

ALL_SYMPTOMS_ID = "all_symptoms"
ALL_SYMPTOMS_NAME = "All Symptoms"

STUDY_START = dt.date(2020, 3, 2)
STUDY_END = dt.date(2020, 10, 31)

NOT_SIGNIFICANT = "NotSignificant"
WEAK = "WeakSignificant"
MODERATE = "ModerateSignificant"
HIGH = "HighSignificant"


@dataclass(frozen=True)
class SymptomSignal:
    symptom_id: str
    daily: DailySeries
    total_rsv: float


def aggregate_symptom(variants: Sequence[DailySeries], symptom_id: str = "") -> SymptomSignal:
    """Element-wise sum of a keyword group's variant series."""
    daily = sum_series(list(variants), symptom_id)
    return SymptomSignal(symptom_id, daily, float(daily.values.sum()))


def composite_all_symptoms(signals: Sequence[SymptomSignal]) -> SymptomSignal:
    """Element-wise sum of symptom signals, labeled ``all_symptoms``."""
    daily = sum_series([s.daily for s in signals], ALL_SYMPTOMS_ID)
    return SymptomSignal(ALL_SYMPTOMS_ID, daily, float(daily.values.sum()))


@dataclass(frozen=True)
class Thresholds:
    high: float = 0.5
    moderate: float = 0.3
    alpha: float = 0.05

    def __post_init__(self):
        if not 0 < self.moderate < self.high <= 1:
            raise ValueError(
                f"need 0 < moderate < high <= 1, got moderate={self.moderate}, high={self.high}"
            )
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")


def classify(r: float, p: float, thresholds: Thresholds = Thresholds()) -> str:
    """Significance first (p < alpha), then strength band by |r|."""
    if p >= thresholds.alpha:
        return NOT_SIGNIFICANT
    strength = abs(r)
    if strength > thresholds.high:
        return HIGH
    if strength >= thresholds.moderate:
        return MODERATE
    return WEAK


@dataclass(frozen=True)
class StudyConfig:
    start: dt.date = STUDY_START
    end: dt.date = STUDY_END
    p_method: str = "t_approx"
    mc_iterations: int = 100_000
    seed: int = DEFAULT_SEED
    weekly_mode: WeeklyMode = "mean"
    thresholds: Thresholds = field(default_factory=Thresholds)
    max_lag: int = 0
    min_overlap: int = 10
    alternative: str = "two-sided"
    workers: int = 1

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"study period must have start < end ({self.start}..{self.end})")
        object.__setattr__(self, "p_method", normalize_method(self.p_method))
        if self.weekly_mode not in WEEKLY_MODES:
            raise ValueError(f"unknown weekly mode {self.weekly_mode!r}")
        if self.max_lag < 0:
            raise ValueError("max_lag must be >= 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def n_days(self) -> int:
        return (self.end - self.start).days + 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["start"] = self.start.isoformat()
        d["end"] = self.end.isoformat()
        del d["workers"]
        return d


@dataclass(frozen=True)
class StudyRow:
    """One report line. ``*_error`` holds the exception name when a statistic failed."""

    symptom_id: str
    display_name: str
    total_rsv: float
    daily: CorrelationResult | None
    weekly: CorrelationResult | None
    class_daily: str | None
    class_weekly: str | None
    daily_error: str | None = None
    weekly_error: str | None = None
    lag: LagScanResult | None = None
    lag_error: str | None = None


@dataclass(frozen=True)
class StudyReport:
    rows: list[StudyRow]
    n_daily: int
    n_weekly: int
    config: StudyConfig
    signals: dict[str, SymptomSignal] = field(repr=False, compare=False, default_factory=dict)
    cases: DailySeries | None = field(repr=False, compare=False, default=None)

    def row(self, symptom_id: str) -> StudyRow:
        for r in self.rows:
            if r.symptom_id == symptom_id:
                return r
        raise KeyError(symptom_id)


def _row_seed(seed: int, row: int, resolution: int) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=(row, resolution))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _evaluate_row(
    index: int,
    symptom_id: str,
    display_name: str,
    signal: SymptomSignal,
    cases: DailySeries,
    weekly_cases,
    config: StudyConfig,
) -> StudyRow:
    daily = weekly = lag = None
    daily_error = weekly_error = lag_error = None

    pair = AlignedPair(signal.daily.values, cases.values, cases.start, symptom_id, cases.label)
    try:
        daily = correlate(
            pair, config.p_method, config.mc_iterations,
            _row_seed(config.seed, index, 0), config.alternative,
        )
    except StatisticalError as exc:
        daily_error = type(exc).__name__

    try:
        if isinstance(weekly_cases, Exception):
            raise weekly_cases
        wsig = resample_weekly(signal.daily, config.weekly_mode)
        weekly = correlate(
            weekly_pair(wsig, weekly_cases), config.p_method, config.mc_iterations,
            _row_seed(config.seed, index, 1), config.alternative,
        )
    except (StatisticalError, TooShort) as exc:
        weekly_error = type(exc).__name__

    if config.max_lag > 0:
        try:
            lag = lag_scan(signal.daily, cases, config.max_lag, config.min_overlap)
        except StatisticalError as exc:
            lag_error = type(exc).__name__

    th = config.thresholds
    return StudyRow(
        symptom_id=symptom_id,
        display_name=display_name,
        total_rsv=signal.total_rsv,
        daily=daily,
        weekly=weekly,
        class_daily=None if daily is None else classify(daily.rho, daily.p_value, th),
        class_weekly=None if weekly is None else classify(weekly.rho, weekly.p_value, th),
        daily_error=daily_error,
        weekly_error=weekly_error,
        lag=lag,
        lag_error=lag_error,
    )


def build_signals(
    manifest: SymptomManifest,
    trends: Mapping[str, DailySeries],
    config: StudyConfig,
) -> list[SymptomSignal]:
    """Aggregate each keyword group over the study period, in manifest order."""
    signals = []
    for entry in manifest:
        try:
            variants = []
            for v in entry.variants:
                if v not in trends:
                    raise MissingVariant(f"no trend series for variant {v!r}")
                variants.append(trends[v].restrict(config.start, config.end))
            signals.append(aggregate_symptom(variants, entry.id))
        except DataError as exc:
            raise type(exc)(f"symptom {entry.id!r}: {exc}") from exc
    return signals


def run_study(
    manifest: SymptomManifest,
    trends: Mapping[str, DailySeries],
    cases: DailySeries,
    config: StudyConfig = StudyConfig(),
) -> StudyReport:
    """Correlate every keyword group, and their composite, with case counts.

    ``trends`` maps each query variant to its RSV series. Statistical
    failures (constant series, too few points) are recorded on the affected
    row; data problems raise, annotated with the symptom id.
    """
    try:
        cases = cases.restrict(config.start, config.end)
    except DataError as exc:
        raise type(exc)(f"cases: {exc}") from exc

    signals = build_signals(manifest, trends, config)
    composite = composite_all_symptoms(signals)

    try:
        weekly_cases = resample_weekly(cases, "sum")
    except TooShort as exc:
        weekly_cases = exc

    jobs = [(e.id, e.display_name, s) for e, s in zip(manifest, signals)]
    jobs.append((ALL_SYMPTOMS_ID, ALL_SYMPTOMS_NAME, composite))

    def job(i):
        sid, name, sig = jobs[i]
        return _evaluate_row(i, sid, name, sig, cases, weekly_cases, config)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(job, range(len(jobs))))
    else:
        rows = [job(i) for i in range(len(jobs))]

    return StudyReport(
        rows=rows,
        n_daily=config.n_days,
        n_weekly=config.n_days // 7,
        config=config,
        signals={sid: sig for sid, _, sig in jobs},
        cases=cases,
    )


@dataclass(frozen=True)
class CaseSummary:
    peak_date: dt.date
    peak_value: float
    monthly_totals: dict[str, float]


def summarize_cases(cases: DailySeries) -> CaseSummary:
    """Peak day (earliest on ties) and calendar-month totals keyed ``YYYY-MM``."""
    i = int(np.argmax(cases.values))
    totals: dict[str, float] = {}
    for day, v in zip(cases.dates, cases.values):
        key = f"{day.year:04d}-{day.month:02d}"
        totals[key] = totals.get(key, 0.0) + float(v)
    return CaseSummary(cases.start + dt.timedelta(days=i), float(cases.values[i]), totals)
