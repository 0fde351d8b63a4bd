"""Correlate search-trend volumes for symptom keyword groups with epidemic case counts."""

__version__ = "0.1.0"

from .errors import DataError, StatisticalError, SymptrendsError
from .ingest import (
    CaseColumnMap,
    SymptomEntry,
    SymptomManifest,
    load_default_manifest,
    parse_cases_csv,
    parse_manifest,
    parse_trends_csv,
)
from .series import AlignedPair, DailySeries, WeeklySeries, align_pair, fill_missing, resample_weekly
from .stats import (
    CorrelationResult,
    LagScanResult,
    correlate,
    lag_scan,
    midranks,
    p_value_exact,
    p_value_mc,
    p_value_t,
    rolling_correlation,
    spearman_rho,
)
from .surveillance import (
    StudyConfig,
    StudyReport,
    SymptomSignal,
    Thresholds,
    aggregate_symptom,
    classify,
    composite_all_symptoms,
    run_study,
    summarize_cases,
)
