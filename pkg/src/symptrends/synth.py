"""Synthetic RSV/case fixtures with a known Spearman correlation and lag.

Coupling uses a normal copula. Case counts follow a smooth epidemic curve
with multiplicative day-to-day jitter; their van der Waerden scores ``z1``
are mixed with independent noise::

    z2 = r * z1 + sqrt(1 - r**2) * e + noise_scale * eta,   r = 2 sin(pi * rho_s / 6)

and ``z2`` is min-max scaled onto integer RSV points 0..100. ``e`` is made
exactly orthogonal to ``z1`` within the sample, so the in-sample Pearson
correlation of the scores equals ``r`` when ``noise_scale`` is 0.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field
from pathlib import Path
from statistics import NormalDist
from typing import Literal, Sequence

import numpy as np

from .ingest import (
    CaseColumnMap,
    SymptomEntry,
    SymptomManifest,
    load_default_manifest,
    serialize_manifest,
    write_cases_csv,
    write_trends_csv,
)
from .series import DailySeries
from .stats import DEFAULT_SEED, midranks

CaseCurve = Literal["unimodal-peak", "bimodal", "flat"]
CASE_CURVES = ("unimodal-peak", "bimodal", "flat")

_NORMAL = NormalDist()


@dataclass(frozen=True)
class MediaBurst:
    """Extra RSV points added over ``duration`` days starting at day offset ``start``."""

    start: int
    duration: int
    amplitude: float

    def __post_init__(self):
        if self.start < 0 or self.duration < 1:
            raise ValueError("media burst needs start >= 0 and duration >= 1")


@dataclass(frozen=True)
class SynthSpec:
    n_days: int = 244
    target_spearman: float = 0.0
    lag_days: int = 0
    case_curve: CaseCurve = "unimodal-peak"
    noise_scale: float = 0.0
    media_burst: MediaBurst | None = None
    seed: int = DEFAULT_SEED
    start: dt.date = dt.date(2020, 3, 2)
    peak_cases: float = 5000.0
    case_jitter: float = 0.15

    def __post_init__(self):
        if self.n_days < 14:
            raise ValueError(f"n_days must be >= 14, got {self.n_days}")
        if not -1.0 <= self.target_spearman <= 1.0:
            raise ValueError(f"target_spearman must lie in [-1, 1], got {self.target_spearman}")
        if self.noise_scale < 0 or self.case_jitter < 0:
            raise ValueError("noise_scale and case_jitter must be >= 0")
        if self.case_curve not in CASE_CURVES:
            raise ValueError(f"unknown case curve {self.case_curve!r}")
        if abs(self.lag_days) >= self.n_days:
            raise ValueError("|lag_days| must be smaller than n_days")


def copula_pearson(target_spearman: float) -> float:
    """Pearson parameter of a bivariate normal whose Spearman rho is ``target_spearman``."""
    return 2.0 * math.sin(math.pi * target_spearman / 6.0)


def _curve_shape(curve: str, length: int) -> np.ndarray:
    t = np.arange(length, dtype=np.float64)
    if curve == "flat":
        return np.ones(length)
    base = 0.03
    if curve == "unimodal-peak":
        bump = np.exp(-0.5 * ((t - 0.4 * length) / (length / 8.0)) ** 2)
    else:
        bump = (np.exp(-0.5 * ((t - 0.35 * length) / (length / 12.0)) ** 2)
                + 0.6 * np.exp(-0.5 * ((t - 0.7 * length) / (length / 12.0)) ** 2))
    return base + (1.0 - base) * bump


def _case_latent(curve: str, length: int, peak: float, jitter: float, rng) -> np.ndarray:
    z = rng.standard_normal(length)
    return peak * _curve_shape(curve, length) * np.exp(jitter * z - 0.5 * jitter**2)


def _normal_scores(v: np.ndarray) -> np.ndarray:
    u = (midranks(v) - 0.5) / v.size
    return np.array([_NORMAL.inv_cdf(p) for p in u])


def _orthogonal_noise(z1: np.ndarray, rng) -> np.ndarray:
    e = rng.standard_normal(z1.size)
    zc = z1 - z1.mean()
    e = e - e.mean()
    denom = float(zc @ zc)
    if denom > 0:
        e = e - (float(e @ zc) / denom) * zc
    norm = float(np.sqrt(e @ e))
    target = float(np.sqrt(zc @ zc)) if denom > 0 else math.sqrt(z1.size)
    return e * (target / norm) if norm > 0 else e


def _to_rsv_scale(z: np.ndarray) -> np.ndarray:
    lo, hi = float(z.min()), float(z.max())
    if hi == lo:
        return np.full(z.size, 100.0)
    return np.rint(100.0 * (z - lo) / (hi - lo))


def _couple(partner: np.ndarray, target: float, noise_scale: float, rng) -> np.ndarray:
    z1 = _normal_scores(partner)
    r = copula_pearson(target)
    if abs(target) == 1.0:
        z2 = math.copysign(1.0, target) * z1
    else:
        z2 = r * z1 + math.sqrt(1.0 - r * r) * _orthogonal_noise(z1, rng)
    if noise_scale > 0:
        z2 = z2 + noise_scale * rng.standard_normal(z1.size)
    return _to_rsv_scale(z2)


def _harmonize_ties(latent: np.ndarray, rsv: np.ndarray) -> np.ndarray:
    # Give every RSV level one case count, strictly increasing with the latent, so a
    # comonotone pair keeps identical tie structure on both sides after rounding.
    levels = np.unique(rsv)
    groups = [np.flatnonzero(rsv == lev) for lev in levels]
    groups.sort(key=lambda g: float(latent[g].mean()))
    out = np.empty_like(latent)
    prev = -1.0
    for g in groups:
        value = max(float(np.rint(latent[g].mean())), prev + 1.0)
        out[g] = value
        prev = value
    return out


def _apply_burst(rsv: np.ndarray, burst: MediaBurst | None) -> np.ndarray:
    if burst is None or burst.amplitude == 0:
        return rsv
    out = rsv.copy()
    out[burst.start:burst.start + burst.duration] += burst.amplitude
    out = np.clip(out, 0.0, None)
    peak = out.max()
    if peak > 100.0:
        # provider rescales the window so its peak is 100
        out = np.rint(out * (100.0 / peak))
    return np.rint(out)


@dataclass
class _Coupled:
    cases: np.ndarray
    rsv: list[np.ndarray]


def _generate(
    n_days: int,
    couplings: Sequence[tuple[float, int]],
    case_curve: str,
    noise_scale: float,
    peak_cases: float,
    case_jitter: float,
    seed: int,
) -> _Coupled:
    max_lag = max(abs(lag) for _, lag in couplings)
    ext = n_days + 2 * max_lag
    streams = np.random.SeedSequence(seed).spawn(len(couplings) + 1)
    latent = _case_latent(case_curve, ext, peak_cases, case_jitter, np.random.default_rng(streams[0]))
    cases_ext = np.rint(latent)

    rsv_list = []
    harmonized = False
    for (target, lag), stream in zip(couplings, streams[1:]):
        rng = np.random.default_rng(stream)
        # RSV day t pairs with case day t + lag (positive lag: RSV leads cases)
        lo = max_lag + lag
        idx = np.arange(lo, lo + n_days)
        rsv = _couple(latent[idx], target, noise_scale, rng)
        if abs(target) == 1.0 and noise_scale == 0 and not harmonized:
            cases_ext[idx] = _harmonize_ties(latent[idx], rsv)
            harmonized = True
        rsv_list.append(rsv)
    return _Coupled(cases_ext[max_lag:max_lag + n_days], rsv_list)


def generate_pair(spec: SynthSpec) -> tuple[DailySeries, DailySeries]:
    """Return ``(rsv, cases)`` daily series coupled per ``spec``.

    ``rsv`` holds integer points in [0, 100]; ``cases`` holds non-negative
    integer counts. With ``lag_days = L`` the RSV on day t tracks cases on day
    t + L, so a lag scan of (rsv, cases) peaks at +L.
    """
    out = _generate(
        spec.n_days, [(spec.target_spearman, spec.lag_days)], spec.case_curve,
        spec.noise_scale, spec.peak_cases, spec.case_jitter, spec.seed,
    )
    rsv = _apply_burst(out.rsv[0], spec.media_burst)
    return DailySeries(spec.start, rsv, "rsv"), DailySeries(spec.start, out.cases, "cases")


# -- study fixtures ----------------------------------------------------------

# Targets ordered like the weekly column of the published results table
# (loss of smell strongest, cough weakest), spaced so the ordering is
# recoverable from 244 daily points.
TABLE_ORDER_TARGETS: list[tuple[str, float, int]] = [
    ("loss_of_smell", 0.85, 0),
    ("loss_of_taste", 0.77, 0),
    ("diarrhea", 0.68, 0),
    ("shortness_of_breath", 0.60, 0),
    ("headache", 0.52, 0),
    ("fatigue", 0.44, 0),
    ("fever", 0.36, 0),
    ("runny_nose", 0.28, 0),
    ("sore_throat", 0.20, 0),
    ("cough", 0.12, 0),
]


@dataclass
class StudyFixture:
    manifest: SymptomManifest
    trend_files: dict[str, bytes]
    case_file: bytes
    case_map: CaseColumnMap = field(default_factory=CaseColumnMap)

    def write(self, directory: str | Path) -> dict[str, Path]:
        """Write ``manifest.json``, ``cases.csv`` and ``trends/<id>.csv`` under ``directory``."""
        root = Path(directory)
        trends_dir = root / "trends"
        trends_dir.mkdir(parents=True, exist_ok=True)
        (root / "manifest.json").write_bytes(serialize_manifest(self.manifest))
        (root / "cases.csv").write_bytes(self.case_file)
        for name, data in self.trend_files.items():
            (trends_dir / name).write_bytes(data)
        return {
            "manifest": root / "manifest.json",
            "cases": root / "cases.csv",
            "trends_dir": trends_dir,
        }


def _fixture_manifest(ids: list[str]) -> SymptomManifest:
    default = load_default_manifest()
    if set(ids) <= set(default.ids):
        return SymptomManifest(tuple(default.get(i) for i in ids))
    return SymptomManifest(tuple(
        SymptomEntry(i, i.replace("_", " ").title(), "en", (i.replace("_", " "),))
        for i in ids
    ))


def _variant_columns(rsv: np.ndarray, k: int, rng) -> list[np.ndarray]:
    # Jointly scaled export: the leading variant carries the group's RSV, the rest
    # are scaled-down copies. Each column is non-decreasing in rsv, the first
    # strictly, so the group sum has exactly the ranks of rsv.
    weights = np.concatenate([[1.0], np.sort(rng.uniform(0.15, 0.9, k - 1))[::-1]])
    cols = []
    for w in weights:
        raw = w * rsv
        col = np.where((raw > 0) & (raw < 1), 0.5, np.rint(raw))
        cols.append(col)
    return cols


def generate_study_fixture(
    targets: Sequence[tuple[str, float, int]] = TABLE_ORDER_TARGETS,
    seed: int = DEFAULT_SEED,
    manifest: SymptomManifest | None = None,
    n_days: int = 244,
    start: dt.date = dt.date(2020, 3, 2),
    case_curve: CaseCurve = "bimodal",
    noise_scale: float = 0.0,
    peak_cases: float = 5000.0,
    case_jitter: float = 0.15,
) -> StudyFixture:
    """Build manifest, per-symptom trend exports and a case file with known structure.

    ``targets`` lists ``(symptom_id, target_spearman, lag_days)``. The
    manifest defaults to the bundled Arabic keyword groups when every id is
    one of them, otherwise one English variant per id.
    """
    if not targets:
        raise ValueError("need at least one target")
    ids = [t[0] for t in targets]
    if manifest is None:
        manifest = _fixture_manifest(ids)
    elif manifest.ids != ids:
        raise ValueError("manifest ids must match target ids, in order")

    out = _generate(
        n_days, [(t, lag) for _, t, lag in targets], case_curve,
        noise_scale, peak_cases, case_jitter, seed,
    )
    weight_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1 << 20,)))
    trend_files = {}
    for entry, rsv in zip(manifest, out.rsv):
        cols = _variant_columns(rsv, len(entry.variants), weight_rng)
        series = [DailySeries(start, c, v) for c, v in zip(cols, entry.variants)]
        trend_files[f"{entry.id}.csv"] = write_trends_csv(series)
    cases = DailySeries(start, out.cases, "cases")
    return StudyFixture(manifest, trend_files, write_cases_csv(cases))
