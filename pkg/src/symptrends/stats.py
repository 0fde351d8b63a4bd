"""Rank statistics: midranks, Spearman's rho, p-values, lag scans, rolling windows.

Ranks are handled internally as *doubled, centered* midranks
``2 * rank - (n + 1)``, which are always integers. Every cross-product sum
used by rho is therefore an exact integer, so perfect rank agreement yields
exactly +/-1.0 and permutation statistics compare without float fuzz.
"""

from __future__ import annotations

import datetime as dt
import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal

import numpy as np

from ._special import t_two_sided
from .errors import (
    DegenerateRho,
    NoValidLag,
    StatisticalError,
    SymptrendsError,
    TooFewSamples,
    TooLarge,
    WindowTooLarge,
    ZeroVariance,
)
from .series import AlignedPair, DailySeries, align_pair

PMethod = Literal["t_approx", "exact_perm", "mc_perm"]
Alternative = Literal["two-sided", "greater"]

P_METHODS = ("t_approx", "exact_perm", "mc_perm")
METHOD_ALIASES = {"t": "t_approx", "exact": "exact_perm", "mc": "mc_perm"}

EXACT_MAX_N = 9
MC_MIN_ITERATIONS = 1000
DEFAULT_SEED = 20200302
_MC_CHUNK_CELLS = 2_000_000
_INT_EXACT_MAX_N = 1_000_000


@dataclass(frozen=True)
class CorrelationResult:
    rho: float
    p_value: float
    n: int
    method: str
    lag_days: int = 0
    degenerate: bool = False

    def __post_init__(self):
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError(f"rho out of range: {self.rho}")
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value out of range: {self.p_value}")
        if self.n < 3:
            raise ValueError(f"n must be >= 3, got {self.n}")
        if self.method not in P_METHODS:
            raise ValueError(f"unknown p-value method {self.method!r}")


@dataclass(frozen=True)
class LagScanResult:
    """Per-lag correlations (ascending lag) and the winning lag.

    ``skipped`` maps each lag that produced no entry to the reason.
    """

    entries: list[CorrelationResult]
    best_lag: int
    min_overlap: int
    skipped: dict[int, str] = field(default_factory=dict)

    @property
    def best(self) -> CorrelationResult:
        return next(e for e in self.entries if e.lag_days == self.best_lag)


@dataclass(frozen=True)
class WindowGap:
    """Placeholder for a rolling window where rho is undefined."""

    n: int
    reason: str


def normalize_method(method: str) -> str:
    method = METHOD_ALIASES.get(method, method)
    if method not in P_METHODS:
        raise ValueError(f"unknown p-value method {method!r}")
    return method


# -- ranks and rho -----------------------------------------------------------

def _doubled_centered_ranks(v: np.ndarray) -> np.ndarray:
    n = v.size
    order = np.argsort(v, kind="stable")
    sv = v[order]
    new_group = np.empty(n, dtype=bool)
    new_group[0] = True
    np.not_equal(sv[1:], sv[:-1], out=new_group[1:])
    starts = np.flatnonzero(new_group)
    ends = np.append(starts[1:] - 1, n - 1)
    group = np.cumsum(new_group) - 1
    out = np.empty(n, dtype=np.int64)
    # tie group over sorted positions s..e (0-based) has midrank (s + e)/2 + 1
    out[order] = (starts + ends)[group] + 1 - n
    return out


def midranks(v) -> np.ndarray:
    """Ranks 1..n with ties sharing the mean of the positions they occupy.

    >>> midranks([5, 6, 7, 8, 7]).tolist()
    [1.0, 2.0, 3.5, 5.0, 3.5]
    """
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("midranks needs a non-empty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError("midranks needs finite values")
    n = arr.size
    return (_doubled_centered_ranks(arr) + (n + 1)) / 2.0


def _int_dot(a: np.ndarray, b: np.ndarray) -> int:
    if a.size > _INT_EXACT_MAX_N:
        return int(np.dot(a.astype(object), b.astype(object)))
    return int(np.dot(a, b))


def _rho_from_ranks(a: np.ndarray, b: np.ndarray) -> float:
    sxx = _int_dot(a, a)
    syy = _int_dot(b, b)
    if sxx == 0 or syy == 0:
        raise ZeroVariance("one side of the pair is constant")
    sxy = _int_dot(a, b)
    if sxy * sxy == sxx * syy:
        return math.copysign(1.0, sxy)
    rho = sxy / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, rho))


def spearman_rho(pair: AlignedPair) -> float:
    """Spearman's rho as the Pearson correlation of midranks.

    Raises
    ------
    ZeroVariance
        Either side is constant.
    """
    return _rho_from_ranks(_doubled_centered_ranks(pair.x), _doubled_centered_ranks(pair.y))


# -- p-values ----------------------------------------------------------------

def p_value_t(rho: float, n: int) -> float:
    """Two-sided p-value of rho from the t approximation with n - 2 dof.

    Raises ``DegenerateRho`` for |rho| == 1 (its ``p_value`` attribute is 0.0)
    and ``TooFewSamples`` for n < 4.
    """
    if n < 4:
        raise TooFewSamples(f"t approximation needs n >= 4, got {n}")
    if not -1.0 <= rho <= 1.0:
        raise ValueError(f"rho out of range: {rho}")
    if abs(rho) == 1.0:
        raise DegenerateRho(f"|rho| = 1 at n = {n}; t statistic is infinite")
    df = n - 2
    t = rho * math.sqrt(df / ((1.0 - rho) * (1.0 + rho)))
    return t_two_sided(t, df)


@lru_cache(maxsize=EXACT_MAX_N + 1)
def _all_permutations(n: int) -> np.ndarray:
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.intp)
    perms.setflags(write=False)
    return perms


def p_value_exact(pair: AlignedPair) -> float:
    """Fraction of all n! re-pairings with |rho| at least the observed |rho|."""
    n = pair.n
    if n > EXACT_MAX_N:
        raise TooLarge(f"exact permutation p-value limited to n <= {EXACT_MAX_N}, got {n}")
    a = _doubled_centered_ranks(pair.x)
    b = _doubled_centered_ranks(pair.y)
    _rho_from_ranks(a, b)
    observed = abs(int(np.dot(a, b)))
    perms = _all_permutations(n)
    stats = np.abs(b[perms] @ a)
    return int(np.count_nonzero(stats >= observed)) / perms.shape[0]


def p_value_mc(pair: AlignedPair, iterations: int = 100_000, seed: int = DEFAULT_SEED) -> float:
    """Monte Carlo permutation p-value, ``(1 + hits) / (iterations + 1)``.

    Deterministic for a given seed: permutations come from a PCG64 stream in
    fixed-size chunks that depend only on n.
    """
    if iterations < MC_MIN_ITERATIONS:
        raise ValueError(f"need at least {MC_MIN_ITERATIONS} iterations, got {iterations}")
    a = _doubled_centered_ranks(pair.x)
    b = _doubled_centered_ranks(pair.y)
    _rho_from_ranks(a, b)
    observed = abs(_int_dot(a, b))
    n = pair.n
    # float64 products are exact while |sum| < 2**53, true for n up to ~2e5
    dtype = np.float64 if n <= 200_000 else np.int64
    av = a.astype(dtype)
    bv = b.astype(dtype)
    rng = np.random.default_rng(seed)
    chunk = max(1, _MC_CHUNK_CELLS // n)
    hits = 0
    done = 0
    while done < iterations:
        rows = min(chunk, iterations - done)
        shuffled = rng.permuted(np.broadcast_to(bv, (rows, n)), axis=1)
        hits += int(np.count_nonzero(np.abs(shuffled @ av) >= observed))
        done += rows
    return (1 + hits) / (iterations + 1)


def one_sided(p_two: float, rho: float) -> float:
    """Convert a two-sided p to the one-sided p for the alternative rho > 0."""
    return p_two / 2.0 if rho > 0 else 1.0 - p_two / 2.0


def correlate(
    pair: AlignedPair,
    method: str = "t_approx",
    iterations: int = 100_000,
    seed: int = DEFAULT_SEED,
    alternative: Alternative = "two-sided",
    lag_days: int = 0,
) -> CorrelationResult:
    """rho plus a p-value by the requested method, packaged as a result.

    Under the t approximation |rho| == 1 gives ``p_value = 0`` and
    ``degenerate = True`` instead of raising.
    """
    method = normalize_method(method)
    rho = spearman_rho(pair)
    degenerate = False
    if method == "t_approx":
        try:
            p = p_value_t(rho, pair.n)
        except DegenerateRho as exc:
            p = exc.p_value
            degenerate = True
    elif method == "exact_perm":
        p = p_value_exact(pair)
    else:
        p = p_value_mc(pair, iterations, seed)
    if alternative == "greater":
        p = one_sided(p, rho)
    elif alternative != "two-sided":
        raise ValueError(f"unknown alternative {alternative!r}")
    return CorrelationResult(rho, p, pair.n, method, lag_days, degenerate)


# -- lag scan and rolling windows --------------------------------------------

def shift_days(s: DailySeries, lag: int) -> DailySeries:
    """Re-date ``s`` so that the value originally at ``d + lag`` sits at ``d``."""
    return DailySeries(s.start - dt.timedelta(days=lag), s.values, s.label)


def lag_scan(
    x: DailySeries,
    y: DailySeries,
    max_lag: int,
    min_overlap: int = 10,
    method: str = "t_approx",
    iterations: int = 100_000,
    seed: int = DEFAULT_SEED,
) -> LagScanResult:
    """Correlate ``x[t]`` with ``y[t + lag]`` for every lag in ``[-max_lag, max_lag]``.

    Positive lag means x leads y. Lags whose overlap is shorter than
    ``min_overlap``, or where rho is undefined, are left out and recorded in
    ``skipped``. The best lag maximizes rho; ties go to the smallest |lag|,
    then to the negative side.
    """
    if max_lag < 0:
        raise ValueError("max_lag must be >= 0")
    if min_overlap < 3:
        raise ValueError("min_overlap must be >= 3")
    entries: list[CorrelationResult] = []
    skipped: dict[int, str] = {}
    for lag in range(-max_lag, max_lag + 1):
        try:
            pair = align_pair(x, shift_days(y, lag))
        except SymptrendsError:
            skipped[lag] = "no overlap"
            continue
        if pair.n < min_overlap:
            skipped[lag] = f"overlap {pair.n} < {min_overlap}"
            continue
        try:
            entries.append(correlate(pair, method, iterations, seed, lag_days=lag))
        except StatisticalError as exc:
            skipped[lag] = type(exc).__name__
    if not entries:
        reasons = sorted(set(skipped.values()))
        raise NoValidLag(f"no lag in [-{max_lag}, {max_lag}] produced a correlation: {reasons}")
    best = min(entries, key=lambda e: (-e.rho, abs(e.lag_days), e.lag_days))
    return LagScanResult(entries, best.lag_days, min_overlap, skipped)


def rolling_correlation(pair: AlignedPair, window: int = 28, step: int = 1):
    """Spearman rho with t-approximation p over sliding windows.

    Returns a list of ``(start, result)`` where ``start`` is the window's first
    date (or index for undated pairs) and ``result`` is a
    ``CorrelationResult``, or a ``WindowGap`` when one side of the window is
    constant.
    """
    if window < 10:
        raise ValueError(f"window must be >= 10, got {window}")
    if step < 1:
        raise ValueError(f"step must be >= 1, got {step}")
    if window > pair.n:
        raise WindowTooLarge(f"window {window} exceeds series length {pair.n}")
    out = []
    for i in range(0, pair.n - window + 1, step):
        sub = pair.window(i, window)
        start = i if pair.start is None else sub.start
        try:
            out.append((start, correlate(sub, "t_approx")))
        except ZeroVariance:
            out.append((start, WindowGap(window, "ZeroVariance")))
    return out
