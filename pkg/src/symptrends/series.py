"""Date-indexed series, pairwise alignment, gap filling and weekly resampling."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import (
    DisjointRanges,
    DuplicateDate,
    EmptyInput,
    GapFound,
    RangeMismatch,
    TooShort,
    UnsortedDates,
)

MissingPolicy = Literal["error", "zero", "linear"]
WeeklyMode = Literal["sum", "mean"]

MISSING_POLICIES = ("error", "zero", "linear")
WEEKLY_MODES = ("sum", "mean")

ONE_DAY = dt.timedelta(days=1)


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-d sequence, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DailySeries:
    """One non-negative value per consecutive calendar day.

    Parameters
    ----------
    start : datetime.date
        Date of ``values[0]``.
    values : array_like
        Stored as a read-only float64 array.
    label : str
        Free-text identifier (query text, ``"cases"``, a symptom id...).
    """

    start: dt.date
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        arr = _frozen_array(self.values)
        if arr.size == 0:
            raise EmptyInput(f"series {self.label!r} has no values")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"series {self.label!r} contains non-finite values")
        if np.any(arr < 0):
            raise ValueError(f"series {self.label!r} contains negative values")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return int(self.values.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DailySeries):
            return NotImplemented
        return (
            self.start == other.start
            and self.label == other.label
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    @property
    def end(self) -> dt.date:
        """Last covered date (inclusive)."""
        return self.start + dt.timedelta(days=len(self) - 1)

    @property
    def dates(self) -> list[dt.date]:
        return [self.start + dt.timedelta(days=i) for i in range(len(self))]

    def with_values(self, values, label: str | None = None) -> DailySeries:
        return DailySeries(self.start, values, self.label if label is None else label)

    def restrict(self, start: dt.date, end: dt.date) -> DailySeries:
        """Sub-series over ``[start, end]``; the range must be fully covered."""
        if start < self.start or end > self.end or end < start:
            raise RangeMismatch(
                f"series {self.label!r} covers {self.start}..{self.end}, "
                f"cannot restrict to {start}..{end}"
            )
        i = (start - self.start).days
        j = (end - self.start).days + 1
        return DailySeries(start, self.values[i:j], self.label)


@dataclass(frozen=True, eq=False)
class WeeklySeries:
    """Consecutive 7-day aggregates; ``start`` is the first day of block 0."""

    start: dt.date
    values: np.ndarray
    mode: WeeklyMode
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values))

    def __len__(self) -> int:
        return int(self.values.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeeklySeries):
            return NotImplemented
        return (
            self.start == other.start
            and self.mode == other.mode
            and self.label == other.label
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class AlignedPair:
    """Two equal-length samples over a shared index, ready for correlation.

    ``start`` is the date of the first element when the pair came from
    daily series, and None for pairs built from bare arrays.
    """

    x: np.ndarray
    y: np.ndarray
    start: dt.date | None = None
    x_label: str = "x"
    y_label: str = "y"
    n: int = field(init=False)

    def __post_init__(self):
        x = _frozen_array(self.x)
        y = _frozen_array(self.y)
        if x.size != y.size:
            raise RangeMismatch(f"pair sides differ in length ({x.size} vs {y.size})")
        if x.size < 3:
            raise TooShort(f"aligned pair needs n >= 3, got {x.size}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("pair contains non-finite values")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "n", int(x.size))

    @classmethod
    def from_arrays(cls, x, y) -> AlignedPair:
        return cls(x, y)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AlignedPair):
            return NotImplemented
        return (
            self.start == other.start
            and self.x_label == other.x_label
            and self.y_label == other.y_label
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
        )

    __hash__ = None

    def x_series(self) -> DailySeries:
        return DailySeries(self._require_start(), self.x, self.x_label)

    def y_series(self) -> DailySeries:
        return DailySeries(self._require_start(), self.y, self.y_label)

    def _require_start(self) -> dt.date:
        if self.start is None:
            raise ValueError("pair was built from bare arrays and has no dates")
        return self.start

    def window(self, i: int, length: int) -> AlignedPair:
        start = None if self.start is None else self.start + dt.timedelta(days=i)
        return AlignedPair(
            self.x[i:i + length], self.y[i:i + length], start, self.x_label, self.y_label
        )


def align_pair(a: DailySeries, b: DailySeries) -> AlignedPair:
    """Restrict two daily series to the intersection of their date ranges.

    Raises
    ------
    DisjointRanges
        The ranges do not overlap.
    TooShort
        The overlap is shorter than 3 days.
    """
    lo = max(a.start, b.start)
    hi = min(a.end, b.end)
    if hi < lo:
        raise DisjointRanges(
            f"{a.label!r} ({a.start}..{a.end}) and {b.label!r} ({b.start}..{b.end}) do not overlap"
        )
    n = (hi - lo).days + 1
    if n < 3:
        raise TooShort(f"overlap of {a.label!r} and {b.label!r} is only {n} day(s)")
    ia = (lo - a.start).days
    ib = (lo - b.start).days
    return AlignedPair(a.values[ia:ia + n], b.values[ib:ib + n], lo, a.label, b.label)


def fill_missing(
    raw: Iterable[tuple[dt.date, float]],
    policy: MissingPolicy = "error",
    label: str = "",
) -> DailySeries:
    """Build a contiguous daily series from possibly gappy ``(date, value)`` rows.

    ``policy`` decides what happens to absent dates: ``"error"`` raises
    ``GapFound``, ``"zero"`` writes 0.0, ``"linear"`` interpolates between
    the flanking observed values.
    """
    if policy not in MISSING_POLICIES:
        raise ValueError(f"unknown missing-data policy {policy!r}")
    rows = list(raw)
    if not rows:
        raise EmptyInput(f"no rows for series {label!r}")

    for (d0, _), (d1, _) in zip(rows, rows[1:]):
        if d1 == d0:
            raise DuplicateDate(f"{label!r}: date {d1} appears twice")
        if d1 < d0:
            raise UnsortedDates(f"{label!r}: {d1} follows {d0}")

    first = rows[0][0]
    offsets = np.array([(d - first).days for d, _ in rows])
    observed = np.array([v for _, v in rows], dtype=np.float64)
    n = int(offsets[-1]) + 1
    if n == len(rows):
        return DailySeries(first, observed, label)

    if policy == "error":
        gaps = np.flatnonzero(np.diff(offsets) > 1)
        missing = first + dt.timedelta(days=int(offsets[gaps[0]]) + 1)
        raise GapFound(
            f"{label!r}: {n - len(rows)} missing date(s), first missing {missing}"
        )
    if policy == "zero":
        values = np.zeros(n)
        values[offsets] = observed
    else:
        values = np.interp(np.arange(n), offsets, observed)
        # np.interp is exact at the knots already; re-assign to make that explicit
        values[offsets] = observed
    return DailySeries(first, values, label)


def resample_weekly(s: DailySeries, mode: WeeklyMode = "sum") -> WeeklySeries:
    """Aggregate consecutive 7-day blocks anchored at ``s.start``.

    A trailing partial block is dropped.
    """
    if mode not in WEEKLY_MODES:
        raise ValueError(f"unknown weekly mode {mode!r}")
    weeks = len(s) // 7
    if weeks == 0:
        raise TooShort(f"{s.label!r} has {len(s)} day(s); need at least 7 for a weekly value")
    blocks = s.values[: weeks * 7].reshape(weeks, 7)
    sums = blocks.sum(axis=1)
    values = sums if mode == "sum" else sums / 7.0
    return WeeklySeries(s.start, values, mode, s.label)


def weekly_pair(a: WeeklySeries, b: WeeklySeries) -> AlignedPair:
    """Pair two weekly series that share their block anchoring."""
    if a.start != b.start or len(a) != len(b):
        raise RangeMismatch(
            f"weekly series {a.label!r} and {b.label!r} are not aligned "
            f"({a.start}/{len(a)} vs {b.start}/{len(b)})"
        )
    return AlignedPair(a.values, b.values, None, a.label, b.label)


def sum_series(series: Sequence[DailySeries], label: str) -> DailySeries:
    """Element-wise sum of series that cover identical date ranges."""
    if not series:
        raise EmptyInput(f"nothing to sum for {label!r}")
    first = series[0]
    for s in series[1:]:
        if s.start != first.start or len(s) != len(first):
            raise RangeMismatch(
                f"{s.label!r} covers {s.start}..{s.end}, "
                f"expected {first.start}..{first.end}"
            )
    total = np.sum(np.stack([s.values for s in series]), axis=0)
    return DailySeries(first.start, total, label)
