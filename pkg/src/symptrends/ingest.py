"""Parsers and writers for trend exports, case reports and symptom manifests.

Trend exports look like::

    Category: All categories

    Day,<query 1>: (<geo>),<query 2>: (<geo>)
    2020-03-02,57,<1
    ...

Every parser accepts raw bytes, a binary file object, or a filesystem path.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import math
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterator, Union

from .errors import (
    DataError,
    DuplicateId,
    EmptyVariants,
    IoFailure,
    MalformedDocument,
    MalformedHeader,
    MissingColumn,
    NegativeCount,
    NonNumericCell,
    UnparsableDate,
    ValueOutOfRange,
)
from .series import DailySeries, MissingPolicy, fill_missing

Source = Union[bytes, bytearray, BinaryIO, str, os.PathLike]

CENSORED_TOKEN = "<1"
DEFAULT_CENSORED_VALUE = 0.5
DEFAULT_GEO = "Saudi Arabia"
_GEO_SUFFIX = re.compile(r"^(?P<query>.*): \((?P<geo>[^()]*)\)$")
_SLUG = re.compile(r"^[a-z0-9][a-z0-9_-]*$")


def _read_bytes(source: Source) -> bytes:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source)
    if isinstance(source, (str, os.PathLike)):
        try:
            return Path(source).read_bytes()
        except OSError as exc:
            raise IoFailure(f"cannot read {source}: {exc}") from exc
    return source.read()


def _decode(data: bytes, what: str) -> str:
    try:
        return data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise MalformedDocument(f"{what} is not valid UTF-8: {exc}") from exc


def strip_geo(header_cell: str) -> str:
    """``"fever: (Saudi Arabia)"`` -> ``"fever"``; cells without a suffix pass through."""
    m = _GEO_SUFFIX.match(header_cell.strip())
    return m.group("query") if m else header_cell.strip()


# -- trends ------------------------------------------------------------------

def _locate_header(lines: list[str]) -> int:
    nonblank = [i for i, line in enumerate(lines) if line.strip()]
    if not nonblank:
        raise MalformedHeader("trends file is empty")
    first = nonblank[0]
    if lines[first].split(",", 1)[0].strip() == "Day":
        return first
    # header block, blank separator, then the column header
    for i in range(first, len(lines)):
        if not lines[i].strip():
            after = [j for j in nonblank if j > i]
            if after:
                return after[0]
            break
    raise MalformedHeader("no 'Day' header row found in trends file")


def _parse_rsv(cell: str, censored_value: float, row: int, label: str) -> float:
    cell = cell.strip()
    if cell == CENSORED_TOKEN:
        return censored_value
    try:
        v = float(cell)
    except ValueError:
        raise NonNumericCell(f"line {row}, column {label!r}: {cell!r} is not a number") from None
    if not math.isfinite(v):
        raise NonNumericCell(f"line {row}, column {label!r}: {cell!r} is not finite")
    if v < 0 or v > 100:
        raise ValueOutOfRange(f"line {row}, column {label!r}: {cell} outside [0, 100]")
    return v


def parse_trends_csv(
    file: Source,
    censored_value: float = DEFAULT_CENSORED_VALUE,
    policy: MissingPolicy = "error",
) -> list[DailySeries]:
    """Parse a daily trends export into one series per query column.

    Series are labeled by query text with the ``": (geo)"`` suffix removed.
    ``<1`` cells become ``censored_value``.

    Raises
    ------
    MalformedHeader
        No header row, or its first column is not ``Day``.
    NonNumericCell, ValueOutOfRange, UnparsableDate
        Bad data cells.
    GapFound
        Missing dates under ``policy="error"``.
    """
    if not 0.0 <= censored_value <= 1.0:
        raise ValueError(f"censored_value must lie in [0, 1], got {censored_value}")
    lines = _decode(_read_bytes(file), "trends file").splitlines()
    h = _locate_header(lines)
    header = next(csv.reader([lines[h]]))
    if not header or header[0].strip() != "Day":
        raise MalformedHeader(f"expected first column 'Day', got {header[:1]}")
    labels = [strip_geo(c) for c in header[1:]]
    if not labels or any(not lab for lab in labels):
        raise MalformedHeader("trends header has no (or empty) query columns")

    columns: list[list[tuple[dt.date, float]]] = [[] for _ in labels]
    for lineno, row in enumerate(csv.reader(lines[h + 1:]), start=h + 2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise MalformedDocument(
                f"line {lineno}: {len(row)} cells, header has {len(header)}"
            )
        try:
            day = dt.date.fromisoformat(row[0].strip())
        except ValueError:
            raise UnparsableDate(f"line {lineno}: bad date {row[0]!r}") from None
        for col, (cell, label) in enumerate(zip(row[1:], labels)):
            columns[col].append((day, _parse_rsv(cell, censored_value, lineno, label)))

    if not columns[0]:
        raise MalformedDocument("trends file has a header but no data rows")
    return [fill_missing(rows, policy, label) for rows, label in zip(columns, labels)]


def _format_rsv(v: float) -> str:
    if 0.0 < v < 1.0:
        return CENSORED_TOKEN
    if v != int(v):
        raise ValueError(f"RSV cells must be integers or censored, got {v}")
    return str(int(v))


def write_trends_csv(
    series: list[DailySeries],
    geo: str = DEFAULT_GEO,
    category: str = "All categories",
) -> bytes:
    """Serialize jointly-exported series in the trends export layout.

    Values strictly between 0 and 1 are written as ``<1``.
    """
    if not series:
        raise ValueError("nothing to write")
    first = series[0]
    for s in series[1:]:
        if s.start != first.start or len(s) != len(first):
            raise ValueError("all columns of one export must share a date range")
    buf = io.StringIO()
    buf.write(f"Category: {category}\n\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["Day"] + [f"{s.label}: ({geo})" for s in series])
    for i, day in enumerate(first.dates):
        w.writerow([day.isoformat()] + [_format_rsv(s.values[i]) for s in series])
    return buf.getvalue().encode("utf-8")


def load_trends_dir(
    directory: str | os.PathLike,
    censored_value: float = DEFAULT_CENSORED_VALUE,
    policy: MissingPolicy = "error",
) -> dict[str, DailySeries]:
    """Parse every ``*.csv`` export in a directory, keyed by query label."""
    root = Path(directory)
    if not root.is_dir():
        raise IoFailure(f"{root} is not a directory")
    out: dict[str, DailySeries] = {}
    for path in sorted(root.glob("*.csv")):
        try:
            parsed = parse_trends_csv(path, censored_value, policy)
        except DataError as exc:
            raise type(exc)(f"{path.name}: {exc}") from exc
        for s in parsed:
            if s.label in out:
                raise MalformedDocument(f"query {s.label!r} appears in more than one export")
            out[s.label] = s
    if not out:
        raise IoFailure(f"no .csv trend exports found in {root}")
    return out


# -- cases -------------------------------------------------------------------

@dataclass(frozen=True)
class CaseColumnMap:
    date_column: str = "date"
    value_column: str = "cases"
    date_format: str = "%Y-%m-%d"

    def __post_init__(self):
        if not self.date_column or not self.value_column:
            raise ValueError("column names must be non-empty")


def parse_cases_csv(
    file: Source,
    map: CaseColumnMap = CaseColumnMap(),
    policy: MissingPolicy = "error",
    label: str = "cases",
) -> DailySeries:
    """Parse a header-row CSV of daily new case counts."""
    text = _decode(_read_bytes(file), "cases file")
    reader = csv.DictReader(io.StringIO(text, newline=""))
    fields = [f.strip() for f in (reader.fieldnames or [])]
    for col in (map.date_column, map.value_column):
        if col not in fields:
            raise MissingColumn(f"cases file has no column {col!r} (columns: {fields})")
    reader.fieldnames = fields

    rows: list[tuple[dt.date, float]] = []
    for lineno, rec in enumerate(reader, start=2):
        raw_date = (rec.get(map.date_column) or "").strip()
        raw_value = (rec.get(map.value_column) or "").strip()
        if not raw_date and not raw_value:
            continue
        try:
            day = dt.datetime.strptime(raw_date, map.date_format).date()
        except ValueError:
            raise UnparsableDate(
                f"line {lineno}: {raw_date!r} does not match {map.date_format!r}"
            ) from None
        try:
            value = float(raw_value)
        except ValueError:
            raise NonNumericCell(f"line {lineno}: case count {raw_value!r} is not a number") from None
        if not math.isfinite(value):
            raise NonNumericCell(f"line {lineno}: case count {raw_value!r} is not finite")
        if value < 0:
            raise NegativeCount(f"line {lineno}: negative case count {raw_value}")
        rows.append((day, value))
    return fill_missing(rows, policy, label)


def write_cases_csv(cases: DailySeries, map: CaseColumnMap = CaseColumnMap()) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([map.date_column, map.value_column])
    for day, v in zip(cases.dates, cases.values):
        w.writerow([day.strftime(map.date_format), int(v) if v == int(v) else repr(float(v))])
    return buf.getvalue().encode("utf-8")


# -- manifest ----------------------------------------------------------------

@dataclass(frozen=True)
class SymptomEntry:
    id: str
    display_name: str
    language: str
    variants: tuple[str, ...]


@dataclass(frozen=True)
class SymptomManifest:
    entries: tuple[SymptomEntry, ...]

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.id in seen:
                raise DuplicateId(f"symptom id {e.id!r} appears more than once")
            seen.add(e.id)
            if not e.variants:
                raise EmptyVariants(f"symptom {e.id!r} has no variants")
            if len(set(e.variants)) != len(e.variants):
                raise MalformedDocument(f"symptom {e.id!r} lists a variant twice")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[SymptomEntry]:
        return iter(self.entries)

    @property
    def ids(self) -> list[str]:
        return [e.id for e in self.entries]

    @property
    def total_variants(self) -> int:
        return sum(len(e.variants) for e in self.entries)

    def get(self, symptom_id: str) -> SymptomEntry:
        for e in self.entries:
            if e.id == symptom_id:
                return e
        raise KeyError(symptom_id)


def _require_str(obj: dict, key: str, where: str) -> str:
    v = obj.get(key)
    if not isinstance(v, str) or not v:
        raise MalformedDocument(f"{where}: field {key!r} must be a non-empty string")
    return v


def parse_manifest(file: Source) -> SymptomManifest:
    """Parse and validate a JSON symptom manifest, keeping entry order."""
    text = _decode(_read_bytes(file), "manifest")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"manifest is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("entries"), list):
        raise MalformedDocument("manifest must be an object with an 'entries' list")

    entries = []
    for i, raw in enumerate(doc["entries"]):
        where = f"entries[{i}]"
        if not isinstance(raw, dict):
            raise MalformedDocument(f"{where} is not an object")
        sid = _require_str(raw, "id", where)
        if not _SLUG.match(sid):
            raise MalformedDocument(f"{where}: id {sid!r} is not a lowercase ascii slug")
        variants = raw.get("variants")
        if not isinstance(variants, list):
            raise MalformedDocument(f"{where}: 'variants' must be a list")
        if not variants:
            raise EmptyVariants(f"symptom {sid!r} has no variants")
        if not all(isinstance(v, str) and v for v in variants):
            raise MalformedDocument(f"{where}: variants must be non-empty strings")
        entries.append(SymptomEntry(
            id=sid,
            display_name=_require_str(raw, "display_name", where),
            language=_require_str(raw, "language", where),
            variants=tuple(variants),
        ))
    return SymptomManifest(tuple(entries))


def serialize_manifest(manifest: SymptomManifest) -> bytes:
    doc = {
        "entries": [
            {
                "id": e.id,
                "display_name": e.display_name,
                "language": e.language,
                "variants": list(e.variants),
            }
            for e in manifest
        ]
    }
    return (json.dumps(doc, ensure_ascii=False, indent=2) + "\n").encode("utf-8")


def load_default_manifest() -> SymptomManifest:
    """The ten Arabic symptom keyword groups (26 query variants) bundled with the package."""
    return parse_manifest(Path(__file__).with_name("data") / "symptoms_ar.json")
