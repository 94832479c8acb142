"""CSV loading of attack and vulnerability exports into event streams.

Column names are never guessed: a mapping names the source column for
each field, e.g. ``{"date": "Date", "attack_class": "Attack class"}`` for
attacks and ``{"cve_id": "CVE", "published": "Published", "cvss": "Score"}``
for vulnerabilities. A vulnerability mapping may set ``"assume_exploited":
true`` with no ``cvss`` column (catalogues of exploited vulnerabilities
carry no score), in which case every dated row is kept.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import warnings
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, SchemaError, UndefinedCorrelationError
from .model import EventStream
from .rng import path_generator

DATE_FORMATS = ("%Y-%m-%d", "%m/%d/%Y")


@dataclass(frozen=True)
class AttackRecord:
    date: dt.date
    cve_id: Optional[str] = None
    attack_class: Optional[str] = None
    country: Optional[str] = None
    target_class: Optional[str] = None


@dataclass(frozen=True)
class VulnRecord:
    cve_id: str
    published: dt.date
    cvss: Optional[float] = None


@dataclass(frozen=True)
class SkippedRow:
    line: int
    reason: str


def parse_date(text: str) -> dt.date:
    """ISO-8601 (optionally with a time part) or MM/DD/YYYY."""
    text = (text or "").strip()
    for fmt in DATE_FORMATS:
        try:
            return dt.datetime.strptime(text, fmt).date()
        except ValueError:
            pass
    try:
        return dt.datetime.fromisoformat(text).date()
    except ValueError:
        raise ValueError(f"unparseable date {text!r}") from None


def _rows(path) -> Tuple[List[str], Iterable[Tuple[int, Dict[str, str]]]]:
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        # line 1 is the header
        rows = [(i + 2, row) for i, row in enumerate(reader)]
    return header, rows


def _optional(row: Dict[str, str], column: Optional[str]) -> Optional[str]:
    if not column:
        return None
    value = (row.get(column) or "").strip()
    return value or None


def load_attacks(path, mapping: Dict[str, str]
                 ) -> Tuple[List[AttackRecord], List[SkippedRow]]:
    """Attack records sorted by date, plus the rows skipped for bad dates."""
    if "date" not in mapping:
        raise SchemaError("attack mapping must name a 'date' column")
    header, rows = _rows(path)
    if not header and not rows:
        return [], []
    if mapping["date"] not in header:
        raise SchemaError(f"date column {mapping['date']!r} not in {header}")
    for key in ("cve_id", "attack_class", "country", "target_class"):
        col = mapping.get(key)
        if col and col not in header:
            raise SchemaError(f"{key} column {col!r} not in {header}")
    records, skipped = [], []
    for line, row in rows:
        try:
            date = parse_date(row.get(mapping["date"], ""))
        except ValueError as exc:
            skipped.append(SkippedRow(line, str(exc)))
            continue
        records.append(AttackRecord(
            date, _optional(row, mapping.get("cve_id")),
            _optional(row, mapping.get("attack_class")),
            _optional(row, mapping.get("country")),
            _optional(row, mapping.get("target_class"))))
    records.sort(key=lambda r: r.date)
    return records, skipped


def load_vulns(path, mapping: Dict, cvss_min: float = 5.0
               ) -> Tuple[List[VulnRecord], List[SkippedRow]]:
    """Vulnerabilities with score >= cvss_min, sorted by publication date.

    Rows with a bad date or a score outside [0, 10] are rejected and
    reported; rows below the threshold are dropped silently.
    """
    for key in ("cve_id", "published"):
        if key not in mapping:
            raise SchemaError(f"vulnerability mapping must name a {key!r} column")
    score_col = mapping.get("cvss")
    assume = bool(mapping.get("assume_exploited", False))
    if not score_col and not assume:
        raise SchemaError("mapping needs a 'cvss' column or assume_exploited")
    header, rows = _rows(path)
    if not header and not rows:
        return [], []
    needed = [mapping["cve_id"], mapping["published"]]
    if score_col:
        needed.append(score_col)
    missing = [c for c in needed if c not in header]
    if missing:
        raise SchemaError(f"columns {missing} not in {header}")
    records, rejected = [], []
    for line, row in rows:
        try:
            published = parse_date(row.get(mapping["published"], ""))
        except ValueError as exc:
            rejected.append(SkippedRow(line, str(exc)))
            continue
        cve = (row.get(mapping["cve_id"]) or "").strip()
        score = None
        if score_col:
            text = (row.get(score_col) or "").strip()
            try:
                score = float(text)
            except ValueError:
                if assume and not text:
                    score = None
                else:
                    rejected.append(SkippedRow(line, f"bad score {text!r}"))
                    continue
            if score is not None and not 0.0 <= score <= 10.0:
                rejected.append(SkippedRow(line, f"score {score} outside [0, 10]"))
                continue
        if score is not None and score < cvss_min:
            continue
        records.append(VulnRecord(cve, published, score))
    records.sort(key=lambda r: r.published)
    return records, rejected


def _to_date(value) -> dt.date:
    if isinstance(value, dt.datetime):
        return value.date()
    if isinstance(value, dt.date):
        return value
    return parse_date(str(value))


def _jittered(days: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    times = np.sort(days + gen.random(days.size))
    # float ties are astronomically unlikely; separate them anyway
    for i in range(1, times.size):
        if times[i] <= times[i - 1]:
            times[i] = np.nextafter(times[i - 1], np.inf)
    return times


def build_event_stream(attacks: Sequence[AttackRecord],
                       vulns: Sequence[VulnRecord], t0, s, tau,
                       seed: int = 0) -> EventStream:
    """Day offsets from t0 with seeded intra-day jitter in [0, 1).

    ``t0`` and ``s`` refer to the start of their day and ``tau`` to the end
    of its day, so events dated ``tau`` are kept.
    """
    t0, s, tau = _to_date(t0), _to_date(s), _to_date(tau)
    if not t0 <= s <= tau:
        raise DomainError("dates must satisfy t0 <= s <= tau")
    end = (tau - t0).days + 1.0

    def offsets(dates):
        d = np.array([(x - t0).days for x in dates], dtype=np.float64)
        return np.sort(d[(d >= 0) & (d < end)])

    internal = _jittered(offsets(a.date for a in attacks), path_generator(seed, 0))
    external = _jittered(offsets(v.published for v in vulns), path_generator(seed, 1))
    internal = internal[internal < end]
    external = external[external < end]
    if internal.size == 0 and external.size == 0:
        warnings.warn("no events fall inside the window", stacklevel=2)
    return EventStream(0.0, float((s - t0).days), end, internal, external)


def export_event_stream_csv(ev: EventStream, path, t0) -> None:
    """Write kind, time (days from t0) and calendar date of every event."""
    t0 = _to_date(t0)
    rows = [("internal", t) for t in ev.internal_times]
    rows += [("external", t) for t in ev.external_times]
    rows.sort(key=lambda r: (r[1], r[0]))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "time", "date"])
        for kind, t in rows:
            day = t0 + dt.timedelta(days=int(np.floor(t)))
            writer.writerow([kind, repr(float(t)), day.isoformat()])


def read_event_stream_csv(path, s: float, tau: float, t0: float = 0.0) -> EventStream:
    """Inverse of export_event_stream_csv (times only).

    Events outside [t0, tau] are dropped so one file can serve several
    windows.
    """
    internal, external = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or not {"kind", "time"} <= set(reader.fieldnames):
            raise SchemaError("event file needs 'kind' and 'time' columns")
        for row in reader:
            kind = row["kind"].strip()
            try:
                t = float(row["time"])
            except ValueError:
                raise SchemaError(f"bad time {row['time']!r}") from None
            if kind == "internal":
                internal.append(t)
            elif kind == "external":
                external.append(t)
            else:
                raise SchemaError(f"unknown event kind {kind!r}")
    def inside(times):
        return sorted(t for t in times if t0 <= t <= tau)

    return EventStream(t0, s, tau, inside(internal), inside(external))


def yearly_counts(attacks: Sequence[AttackRecord]) -> Dict[int, int]:
    return dict(sorted(Counter(a.date.year for a in attacks).items()))


def monthly_counts(attacks: Sequence[AttackRecord]) -> np.ndarray:
    """Counts per calendar month from the first to the last month, zero-filled."""
    if not attacks:
        return np.zeros(0, dtype=np.int64)
    keys = [a.date.year * 12 + a.date.month - 1 for a in attacks]
    first = min(keys)
    return np.bincount(np.array(keys) - first)


def monthly_autocorrelation(attacks: Sequence[AttackRecord]) -> float:
    """Pearson correlation between each month's count and the next month's."""
    counts = monthly_counts(attacks).astype(np.float64)
    if counts.size < 3:
        raise UndefinedCorrelationError("need at least three months of data")
    x, y = counts[:-1], counts[1:]
    if np.std(x) == 0 or np.std(y) == 0:
        raise UndefinedCorrelationError("monthly counts have zero variance")
    return float(np.corrcoef(x, y)[0, 1])


def load_mapping(path) -> Dict:
    """Column mapping config: JSON object with 'attacks' and/or 'vulns' keys."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise SchemaError("mapping file must hold a JSON object")
    return data
