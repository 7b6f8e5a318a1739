"""CSV ingestion and the file-backed daily-record store.

The CSV header must match EXPECTED_HEADER exactly (order included):
silent column reordering is a classic corruption source in hospital
exports, so it is rejected rather than reconciled. Loads are
all-or-nothing; every bad row is reported with its line number.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import threading
from pathlib import Path

from .core import FEATURE_NAMES, DailyRecord, FeatureVector, SchemaError

__all__ = [
    "EXPECTED_HEADER",
    "IngestError",
    "ConflictError",
    "ingest_csv",
    "parse_csv",
    "record_to_dict",
    "record_from_dict",
    "records_to_csv",
    "RecordStore",
]

EXPECTED_HEADER = ("facility_id", "date") + FEATURE_NAMES + ("actual_btt",)


class IngestError(ValueError):
    """The file was rejected; the message lists every offending line."""


class ConflictError(ValueError):
    """An ingested row disagrees with a stored row for the same
    (facility_id, date)."""


def _parse_row(row) -> DailyRecord:
    if len(row) != len(EXPECTED_HEADER):
        raise SchemaError(
            f"expected {len(EXPECTED_HEADER)} fields, got {len(row)}"
        )
    facility_id = row[0].strip()
    if not facility_id:
        raise SchemaError("facility_id is empty")
    try:
        date = dt.date.fromisoformat(row[1].strip())
    except ValueError:
        raise SchemaError(f"date {row[1]!r} is not ISO-8601") from None
    values = {}
    for name, text in zip(FEATURE_NAMES, row[2:15]):
        try:
            values[name] = float(text)
        except ValueError:
            raise SchemaError(f"{name} {text!r} is not a number") from None
    actual_text = row[15].strip()
    if actual_text == "":
        actual = None
    else:
        try:
            actual = float(actual_text)
        except ValueError:
            raise SchemaError(f"actual_btt {actual_text!r} is not a number") from None
    return DailyRecord(facility_id=facility_id, date=date,
                       features=FeatureVector(**values), actual_btt=actual)


def parse_csv(text: str, source: str = "<csv>") -> list[DailyRecord]:
    """Parse dataset CSV text into records; all-or-nothing."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise IngestError(f"{source}: file is empty, header required") from None
    if tuple(h.strip() for h in header) != EXPECTED_HEADER:
        raise IngestError(
            f"{source}: header mismatch\n"
            f"  expected: {','.join(EXPECTED_HEADER)}\n"
            f"  got:      {','.join(h.strip() for h in header)}"
        )
    records = []
    problems = []
    seen: dict[tuple, int] = {}
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            record = _parse_row(row)
        except SchemaError as exc:
            problems.append(f"  line {line_no}: {exc}")
            continue
        key = (record.facility_id, record.date)
        if key in seen:
            problems.append(
                f"  line {line_no}: duplicate facility_id/date "
                f"{key[0]}/{key[1].isoformat()} (first at line {seen[key]})"
            )
            continue
        seen[key] = line_no
        records.append(record)
    if problems:
        raise IngestError(
            f"{source}: {len(problems)} invalid row(s), nothing loaded\n"
            + "\n".join(problems)
        )
    return records


def ingest_csv(path) -> list[DailyRecord]:
    """Load and validate a dataset CSV file."""
    path = Path(path)
    if not path.exists():
        raise IngestError(f"{path}: no such file")
    return parse_csv(path.read_text(encoding="utf-8"), source=str(path))


def record_to_dict(record: DailyRecord) -> dict:
    return {
        "facility_id": record.facility_id,
        "date": record.date.isoformat(),
        "features": record.features.as_dict(),
        "actual_btt": record.actual_btt,
    }


def record_from_dict(data: dict) -> DailyRecord:
    try:
        return DailyRecord(
            facility_id=data["facility_id"],
            date=dt.date.fromisoformat(data["date"]),
            features=FeatureVector.from_dict(data["features"]),
            actual_btt=data["actual_btt"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad record payload: {exc}") from exc


def records_to_csv(records) -> str:
    """Serialize records back to the dataset CSV schema."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(EXPECTED_HEADER)
    for r in records:
        actual = "" if r.actual_btt is None else repr(r.actual_btt)
        writer.writerow([r.facility_id, r.date.isoformat()]
                        + [repr(v) for v in r.features.as_array().tolist()]
                        + [actual])
    return out.getvalue()


class RecordStore:
    """Append-only JSONL store of daily records, keyed by (facility_id, date).

    Re-ingesting an identical row is a no-op; a differing row for an
    existing key raises ConflictError and nothing from that batch is stored.
    """

    def __init__(self, path):
        self._path = Path(path)
        self._lock = threading.Lock()
        self._records: dict[tuple, DailyRecord] = {}
        if self._path.exists():
            with self._path.open(encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        record = record_from_dict(json.loads(line))
                        self._records[(record.facility_id, record.date)] = record

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def merge(self, records) -> tuple[int, int]:
        """Add records; returns (n_new, n_unchanged)."""
        with self._lock:
            fresh = []
            conflicts = []
            unchanged = 0
            for record in records:
                key = (record.facility_id, record.date)
                stored = self._records.get(key)
                if stored is None:
                    fresh.append(record)
                elif stored == record:
                    unchanged += 1
                else:
                    conflicts.append(f"{key[0]}/{key[1].isoformat()}")
            if conflicts:
                raise ConflictError(
                    "conflicting values for already-ingested day(s): "
                    + ", ".join(sorted(conflicts))
                )
            self._path.parent.mkdir(parents=True, exist_ok=True)
            with self._path.open("a", encoding="utf-8") as fh:
                for record in fresh:
                    fh.write(json.dumps(record_to_dict(record)) + "\n")
                    self._records[(record.facility_id, record.date)] = record
            return len(fresh), unchanged

    def records(self) -> list[DailyRecord]:
        with self._lock:
            return sorted(self._records.values(),
                          key=lambda r: (r.facility_id, r.date))

    def facilities(self) -> list[dict]:
        """Per-facility day counts, sorted by facility id."""
        with self._lock:
            records = list(self._records.values())
        out = {}
        for r in records:
            row = out.setdefault(r.facility_id,
                                 {"facility_id": r.facility_id,
                                  "n_days": 0, "n_with_actual": 0})
            row["n_days"] += 1
            row["n_with_actual"] += r.actual_btt is not None
        return [out[k] for k in sorted(out)]
