"""Tests for CSV ingestion and the record store."""

import datetime as dt

import pytest

from bedtwin.core import FEATURE_NAMES, DailyRecord, FeatureVector
from bedtwin.ingest import (
    EXPECTED_HEADER,
    ConflictError,
    IngestError,
    RecordStore,
    ingest_csv,
    parse_csv,
    record_from_dict,
    record_to_dict,
    records_to_csv,
)

HEADER = ",".join(EXPECTED_HEADER)

FEATURE_CELLS = "6,4,2,3,3,2,3,3,2,20,10,40,15"


def row(facility="fac_a", date="2024-03-01", features=FEATURE_CELLS, actual="62.5"):
    return f"{facility},{date},{features},{actual}"


def make_csv(*rows):
    return HEADER + "\n" + "\n".join(rows) + "\n"


def test_header_has_sixteen_exact_columns():
    assert len(EXPECTED_HEADER) == 16
    assert EXPECTED_HEADER[0] == "facility_id"
    assert EXPECTED_HEADER[1] == "date"
    assert EXPECTED_HEADER[2:15] == FEATURE_NAMES
    assert EXPECTED_HEADER[15] == "actual_btt"


def test_well_formed_rows_load():
    text = make_csv(row(), row(date="2024-03-02", actual="58"),
                    row(facility="fac_b"))
    records = parse_csv(text)
    assert len(records) == 3
    assert records[0].facility_id == "fac_a"
    assert records[0].date == dt.date(2024, 3, 1)
    assert records[0].actual_btt == 62.5
    assert records[0].features.day_discharges == 6.0


def test_empty_actual_is_absent():
    records = parse_csv(make_csv(row(actual="")))
    assert records[0].actual_btt is None


def test_reordered_header_rejected():
    shuffled = list(EXPECTED_HEADER)
    shuffled[0], shuffled[1] = shuffled[1], shuffled[0]
    text = ",".join(shuffled) + "\n" + row() + "\n"
    with pytest.raises(IngestError, match="header mismatch"):
        parse_csv(text)


def test_empty_file_rejected():
    with pytest.raises(IngestError, match="header required"):
        parse_csv("")


def test_bad_rows_reported_with_line_numbers():
    text = make_csv(
        row(),                              # line 2: fine
        row(date="03/04/2024"),             # line 3: bad date
        row(features="6,4,x,3,3,2,3,3,2,20,10,40,15"),  # line 4: bad number
        row(actual="-5"),                   # line 5: negative actual
    )
    with pytest.raises(IngestError) as exc:
        parse_csv(text)
    message = str(exc.value)
    assert "3 invalid row(s)" in message
    assert "line 3" in message and "ISO-8601" in message
    assert "line 4" in message and "night_discharges" in message
    assert "line 5" in message
    assert "line 2" not in message


def test_negative_feature_rejected_with_line():
    text = make_csv(row(features="6,4,2,3,3,2,-3,3,2,20,10,40,15"))
    with pytest.raises(IngestError, match="line 2"):
        parse_csv(text)


def test_wrong_field_count_rejected():
    text = make_csv("fac_a,2024-03-01,1,2")
    with pytest.raises(IngestError, match="expected 16 fields"):
        parse_csv(text)


def test_empty_facility_rejected():
    with pytest.raises(IngestError, match="facility_id is empty"):
        parse_csv(make_csv(row(facility="")))


def test_in_file_duplicate_rejected():
    text = make_csv(row(), row(actual="99"))
    with pytest.raises(IngestError, match=r"duplicate.*first at line 2"):
        parse_csv(text)


def test_all_or_nothing():
    """One bad row rejects the whole file, not just that row."""
    with pytest.raises(IngestError):
        parse_csv(make_csv(row(), row(date="bad", facility="fac_b")))


def test_blank_lines_skipped():
    text = HEADER + "\n" + row() + "\n\n" + row(date="2024-03-02") + "\n\n"
    assert len(parse_csv(text)) == 2


def test_ingest_csv_reads_files(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text(make_csv(row()), encoding="utf-8")
    assert len(ingest_csv(path)) == 1
    with pytest.raises(IngestError, match="no such file"):
        ingest_csv(tmp_path / "missing.csv")


def test_csv_round_trip_is_lossless():
    text = make_csv(row(), row(date="2024-03-02", actual=""),
                    row(facility="fac_b", features="0.125,4,2,3,3,2,3,3,2,20.5,10,40,15"))
    records = parse_csv(text)
    assert parse_csv(records_to_csv(records)) == records


def test_record_dict_round_trip():
    record = parse_csv(make_csv(row()))[0]
    assert record_from_dict(record_to_dict(record)) == record


# ---------------------------------------------------------------- RecordStore


def _three_records():
    return parse_csv(make_csv(row(), row(date="2024-03-02"),
                              row(facility="fac_b", actual="")))


def test_store_merge_and_reload(tmp_path):
    path = tmp_path / "records.jsonl"
    store = RecordStore(path)
    assert store.merge(_three_records()) == (3, 0)
    assert len(store) == 3

    again = RecordStore(path)
    assert len(again) == 3
    assert again.records() == store.records()


def test_store_reingest_is_idempotent(tmp_path):
    store = RecordStore(tmp_path / "records.jsonl")
    store.merge(_three_records())
    assert store.merge(_three_records()) == (0, 3)
    assert len(store) == 3


def test_store_conflict_rejected_atomically(tmp_path):
    store = RecordStore(tmp_path / "records.jsonl")
    store.merge(_three_records())
    conflicting = parse_csv(make_csv(row(actual="99"),
                                     row(facility="fac_c", date="2024-04-01")))
    with pytest.raises(ConflictError, match="fac_a/2024-03-01"):
        store.merge(conflicting)
    # the non-conflicting row from the batch was not stored either
    assert len(store) == 3


def test_store_facilities_counts(tmp_path):
    store = RecordStore(tmp_path / "records.jsonl")
    store.merge(_three_records())
    assert store.facilities() == [
        {"facility_id": "fac_a", "n_days": 2, "n_with_actual": 2},
        {"facility_id": "fac_b", "n_days": 1, "n_with_actual": 0},
    ]


def test_store_records_sorted_by_facility_then_date(tmp_path):
    store = RecordStore(tmp_path / "records.jsonl")
    records = _three_records()
    store.merge(reversed(records))
    assert [(r.facility_id, r.date.isoformat()) for r in store.records()] == [
        ("fac_a", "2024-03-01"), ("fac_a", "2024-03-02"), ("fac_b", "2024-03-01"),
    ]
