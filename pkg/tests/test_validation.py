"""Tests for the validation harness."""

import datetime as dt
import math
import random
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bedtwin.bedflow import replication_seed, run_scenario, simulate_replication
from bedtwin.core import FEATURE_NAMES, DailyRecord, DomainError, FeatureVector, Scenario
from bedtwin.gbm import GbmModel
from bedtwin.validation import (
    OUTLIER_THRESHOLD,
    ErrorStats,
    ValidationRow,
    build_report,
    coverage,
    error_stats,
    mae,
    outlier_analysis,
    render_report,
    report_to_dict,
)

GOLDEN = Path(__file__).parent / "golden" / "validation_report.txt"

FEATURE_DEFAULTS = {
    "day_discharges": 6.0,
    "eve_discharges": 4.0,
    "night_discharges": 2.0,
    "day_ua": 3.0,
    "eve_ua": 3.0,
    "night_ua": 2.0,
    "day_evs": 3.0,
    "eve_evs": 3.0,
    "night_evs": 2.0,
    "avg_dirty_wait": 20.0,
    "avg_assigned_wait": 10.0,
    "avg_clean_wait": 40.0,
    "avg_in_progress_wait": 15.0,
}


def fv(**overrides) -> FeatureVector:
    return FeatureVector(**{**FEATURE_DEFAULTS, **overrides})


def constant_model(value: float) -> GbmModel:
    """Ensemble with no trees: predicts ``value`` everywhere."""
    return GbmModel(base_score=value, learning_rate=0.05, trees=())


# ---------------------------------------------------------------- mae


def test_mae_arithmetic():
    assert mae([0.0, 0.0], [2.0, -2.0]) == 2.0


def test_mae_identity():
    assert mae([31.0, 5.5, 80.0], [31.0, 5.5, 80.0]) == 0.0


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40), st.data())
def test_mae_symmetric_and_nonnegative(a, data):
    b = data.draw(st.lists(st.floats(-1e6, 1e6), min_size=len(a), max_size=len(a)))
    m = mae(a, b)
    assert m == mae(b, a)
    assert m >= 0.0
    if m == 0.0:
        assert a == b


def test_mae_rejects_mismatch_and_empty():
    with pytest.raises(DomainError, match="mismatch"):
        mae([1.0, 2.0], [1.0])
    with pytest.raises(DomainError, match="empty"):
        mae([], [])
    with pytest.raises(DomainError, match="finite"):
        mae([1.0, math.nan], [0.0, 0.0])


# ---------------------------------------------------------------- coverage


def test_coverage_zero_deviation():
    assert coverage([10.0], [10.0], [1.0], 1.0) == 1.0


def test_coverage_three_sigma_away():
    assert coverage([13.0], [10.0], [1.0], 2.0) == 0.0


def test_coverage_boundary_is_covered():
    # |a - m| equals k * sd exactly
    assert coverage([12.0], [10.0], [1.0], 2.0) == 1.0


def test_coverage_k_zero_counts_exact_matches():
    assert coverage([10.0, 11.0], [10.0, 10.0], [1.0, 1.0], 0.0) == 0.5


@given(
    st.lists(st.floats(-100, 100), min_size=1, max_size=30),
    st.data(),
    st.floats(0, 5),
    st.floats(0, 5),
)
def test_coverage_nondecreasing_in_k(a, data, k1, k2):
    n = len(a)
    m = data.draw(st.lists(st.floats(-100, 100), min_size=n, max_size=n))
    sd = data.draw(st.lists(st.floats(0, 10), min_size=n, max_size=n))
    lo, hi = sorted((k1, k2))
    assert coverage(a, m, sd, lo) <= coverage(a, m, sd, hi)


def test_coverage_rejections():
    with pytest.raises(DomainError, match="mismatch"):
        coverage([1.0], [1.0, 2.0], [1.0, 1.0], 1.0)
    with pytest.raises(DomainError, match="empty"):
        coverage([], [], [], 1.0)
    with pytest.raises(DomainError, match="non-negative"):
        coverage([1.0], [1.0], [-0.5], 1.0)
    with pytest.raises(DomainError, match="k must be"):
        coverage([1.0], [1.0], [1.0], -1.0)


# ---------------------------------------------------------------- error_stats


def test_error_stats_symmetric_errors_have_zero_skew():
    stats = error_stats([-1.0, 0.0, 1.0], [0.0, 0.0, 0.0])
    assert stats.errors == (-1.0, 0.0, 1.0)
    assert stats.mean == 0.0
    assert stats.skewness == 0.0


def test_error_stats_left_tail_skew_hand_computed():
    # errors (0, 0, 0, -10): mean -2.5, m2 18.75, m3 -93.75,
    # skew -93.75 / 18.75**1.5 = -2/sqrt(3)
    stats = error_stats([0.0, 0.0, 0.0, -10.0], [0.0, 0.0, 0.0, 0.0])
    assert stats.mean == -2.5
    assert stats.skewness == pytest.approx(-2.0 / math.sqrt(3.0), abs=1e-12)
    assert stats.skewness < 0


def test_error_stats_skew_undefined_below_three():
    assert error_stats([1.0], [0.0]).skewness is None
    assert error_stats([1.0, 5.0], [0.0, 0.0]).skewness is None


def test_error_stats_constant_errors_degenerate():
    stats = error_stats([4.0, 4.0, 4.0], [1.0, 1.0, 1.0])
    assert stats.sd == 0.0
    assert stats.skewness == 0.0
    assert sum(stats.counts) == 3


def test_error_stats_histogram_shape():
    rng = np.random.default_rng(5)
    a = rng.normal(60.0, 12.0, size=500)
    p = rng.normal(60.0, 12.0, size=500)
    stats = error_stats(a, p)
    assert len(stats.counts) == 30
    assert len(stats.bin_edges) == 31
    assert sum(stats.counts) == 500
    e = np.array(a) - np.array(p)
    assert stats.bin_edges[0] == pytest.approx(e.min())
    assert stats.bin_edges[-1] == pytest.approx(e.max())


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=50), st.data())
def test_error_stats_mean_identity(a, data):
    p = data.draw(st.lists(st.floats(-1e3, 1e3), min_size=len(a), max_size=len(a)))
    stats = error_stats(a, p)
    assert stats.mean == pytest.approx(np.mean(a) - np.mean(p), abs=1e-9)
    assert sum(stats.counts) == len(a)


def test_error_stats_over_prediction_skews_negative():
    """A predictor that occasionally over-predicts badly leaves a left tail."""
    actual = [60.0] * 50
    predicted = [60.0 + (120.0 if i % 10 == 0 else random.Random(i).uniform(-5, 5))
                 for i in range(50)]
    assert error_stats(actual, predicted).skewness < 0


# ---------------------------------------------------------------- outlier_analysis


def _outlier_fixture():
    """Rows 0-4 are outliers (error -80) staffed with day_evs=1; the other
    fifteen rows sit at error -10 with day_evs=5."""
    errors = [-80.0] * 5 + [-10.0] * 15
    features = [fv(day_evs=1.0).as_array() for _ in range(5)]
    features += [fv(day_evs=5.0).as_array() for _ in range(15)]
    return np.array(errors), np.array(features)


def test_outlier_planted_evs_difference():
    errors, X = _outlier_fixture()
    report = outlier_analysis(errors, X)
    assert report.threshold == -60.0
    assert not report.flagged
    assert report.outlier_count == 5
    assert report.rest_count == 15
    i = FEATURE_NAMES.index("day_evs")
    assert report.outlier_means[i] == 1.0
    assert report.rest_means[i] == 5.0
    assert report.differences[i] == -4.0
    for j in range(len(FEATURE_NAMES)):
        if j != i:
            assert report.differences[j] == 0.0


def test_outlier_threshold_is_strict():
    errors = np.array([-60.0, -60.0, -61.0])
    X = np.array([fv().as_array()] * 3)
    report = outlier_analysis(errors, X)
    assert report.outlier_count == 1


def test_outlier_empty_group_flagged():
    errors, X = _outlier_fixture()
    below_min = outlier_analysis(errors, X, threshold=-1000.0)
    assert below_min.flagged
    assert below_min.outlier_count == 0
    assert below_min.differences is None
    above_max = outlier_analysis(errors, X, threshold=1000.0)
    assert above_max.flagged
    assert above_max.rest_count == 0


def test_outlier_rejections():
    errors, X = _outlier_fixture()
    with pytest.raises(DomainError, match="row-aligned"):
        outlier_analysis(errors[:3], X)
    with pytest.raises(DomainError, match="finite"):
        outlier_analysis(errors, X, threshold=math.inf)


def test_outlier_report_to_dict_names_features():
    errors, X = _outlier_fixture()
    d = outlier_analysis(errors, X).to_dict()
    assert d["differences"]["day_evs"] == -4.0
    assert set(d["outlier_means"]) == set(FEATURE_NAMES)


def test_default_threshold_constant():
    assert OUTLIER_THRESHOLD == -60.0


# ---------------------------------------------------------------- build_report


def _records(facility_id, actuals, start=dt.date(2024, 3, 1), feature=None):
    feature = feature if feature is not None else fv()
    return [
        DailyRecord(facility_id=facility_id, date=start + dt.timedelta(days=i),
                    features=feature, actual_btt=a)
        for i, a in enumerate(actuals)
    ]


def test_report_perfect_predictor():
    records = _records("fac_a", [77.0] * 5)
    rows = build_report(records, constant_model(77.0), lambda f: (77.0, 4.0))
    assert [r.facility_id for r in rows] == ["All", "fac_a"]
    for r in rows:
        assert r.mae_ml == 0.0
        assert r.mae_sim == 0.0
        assert r.coverage_1sd == 1.0
        assert r.coverage_2sd == 1.0
        assert not r.low_n
    assert rows[0].n_days == 5


def test_report_all_row_pools_records():
    """Pooled MAE over unequal facility sizes, not the mean of facility MAEs."""
    records = _records("fac_a", [60.0]) + _records("fac_b", [50.0, 50.0, 50.0])
    rows = build_report(records, constant_model(50.0), lambda f: (50.0, 1.0))
    by_id = {r.facility_id: r for r in rows}
    assert by_id["fac_a"].mae_ml == 10.0
    assert by_id["fac_b"].mae_ml == 0.0
    assert by_id["All"].mae_ml == 2.5
    assert by_id["All"].n_days == 4


def test_report_flags_low_n():
    records = _records("solo", [55.0]) + _records("pair", [55.0, 56.0])
    rows = build_report(records, constant_model(55.0), lambda f: (55.0, 2.0))
    by_id = {r.facility_id: r for r in rows}
    assert by_id["solo"].low_n
    assert not by_id["pair"].low_n
    assert not by_id["All"].low_n


def test_report_permutation_invariant():
    records = _records("a", [50.0, 62.0, 58.0]) + _records("b", [70.0, 66.0])
    model = constant_model(60.0)
    runner = lambda f: (61.0, 5.0)
    base = build_report(records, model, runner)
    for seed in (1, 2, 3):
        shuffled = records[:]
        random.Random(seed).shuffle(shuffled)
        assert build_report(shuffled, model, runner) == base


def test_report_rejects_missing_actual_and_empty():
    record = DailyRecord(facility_id="x", date=dt.date(2024, 1, 1), features=fv())
    with pytest.raises(DomainError, match="actual_btt"):
        build_report([record], constant_model(0.0), lambda f: (0.0, 1.0))
    with pytest.raises(DomainError, match="empty"):
        build_report([], constant_model(0.0), lambda f: (0.0, 1.0))


def test_report_without_sim_runner_is_ml_only():
    records = _records("fac_a", [60.0, 70.0])
    rows = build_report(records, constant_model(65.0), None)
    for r in rows:
        assert r.mae_ml == 5.0
        assert r.mae_sim is None
        assert r.coverage_1sd is None
        assert r.coverage_2sd is None
    text = render_report(rows)
    assert "-" in text.splitlines()[2]


def test_report_sim_runner_called_once_per_distinct_features():
    calls = []

    def runner(f):
        calls.append(f)
        return (60.0, 3.0)

    records = _records("a", [58.0, 61.0, 59.0])
    build_report(records, constant_model(60.0), runner)
    assert len(calls) == 1


def _facility_scenario(seed, day_evs):
    feature = fv(day_evs=float(day_evs))
    return Scenario(features=feature, horizon_days=12, warmup_days=2,
                    replications=6, seed=seed)


def test_report_end_to_end_on_simulated_facilities():
    """Synthetic dataset: actuals are daily means of an extra replication,
    the sim column re-runs the same scenario."""
    results = {}
    records = []
    for f in range(6):
        sc = _facility_scenario(seed=900 + f, day_evs=2 + f % 3)
        results[tuple(sc.features.as_array())] = run_scenario(sc)
        extra_seed = replication_seed(sc.seed, sc.replications)
        rep = simulate_replication(sc, extra_seed)
        day0 = dt.date(2024, 5, 1)
        for day, value in enumerate(rep.daily_mean_btt):
            if value is not None:
                records.append(DailyRecord(
                    facility_id=f"fac_{f}", date=day0 + dt.timedelta(days=day),
                    features=sc.features, actual_btt=value))

    def runner(feature):
        res = results[tuple(feature.as_array())]
        return (res.mean_btt, res.sd_btt)

    actuals = [r.actual_btt for r in records]
    model = constant_model(float(np.mean(actuals)))
    rows = build_report(records, model, runner)
    assert rows[0].facility_id == "All"
    assert len(rows) == 7
    for r in rows:
        assert r.coverage_2sd >= r.coverage_1sd
        assert 0.0 <= r.coverage_1sd <= 1.0
        assert 0.0 <= r.coverage_2sd <= 1.0
        assert r.mae_ml >= 0.0
        assert r.mae_sim >= 0.0
    assert rows[0].n_days == len(records)


# ---------------------------------------------------------------- rendering


def _golden_rows():
    return [
        ValidationRow("All", 31.99, 20.87, 0.97, 0.99, 120),
        ValidationRow("Facility 1", 25.4, 18.0, 0.95, 1.0, 119),
        ValidationRow("Facility 2", 88.0, 3.25, 1.0, 1.0, 1, low_n=True),
    ]


def test_render_matches_golden_file():
    assert render_report(_golden_rows()) == GOLDEN.read_text()


def test_render_alignment():
    lines = render_report(_golden_rows()).splitlines()
    assert lines[0].startswith("Facility")
    assert set(lines[1]) == {"-"}
    assert len(lines[1]) == len(lines[0])
    # numeric columns are right-aligned on the same boundary
    assert lines[2].rstrip().endswith("120")
    assert lines[-1] == "* fewer than 2 days"


def test_report_to_dict_round_trip_shape():
    d = report_to_dict(_golden_rows())
    assert [r["facility_id"] for r in d["rows"]] == ["All", "Facility 1", "Facility 2"]
    assert d["rows"][0]["mae_ml"] == 31.99
    assert d["rows"][2]["low_n"] is True
