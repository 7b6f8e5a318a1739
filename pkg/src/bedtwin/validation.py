"""Validation harness: MAE, sigma-coverage, error distributions, outlier
diagnosis, and the per-facility summary report.

Error convention throughout: error = actual - predicted, so negative
errors mean over-prediction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import FEATURE_NAMES, DomainError
from .gbm import GbmModel, predict_batch

__all__ = [
    "ValidationRow",
    "ErrorStats",
    "OutlierReport",
    "mae",
    "coverage",
    "error_stats",
    "outlier_analysis",
    "build_report",
    "render_report",
    "report_to_dict",
    "OUTLIER_THRESHOLD",
]

#: Errors below this many minutes are treated as outliers by default.
OUTLIER_THRESHOLD = -60.0

HISTOGRAM_BINS = 30


@dataclass(frozen=True)
class ValidationRow:
    """One line of the summary report; 'All' pools every record.

    Simulation columns are None when the report was built without a
    sim_runner."""

    facility_id: str
    mae_ml: float
    mae_sim: float | None
    coverage_1sd: float | None
    coverage_2sd: float | None
    n_days: int
    low_n: bool = False

    def to_dict(self) -> dict:
        return {
            "facility_id": self.facility_id,
            "mae_ml": self.mae_ml,
            "mae_sim": self.mae_sim,
            "coverage_1sd": self.coverage_1sd,
            "coverage_2sd": self.coverage_2sd,
            "n_days": self.n_days,
            "low_n": self.low_n,
        }


@dataclass(frozen=True)
class ErrorStats:
    """Moments and histogram of actual - predicted.

    mean/sd/skewness are population moments; skewness is None for n < 3
    and 0.0 for degenerate (zero-variance) errors. Histogram is 30
    equal-width bins over [min, max]."""

    errors: tuple
    mean: float
    sd: float
    skewness: float | None
    bin_edges: tuple
    counts: tuple

    def to_dict(self) -> dict:
        return {
            "n": len(self.errors),
            "mean": self.mean,
            "sd": self.sd,
            "skewness": self.skewness,
            "bin_edges": list(self.bin_edges),
            "counts": list(self.counts),
        }


@dataclass(frozen=True)
class OutlierReport:
    """Feature-mean comparison between the outlier group (error below the
    threshold) and everyone else. ``flagged`` marks a degenerate partition
    (either group empty), in which case the comparison fields are None."""

    threshold: float
    outlier_count: int
    rest_count: int
    outlier_means: tuple | None
    rest_means: tuple | None
    differences: tuple | None
    flagged: bool

    def to_dict(self) -> dict:
        def named(values):
            return None if values is None else {
                n: v for n, v in zip(FEATURE_NAMES, values)
            }

        return {
            "threshold": self.threshold,
            "outlier_count": self.outlier_count,
            "rest_count": self.rest_count,
            "outlier_means": named(self.outlier_means),
            "rest_means": named(self.rest_means),
            "differences": named(self.differences),
            "flagged": self.flagged,
        }


def _paired(actual, predicted) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(actual, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if a.shape != p.shape or a.ndim != 1:
        raise DomainError(f"length mismatch: {a.shape} vs {p.shape}")
    if len(a) == 0:
        raise DomainError("empty input")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(p))):
        raise DomainError("inputs must be finite")
    return a, p


def mae(actual, predicted) -> float:
    """Mean absolute error in minutes."""
    a, p = _paired(actual, predicted)
    return float(np.mean(np.abs(a - p)))


def coverage(actual, sim_mean, sim_sd, k: float) -> float:
    """Fraction of days with |actual - sim_mean| <= k * sim_sd.

    The boundary counts as covered (closed ball)."""
    a, m = _paired(actual, sim_mean)
    sd = np.asarray(sim_sd, dtype=np.float64)
    if sd.shape != a.shape:
        raise DomainError(f"length mismatch: {a.shape} vs {sd.shape}")
    if np.any(sd < 0) or not np.all(np.isfinite(sd)):
        raise DomainError("sim_sd must be finite and non-negative")
    if not (math.isfinite(k) and k >= 0):
        raise DomainError(f"k must be finite and non-negative, got {k}")
    return float(np.mean(np.abs(a - m) <= k * sd))


def error_stats(actual, predicted) -> ErrorStats:
    """Distribution of actual - predicted."""
    a, p = _paired(actual, predicted)
    errors = a - p
    mean = float(np.mean(errors))
    centered = errors - mean
    m2 = float(np.mean(centered**2))
    sd = math.sqrt(m2)
    if len(errors) < 3:
        skew = None
    elif m2 == 0.0:
        skew = 0.0
    else:
        skew = float(np.mean(centered**3) / m2**1.5)
    counts, edges = np.histogram(errors, bins=HISTOGRAM_BINS)
    return ErrorStats(
        errors=tuple(float(e) for e in errors),
        mean=mean,
        sd=sd,
        skewness=skew,
        bin_edges=tuple(float(e) for e in edges),
        counts=tuple(int(c) for c in counts),
    )


def outlier_analysis(errors, features, threshold: float = OUTLIER_THRESHOLD) -> OutlierReport:
    """Compare feature means of rows with error < threshold against the rest."""
    errors = np.asarray(errors, dtype=np.float64)
    X = np.asarray(features, dtype=np.float64)
    if not math.isfinite(threshold):
        raise DomainError(f"threshold must be finite, got {threshold}")
    if X.ndim != 2 or X.shape[0] != len(errors):
        raise DomainError(
            f"features must be row-aligned with errors: {X.shape} vs {len(errors)}"
        )
    is_outlier = errors < threshold
    n_out = int(is_outlier.sum())
    n_rest = int(len(errors) - n_out)
    if n_out == 0 or n_rest == 0:
        return OutlierReport(threshold=float(threshold), outlier_count=n_out,
                             rest_count=n_rest, outlier_means=None,
                             rest_means=None, differences=None, flagged=True)
    out_means = X[is_outlier].mean(axis=0)
    rest_means = X[~is_outlier].mean(axis=0)
    return OutlierReport(
        threshold=float(threshold),
        outlier_count=n_out,
        rest_count=n_rest,
        outlier_means=tuple(float(v) for v in out_means),
        rest_means=tuple(float(v) for v in rest_means),
        differences=tuple(float(v) for v in out_means - rest_means),
        flagged=False,
    )


def _row(facility_id: str, records, ml_pred, sim_mean, sim_sd) -> ValidationRow:
    actual = np.array([r.actual_btt for r in records])
    has_sim = sim_mean is not None
    return ValidationRow(
        facility_id=facility_id,
        mae_ml=mae(actual, ml_pred),
        mae_sim=mae(actual, sim_mean) if has_sim else None,
        coverage_1sd=coverage(actual, sim_mean, sim_sd, 1.0) if has_sim else None,
        coverage_2sd=coverage(actual, sim_mean, sim_sd, 2.0) if has_sim else None,
        n_days=len(records),
        low_n=len(records) < 2,
    )


def build_report(dataset, ml_model: GbmModel, sim_runner) -> list[ValidationRow]:
    """The pooled 'All' row followed by per-facility ValidationRows.

    ``sim_runner`` maps a FeatureVector to (mean, sd) of simulated BTT;
    pass None for an ML-only report (simulation columns absent).
    Records are put in a canonical order first, so the report does not
    depend on input order. Identical feature vectors are simulated once.
    """
    records = list(dataset)
    if not records:
        raise DomainError("dataset is empty")
    for r in records:
        if r.actual_btt is None:
            raise DomainError(
                f"record {r.facility_id}/{r.date.isoformat()} has no actual_btt"
            )
    records.sort(key=lambda r: (r.facility_id, r.date.isoformat(), r.actual_btt,
                                tuple(r.features.as_array())))

    X = np.array([r.features.as_array() for r in records])
    ml_pred = predict_batch(ml_model, X)

    sim_mean = sim_sd = None
    if sim_runner is not None:
        cache: dict[tuple, tuple[float, float]] = {}
        sim_mean = np.empty(len(records))
        sim_sd = np.empty(len(records))
        for i, r in enumerate(records):
            key = tuple(X[i])
            if key not in cache:
                cache[key] = sim_runner(r.features)
            sim_mean[i], sim_sd[i] = cache[key]

    def slice_of(values, idx):
        return None if values is None else values[idx]

    all_idx = np.arange(len(records))
    rows = [_row("All", records, ml_pred, slice_of(sim_mean, all_idx),
                 slice_of(sim_sd, all_idx))]
    facilities = sorted({r.facility_id for r in records})
    for fac in facilities:
        idx = [i for i, r in enumerate(records) if r.facility_id == fac]
        rows.append(_row(fac, [records[i] for i in idx], ml_pred[idx],
                         slice_of(sim_mean, idx), slice_of(sim_sd, idx)))
    return rows


def render_report(rows) -> str:
    """Aligned-column text view of the validation rows."""
    def cell(v):
        return "-" if v is None else f"{v:.2f}"

    header = ("Facility", "MAE_ML", "MAE_Sim", "Sim_1SD", "Sim_2SD", "Days")
    table = [header]
    for r in rows:
        fac = r.facility_id + (" *" if r.low_n else "")
        table.append((fac, cell(r.mae_ml), cell(r.mae_sim),
                      cell(r.coverage_1sd), cell(r.coverage_2sd),
                      str(r.n_days)))
    widths = [max(len(row[c]) for row in table) for c in range(len(header))]
    lines = []
    for i, row in enumerate(table):
        cells = [row[0].ljust(widths[0])]
        cells += [row[c].rjust(widths[c]) for c in range(1, len(header))]
        lines.append("  ".join(cells).rstrip())
        if i == 0:
            lines.append("-" * len(lines[0]))
    if any(r.low_n for r in rows):
        lines.append("* fewer than 2 days")
    return "\n".join(lines) + "\n"


def report_to_dict(rows) -> dict:
    return {"rows": [r.to_dict() for r in rows]}
