"""Shared domain vocabulary: shifts, the 13-feature schema, empirical
distributions, scenarios and the seeded-randomness contract.

All values here are immutable after construction and safe to share across
threads. Random streams are always explicit ``numpy.random.Generator``
instances; nothing in this package touches global RNG state.
"""

from __future__ import annotations

import datetime as dt
import enum
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ShiftId",
    "ShiftCalendar",
    "DEFAULT_CALENDAR",
    "FEATURE_NAMES",
    "FeatureVector",
    "DailyRecord",
    "EmpiricalDist",
    "Scenario",
    "SchemaError",
    "DomainError",
    "EmptyDistributionError",
    "build_feature_vector",
    "sample",
    "sample_batch",
    "fallback_dist",
    "round_half_up",
]

MINUTES_PER_DAY = 1440.0


class SchemaError(ValueError):
    """A record or vector violates the feature schema."""


class DomainError(ValueError):
    """A parameter is outside its mathematical domain."""


class EmptyDistributionError(ValueError):
    """Sampling was attempted from an empty empirical distribution."""


class ShiftId(enum.IntEnum):
    """The three daily staffing shifts, ordered Day < Evening < Night."""

    DAY = 0
    EVENING = 1
    NIGHT = 2


@dataclass(frozen=True)
class ShiftCalendar:
    """Clock boundaries of the three shifts, in minutes from midnight.

    The three shifts must partition the 24-hour day exactly: Day ends where
    Evening starts, Evening ends where Night starts, and Night wraps around
    to the start of Day. Simulation time is anchored so that t=0 coincides
    with the start of the Day shift; see :meth:`sim_bounds`.
    """

    day_start: int = 420  # 07:00
    eve_start: int = 900  # 15:00
    night_start: int = 1380  # 23:00

    def __post_init__(self):
        for name in ("day_start", "eve_start", "night_start"):
            v = getattr(self, name)
            if not (0 <= v < MINUTES_PER_DAY):
                raise DomainError(f"{name} must lie in [0, 1440), got {v}")
        if any(d <= 0 for d in self.durations()):
            raise DomainError(
                "shift boundaries must be in cyclic order Day -> Evening -> Night "
                "with every shift strictly positive"
            )

    def durations(self) -> tuple[float, float, float]:
        """Per-shift lengths in minutes; always sums to 1440."""
        day = (self.eve_start - self.day_start) % MINUTES_PER_DAY
        eve = (self.night_start - self.eve_start) % MINUTES_PER_DAY
        night = MINUTES_PER_DAY - day - eve
        return (day, eve, night)

    def sim_bounds(self) -> tuple[float, float, float, float]:
        """Cumulative shift offsets from the start of a simulated day.

        Simulated days start at ``day_start`` o'clock, so the Night shift is
        contiguous in simulation time even though it wraps midnight on the
        wall clock.
        """
        day, eve, _ = self.durations()
        return (0.0, day, day + eve, MINUTES_PER_DAY)

    def shift_at(self, sim_minutes: float) -> ShiftId:
        """Shift active at a simulation timestamp (t=0 is Day-shift start)."""
        tod = sim_minutes % MINUTES_PER_DAY
        bounds = self.sim_bounds()
        if tod < bounds[1]:
            return ShiftId.DAY
        if tod < bounds[2]:
            return ShiftId.EVENING
        return ShiftId.NIGHT

    def shift_window(self, day_index: int, shift: ShiftId) -> tuple[float, float]:
        """[start, end) of a shift on a given simulated day, in sim minutes."""
        bounds = self.sim_bounds()
        base = day_index * MINUTES_PER_DAY
        return (base + bounds[shift], base + bounds[shift + 1])

    def to_dict(self) -> dict:
        return {
            "day_start": self.day_start,
            "eve_start": self.eve_start,
            "night_start": self.night_start,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ShiftCalendar":
        return cls(**{k: int(data[k]) for k in ("day_start", "eve_start", "night_start")})


DEFAULT_CALENDAR = ShiftCalendar()

#: Canonical feature order (index 0..12). This is also the column order of
#: the CSV dataset schema, between facility_id/date and actual_btt.
FEATURE_NAMES = (
    "day_discharges",
    "eve_discharges",
    "night_discharges",
    "day_ua",
    "eve_ua",
    "night_ua",
    "day_evs",
    "eve_evs",
    "night_evs",
    "avg_dirty_wait",
    "avg_assigned_wait",
    "avg_clean_wait",
    "avg_in_progress_wait",
)

#: Names of the four cleaning-stage duration features, in pipeline order.
STAGE_NAMES = ("dirty", "assigned", "clean", "in_progress")


@dataclass(frozen=True)
class FeatureVector:
    """The 13 daily scenario inputs, in canonical index order.

    Discharge counts are beds/day per shift, UA/EVS are staff counts per
    shift (daily averages, so reals), and the four ``avg_*`` fields are
    per-stage duration means in minutes.
    """

    day_discharges: float = 0.0
    eve_discharges: float = 0.0
    night_discharges: float = 0.0
    day_ua: float = 0.0
    eve_ua: float = 0.0
    night_ua: float = 0.0
    day_evs: float = 0.0
    eve_evs: float = 0.0
    night_evs: float = 0.0
    avg_dirty_wait: float = 0.0
    avg_assigned_wait: float = 0.0
    avg_clean_wait: float = 0.0
    avg_in_progress_wait: float = 0.0

    def __post_init__(self):
        for name in FEATURE_NAMES:
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise SchemaError(f"feature '{name}' must be finite, got {v!r}")
            if v < 0:
                raise SchemaError(f"feature '{name}' must be non-negative, got {v!r}")
            object.__setattr__(self, name, v)

    def __getitem__(self, index: int) -> float:
        return getattr(self, FEATURE_NAMES[index])

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in FEATURE_NAMES], dtype=np.float64)

    def as_dict(self) -> dict:
        return {n: getattr(self, n) for n in FEATURE_NAMES}

    @classmethod
    def from_array(cls, values) -> "FeatureVector":
        values = list(values)
        if len(values) != len(FEATURE_NAMES):
            raise SchemaError(
                f"feature vector must have length {len(FEATURE_NAMES)}, got {len(values)}"
            )
        return cls(**dict(zip(FEATURE_NAMES, map(float, values))))

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureVector":
        unknown = set(data) - set(FEATURE_NAMES)
        if unknown:
            raise SchemaError(f"unknown feature fields: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})

    @property
    def discharge_means(self) -> tuple[float, float, float]:
        return (self.day_discharges, self.eve_discharges, self.night_discharges)

    @property
    def ua_counts(self) -> tuple[float, float, float]:
        return (self.day_ua, self.eve_ua, self.night_ua)

    @property
    def evs_counts(self) -> tuple[float, float, float]:
        return (self.day_evs, self.eve_evs, self.night_evs)

    @property
    def stage_means(self) -> tuple[float, float, float, float]:
        return (
            self.avg_dirty_wait,
            self.avg_assigned_wait,
            self.avg_clean_wait,
            self.avg_in_progress_wait,
        )


@dataclass(frozen=True)
class DailyRecord:
    """One facility-day of observed inputs, with an optional observed BTT."""

    facility_id: str
    date: dt.date
    features: FeatureVector
    actual_btt: float | None = None

    def __post_init__(self):
        if self.actual_btt is not None:
            v = float(self.actual_btt)
            if not math.isfinite(v) or v < 0:
                raise SchemaError(
                    f"actual_btt must be a finite non-negative number, got {self.actual_btt!r}"
                )
            object.__setattr__(self, "actual_btt", v)


def build_feature_vector(record: DailyRecord) -> FeatureVector:
    """The record's 13 inputs in canonical index order 0..12."""
    return record.features


class EmpiricalDist:
    """A bag of observed non-negative values, sampled uniformly with replacement."""

    __slots__ = ("samples", "label")

    def __init__(self, samples, label: str = ""):
        arr = np.asarray(samples, dtype=np.float64)
        if arr.ndim != 1:
            raise DomainError("samples must be one-dimensional")
        if arr.size and (not np.all(np.isfinite(arr)) or np.any(arr < 0)):
            raise DomainError(f"distribution '{label}' has negative or non-finite samples")
        arr.flags.writeable = False
        self.samples = arr
        self.label = label

    def __len__(self) -> int:
        return self.samples.size

    def __repr__(self) -> str:
        return f"EmpiricalDist(n={len(self)}, label={self.label!r})"


def sample(dist: EmpiricalDist, rng: np.random.Generator) -> float:
    """One uniformly-chosen element of the distribution (one rng call)."""
    n = len(dist)
    if n == 0:
        raise EmptyDistributionError(f"cannot sample from empty distribution {dist.label!r}")
    return float(dist.samples[int(rng.integers(n))])


def sample_batch(dist: EmpiricalDist, rng: np.random.Generator, count: int) -> np.ndarray:
    """Vectorised equivalent of ``count`` successive :func:`sample` calls."""
    n = len(dist)
    if n == 0:
        raise EmptyDistributionError(f"cannot sample from empty distribution {dist.label!r}")
    return dist.samples[rng.integers(n, size=count)]


def fallback_dist(mean: float, cv: float, seed: int = 0, size: int = 1024) -> EmpiricalDist:
    """Synthetic stand-in when only a daily *average* duration is known.

    Pre-draws ``size`` lognormal samples matched to the requested mean and
    coefficient of variation. Degenerate cases: mean 0 gives all zeros, cv 0
    gives every sample exactly ``mean``.
    """
    if not math.isfinite(mean) or mean < 0:
        raise DomainError(f"mean must be finite and non-negative, got {mean!r}")
    if not math.isfinite(cv) or cv < 0:
        raise DomainError(f"cv must be finite and non-negative, got {cv!r}")
    label = f"lognormal(mean={mean:g}, cv={cv:g})"
    if mean == 0.0:
        return EmpiricalDist(np.zeros(size), label)
    if cv == 0.0:
        return EmpiricalDist(np.full(size, float(mean)), label)
    # Moment matching: for lognormal, mean = exp(mu + sigma^2/2) and
    # cv^2 = exp(sigma^2) - 1.
    sigma2 = math.log1p(cv * cv)
    mu = math.log(mean) - sigma2 / 2.0
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return EmpiricalDist(rng.lognormal(mu, math.sqrt(sigma2), size), label)


def round_half_up(x: float) -> int:
    """Nearest integer with ties rounding up; used for staffing capacities."""
    return int(math.floor(x + 0.5))


ARRIVAL_MODES = ("poisson", "deterministic")
BTT_ORIGINS = ("dirty", "assigned")


@dataclass(frozen=True)
class Scenario:
    """A fully specified simulation configuration.

    ``stage_dists`` may override the four duration features with explicit
    empirical distributions (ordered dirty, assigned, clean, in-progress);
    where an entry is None the stage's service times are drawn from
    ``fallback_dist(mean, duration_cv)`` with the mean taken from
    ``features``.

    ``arrival_mode`` "poisson" draws per-shift discharge counts from a
    Poisson with the shift's feature mean, placing each bed uniformly in
    the shift window. "deterministic" is an exact-count replay mode for
    regression fixtures: round-half-up of the mean, all placed at the shift
    start.

    ``btt_origin`` selects the turnaround measurement origin: "dirty"
    (wheel-out, the default) or "assigned" (end of the dispatch-lag stage).
    """

    features: FeatureVector
    stage_dists: tuple = (None, None, None, None)
    horizon_days: int = 100
    warmup_days: int = 5
    replications: int = 30
    seed: int = 0
    calendar: ShiftCalendar = field(default_factory=ShiftCalendar)
    arrival_mode: str = "poisson"
    duration_cv: float = 0.5
    btt_origin: str = "dirty"

    def __post_init__(self):
        if not isinstance(self.features, FeatureVector):
            raise SchemaError("features must be a FeatureVector")
        sd = tuple(self.stage_dists)
        if len(sd) != 4 or not all(d is None or isinstance(d, EmpiricalDist) for d in sd):
            raise SchemaError("stage_dists must be 4 optional EmpiricalDists")
        if any(d is not None and len(d) == 0 for d in sd):
            raise SchemaError("stage_dists entries must be non-empty when present")
        object.__setattr__(self, "stage_dists", sd)
        if int(self.horizon_days) < 1:
            raise DomainError(f"horizon_days must be >= 1, got {self.horizon_days}")
        if not (0 <= int(self.warmup_days) < int(self.horizon_days)):
            raise DomainError(
                f"warmup_days must satisfy 0 <= warmup < horizon, got "
                f"warmup={self.warmup_days} horizon={self.horizon_days}"
            )
        if int(self.replications) < 1:
            raise DomainError(f"replications must be >= 1, got {self.replications}")
        if not (0 <= int(self.seed) < 2**64):
            raise DomainError("seed must be an unsigned 64-bit integer")
        if self.arrival_mode not in ARRIVAL_MODES:
            raise DomainError(f"arrival_mode must be one of {ARRIVAL_MODES}")
        if not (math.isfinite(self.duration_cv) and self.duration_cv >= 0):
            raise DomainError("duration_cv must be finite and non-negative")
        if self.btt_origin not in BTT_ORIGINS:
            raise DomainError(f"btt_origin must be one of {BTT_ORIGINS}")
        for name in ("horizon_days", "warmup_days", "replications", "seed"):
            object.__setattr__(self, name, int(getattr(self, name)))
        object.__setattr__(self, "duration_cv", float(self.duration_cv))

    def to_dict(self) -> dict:
        d = {
            "features": self.features.as_dict(),
            "horizon_days": self.horizon_days,
            "warmup_days": self.warmup_days,
            "replications": self.replications,
            "seed": self.seed,
            "calendar": self.calendar.to_dict(),
            "arrival_mode": self.arrival_mode,
            "duration_cv": self.duration_cv,
            "btt_origin": self.btt_origin,
        }
        if any(s is not None for s in self.stage_dists):
            d["stage_dists"] = {
                name: (None if s is None else list(map(float, s.samples)))
                for name, s in zip(STAGE_NAMES, self.stage_dists)
            }
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        if not isinstance(data, dict):
            raise SchemaError("scenario must be a JSON object")
        known = {
            "features",
            "stage_dists",
            "horizon_days",
            "warmup_days",
            "replications",
            "seed",
            "calendar",
            "arrival_mode",
            "duration_cv",
            "btt_origin",
        }
        unknown = set(data) - known
        if unknown:
            raise SchemaError(f"unknown scenario fields: {sorted(unknown)}")
        if "features" not in data:
            raise SchemaError("scenario is missing 'features'")
        feats = data["features"]
        features = (
            FeatureVector.from_array(feats)
            if isinstance(feats, (list, tuple))
            else FeatureVector.from_dict(feats)
        )
        kwargs = {"features": features}
        if "stage_dists" in data and data["stage_dists"] is not None:
            sd = data["stage_dists"]
            unknown = set(sd) - set(STAGE_NAMES)
            if unknown:
                raise SchemaError(f"unknown stage_dists keys: {sorted(unknown)}")
            kwargs["stage_dists"] = tuple(
                None if sd.get(name) is None else EmpiricalDist(sd[name], label=name)
                for name in STAGE_NAMES
            )
        if "calendar" in data and data["calendar"] is not None:
            kwargs["calendar"] = ShiftCalendar.from_dict(data["calendar"])
        for name in (
            "horizon_days",
            "warmup_days",
            "replications",
            "seed",
            "arrival_mode",
            "duration_cv",
            "btt_origin",
        ):
            if name in data and data[name] is not None:
                kwargs[name] = data[name]
        return cls(**kwargs)
