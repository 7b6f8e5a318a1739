"""Bed-cleaning digital twin: discharge generation, the four-stage cleaning
pipeline with UA/EVS contention, BTT measurement and replication
orchestration.

Randomness protocol (fixed; determinism and common-random-numbers tests
depend on it): one ``numpy.random.Generator`` per replication, seeded from
``replication_seed(scenario.seed, rep_index)``. Draw order is (1) per
day, per shift: discharge count then placement uniforms, (2) per stage
0..3: one batch of service durations for all beds. All randomness is drawn
before the pipeline runs; the pipeline itself is a deterministic queueing
network, which is what lets the compiled and pure-Python backends be
bit-identical and lets capacity variants share draws.

Staff capacities are headcounts: the per-shift UA/EVS feature values are
rounded half-up to integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _pipeline_py
from .core import (
    FEATURE_NAMES,
    MINUTES_PER_DAY,
    DomainError,
    EmpiricalDist,
    FeatureVector,
    Scenario,
    ShiftId,
    fallback_dist,
    round_half_up,
    sample_batch,
)

try:
    from . import _fastpipe
except ImportError:  # extension not built; pure-Python kernel still works
    _fastpipe = None

__all__ = [
    "BedTrace",
    "ReplicationResult",
    "RepSummary",
    "ScenarioResult",
    "BackendError",
    "DEFAULT_BACKEND",
    "DEFAULT_SWEEP_RANGES",
    "available_backends",
    "run_pipeline",
    "generate_discharges",
    "compute_btt",
    "replication_seed",
    "simulate_replication",
    "run_scenario",
    "sweep",
    "lhs_grid",
]


class BackendError(RuntimeError):
    """Requested pipeline backend is unknown or not built."""


def available_backends() -> tuple[str, ...]:
    return ("cython", "python") if _fastpipe is not None else ("python",)


DEFAULT_BACKEND = "cython" if _fastpipe is not None else "python"


def run_pipeline(dirty_at, durations, ua_caps, evs_caps, bounds, horizon_days,
                 backend: str | None = None):
    """Run the four-stage pipeline on pre-drawn inputs.

    Thin dispatcher over the two twin kernels; see ``_pipeline_py`` for the
    contract. ``backend`` is "cython", "python" or None (package default).
    """
    backend = backend or DEFAULT_BACKEND
    if backend == "cython":
        if _fastpipe is None:
            raise BackendError("cython backend requested but extension is not built")
        return _fastpipe.run_pipeline(dirty_at, durations, ua_caps, evs_caps,
                                      bounds, horizon_days)
    if backend == "python":
        return _pipeline_py.run_pipeline(dirty_at, durations, ua_caps, evs_caps,
                                         bounds, horizon_days)
    raise BackendError(f"unknown backend {backend!r}")


@dataclass(frozen=True, slots=True)
class BedTrace:
    """Recorded lifecycle of one bed through the four stages.

    Stage indices: 0 dirty (UA service), 1 assigned (dispatch delay),
    2 clean (EVS service), 3 in-progress (recycle delay). An incomplete
    trace (bed not ready by horizon end) has NaN from the first unreached
    timestamp on.
    """

    bed_id: int
    dirty_at: float
    stage_starts: tuple[float, float, float, float]
    stage_ends: tuple[float, float, float, float]

    @property
    def ready_at(self) -> float:
        return self.stage_ends[3]

    @property
    def complete(self) -> bool:
        return not math.isnan(self.stage_ends[3])


def compute_btt(trace: BedTrace, origin: str = "dirty") -> float:
    """Bed turnaround time in minutes, inclusive of all queueing.

    origin "dirty" measures from wheel-out (default); "assigned" measures
    from the instant the bed is handed to the cleaning queue (end of
    stage 1), the alternative start point.
    """
    if not trace.complete:
        raise DomainError(f"bed {trace.bed_id} has an incomplete trace")
    if origin == "dirty":
        return trace.ready_at - trace.dirty_at
    if origin == "assigned":
        return trace.ready_at - trace.stage_ends[1]
    raise DomainError(f"unknown btt origin {origin!r}")


@dataclass(frozen=True, slots=True)
class ReplicationResult:
    """Single-replication output. Metrics cover post-warmup beds only;
    traces cover every completed bed."""

    rep_seed: int
    traces: tuple[BedTrace, ...]
    daily_mean_btt: tuple  # one entry per post-warmup day, None where empty
    overall_mean_btt: float | None
    completed_count: int
    uncompleted_count: int
    generated_count: int
    warnings: tuple[str, ...] = ()

    def summary(self) -> "RepSummary":
        return RepSummary(
            rep_seed=self.rep_seed,
            overall_mean_btt=self.overall_mean_btt,
            daily_mean_btt=self.daily_mean_btt,
            completed_count=self.completed_count,
            uncompleted_count=self.uncompleted_count,
            generated_count=self.generated_count,
            warnings=self.warnings,
        )


@dataclass(frozen=True, slots=True)
class RepSummary:
    """ReplicationResult minus the per-bed traces; what ScenarioResult keeps."""

    rep_seed: int
    overall_mean_btt: float | None
    daily_mean_btt: tuple
    completed_count: int
    uncompleted_count: int
    generated_count: int
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "rep_seed": self.rep_seed,
            "overall_mean_btt": self.overall_mean_btt,
            "daily_mean_btt": list(self.daily_mean_btt),
            "completed_count": self.completed_count,
            "uncompleted_count": self.uncompleted_count,
            "generated_count": self.generated_count,
            "warnings": list(self.warnings),
        }


@dataclass(frozen=True, slots=True)
class ScenarioResult:
    """Aggregate over replications: mean and sample SD of replication means."""

    mean_btt: float | None
    sd_btt: float
    per_replication: tuple[RepSummary, ...]
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "mean_btt": self.mean_btt,
            "sd_btt": self.sd_btt,
            "replications": len(self.per_replication),
            "per_replication": [r.to_dict() for r in self.per_replication],
            "warnings": list(self.warnings),
        }


def replication_seed(scenario_seed: int, rep_index: int) -> int:
    """Deterministic per-replication seed; depends only on (seed, index) so
    scenarios differing in features share random draws (CRN)."""
    ss = np.random.SeedSequence([int(scenario_seed), int(rep_index)])
    return int(ss.generate_state(1, np.uint64)[0])


def generate_discharges(scenario: Scenario, day: int, shift: ShiftId,
                        rng: np.random.Generator) -> np.ndarray:
    """Dirty-bed instants for one shift of one day, sorted ascending.

    Poisson mode draws the count then places each bed uniformly in the
    shift window; deterministic mode replays round_half_up(mean) beds at
    the window start and consumes no randomness.
    """
    mean = scenario.features.discharge_means[int(shift)]
    lo, hi = scenario.calendar.shift_window(day, shift)
    if scenario.arrival_mode == "deterministic":
        return np.full(round_half_up(mean), lo)
    count = int(rng.poisson(mean))
    return np.sort(rng.uniform(lo, hi, count))


# Stage fallback distributions depend only on (mean, cv, stage), never on the
# scenario seed: the features -> distribution mapping must be a fixed function
# for the surrogate's training sweep to be learnable.
_FALLBACK_SEEDS = (101, 102, 103, 104)


def _resolve_stage_dists(scenario: Scenario) -> tuple[EmpiricalDist, ...]:
    means = scenario.features.stage_means
    out = []
    for k in range(4):
        given = scenario.stage_dists[k]
        if given is not None:
            out.append(given)
        else:
            out.append(fallback_dist(means[k], scenario.duration_cv,
                                     seed=_FALLBACK_SEEDS[k]))
    return tuple(out)


def _staff_caps(scenario: Scenario) -> tuple[np.ndarray, np.ndarray]:
    ua = np.array([round_half_up(c) for c in scenario.features.ua_counts], dtype=np.int64)
    evs = np.array([round_half_up(c) for c in scenario.features.evs_counts], dtype=np.int64)
    return ua, evs


def simulate_replication(scenario: Scenario, rep_seed: int,
                         backend: str | None = None) -> ReplicationResult:
    """One independent replication of the scenario."""
    rng = np.random.default_rng(int(rep_seed))
    arrivals = []
    for day in range(scenario.horizon_days):
        for shift in (ShiftId.DAY, ShiftId.EVENING, ShiftId.NIGHT):
            arrivals.append(generate_discharges(scenario, day, shift, rng))
    dirty_at = np.concatenate(arrivals) if arrivals else np.empty(0)
    n = len(dirty_at)

    dists = _resolve_stage_dists(scenario)
    durations = np.empty((n, 4))
    for k in range(4):
        durations[:, k] = sample_batch(dists[k], rng, n)

    ua_caps, evs_caps = _staff_caps(scenario)
    warnings = []
    if n > 0:
        if not ua_caps.any():
            warnings.append("UA capacity is zero in every shift; no bed can start cleaning")
        if not evs_caps.any():
            warnings.append("EVS capacity is zero in every shift; no bed can be cleaned")

    bounds = np.asarray(scenario.calendar.sim_bounds())
    starts, ends, completed = run_pipeline(dirty_at, durations, ua_caps, evs_caps,
                                           bounds, scenario.horizon_days,
                                           backend=backend)

    traces = tuple(
        BedTrace(bed_id=int(i), dirty_at=float(dirty_at[i]),
                 stage_starts=tuple(float(x) for x in starts[i]),
                 stage_ends=tuple(float(x) for x in ends[i]))
        for i in np.flatnonzero(completed)
    )

    warmup_end = scenario.warmup_days * MINUTES_PER_DAY
    if scenario.btt_origin == "assigned":
        btt = ends[:, 3] - ends[:, 1]
    else:
        btt = ends[:, 3] - dirty_at
    metric = completed & (dirty_at >= warmup_end)

    day_index = np.floor(dirty_at / MINUTES_PER_DAY).astype(int) if n else np.empty(0, dtype=int)
    daily = []
    for day in range(scenario.warmup_days, scenario.horizon_days):
        mask = metric & (day_index == day)
        daily.append(float(btt[mask].mean()) if mask.any() else None)

    overall = float(btt[metric].mean()) if metric.any() else None

    return ReplicationResult(
        rep_seed=int(rep_seed),
        traces=traces,
        daily_mean_btt=tuple(daily),
        overall_mean_btt=overall,
        completed_count=int(completed.sum()),
        uncompleted_count=int(n - completed.sum()),
        generated_count=n,
        warnings=tuple(warnings),
    )


def run_scenario(scenario: Scenario, backend: str | None = None) -> ScenarioResult:
    """Run all replications and aggregate.

    Aggregation is ordered by replication index regardless of how the
    replications were executed.
    """
    summaries = []
    for k in range(scenario.replications):
        rep = simulate_replication(scenario, replication_seed(scenario.seed, k),
                                   backend=backend)
        summaries.append(rep.summary())

    means = [s.overall_mean_btt for s in summaries if s.overall_mean_btt is not None]
    if means:
        mean_btt = float(np.mean(means))
        sd_btt = float(np.std(means, ddof=1)) if len(means) > 1 else 0.0
    else:
        mean_btt = None
        sd_btt = 0.0

    warnings = tuple(sorted({w for s in summaries for w in s.warnings}))
    return ScenarioResult(mean_btt=mean_btt, sd_btt=sd_btt,
                          per_replication=tuple(summaries), warnings=warnings)


def sweep(scenario_grid, backend: str | None = None) -> list[tuple[FeatureVector, ScenarioResult]]:
    """Run a grid of scenarios; rows pair each scenario's features with its
    simulated result, input order preserved.

    The whole grid is validated before any scenario runs.
    """
    grid = list(scenario_grid)
    if not grid:
        raise DomainError("scenario grid is empty")
    for i, sc in enumerate(grid):
        if not isinstance(sc, Scenario):
            raise DomainError(f"grid entry {i} is not a Scenario")
    return [(sc.features, run_scenario(sc, backend=backend)) for sc in grid]


#: (lo, hi) sweep range per feature, in canonical feature order.
DEFAULT_SWEEP_RANGES = {
    **{name: (0.0, 40.0) for name in FEATURE_NAMES[0:3]},
    **{name: (1.0, 10.0) for name in FEATURE_NAMES[3:9]},
    **{name: (1.0, 120.0) for name in FEATURE_NAMES[9:13]},
}

_CAPACITY_FEATURES = frozenset(FEATURE_NAMES[3:9])


def lhs_grid(n_scenarios: int, seed: int = 0, ranges: dict | None = None,
             horizon_days: int = 30, warmup_days: int = 3, replications: int = 5,
             arrival_mode: str = "poisson", duration_cv: float = 0.5) -> list[Scenario]:
    """Latin-hypercube scenario grid over the sweep ranges.

    Each feature dimension is stratified into n bins with one sample per
    bin; staff-count dimensions are rounded to headcounts so the recorded
    features match what the simulation actually uses. The shorter
    horizon/replication defaults keep a training sweep desk-scale.
    """
    if n_scenarios < 1:
        raise DomainError("n_scenarios must be >= 1")
    ranges = dict(DEFAULT_SWEEP_RANGES if ranges is None else ranges)
    unknown = set(ranges) - set(FEATURE_NAMES)
    if unknown:
        raise DomainError(f"unknown feature(s) in ranges: {sorted(unknown)}")

    ss = np.random.SeedSequence(int(seed))
    rng = np.random.default_rng(ss)
    cols = {}
    for name in FEATURE_NAMES:
        lo, hi = ranges.get(name, DEFAULT_SWEEP_RANGES[name])
        if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
            raise DomainError(f"bad range for {name}: ({lo}, {hi})")
        strata = rng.permutation(n_scenarios)
        jitter = rng.uniform(size=n_scenarios)
        vals = lo + (strata + jitter) / n_scenarios * (hi - lo)
        if name in _CAPACITY_FEATURES:
            vals = np.array([float(round_half_up(v)) for v in vals])
        cols[name] = vals

    scenario_seeds = [int(c.generate_state(1, np.uint64)[0]) for c in ss.spawn(n_scenarios)]
    grid = []
    for i in range(n_scenarios):
        fv = FeatureVector(**{name: float(cols[name][i]) for name in FEATURE_NAMES})
        grid.append(Scenario(features=fv, horizon_days=horizon_days,
                             warmup_days=warmup_days, replications=replications,
                             seed=scenario_seeds[i], arrival_mode=arrival_mode,
                             duration_cv=duration_cv))
    return grid
