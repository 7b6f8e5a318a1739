"""Benchmark the compiled pipeline backend against the pure-Python one.

Run with ``python3 -m bedtwin.bench``. Both backends execute the same
scenario workload; the report shows per-backend wall time and speedup,
and asserts that the two produce identical results.
"""

from __future__ import annotations

import argparse
import time

from .bedflow import available_backends, run_scenario
from .core import Scenario
from .util import canonical_json

_FEATURES = {
    "day_discharges": 18.0, "eve_discharges": 10.0, "night_discharges": 4.0,
    "day_ua": 3.0, "eve_ua": 2.0, "night_ua": 1.0,
    "day_evs": 4.0, "eve_evs": 3.0, "night_evs": 2.0,
    "avg_dirty_wait": 35.0, "avg_assigned_wait": 12.0,
    "avg_clean_wait": 70.0, "avg_in_progress_wait": 40.0,
}


def _workload(horizon_days: int, replications: int) -> Scenario:
    return Scenario.from_dict({
        "features": _FEATURES,
        "horizon_days": horizon_days,
        "warmup_days": 3,
        "replications": replications,
        "seed": 20240301,
    })


def _time_backend(scenario: Scenario, backend: str, repeats: int) -> tuple[float, str]:
    """Best-of-N wall time plus the canonical result payload."""
    payload = ""
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        result = run_scenario(scenario, backend=backend)
        best = min(best, time.perf_counter() - start)
        payload = canonical_json(result.to_dict())
    return best, payload


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="python3 -m bedtwin.bench",
        description="Compare pipeline backends on a shared workload.")
    parser.add_argument("--horizon-days", type=int, default=60)
    parser.add_argument("--replications", type=int, default=30)
    parser.add_argument("--repeats", type=int, default=3,
                        help="timing repeats per backend (best is reported)")
    args = parser.parse_args(argv)

    backends = available_backends()
    scenario = _workload(args.horizon_days, args.replications)
    print(f"workload: {args.horizon_days} days x {args.replications} "
          f"replications, best of {args.repeats}")

    timings: dict[str, float] = {}
    payloads: dict[str, str] = {}
    for backend in backends:
        elapsed, payload = _time_backend(scenario, backend, args.repeats)
        timings[backend] = elapsed
        payloads[backend] = payload
        print(f"  {backend:<8} {elapsed * 1000.0:9.1f} ms")

    if len(backends) < 2:
        print("compiled backend not built; nothing to compare")
        return 0

    if payloads["cython"] != payloads["python"]:
        print("MISMATCH: backends disagree on the result payload")
        return 1
    speedup = timings["python"] / timings["cython"]
    print(f"  results identical; cython speedup {speedup:.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
