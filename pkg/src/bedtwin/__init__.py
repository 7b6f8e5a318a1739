"""bedtwin: a discharge-to-bed-ready digital twin.

Simulates hospital bed turnaround (four cleaning stages contending for UA
and EVS staff), trains a gradient-boosting surrogate on simulated sweeps,
attributes predictions with Shapley values, and validates against
historical daily records. A compiled pipeline kernel is used when built;
the pure-Python kernel is the always-available fallback.
"""

from .core import (
    FEATURE_NAMES,
    STAGE_NAMES,
    DailyRecord,
    DomainError,
    EmpiricalDist,
    FeatureVector,
    Scenario,
    SchemaError,
    ShiftCalendar,
    ShiftId,
)
from .bedflow import (
    DEFAULT_BACKEND,
    ScenarioResult,
    available_backends,
    run_scenario,
    simulate_replication,
    sweep,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "FEATURE_NAMES",
    "STAGE_NAMES",
    "DailyRecord",
    "DomainError",
    "EmpiricalDist",
    "FeatureVector",
    "Scenario",
    "SchemaError",
    "ShiftCalendar",
    "ShiftId",
    "DEFAULT_BACKEND",
    "ScenarioResult",
    "available_backends",
    "run_scenario",
    "simulate_replication",
    "sweep",
]
