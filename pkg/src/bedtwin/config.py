"""Gateway configuration: a JSON file validated field by field at startup.

Every field has a default, so `{}` (or no file at all) is a valid
configuration. The config path comes from, in order of precedence:
an explicit argument (the CLI's --config), the BEDTWIN_CONFIG
environment variable, or built-in defaults.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .core import FEATURE_NAMES, Scenario, SchemaError
from .gbm import TrainParams

__all__ = ["ConfigError", "AppConfig", "SensitivityDefaults",
           "SyntheticDefaults", "load_config", "ENV_VAR"]

ENV_VAR = "BEDTWIN_CONFIG"


class ConfigError(ValueError):
    """Configuration rejected; the message names the offending field."""


def _reject_unknown(data: dict, known: set, where: str = "") -> None:
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"config field '{where}{unknown[0]}': unknown field")


def _expect(data: dict, key: str, kind, default, where: str = ""):
    value = data.get(key, default)
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ConfigError(
            f"config field '{where}{key}': expected {kind.__name__}, got {value!r}"
        )
    return value


def _expect_int(data: dict, key: str, default: int, lo: int, hi: int,
                where: str = "") -> int:
    value = _expect(data, key, int, default, where)
    if not lo <= value <= hi:
        raise ConfigError(
            f"config field '{where}{key}': expected integer in [{lo}, {hi}], got {value}"
        )
    return value


@dataclass(frozen=True)
class SensitivityDefaults:
    """Defaults for /api/sensitivity/global and the shap CLI."""

    mode: str = "sampled"
    n_permutations: int = 200
    seed: int = 0
    background_size: int = 64

    @classmethod
    def from_dict(cls, data: dict) -> "SensitivityDefaults":
        where = "sensitivity."
        _reject_unknown(data, {"mode", "n_permutations", "seed", "background_size"},
                        where)
        mode = _expect(data, "mode", str, cls.mode, where)
        if mode not in ("exact", "sampled"):
            raise ConfigError(
                f"config field 'sensitivity.mode': expected 'exact' or 'sampled', "
                f"got {mode!r}"
            )
        return cls(
            mode=mode,
            n_permutations=_expect_int(data, "n_permutations", cls.n_permutations,
                                       1, 1_000_000, where),
            seed=_expect_int(data, "seed", cls.seed, 0, 2**63 - 1, where),
            background_size=_expect_int(data, "background_size",
                                        cls.background_size, 1, 100_000, where),
        )


@dataclass(frozen=True)
class SyntheticDefaults:
    """Defaults for synthetic-sweep surrogate training."""

    n_scenarios: int = 96
    seed: int = 7

    @classmethod
    def from_dict(cls, data: dict) -> "SyntheticDefaults":
        where = "synthetic."
        _reject_unknown(data, {"n_scenarios", "seed"}, where)
        return cls(
            n_scenarios=_expect_int(data, "n_scenarios", cls.n_scenarios,
                                    1, 1_000_000, where),
            seed=_expect_int(data, "seed", cls.seed, 0, 2**63 - 1, where),
        )


@dataclass(frozen=True)
class AppConfig:
    """Validated gateway settings."""

    data_dir: str = "bedtwin_data"
    host: str = "127.0.0.1"
    port: int = 8000
    worker_count: int = 2
    ui_dir: str | None = None
    scenario_defaults: dict = field(default_factory=dict)
    train_params: TrainParams = field(default_factory=TrainParams)
    synthetic: SyntheticDefaults = field(default_factory=SyntheticDefaults)
    sensitivity: SensitivityDefaults = field(default_factory=SensitivityDefaults)

    @classmethod
    def from_dict(cls, data: dict) -> "AppConfig":
        if not isinstance(data, dict):
            raise ConfigError(f"config root: expected object, got {type(data).__name__}")
        _reject_unknown(data, {"data_dir", "host", "port", "worker_count",
                               "ui_dir", "scenario_defaults", "train",
                               "synthetic", "sensitivity"})

        ui_dir = data.get("ui_dir")
        if ui_dir is not None and not isinstance(ui_dir, str):
            raise ConfigError(f"config field 'ui_dir': expected string, got {ui_dir!r}")

        scenario_defaults = _expect(data, "scenario_defaults", dict, {})
        _validate_scenario_defaults(scenario_defaults)

        train = _expect(data, "train", dict, {})
        try:
            train_params = TrainParams(**train)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config field 'train': {exc}") from None

        synthetic = SyntheticDefaults.from_dict(_expect(data, "synthetic", dict, {}))
        sensitivity = SensitivityDefaults.from_dict(
            _expect(data, "sensitivity", dict, {}))

        return cls(
            data_dir=_expect(data, "data_dir", str, cls.data_dir),
            host=_expect(data, "host", str, cls.host),
            port=_expect_int(data, "port", cls.port, 1, 65535),
            worker_count=_expect_int(data, "worker_count", cls.worker_count, 1, 64),
            ui_dir=ui_dir,
            scenario_defaults=dict(scenario_defaults),
            train_params=train_params,
            synthetic=synthetic,
            sensitivity=sensitivity,
        )

    def data_path(self, name: str) -> Path:
        return Path(self.data_dir) / name


_SCENARIO_DEFAULT_KEYS = frozenset(
    {"horizon_days", "warmup_days", "replications", "seed",
     "arrival_mode", "duration_cv", "btt_origin"}
)


def _validate_scenario_defaults(defaults: dict) -> None:
    unknown = sorted(set(defaults) - _SCENARIO_DEFAULT_KEYS)
    if unknown:
        raise ConfigError(
            f"config field 'scenario_defaults.{unknown[0]}': unknown field"
        )
    # Constructing a probe Scenario reuses its field validation.
    probe = dict.fromkeys(FEATURE_NAMES, 1.0)
    try:
        Scenario.from_dict({"features": probe, **defaults})
    except (SchemaError, ValueError) as exc:
        raise ConfigError(f"config field 'scenario_defaults': {exc}") from None


def load_config(path: str | None = None) -> AppConfig:
    """Read AppConfig from ``path``, $BEDTWIN_CONFIG, or defaults."""
    if path is None:
        path = os.environ.get(ENV_VAR) or None
    if path is None:
        return AppConfig()
    file = Path(path)
    if not file.exists():
        raise ConfigError(f"config file {file}: no such file")
    try:
        data = json.loads(file.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {file}: invalid JSON at position {exc.pos}") from None
    return AppConfig.from_dict(data)
