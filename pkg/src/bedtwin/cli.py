"""Command-line interface.

Exit codes: 0 success, 1 usage error (bad flags/arguments), 2 data
error (unreadable or invalid inputs). Results print to stdout as
canonical JSON so they are byte-comparable with the HTTP service's
payloads; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import sys
from pathlib import Path

import numpy as np

from . import gbm, sensitivity
from .bedflow import BackendError, lhs_grid, run_scenario, sweep
from .config import ConfigError, load_config
from .core import DailyRecord, DomainError, Scenario, SchemaError
from .ingest import ConflictError, IngestError, ingest_csv, records_to_csv
from .util import canonical_json
from .validation import build_report, render_report

__all__ = ["main"]

USAGE_EXIT = 1
DATA_EXIT = 2

_DATA_ERRORS = (IngestError, ConflictError, SchemaError, DomainError,
                ConfigError, BackendError, gbm.TrainingError,
                gbm.ModelFormatError, OSError, json.JSONDecodeError)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this artifact reserves 2 for
    data errors, so usage problems are rerouted."""

    def error(self, message):
        raise _UsageError(message)


def _read_json(path) -> object:
    file = Path(path)
    if not file.exists():
        raise IngestError(f"{file}: no such file")
    try:
        return json.loads(file.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise IngestError(f"{file}: invalid JSON at position {exc.pos}") from None


def _emit(payload: dict) -> None:
    sys.stdout.write(canonical_json(payload) + "\n")


def _cmd_simulate(args) -> int:
    data = _read_json(args.scenario)
    if not isinstance(data, dict):
        raise IngestError(f"{args.scenario}: expected a scenario object")
    if args.reps is not None:
        data["replications"] = args.reps
    if args.seed is not None:
        data["seed"] = args.seed
    scenario = Scenario.from_dict(data)
    result = run_scenario(scenario, backend=args.backend)
    _emit(result.to_dict())
    return 0


def _grid_from_spec(spec) -> list[Scenario]:
    if isinstance(spec, list):
        return [Scenario.from_dict(d) for d in spec]
    if isinstance(spec, dict):
        allowed = {"n_scenarios", "seed", "horizon_days", "warmup_days",
                   "replications", "arrival_mode", "duration_cv"}
        unknown = sorted(set(spec) - allowed)
        if unknown:
            raise SchemaError(f"grid spec: unknown field {unknown[0]!r}")
        if "n_scenarios" not in spec:
            raise SchemaError("grid spec: 'n_scenarios' is required")
        return lhs_grid(**spec)
    raise SchemaError("grid file must hold a scenario list or an LHS spec object")


def _cmd_sweep(args) -> int:
    grid = _grid_from_spec(_read_json(args.grid))
    rows = sweep(grid)
    day0 = dt.date(2000, 1, 1)
    records = []
    skipped = 0
    for i, (features, result) in enumerate(rows):
        if result.mean_btt is None:
            skipped += 1
            continue
        records.append(DailyRecord(
            facility_id="sweep", date=day0 + dt.timedelta(days=i),
            features=features, actual_btt=result.mean_btt))
    if skipped:
        print(f"note: {skipped} scenario(s) had no completed beds, skipped",
              file=sys.stderr)
    Path(args.out).write_text(records_to_csv(records), encoding="utf-8")
    _emit({"rows": len(records), "skipped": skipped, "out": str(args.out)})
    return 0


def _training_rows(path):
    records = ingest_csv(path)
    rows = [(r.features, r.actual_btt) for r in records
            if r.actual_btt is not None]
    dropped = len(records) - len(rows)
    if dropped:
        print(f"note: {dropped} record(s) without actual_btt ignored",
              file=sys.stderr)
    return rows


def _cmd_train(args) -> int:
    rows = _training_rows(args.data)
    params = gbm.TrainParams(n_trees=args.trees, max_depth=args.depth,
                             learning_rate=args.learning_rate,
                             min_samples_leaf=args.min_leaf, seed=args.seed)
    fit = gbm.train_surrogate_on_synthetic(rows, params)
    Path(args.out).write_bytes(gbm.save(fit.model))
    _emit({
        "out": str(args.out),
        "n_rows": fit.n_train + fit.n_holdout,
        "n_train": fit.n_train,
        "n_holdout": fit.n_holdout,
        "holdout_mae": fit.holdout_mae,
        "baseline_mae": fit.baseline_mae,
        "target_sd": fit.target_sd,
    })
    return 0


def _load_model(path) -> gbm.GbmModel:
    file = Path(path)
    if not file.exists():
        raise IngestError(f"{file}: no such file")
    return gbm.load(file.read_bytes())


def _cmd_validate(args) -> int:
    records = [r for r in ingest_csv(args.data) if r.actual_btt is not None]
    if not records:
        raise IngestError(f"{args.data}: no records with actual_btt")
    model = _load_model(args.model)

    sim_runner = None
    if args.sim:
        defaults = {}
        for key in ("horizon_days", "warmup_days", "replications", "seed"):
            value = getattr(args, key)
            if value is not None:
                defaults[key] = value

        def sim_runner(features):
            scenario = Scenario.from_dict(
                {"features": features.as_dict(), **defaults})
            result = run_scenario(scenario)
            if result.mean_btt is None:
                raise DomainError(
                    "simulation produced no completed beds for a record")
            return result.mean_btt, result.sd_btt

    rows = build_report(records, model, sim_runner)
    sys.stdout.write(render_report(rows))
    return 0


def _cmd_shap(args) -> int:
    model = _load_model(args.model)
    records = ingest_csv(args.rows)
    X = np.array([r.features.as_array() for r in records])
    predict_fn = lambda rows: gbm.predict_batch(model, rows)
    background = sensitivity.default_background(X, size=args.background,
                                                seed=args.seed)
    attributions = []
    for i, x in enumerate(X):
        if args.sampled is None:
            attributions.append(sensitivity.shap_exact(predict_fn, x, background))
        else:
            attributions.append(sensitivity.shap_sampled(
                predict_fn, x, background, args.sampled, seed=args.seed + i))
    _emit({
        "mode": "exact" if args.sampled is None else "sampled",
        "rows": [a.to_dict() for a in attributions],
        "importance": sensitivity.global_importance(attributions).to_dict(),
    })
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = load_config(args.config)
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="bedtwin",
                     description="Bed-turnaround digital twin toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario, print result JSON")
    p.add_argument("scenario", help="scenario JSON file")
    p.add_argument("--reps", type=int, default=None,
                   help="override replication count")
    p.add_argument("--seed", type=int, default=None, help="override seed")
    p.add_argument("--backend", default=None,
                   help="pipeline backend (cython or python)")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("sweep", help="run a scenario grid, write a dataset CSV")
    p.add_argument("grid", help="JSON: scenario list or LHS spec "
                               '{"n_scenarios": N, "seed": S, ...}')
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("train", help="train a surrogate on a dataset CSV")
    p.add_argument("data", help="dataset CSV file")
    p.add_argument("--out", required=True, help="output model JSON path")
    p.add_argument("--trees", type=int, default=gbm.TrainParams.n_trees)
    p.add_argument("--depth", type=int, default=gbm.TrainParams.max_depth)
    p.add_argument("--learning-rate", type=float,
                   default=gbm.TrainParams.learning_rate)
    p.add_argument("--min-leaf", type=int, default=gbm.TrainParams.min_samples_leaf)
    p.add_argument("--seed", type=int, default=gbm.TrainParams.seed)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("validate", help="print the validation report")
    p.add_argument("data", help="dataset CSV file")
    p.add_argument("model", help="model JSON file")
    p.add_argument("--sim", action="store_true",
                   help="also run the simulator per distinct feature vector")
    p.add_argument("--horizon-days", type=int, default=None)
    p.add_argument("--warmup-days", type=int, default=None)
    p.add_argument("--replications", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=_cmd_validate)

    p = sub.add_parser("shap", help="attribute predictions for dataset rows")
    p.add_argument("model", help="model JSON file")
    p.add_argument("rows", help="dataset CSV file")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--exact", action="store_true",
                       help="exact enumeration (default)")
    group.add_argument("--sampled", type=int, default=None, metavar="N",
                       help="permutation sampling with N permutations")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--background", type=int, default=64,
                   help="background sample size")
    p.set_defaults(fn=_cmd_shap)

    p = sub.add_parser("serve", help="start the HTTP gateway")
    p.add_argument("--config", default=None,
                   help="config JSON path (default: $BEDTWIN_CONFIG or built-ins)")
    p.set_defaults(fn=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"bedtwin: error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    try:
        return args.fn(args)
    except _DATA_ERRORS as exc:
        print(f"bedtwin: error: {exc}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
