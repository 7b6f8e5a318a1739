"""HTTP gateway: scenario jobs, surrogate training and prediction,
sensitivity queries, CSV ingestion, and the validation report.

All request bodies are parsed by hand so error payloads are uniformly
{code, message} and invalid input is always a 400, never a framework
422. Long-running work (simulate, train, sensitivity) goes through the
job store; surrogate prediction is synchronous.
"""

from __future__ import annotations

import json
import threading
import uuid
from contextlib import asynccontextmanager
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import gbm, sensitivity
from .bedflow import lhs_grid, run_scenario, sweep
from .config import AppConfig
from .core import FEATURE_NAMES, FeatureVector, Scenario, SchemaError
from .ingest import ConflictError, IngestError, RecordStore, parse_csv
from .jobs import JobStore
from .validation import build_report, render_report, report_to_dict

__all__ = ["ApiError", "GatewayState", "create_app"]


class ApiError(Exception):
    """Maps to a {code, message} JSON error response."""

    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


class ModelStore:
    """Trained surrogates on disk, one JSON file each, plus a pointer to
    the most recently trained one."""

    def __init__(self, directory):
        self._dir = Path(directory)
        self._lock = threading.Lock()

    def save(self, model: gbm.GbmModel) -> str:
        model_id = uuid.uuid4().hex
        self._dir.mkdir(parents=True, exist_ok=True)
        with self._lock:
            (self._dir / f"{model_id}.json").write_bytes(gbm.save(model))
            (self._dir / "latest").write_text(model_id, encoding="utf-8")
        return model_id

    def latest_id(self) -> str | None:
        pointer = self._dir / "latest"
        with self._lock:
            if not pointer.exists():
                return None
            return pointer.read_text(encoding="utf-8").strip()

    def load(self, model_id: str | None) -> tuple[str, gbm.GbmModel]:
        """Load by id, or the latest when id is None."""
        if model_id is None:
            model_id = self.latest_id()
            if model_id is None:
                raise ApiError(404, "no_model",
                               "no trained model; POST /api/surrogate/train first")
        path = self._dir / f"{model_id}.json"
        if not path.is_file():
            raise ApiError(404, "unknown_model", f"unknown model {model_id}")
        return model_id, gbm.load(path.read_bytes())


class GatewayState:
    """Everything the endpoints share."""

    def __init__(self, config: AppConfig):
        self.config = config
        self.records = RecordStore(config.data_path("records.jsonl"))
        self.jobs = JobStore(config.data_path("jobs.jsonl"),
                             worker_count=config.worker_count)
        self.models = ModelStore(config.data_path("models"))
        self.sim_cache: dict[tuple, tuple[float, float]] = {}
        self._sim_lock = threading.Lock()

    def scenario_for(self, features: FeatureVector) -> Scenario:
        return Scenario.from_dict({"features": features.as_dict(),
                                   **self.config.scenario_defaults})

    def sim_runner(self, features: FeatureVector) -> tuple[float, float]:
        """(mean, sd) of simulated BTT under the configured defaults."""
        key = tuple(features.as_array())
        with self._sim_lock:
            if key in self.sim_cache:
                return self.sim_cache[key]
        result = run_scenario(self.scenario_for(features))
        if result.mean_btt is None:
            raise ApiError(500, "no_completions",
                           "simulation produced no completed beds for "
                           "a validation scenario")
        value = (result.mean_btt, result.sd_btt)
        with self._sim_lock:
            self.sim_cache[key] = value
        return value

    def train_job(self, source: str, n_scenarios: int, seed: int) -> dict:
        if source == "synthetic":
            grid = lhs_grid(n_scenarios, seed=seed)
            rows = sweep(grid)
        else:
            rows = [(r.features, r.actual_btt) for r in self.records.records()
                    if r.actual_btt is not None]
        fit = gbm.train_surrogate_on_synthetic(rows, self.config.train_params)
        model_id = self.models.save(fit.model)
        return {
            "model_id": model_id,
            "source": source,
            "n_rows": fit.n_train + fit.n_holdout,
            "n_train": fit.n_train,
            "n_holdout": fit.n_holdout,
            "holdout_mae": fit.holdout_mae,
            "baseline_mae": fit.baseline_mae,
            "target_sd": fit.target_sd,
        }

    def sensitivity_job(self, model_id: str, rows: np.ndarray, mode: str,
                        n_permutations: int, seed: int) -> dict:
        _, model = self.models.load(model_id)
        predict_fn = lambda X: gbm.predict_batch(model, X)
        background = sensitivity.default_background(
            rows, size=self.config.sensitivity.background_size,
            seed=self.config.sensitivity.seed)
        attributions = []
        for i, x in enumerate(rows):
            if mode == "exact":
                attributions.append(sensitivity.shap_exact(predict_fn, x, background))
            else:
                attributions.append(sensitivity.shap_sampled(
                    predict_fn, x, background, n_permutations,
                    seed=seed + i))
        importance = sensitivity.global_importance(attributions)
        return {
            "model_id": model_id,
            "mode": mode,
            "n_rows": int(len(rows)),
            "n_permutations": n_permutations if mode == "sampled" else None,
            "importance": importance.to_dict(),
        }

    def close(self) -> None:
        self.jobs.close()


async def _json_body(request: Request):
    try:
        return json.loads(await request.body() or b"null")
    except json.JSONDecodeError as exc:
        raise ApiError(400, "bad_json", f"request body is not JSON: {exc}") from None


def _expect_object(body, what: str) -> dict:
    if not isinstance(body, dict):
        raise ApiError(400, "bad_request", f"{what}: expected a JSON object")
    return body


def _parse_features(body) -> FeatureVector:
    """Accept either the 13-name object form or a 13-number array."""
    try:
        if isinstance(body, list):
            return FeatureVector.from_array(np.asarray(body, dtype=np.float64))
        if isinstance(body, dict):
            return FeatureVector.from_dict(body)
    except (SchemaError, ValueError, TypeError) as exc:
        raise ApiError(400, "bad_features", str(exc)) from None
    raise ApiError(400, "bad_features",
                   "expected a feature object or an array of length "
                   f"{len(FEATURE_NAMES)}")


def create_app(config: AppConfig | None = None) -> FastAPI:
    state = GatewayState(config or AppConfig())

    @asynccontextmanager
    async def lifespan(_app):
        yield
        state.close()

    app = FastAPI(title="bedtwin gateway", openapi_url=None, lifespan=lifespan)
    app.state.gateway = state

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.exception_handler(Exception)
    async def _internal_error(request: Request, exc: Exception):
        return JSONResponse(status_code=500,
                            content={"code": "internal",
                                     "message": f"{type(exc).__name__}: {exc}"})

    @app.post("/api/scenarios/run")
    async def run_scenario_endpoint(request: Request):
        body = _expect_object(await _json_body(request), "scenario")
        try:
            scenario = Scenario.from_dict(body)
        except (SchemaError, ValueError) as exc:
            raise ApiError(400, "bad_scenario", str(exc)) from None
        job = state.jobs.submit(
            "simulate", lambda: run_scenario(scenario).to_dict())
        return job.to_dict()

    @app.get("/api/jobs/{job_id}")
    async def get_job(job_id: str):
        job = state.jobs.get(job_id)
        if job is None:
            raise ApiError(404, "unknown_job", f"unknown job {job_id}")
        return job.to_dict()

    @app.post("/api/surrogate/train")
    async def train(request: Request):
        body = _expect_object(await _json_body(request) or {}, "train request")
        source = body.get("source", "synthetic")
        if source not in ("synthetic", "ingested"):
            raise ApiError(400, "bad_request",
                           f"source must be 'synthetic' or 'ingested', got {source!r}")
        n_scenarios = body.get("n_scenarios", state.config.synthetic.n_scenarios)
        seed = body.get("seed", state.config.synthetic.seed)
        if not isinstance(n_scenarios, int) or isinstance(n_scenarios, bool) \
                or n_scenarios < 1:
            raise ApiError(400, "bad_request",
                           f"n_scenarios must be a positive integer, got {n_scenarios!r}")
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise ApiError(400, "bad_request",
                           f"seed must be a non-negative integer, got {seed!r}")
        unknown = sorted(set(body) - {"source", "n_scenarios", "seed"})
        if unknown:
            raise ApiError(400, "bad_request", f"unknown field {unknown[0]!r}")
        job = state.jobs.submit(
            "train", lambda: state.train_job(source, n_scenarios, seed))
        return job.to_dict()

    @app.post("/api/surrogate/predict")
    async def predict(request: Request):
        features = _parse_features(await _json_body(request))
        model_id, model = state.models.load(None)
        value = gbm.predict(model, features.as_array())
        return {"prediction": value, "model_id": model_id}

    @app.post("/api/sensitivity/global")
    async def sensitivity_global(request: Request):
        body = _expect_object(await _json_body(request), "sensitivity request")
        unknown = sorted(set(body) - {"model_id", "rows", "mode",
                                      "n_permutations", "seed"})
        if unknown:
            raise ApiError(400, "bad_request", f"unknown field {unknown[0]!r}")
        raw_rows = body.get("rows")
        if not isinstance(raw_rows, list) or not raw_rows:
            raise ApiError(400, "bad_request", "rows must be a non-empty list")
        rows = np.empty((len(raw_rows), len(FEATURE_NAMES)))
        for i, row in enumerate(raw_rows):
            rows[i] = _parse_features(row).as_array()
        model_id = body.get("model_id")
        if model_id is None:
            model_id = state.models.latest_id()
            if model_id is None:
                raise ApiError(404, "no_model",
                               "no trained model; POST /api/surrogate/train first")
        elif not isinstance(model_id, str):
            raise ApiError(400, "bad_request", "model_id must be a string")
        state.models.load(model_id)  # fail fast on unknown ids
        defaults = state.config.sensitivity
        mode = body.get("mode", defaults.mode)
        if mode not in ("exact", "sampled"):
            raise ApiError(400, "bad_request",
                           f"mode must be 'exact' or 'sampled', got {mode!r}")
        n_permutations = body.get("n_permutations", defaults.n_permutations)
        if not isinstance(n_permutations, int) or isinstance(n_permutations, bool) \
                or n_permutations < 1:
            raise ApiError(400, "bad_request",
                           "n_permutations must be a positive integer, "
                           f"got {n_permutations!r}")
        seed = body.get("seed", defaults.seed)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise ApiError(400, "bad_request",
                           f"seed must be a non-negative integer, got {seed!r}")
        job = state.jobs.submit(
            "sensitivity",
            lambda: state.sensitivity_job(model_id, rows, mode,
                                          n_permutations, seed))
        return job.to_dict()

    @app.get("/api/facilities")
    async def facilities():
        return {"facilities": state.records.facilities()}

    @app.post("/api/data/ingest")
    async def ingest(request: Request):
        text = (await request.body()).decode("utf-8", errors="replace")
        try:
            records = parse_csv(text, source="<upload>")
        except IngestError as exc:
            raise ApiError(400, "invalid_csv", str(exc)) from None
        try:
            new, unchanged = state.records.merge(records)
        except ConflictError as exc:
            raise ApiError(409, "conflict", str(exc)) from None
        return {"ingested": new, "unchanged": unchanged,
                "total": len(state.records)}

    @app.get("/api/reports/validation")
    async def validation_report():
        records = [r for r in state.records.records() if r.actual_btt is not None]
        if not records:
            raise ApiError(400, "no_data",
                           "no ingested records with actual_btt")
        _, model = state.models.load(None)
        rows = build_report(records, model, state.sim_runner)
        payload = report_to_dict(rows)
        payload["text"] = render_report(rows)
        return payload

    ui_dir = state.config.ui_dir
    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
