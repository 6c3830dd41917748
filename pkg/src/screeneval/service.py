"""Stateless HTTP API: health, per-subject screening and dataset evaluation.

Artifacts are loaded once at startup and never mutated, so every response is
a pure function of the request and the startup configuration.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response
from starlette.concurrency import run_in_threadpool

from . import __version__
from .bootstrap import UNITS, BootstrapConfig
from .calibration import ArtifactSet, artifacts_from_document
from .dataset import Dataset, records_from_objects, validate
from .errors import ConfigError, DatasetError, ScreenEvalError
from .metrics import check_mode
from .report import build_performance_report
from .voting import VoteStrategy, vote

DEFAULT_MAX_BODY = 32 * 1024 * 1024
DEFAULT_MAX_REPLICATES = 10_000


@dataclass(frozen=True)
class ServiceConfig:
    artifacts: ArtifactSet
    max_body_bytes: int = DEFAULT_MAX_BODY
    max_replicates: int = DEFAULT_MAX_REPLICATES


class ApiError(Exception):
    def __init__(self, status: int, error: str, message: str, **extra):
        super().__init__(message)
        self.status, self.error, self.message, self.extra = status, error, message, extra


def _error(status: int, error: str, message: str, **extra) -> JSONResponse:
    return JSONResponse({"error": error, "message": message, **extra}, status_code=status)


async def _read_json(request: Request, cfg: ServiceConfig):
    length = request.headers.get("content-length")
    if length and length.isdigit() and int(length) > cfg.max_body_bytes:
        raise ApiError(413, "body_too_large", f"request body exceeds {cfg.max_body_bytes} bytes")
    body = await request.body()
    if len(body) > cfg.max_body_bytes:
        raise ApiError(413, "body_too_large", f"request body exceeds {cfg.max_body_bytes} bytes")
    try:
        return json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ApiError(400, "invalid_json", f"malformed JSON body: {exc}") from None


def screen(doc, artifacts: ArtifactSet) -> dict:
    """Vote over one subject's image scores and apply the calibrated threshold."""
    if not isinstance(doc, dict):
        raise ApiError(400, "invalid_request", "request must be a JSON object")
    subject_id = doc.get("subject_id", "")
    if not isinstance(subject_id, (str, int)) or isinstance(subject_id, bool):
        raise ApiError(400, "invalid_request", "subject_id must be a string")
    try:
        strategy = VoteStrategy.parse(doc.get("strategy", ""))
    except ScreenEvalError:
        raise ApiError(400, "unknown_strategy", f"unknown strategy {doc.get('strategy')!r}; use max or mean") from None
    scores = doc.get("scores")
    if not isinstance(scores, list):
        raise ApiError(400, "invalid_request", "scores must be an array of numbers")
    if not scores:
        raise ApiError(400, "no_scores", "no scores for subject")
    for s in scores:
        if isinstance(s, bool) or not isinstance(s, (int, float)) or not math.isfinite(s) or not 0 <= s <= 1:
            raise ApiError(400, "score_out_of_range", f"score out of [0,1]: {s!r}")
    art = artifacts.get("subject", strategy)
    if art is None:
        raise ApiError(503, "no_artifact", f"no calibration artifact loaded for subject/{strategy.value}")
    value = vote([float(s) for s in scores], strategy)
    return {
        "subject_id": str(subject_id),
        "subject_score": value,
        "decision": "positive" if art.decide(value) else "negative",
        "threshold": art.threshold,
        "threshold_mode": art.threshold_mode,
        "strategy": strategy.value,
    }


def evaluate(doc, cfg: ServiceConfig) -> bytes:
    """Build the performance report for a posted dataset; returns the JSON bytes."""
    if isinstance(doc, list):
        doc = {"records": doc}
    if not isinstance(doc, dict) or "records" not in doc:
        raise ApiError(400, "invalid_request", "body must be a dataset array or an object with 'records'")
    opts = doc.get("options") or {}
    if not isinstance(opts, dict):
        raise ApiError(400, "invalid_request", "options must be an object")
    try:
        records = records_from_objects(doc["records"])
    except DatasetError as exc:
        raise ApiError(400, "invalid_dataset", str(exc)) from None
    if not records:
        raise ApiError(400, "invalid_dataset", "no records")
    d = Dataset(tuple(records), str(opts.get("provenance", "request")))
    report = validate(d)
    if not report.ok:
        raise ApiError(400, "invalid_dataset", report.render().splitlines()[0], validation=report.as_dict())

    replicates = opts.get("replicates", 1000)
    if not isinstance(replicates, int) or isinstance(replicates, bool) or replicates < 1:
        raise ApiError(400, "invalid_options", "replicates must be a positive integer")
    if replicates > cfg.max_replicates:
        raise ApiError(400, "invalid_options", f"replicates exceeds the cap of {cfg.max_replicates}")
    unit = opts.get("unit", "photo")
    if unit not in UNITS:
        raise ApiError(400, "invalid_options", "unit must be photo or subject")
    try:
        bcfg = BootstrapConfig(replicates=replicates, confidence=float(opts.get("confidence", 0.95)),
                               seed=opts.get("seed", 0), unit=unit)
        mode = opts.get("threshold_mode")
        if mode is not None:
            check_mode(mode)
        arts = cfg.artifacts
        if "artifacts" in doc:
            arts = ArtifactSet(artifacts_from_document(doc["artifacts"]))
        if len(arts) == 0:
            raise ApiError(503, "no_artifact", "no calibration artifacts loaded or supplied")
        split = opts.get("split", "test")
        return build_performance_report(d, arts, bcfg, split=split, mode=mode).to_json().encode("utf-8")
    except (ConfigError, ScreenEvalError, TypeError, ValueError) as exc:
        raise ApiError(400, "invalid_options", str(exc)) from None


def create_app(artifacts: ArtifactSet | None = None, *, max_body_bytes: int = DEFAULT_MAX_BODY,
               max_replicates: int = DEFAULT_MAX_REPLICATES) -> FastAPI:
    cfg = ServiceConfig(artifacts or ArtifactSet(), max_body_bytes, max_replicates)
    app = FastAPI(title="screeneval", version=__version__)
    app.state.config = cfg

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return _error(exc.status, exc.error, exc.message, **exc.extra)

    @app.api_route("/v1/health", methods=["GET", "HEAD"])
    async def health(request: Request):
        if request.method == "HEAD":
            return Response(status_code=200)
        return {"status": "ok", "version": __version__,
                "artifacts": [a.label for a in cfg.artifacts]}

    @app.post("/v1/screen")
    async def screen_endpoint(request: Request):
        doc = await _read_json(request, cfg)
        return JSONResponse(screen(doc, cfg.artifacts))

    @app.post("/v1/evaluate")
    async def evaluate_endpoint(request: Request):
        doc = await _read_json(request, cfg)
        body = await run_in_threadpool(evaluate, doc, cfg)
        return Response(content=body, media_type="application/json")

    return app
