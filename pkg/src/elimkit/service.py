"""HTTP JSON API over the toolkit: datasets, model training, classification
with elimination verdicts, rho/sensitivity sweeps, confidence intervals,
metrics, and model comparison. Backend for the explorer UI and for
programmatic clients.

All computation endpoints are pure functions of (stored resources, payload):
identical requests with identical seeds return identical bodies. Stored
resources are immutable once created.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import __version__
from .classifiers import (
    Classifier,
    IntervalRuleSet,
    KnnClassifier,
    Rule,
    RuleCondition,
    TrainConfig,
    committee_train,
    train_joint,
    train_lda,
    train_mlp,
)
from .datakit import ClassGrouping, Dataset, GaussianMixtureSpec, parse_csv_text, sample_mixture
from .eliminator import (
    EliminationPolicy,
    confused_pairs,
    eliminate,
    rejection_curve,
    relaxed_accuracy,
)
from .errors import ClassMismatchError, ElimkitError, ValidationError
from .metrics import confusion, metric_report
from .persist import dataset_from_dict, dataset_to_dict, model_from_dict, model_to_dict
from .uncertainty import (
    McConfig,
    UncertaintyProfile,
    confidence_interval,
    mc_probabilities,
    rho_sweep,
    sensitivity_sweep,
)
from .errors import BorderlineCaseError


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, detail=None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail


class ModelRecord:
    def __init__(self, model: Classifier, dataset_id: str | None):
        self.model = model
        self.dataset_id = dataset_id


class ResourceRegistry:
    """Thread-safe id-keyed stores with optional directory persistence."""

    def __init__(self, store_dir: str | None = None):
        self._lock = threading.Lock()
        self.datasets: dict[str, Dataset] = {}
        self.models: dict[str, ModelRecord] = {}
        self._counters = {"ds": 0, "m": 0}
        self.store_dir = Path(store_dir) if store_dir else None
        if self.store_dir:
            self._load_store()

    def _next_id(self, prefix: str) -> str:
        self._counters[prefix] += 1
        return f"{prefix}-{self._counters[prefix]}"

    def _load_store(self):
        for sub, loader in (("datasets", self._restore_dataset), ("models", self._restore_model)):
            directory = self.store_dir / sub
            if directory.is_dir():
                for path in sorted(directory.glob("*.json")):
                    loader(path)

    def _restore_dataset(self, path: Path):
        doc = json.loads(path.read_text())
        rid = path.stem
        self.datasets[rid] = dataset_from_dict(doc)
        prefix, _, num = rid.partition("-")
        if prefix == "ds" and num.isdigit():
            self._counters["ds"] = max(self._counters["ds"], int(num))

    def _restore_model(self, path: Path):
        doc = json.loads(path.read_text())
        rid = path.stem
        self.models[rid] = ModelRecord(model_from_dict(doc), doc.get("dataset_id"))
        prefix, _, num = rid.partition("-")
        if prefix == "m" and num.isdigit():
            self._counters["m"] = max(self._counters["m"], int(num))

    def _persist(self, sub: str, rid: str, doc: dict):
        if not self.store_dir:
            return
        directory = self.store_dir / sub
        directory.mkdir(parents=True, exist_ok=True)
        (directory / f"{rid}.json").write_text(
            json.dumps(doc, sort_keys=True), encoding="utf-8"
        )

    def add_dataset(self, dataset: Dataset) -> str:
        with self._lock:
            rid = self._next_id("ds")
            self.datasets[rid] = dataset
        self._persist("datasets", rid, dataset_to_dict(dataset))
        return rid

    def add_model(self, model: Classifier, dataset_id: str | None) -> str:
        with self._lock:
            rid = self._next_id("m")
            self.models[rid] = ModelRecord(model, dataset_id)
        doc = model_to_dict(model)
        doc["dataset_id"] = dataset_id
        self._persist("models", rid, doc)
        return rid

    def get_dataset(self, rid: str) -> Dataset:
        try:
            return self.datasets[rid]
        except KeyError:
            raise ApiError(404, "not-found", f"unknown dataset id {rid!r}") from None

    def get_model(self, rid: str) -> ModelRecord:
        try:
            return self.models[rid]
        except KeyError:
            raise ApiError(404, "not-found", f"unknown model id {rid!r}") from None


# ---------------------------------------------------------------------------
# Payload schemas


class MixtureDatasetRequest(BaseModel):
    name: str = "mixture"
    n: int = Field(gt=0)
    mixture: dict


class TrainRequest(BaseModel):
    dataset_id: str
    kind: str
    config: dict = Field(default_factory=dict)


class PolicyPayload(BaseModel):
    accept: float = 0.9
    retain: float = 0.2
    max_retained: int = 4


class ClassifyRequest(BaseModel):
    features: list[float]
    policy: PolicyPayload | None = None
    rho: float = 0.0
    n_samples: int = Field(default=5000, ge=1)
    seed: int = 0


class SweepRequest(BaseModel):
    features: list[float]
    rho_grid: list[float]
    n_samples: int = Field(default=5000, ge=1)
    seed: int = 0


class SensitivityRequest(BaseModel):
    features: list[float]
    rho0: float = 0.0
    feature: int
    s_grid: list[float]
    n_samples: int = Field(default=5000, ge=1)
    seed: int = 0


class IntervalsRequest(BaseModel):
    features: list[float]
    bound_multiplier: float = 1.0


class CompareRequest(BaseModel):
    model_a: str
    model_b: str
    dataset_id: str


def _train_config(config: dict) -> TrainConfig:
    keys = {
        "transform", "learning_rate", "momentum", "l2", "epochs",
        "patience", "seed", "batch_size", "val_fraction",
    }
    return TrainConfig(**{k: v for k, v in config.items() if k in keys})


def _build_model(dataset: Dataset, kind: str, config: dict):
    """Returns (model, training_log or None)."""
    if kind == "mlp":
        cfg = _train_config(config)
        return train_mlp(dataset, int(config.get("hidden", 8)), cfg)
    if kind == "joint":
        if "groups" not in config:
            raise ValidationError("joint training requires config.groups")
        grouping = ClassGrouping(tuple(tuple(g) for g in config["groups"]))
        cfg = _train_config(config)
        return train_joint(dataset, grouping, int(config.get("hidden", 8)), cfg)
    if kind == "committee":
        cfg = _train_config(config)
        committee, logs = committee_train(
            dataset, int(config.get("members", 5)), int(config.get("hidden", 8)), cfg
        )
        return committee, [entry for log in logs for entry in log]
    if kind == "lda":
        return train_lda(dataset, slope=float(config.get("slope", 1.0))), None
    if kind == "knn":
        model = KnnClassifier(
            dataset,
            k=int(config.get("k", 1)),
            metric=config.get("metric", "manhattan"),
            mode=config.get("mode", "crisp"),
        )
        return model, None
    if kind == "rules":
        if "rules" not in config:
            raise ValidationError("rule models require config.rules")
        rules = IntervalRuleSet(
            [
                Rule(
                    r["class"],
                    [RuleCondition(c["feature"], c["low"], c["high"]) for c in r["conditions"]],
                )
                for r in config["rules"]
            ],
            int(config.get("default_class", 0)),
            dataset.class_names,
            dataset.features,
        )
        return rules, None
    raise ValidationError(f"unknown model kind {kind!r}")


def _model_meta(rid: str, record: ModelRecord) -> dict:
    model = record.model
    return {
        "id": rid,
        "kind": model.kind,
        "class_names": list(model.class_names),
        "dataset_id": record.dataset_id,
        "features": [m.to_dict() for m in model.features] if model.features else None,
    }


def _curve_json(curve) -> dict:
    return {
        "class_names": list(curve.class_names),
        "points": curve.to_rows(),
        "flag": curve.flag,
    }


def create_app(store_dir: str | None = None) -> FastAPI:
    registry = ResourceRegistry(store_dir)
    app = FastAPI(title="elimkit", version=__version__)
    app.state.registry = registry
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "message": exc.message, "detail": exc.detail},
        )

    @app.exception_handler(ElimkitError)
    async def toolkit_error_handler(request: Request, exc: ElimkitError):
        status = 409 if isinstance(exc, ClassMismatchError) else 422
        return JSONResponse(
            status_code=status,
            content={"code": exc.code, "message": str(exc), "detail": None},
        )

    from fastapi.exceptions import RequestValidationError

    @app.exception_handler(RequestValidationError)
    async def schema_error_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={
                "code": "schema",
                "message": "payload does not match the endpoint schema",
                "detail": json.loads(json.dumps(exc.errors(), default=str)),
            },
        )

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/v1/datasets")
    async def create_dataset(
        request: Request,
        label_column: str | None = Query(default=None),
        name: str | None = Query(default=None),
        categorical: str = Query(default=""),
    ):
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("text/csv"):
            if not label_column:
                raise ApiError(422, "schema", "CSV upload requires ?label_column=")
            body = (await request.body()).decode("utf-8")
            kinds = {c: "categorical" for c in categorical.split(",") if c}
            dataset = parse_csv_text(
                body, label_column, kinds=kinds, name=name or "upload"
            )
        else:
            try:
                payload = MixtureDatasetRequest.model_validate(await request.json())
            except Exception as exc:
                raise ApiError(422, "schema", f"bad dataset payload: {exc}") from None
            spec = GaussianMixtureSpec.from_dict(payload.mixture)
            dataset = sample_mixture(spec, payload.n, name=payload.name)
        rid = registry.add_dataset(dataset)
        return {"id": rid}

    @app.get("/v1/datasets/{rid}")
    def dataset_meta(rid: str):
        ds = registry.get_dataset(rid)
        return {
            "id": rid,
            "name": ds.name,
            "n_cases": ds.n_cases,
            "class_names": list(ds.class_names),
            "features": [m.to_dict() for m in ds.features],
        }

    @app.post("/v1/models")
    def create_model(payload: TrainRequest):
        dataset = registry.get_dataset(payload.dataset_id)
        model, log = _build_model(dataset, payload.kind, payload.config)
        rid = registry.add_model(model, payload.dataset_id)
        return {"id": rid, "training_log": log}

    @app.get("/v1/models/{rid}")
    def model_meta(rid: str):
        return _model_meta(rid, registry.get_model(rid))

    @app.post("/v1/models/{rid}/classify")
    def classify(rid: str, payload: ClassifyRequest):
        record = registry.get_model(rid)
        model = record.model
        est = mc_probabilities(
            model,
            np.asarray(payload.features, float),
            UncertaintyProfile(rho=payload.rho),
            McConfig(payload.n_samples, payload.seed),
        )
        pol = payload.policy or PolicyPayload()
        verdict = eliminate(
            est.probabilities,
            EliminationPolicy(pol.accept, pol.retain, pol.max_retained),
            class_names=model.class_names,
        )
        return {
            "class_names": list(model.class_names),
            "probabilities": [float(v) for v in est.probabilities],
            "stderr": [float(v) for v in est.stderr],
            "rho": payload.rho,
            "verdict": verdict.to_dict(),
        }

    @app.post("/v1/models/{rid}/sweep")
    def sweep(rid: str, payload: SweepRequest):
        model = registry.get_model(rid).model
        curve = rho_sweep(
            model,
            np.asarray(payload.features, float),
            payload.rho_grid,
            McConfig(payload.n_samples, payload.seed),
        )
        return _curve_json(curve)

    @app.post("/v1/models/{rid}/sensitivity")
    def sensitivity(rid: str, payload: SensitivityRequest):
        model = registry.get_model(rid).model
        curve = sensitivity_sweep(
            model,
            np.asarray(payload.features, float),
            payload.rho0,
            payload.feature,
            payload.s_grid,
            McConfig(payload.n_samples, payload.seed),
        )
        return _curve_json(curve)

    @app.post("/v1/models/{rid}/intervals")
    def intervals(rid: str, payload: IntervalsRequest):
        model = registry.get_model(rid).model
        if model.features is None:
            raise ApiError(422, "validation", "model carries no feature metadata")
        x = np.asarray(payload.features, float)
        out = []
        for i, meta in enumerate(model.features):
            if meta.kind != "continuous":
                out.append({"feature": i, "name": meta.name, "skipped": "categorical"})
                continue
            try:
                low, high = confidence_interval(
                    model, x, i, bound_multiplier=payload.bound_multiplier
                )
                out.append({"feature": i, "name": meta.name, "low": low, "high": high})
            except BorderlineCaseError as exc:
                out.append({"feature": i, "name": meta.name, "error": str(exc)})
        return {"intervals": out}

    @app.get("/v1/models/{rid}/metrics")
    def metrics(rid: str, dataset: str = Query(...), thresholds: str | None = None):
        record = registry.get_model(rid)
        ds = registry.get_dataset(dataset)
        model = record.model
        if tuple(model.class_names) != tuple(ds.class_names):
            raise ApiError(
                409,
                "class-mismatch",
                f"model classes {model.class_names} != dataset classes {ds.class_names}",
            )
        probs = model.predict_batch(ds.cases)
        preds = probs.argmax(axis=1)
        cm = confusion(preds, ds.labels, ds.n_classes, ds.class_names)
        if thresholds:
            grid = [float(v) for v in thresholds.split(",")]
        else:
            grid = [round(0.05 * i, 2) for i in range(20)]
        curve = rejection_curve(model, ds, grid)
        return {
            "report": metric_report(cm).to_dict(),
            "confusion": cm.to_dict(),
            "rejection_curve": [p.to_dict() for p in curve],
            "confused_pairs": [
                {
                    "pair": list(pair),
                    "names": [ds.class_names[i] for i in pair],
                    "score": score,
                }
                for pair, score in confused_pairs(cm)
            ],
            "relaxed_accuracy": {
                str(k): relaxed_accuracy(model, ds, k)
                for k in range(1, ds.n_classes + 1)
            },
        }

    @app.post("/v1/compare")
    def compare(payload: CompareRequest):
        ds = registry.get_dataset(payload.dataset_id)
        taus = []
        for rid in (payload.model_a, payload.model_b):
            model = registry.get_model(rid).model
            if tuple(model.class_names) != tuple(ds.class_names):
                raise ApiError(409, "class-mismatch", f"model {rid} does not fit the dataset")
            preds = model.predict_batch(ds.cases).argmax(axis=1)
            cm = confusion(preds, ds.labels, ds.n_classes, ds.class_names)
            report = metric_report(cm)
            taus.append(report)
        from .metrics import z_score

        if taus[0].var_tau + taus[1].var_tau == 0:
            z, significant = 0.0, False
        else:
            z, significant = z_score(
                taus[0].tau, taus[0].var_tau, taus[1].tau, taus[1].var_tau
            )
        return {
            "z": z,
            "significant": significant,
            "tau_a": taus[0].tau,
            "var_tau_a": taus[0].var_tau,
            "tau_b": taus[1].tau,
            "var_tau_b": taus[1].var_tau,
        }

    return app
