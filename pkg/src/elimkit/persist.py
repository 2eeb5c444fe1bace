"""Versioned JSON persistence for datasets and trained models.

Files carry a top-level ``format_version``; writers emit canonical JSON
(sorted keys, fixed separators) so identical objects produce identical
bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .classifiers import (
    BayesMixtureClassifier,
    Classifier,
    Committee,
    IntervalRuleSet,
    KnnClassifier,
    LinearLogisticModel,
    MlpModel,
)
from .datakit import Dataset, FeatureMeta
from .errors import CorruptFileError, VersionMismatchError

FORMAT_VERSION = 1

MODEL_KINDS = {
    cls.kind: cls
    for cls in (
        IntervalRuleSet,
        KnnClassifier,
        LinearLogisticModel,
        MlpModel,
        Committee,
        BayesMixtureClassifier,
    )
}


def canonical_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(canonical_dumps(obj), encoding="utf-8")


def _read_document(path, expected_type: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise CorruptFileError(f"file not found: {p}")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorruptFileError(f"{p}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise CorruptFileError(f"{p}: missing format_version")
    if doc["format_version"] != FORMAT_VERSION:
        raise VersionMismatchError(
            f"{p}: format_version {doc['format_version']}, expected {FORMAT_VERSION}"
        )
    if doc.get("type") != expected_type:
        raise CorruptFileError(
            f"{p}: expected a {expected_type} document, found {doc.get('type')!r}"
        )
    return doc


# ---------------------------------------------------------------------------
# Datasets


def dataset_to_dict(dataset: Dataset) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "type": "dataset",
        "name": dataset.name,
        "class_names": list(dataset.class_names),
        "features": [m.to_dict() for m in dataset.features],
        "labels": dataset.labels.tolist(),
        "cases": dataset.cases.tolist(),
    }


def dataset_from_dict(doc: dict) -> Dataset:
    try:
        return Dataset(
            np.asarray(doc["cases"], float),
            np.asarray(doc["labels"], int),
            tuple(doc["class_names"]),
            tuple(FeatureMeta.from_dict(m) for m in doc["features"]),
            name=doc.get("name", "dataset"),
        )
    except KeyError as exc:
        raise CorruptFileError(f"dataset document missing field {exc}") from None


def save_dataset(dataset: Dataset, path) -> None:
    write_json(path, dataset_to_dict(dataset))


def load_dataset(path) -> Dataset:
    return dataset_from_dict(_read_document(path, "dataset"))


# ---------------------------------------------------------------------------
# Models


def model_to_dict(model: Classifier) -> dict:
    doc = model.to_dict()
    doc["format_version"] = FORMAT_VERSION
    doc["type"] = "model"
    return doc


def model_from_dict(doc: dict) -> Classifier:
    kind = doc.get("kind")
    if kind not in MODEL_KINDS:
        raise CorruptFileError(f"unknown model kind {kind!r}")
    try:
        return MODEL_KINDS[kind].from_dict(doc)
    except (KeyError, TypeError) as exc:
        raise CorruptFileError(f"malformed {kind} model document: {exc}") from None


def save_model(model: Classifier, path) -> None:
    write_json(path, model_to_dict(model))


def load_model(path) -> Classifier:
    return model_from_dict(_read_document(path, "model"))
