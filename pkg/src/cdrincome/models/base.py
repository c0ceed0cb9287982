"""Prediction records, the trained-model container and its serialization."""
from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np

from ..graph import IncomeLabel

MODEL_FORMAT = "cdrincome-model"
MODEL_FORMAT_VERSION = 1
KINDS = ("random", "majority", "bayes", "lr", "rf")


class ModelError(ValueError):
    pass


class Prediction(NamedTuple):
    node: str
    score: float
    label: IncomeLabel


def coin(seed: int, node: str) -> IncomeLabel:
    """Seeded fair coin, stable per (seed, node) regardless of call order."""
    h = zlib.crc32(f"{seed}:{node}".encode())
    return IncomeLabel.HIGH if (h >> 7) & 1 else IncomeLabel.LOW


def label_array(labels) -> np.ndarray:
    """0/1 int8 array from IncomeLabel values or ints."""
    return np.fromiter((int(IncomeLabel(v)) for v in labels), dtype=np.int8)


def to_prediction(node: str, score: float, seed: int) -> Prediction:
    if score > 0.5:
        label = IncomeLabel.HIGH
    elif score < 0.5:
        label = IncomeLabel.LOW
    else:
        label = coin(seed, node)
    return Prediction(node, float(score), label)


@dataclass
class TrainedModel:
    kind: str
    params: dict[str, Any] = field(default_factory=dict)
    hyperparams: dict[str, Any] = field(default_factory=dict)
    fit_time: float = 0.0
    columns: list[str] | None = None
    seed: int = 0
    cv_results: list[dict[str, Any]] = field(default_factory=list)

    def check_columns(self, columns: list[str]) -> None:
        if self.columns is not None and list(columns) != list(self.columns):
            raise ModelError(
                f"feature columns differ from training columns "
                f"({len(columns)} given, {len(self.columns)} expected)"
            )


def _encode(obj):
    if isinstance(obj, np.ndarray):
        return {"__ndarray__": obj.tolist(), "dtype": str(obj.dtype)}
    if isinstance(obj, dict):
        # underscore keys hold runtime caches
        return {k: _encode(v) for k, v in obj.items() if not str(k).startswith("_")}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _decode(obj):
    if isinstance(obj, dict):
        if "__ndarray__" in obj:
            return np.array(obj["__ndarray__"], dtype=obj["dtype"])
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def dump_model(model: TrainedModel, path: str | Path) -> None:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "hyperparams": _encode(model.hyperparams),
        "params": _encode(model.params),
        "columns": model.columns,
        "seed": model.seed,
        "fit_time": model.fit_time,
        "cv_results": _encode(model.cv_results),
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True))


def load_model(path: str | Path) -> TrainedModel:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != MODEL_FORMAT:
        raise ModelError(f"{path}: not a {MODEL_FORMAT} file")
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise ModelError(f"{path}: unsupported model format version {doc.get('version')}")
    return TrainedModel(
        kind=doc["kind"],
        params=_decode(doc["params"]),
        hyperparams=_decode(doc["hyperparams"]),
        fit_time=doc["fit_time"],
        columns=doc["columns"],
        seed=doc["seed"],
        cv_results=_decode(doc["cv_results"]),
    )
