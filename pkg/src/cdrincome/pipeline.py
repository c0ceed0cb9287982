"""End-to-end run: ingest, graph, labels, partition, features, fit, evaluate, report."""
from __future__ import annotations

import copy
import hashlib
import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import __version__, kernels
from .evaluation import EvalReport, NO_LEVEL, emit_report, predict, score_predictions
from .features import FeatureMatrix, LevelSpec, build_matrix
from .graph import (GraphMode, GroundTruth, SocialGraph, TruthPartition, build_graph,
                    eval_nodes, label_users, partition_truth)
from .ingest import parse_bank, parse_calls, parse_sms
from .models import KINDS, HyperGrid, TrainedModel, fit_bayes, fit_majority, fit_random, grid_search_cv
from .models.base import to_prediction
from .synth import SynthConfig, generate

log = logging.getLogger(__name__)

STRUCTURAL = ("random", "majority", "bayes")
LEARNED = ("lr", "rf")
MANIFEST_FORMAT = "cdrincome-manifest"


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class RunConfig:
    inputs: dict[str, str] | None = None
    synth: dict[str, Any] | None = None
    seed: int = 0
    partition_seed: int | None = None
    model_seed: int | None = None
    fold_seed: int | None = None
    levels: list[str] = field(default_factory=lambda: ["ego1", "ego2", "ego3", "cat1", "cat2", "cat3"])
    models: list[str] = field(default_factory=lambda: list(KINDS))
    grids: dict[str, Any] = field(default_factory=dict)
    modes: list[str] = field(default_factory=lambda: ["full", "inner"])
    inner_rule: str = "feature"
    folds: int = 5
    output_dir: str = "out"
    base_dir: str = "."

    def __post_init__(self) -> None:
        if self.partition_seed is None:
            self.partition_seed = self.seed
        if self.model_seed is None:
            self.model_seed = self.seed + 1
        if self.fold_seed is None:
            self.fold_seed = self.seed + 2

    def validate(self) -> None:
        if not self.models:
            raise ConfigError("at least one model must be selected")
        bad = [m for m in self.models if m not in KINDS]
        if bad:
            raise ConfigError(f"unknown models {bad}; choose from {list(KINDS)}")
        if any(m in LEARNED for m in self.models) and not self.levels:
            raise ConfigError("LR/RF need at least one feature level")
        for lv in self.levels:
            try:
                LevelSpec.parse(lv)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        if not self.modes:
            raise ConfigError("at least one graph mode must be selected")
        for m in self.modes:
            if m not in ("full", "inner"):
                raise ConfigError(f"unknown graph mode {m!r}")
        if self.inner_rule not in ("feature", "train"):
            raise ConfigError("inner_rule must be 'feature' or 'train'")
        if (self.inputs is None) == (self.synth is None):
            raise ConfigError("give exactly one of 'inputs' (calls/sms/bank paths) or 'synth'")
        if self.inputs is not None:
            missing = {"calls", "sms", "bank"} - set(self.inputs)
            if missing:
                raise ConfigError(f"inputs missing {sorted(missing)}")
        if self.synth is not None:
            SynthConfig.from_dict(self.synth)
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        HyperGrid.from_dict(self.grids)

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def to_dict(self) -> dict[str, Any]:
        doc = {k: copy.deepcopy(getattr(self, k)) for k in self.__dataclass_fields__ if k != "base_dir"}
        return doc

    @classmethod
    def from_dict(cls, doc: dict[str, Any], base_dir: str | Path = ".") -> "RunConfig":
        if doc.get("format") == MANIFEST_FORMAT:
            doc = doc["config"]
        known = set(cls.__dataclass_fields__) - {"base_dir"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**copy.deepcopy(doc), base_dir=str(base_dir))

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(doc, base_dir=path.parent)


def config_hash(doc: dict[str, Any]) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


@dataclass
class PreparedData:
    graph: SocialGraph
    truth: GroundTruth
    partition: TruthPartition
    skipped: dict[str, int]


@dataclass
class RunResult:
    reports: dict[str, EvalReport]
    manifest: dict[str, Any]
    report_paths: dict[str, Path]
    models: dict[str, TrainedModel]


class _Stages:
    def __init__(self):
        self.times: dict[str, float] = {}

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        except (StageError, KeyboardInterrupt):
            raise
        except Exception as exc:
            raise StageError(name, exc) from exc
        finally:
            self.times[name] = self.times.get(name, 0.0) + time.perf_counter() - t0


def prepare(cfg: RunConfig, stages: _Stages | None = None) -> PreparedData:
    """Ingest inputs (generating them first for synthetic runs) and build graph, truth, partition."""
    stages = stages or _Stages()
    out = cfg.resolve(cfg.output_dir)
    if cfg.synth is not None:
        with stages.stage("synth"):
            paths = generate(SynthConfig.from_dict(cfg.synth), out / "synth")
            files = {"calls": paths.calls, "sms": paths.sms, "bank": paths.bank}
    else:
        files = {k: cfg.resolve(v) for k, v in cfg.inputs.items() if k in ("calls", "sms", "bank")}
    with stages.stage("ingest"):
        calls = parse_calls(files["calls"])
        sms = parse_sms(files["sms"])
        bank = parse_bank(files["bank"])
    with stages.stage("graph"):
        graph = build_graph(calls.records, sms.records)
    with stages.stage("labels"):
        truth = label_users(bank.records, graph)
    with stages.stage("partition"):
        partition = partition_truth(truth, cfg.partition_seed)
    skipped = {"calls": calls.skipped, "sms": sms.skipped, "bank": bank.skipped}
    return PreparedData(graph, truth, partition, skipped)


def run(cfg: RunConfig) -> RunResult:
    cfg.validate()
    stages = _Stages()
    out = cfg.resolve(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = prepare(cfg, stages)
    graph, truth, partition = data.graph, data.truth, data.partition

    train_users = sorted(partition.train_set)
    y_train = [truth[u] for u in train_users]
    grid = HyperGrid.from_dict(cfg.grids, seed=cfg.fold_seed)
    levels = [LevelSpec.parse(lv) for lv in cfg.levels]

    matrices: dict[str, FeatureMatrix] = {}
    if any(m in LEARNED for m in cfg.models):
        with stages.stage("features"):
            for spec in levels:
                matrices[str(spec)] = build_matrix(graph, train_users, spec, partition, truth)

    models: dict[str, TrainedModel] = {}
    with stages.stage("fit"):
        for kind in cfg.models:
            if kind == "random":
                models["random"] = fit_random(cfg.model_seed)
            elif kind == "majority":
                models["majority"] = fit_majority(cfg.model_seed)
            elif kind == "bayes":
                t0 = time.perf_counter()
                models["bayes"] = fit_bayes(graph, truth, partition, cfg.model_seed)
                models["bayes"].fit_time = time.perf_counter() - t0
        for kind in LEARNED:
            if kind not in cfg.models:
                continue
            for spec in levels:
                m = grid_search_cv(matrices[str(spec)], y_train, kind, grid, k=cfg.folds,
                                   seed=cfg.model_seed)
                models[f"{kind}:{spec}"] = m

    reports: dict[str, EvalReport] = {}
    report_paths: dict[str, Path] = {}
    with stages.stage("evaluate"):
        for mode in cfg.modes:
            nodes = sorted(eval_nodes(graph, partition, GraphMode(mode), cfg.inner_rule))
            report = EvalReport(mode)
            for kind in STRUCTURAL:
                if kind not in models:
                    continue
                model = models[kind]
                t0 = time.perf_counter()
                preds = predict(model, graph, nodes, partition, truth)
                dt = time.perf_counter() - t0
                report.rows.append(score_predictions(kind, NO_LEVEL, preds, truth, model.fit_time, dt))
            for kind in LEARNED:
                if kind not in cfg.models:
                    continue
                for spec in levels:
                    model = models[f"{kind}:{spec}"]
                    report.rows.append(_score_learned(model, matrices[str(spec)], nodes, truth, str(spec)))
            reports[mode] = report
    with stages.stage("report"):
        for mode, report in reports.items():
            report_paths[mode] = emit_report(report, out / f"report_{mode}.csv")

    config_doc = cfg.to_dict()
    manifest = {
        "format": MANIFEST_FORMAT,
        "version": 1,
        "package_version": __version__,
        "kernel_backend": kernels.BACKEND,
        "config": config_doc,
        "config_hash": config_hash(config_doc),
        "seeds": {"partition": cfg.partition_seed, "model": cfg.model_seed, "fold": cfg.fold_seed},
        "counts": {
            "nodes": len(graph.nodes), "edges": graph.n_edges, "labelled": len(truth),
            "feature_set": len(partition.feature_set), "train_set": len(partition.train_set),
            "skipped_lines": data.skipped,
        },
        "selected_hyperparams": {k: m.hyperparams for k, m in models.items() if k.split(":")[0] in LEARNED},
        "stage_times_s": stages.times,
        "reports": {m: p.name for m, p in report_paths.items()},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return RunResult(reports, manifest, report_paths, models)


def _score_learned(model: TrainedModel, matrix: FeatureMatrix, nodes: list[str],
                   truth: GroundTruth, level: str):
    """Score ``nodes`` with the winner's out-of-fold predictions.

    Every evaluated node is scored by a model that never saw its label.
    The reported predict time is that of the refit model on the same rows.
    """
    pos = {u: i for i, u in enumerate(model.params["oof_users"])}
    oof = model.params["oof_scores"]
    preds = [to_prediction(u, float(oof[pos[u]]), model.seed) for u in nodes]
    sub = matrix.take(nodes)
    t0 = time.perf_counter()
    predict(model, None, nodes, None, truth, sub)
    dt = time.perf_counter() - t0
    return score_predictions(model.kind, level, preds, truth, model.fit_time, dt)
