"""Classification metrics and comparison reports (High is the positive class)."""
from __future__ import annotations

import csv
import time
from dataclasses import astuple, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import rankdata

from .features import FeatureMatrix, LevelSpec, build_matrix
from .graph import GroundTruth, IncomeLabel, SocialGraph, TruthPartition
from .models import Prediction, TrainedModel
from .models.baselines import majority_vote, random_select
from .models.bayes import bayes_predict
from .models.forest import rf_predict
from .models.logistic import lr_predict

REPORT_HEADER = ("model", "level", "accuracy", "precision", "recall", "auc", "f1", "f4",
                 "fit_time_s", "predict_time_s")
NO_LEVEL = "-"
MODEL_NAMES = {"random": "Random Selection", "majority": "Majority Voting",
               "bayes": "Bayesian Method", "lr": "LR", "rf": "RF"}


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.n

    @property
    def precision(self) -> float:
        # no predicted positives: defined as 0 rather than NaN
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0


def confusion(y_true: Sequence, y_pred: Sequence) -> ConfusionCounts:
    t = np.fromiter((int(v) for v in y_true), dtype=np.int8)
    p = np.fromiter((int(v) for v in y_pred), dtype=np.int8)
    if len(t) != len(p):
        raise EvaluationError(f"length mismatch: {len(t)} truths vs {len(p)} predictions")
    if len(t) == 0:
        raise EvaluationError("cannot score an empty prediction set")
    tp = int(np.sum((t == 1) & (p == 1)))
    fp = int(np.sum((t == 0) & (p == 1)))
    tn = int(np.sum((t == 0) & (p == 0)))
    fn = int(np.sum((t == 1) & (p == 0)))
    return ConfusionCounts(tp, fp, tn, fn)


def f_beta(precision: float, recall: float, beta: float) -> float:
    if beta <= 0:
        raise ValueError("beta must be positive")
    b2 = beta * beta
    den = b2 * precision + recall
    return (1 + b2) * precision * recall / den if den > 0 else 0.0


def roc_auc(scores: Sequence[float], y_true: Sequence) -> float:
    """Mann-Whitney AUC: P(score_pos > score_neg) with ties counted as 1/2."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.fromiter((int(v) for v in y_true), dtype=np.int8)
    if len(s) != len(y):
        raise EvaluationError("scores and labels differ in length")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise EvaluationError("AUC needs both classes in the truth labels")
    ranks = rankdata(s)
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass
class ReportRow:
    model: str
    level: str
    accuracy: float
    precision: float
    recall: float
    auc: float
    f1: float
    f4: float
    fit_time_s: float
    predict_time_s: float

    def metrics(self) -> tuple[float, ...]:
        return (self.accuracy, self.precision, self.recall, self.auc, self.f1, self.f4)


@dataclass
class EvalReport:
    mode: str
    rows: list[ReportRow] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def get(self, model: str, level: str = NO_LEVEL) -> ReportRow:
        for r in self.rows:
            if r.model == model and r.level == level:
                return r
        raise KeyError((model, level))


def score_predictions(kind: str, level: str, predictions: Iterable[Prediction],
                      truth: GroundTruth, fit_time: float, predict_time: float) -> ReportRow:
    preds = list(predictions)
    y_true = [int(truth[p.node]) for p in preds]
    cm = confusion(y_true, [int(p.label) for p in preds])
    auc = roc_auc([p.score for p in preds], y_true)
    return ReportRow(
        model=kind, level=level,
        accuracy=cm.accuracy, precision=cm.precision, recall=cm.recall, auc=auc,
        f1=f_beta(cm.precision, cm.recall, 1.0), f4=f_beta(cm.precision, cm.recall, 4.0),
        fit_time_s=float(fit_time), predict_time_s=float(predict_time),
    )


def predict(model: TrainedModel, graph: SocialGraph, nodes: Iterable[str],
            partition: TruthPartition, truth: GroundTruth,
            matrix: FeatureMatrix | None = None) -> list[Prediction]:
    """Dispatch to the model's predictor. LR/RF need ``matrix`` rows for ``nodes``."""
    nodes = sorted(nodes)
    if model.kind == "random":
        return random_select(nodes, model.seed)
    if model.kind == "majority":
        return [majority_vote(graph, u, partition, truth, model.seed) for u in nodes]
    if model.kind == "bayes":
        return bayes_predict(model, graph, nodes, partition, truth)
    if matrix is None:
        raise EvaluationError(f"model {model.kind!r} needs a feature matrix")
    if model.kind == "lr":
        return lr_predict(model, matrix)
    if model.kind == "rf":
        return rf_predict(model, matrix)
    raise EvaluationError(f"unknown model kind {model.kind!r}")


def evaluate_model(model: TrainedModel, graph: SocialGraph, nodes: Iterable[str],
                   partition: TruthPartition, truth: GroundTruth,
                   level: LevelSpec | str | None = None) -> ReportRow:
    """Predict ``nodes`` with ``model`` and score against ``truth``.

    Feature rows are built before the clock starts; the timed span covers
    the prediction call only.
    """
    nodes = sorted(nodes)
    matrix = None
    level_name = NO_LEVEL
    if model.kind in ("lr", "rf"):
        if level is None:
            raise EvaluationError(f"model {model.kind!r} needs a level spec")
        spec = LevelSpec.parse(level)
        level_name = str(spec)
        matrix = build_matrix(graph, nodes, spec, partition, truth)
    t0 = time.perf_counter()
    preds = predict(model, graph, nodes, partition, truth, matrix)
    elapsed = time.perf_counter() - t0
    return score_predictions(model.kind, level_name, preds, truth, model.fit_time, elapsed)


def emit_report(report: EvalReport, path: str | Path) -> Path:
    """Write the report CSV (full precision) and a rounded markdown table beside it."""
    if not report.rows:
        raise EvaluationError("refusing to write an empty report")
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for r in report.rows:
            w.writerow([r.model, r.level, *(repr(float(v)) for v in astuple(r)[2:])])
    path.with_suffix(".md").write_text(format_markdown(report))
    return path


def read_report(path: str | Path, mode: str = "") -> EvalReport:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != REPORT_HEADER:
            raise EvaluationError(f"{path}: unexpected report header {header}")
        rows = [ReportRow(line[0], line[1], *(float(v) for v in line[2:])) for line in reader]
    return EvalReport(mode, rows)


def format_markdown(report: EvalReport) -> str:
    names = [f.name for f in fields(ReportRow)]
    out = [f"### {report.mode.capitalize() or 'Report'} graph", "",
           "| Model | Level | Accuracy | Precision | Recall | AUC | F1 | F4 | Fit Time | Predict Time |",
           "|---|---|---:|---:|---:|---:|---:|---:|---:|---:|"]
    for r in report.rows:
        d = dict(zip(names, astuple(r)))
        fit = "---" if r.model in ("random", "majority") else f"{r.fit_time_s:.3f} s"
        cells = [MODEL_NAMES.get(r.model, r.model), "" if r.level == NO_LEVEL else r.level,
                 *(f"{d[k]:.3f}" for k in ("accuracy", "precision", "recall", "auc", "f1", "f4")),
                 fit, f"{r.predict_time_s:.3f} s"]
        out.append("| " + " | ".join(cells) + " |")
    return "\n".join(out) + "\n"


def truth_labels(truth: GroundTruth, nodes: Iterable[str]) -> list[IncomeLabel]:
    return [truth[u] for u in sorted(nodes)]
