"""Per-node ego-network features at levels ego1..ego3 and cat1..cat3.

Level ``n`` aggregates the directed edges joining ring ``n-1`` to ring ``n``
around the node. Direction is taken relative to the inner endpoint, so an
edge leaving the inner node counts as ``out``. Each level contributes an
8-value block::

    {in, out} x {calls, time, sms, contacts}

and, for ``cat`` levels, a 16-value block splitting the same quantities by
the income label of the outer endpoint (only for outer endpoints in the
feature set G)::

    {in, out} x {calls, time, sms, contacts} x {low, high}

Vectors are laid out level by level (``[ego l1, cat l1, ego l2, cat l2, ...]``),
so every level's vector is a prefix of the next one's.
"""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from . import kernels
from .graph import GraphError, GroundTruth, SocialGraph, TruthPartition

DIRECTIONS = ("in", "out")
QUANTITIES = ("calls", "time", "sms", "contacts")
CATEGORIES = ("low", "high")
MAX_LEVEL = 3


class LevelSpec(NamedTuple):
    kind: str
    level: int

    @classmethod
    def parse(cls, text: "str | LevelSpec") -> "LevelSpec":
        if isinstance(text, LevelSpec):
            return text
        m = re.fullmatch(r"\s*(ego|cat)[_\s-]?([1-9])\s*", str(text).lower())
        if not m:
            raise ValueError(f"invalid level spec {text!r}; expected e.g. 'ego2' or 'cat1'")
        spec = cls(m.group(1), int(m.group(2)))
        spec.validate()
        return spec

    def validate(self) -> None:
        if self.kind not in ("ego", "cat"):
            raise ValueError(f"level kind must be 'ego' or 'cat', got {self.kind!r}")
        if not 1 <= self.level <= MAX_LEVEL:
            raise ValueError(f"level must be in 1..{MAX_LEVEL}, got {self.level}")

    @property
    def width(self) -> int:
        return (8 if self.kind == "ego" else 24) * self.level

    def __str__(self) -> str:
        return f"{self.kind}{self.level}"


def feature_names(spec: LevelSpec | str) -> list[str]:
    spec = LevelSpec.parse(spec)
    names = []
    for n in range(1, spec.level + 1):
        names += [f"l{n}_{d}_{q}" for d in DIRECTIONS for q in QUANTITIES]
        if spec.kind == "cat":
            names += [f"l{n}_{d}_{q}_{c}" for d in DIRECTIONS for q in QUANTITIES for c in CATEGORIES]
    return names


@dataclass
class FeatureMatrix:
    column_names: list[str]
    users: list[str]
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.values.shape != (len(self.users), len(self.column_names)):
            raise ValueError(
                f"values shape {self.values.shape} does not match "
                f"{len(self.users)} users x {len(self.column_names)} columns"
            )
        if len(set(self.column_names)) != len(self.column_names):
            raise ValueError("column names must be unique")

    @property
    def rows(self) -> dict[str, np.ndarray]:
        return dict(zip(self.users, self.values))

    def row(self, user: str) -> np.ndarray:
        return self.values[self.users.index(user)]

    def take(self, users: Iterable[str]) -> "FeatureMatrix":
        pos = {u: i for i, u in enumerate(self.users)}
        users = list(users)
        return FeatureMatrix(self.column_names, users, self.values[[pos[u] for u in users]])

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["user", *self.column_names])
            for u, row in zip(self.users, self.values):
                w.writerow([u, *(repr(float(x)) for x in row)])

    @classmethod
    def from_csv(cls, path: str | Path) -> "FeatureMatrix":
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            users, rows = [], []
            for line in r:
                users.append(line[0])
                rows.append([float(x) for x in line[1:]])
        values = np.array(rows, dtype=np.float64).reshape(len(users), len(header) - 1)
        return cls(header[1:], users, values)


def _node_categories(graph: SocialGraph, partition: TruthPartition | None,
                     truth: GroundTruth | None) -> np.ndarray:
    cat = np.full(len(graph.nodes), -1, dtype=np.int8)
    if partition is None or truth is None:
        return cat
    for u in partition.feature_set:
        i = graph.index.get(u)
        if i is not None:
            cat[i] = int(truth[u])
    return cat


def _compute(graph: SocialGraph, targets: np.ndarray, max_level: int, with_cat: bool,
             node_cat: np.ndarray, impl=None) -> np.ndarray:
    impl = impl or kernels
    return impl.level_features(
        graph.inc_ptr, graph.inc_edge, graph.inc_other, graph.inc_out,
        graph.calls, graph.time, graph.sms,
        node_cat, np.ascontiguousarray(targets, dtype=np.int64), int(max_level), bool(with_cat),
    )


def _target(graph: SocialGraph, v: str) -> np.ndarray:
    if v not in graph.index:
        raise GraphError(f"user {v!r} is not in the graph")
    return np.array([graph.index[v]], dtype=np.int64)


def ego_features(graph: SocialGraph, v: str, max_level: int) -> np.ndarray:
    """Ego block for ``v`` at levels ``1..max_level`` (length ``8 * max_level``)."""
    LevelSpec("ego", max_level).validate()
    cat = np.full(len(graph.nodes), -1, dtype=np.int8)
    return _compute(graph, _target(graph, v), max_level, False, cat)[0]


def cat_features(graph: SocialGraph, v: str, max_level: int,
                 partition: TruthPartition, truth: GroundTruth) -> np.ndarray:
    """Ego plus label-split blocks for ``v`` (length ``24 * max_level``)."""
    LevelSpec("cat", max_level).validate()
    cat = _node_categories(graph, partition, truth)
    return _compute(graph, _target(graph, v), max_level, True, cat)[0]


def build_matrix(graph: SocialGraph, nodes: Iterable[str], spec: LevelSpec | str,
                 partition: TruthPartition | None = None,
                 truth: GroundTruth | None = None) -> FeatureMatrix:
    """Feature rows for ``nodes`` (sorted by user id) at level ``spec``."""
    spec = LevelSpec.parse(spec)
    users = sorted(nodes)
    missing = [u for u in users if u not in graph.index]
    if missing:
        raise GraphError(f"{len(missing)} requested users are not in the graph, e.g. {missing[0]!r}")
    if spec.kind == "cat" and (partition is None or truth is None):
        raise ValueError("categorical features need a partition and ground truth")
    targets = np.array([graph.index[u] for u in users], dtype=np.int64)
    cat = _node_categories(graph, partition, truth)
    values = _compute(graph, targets, spec.level, spec.kind == "cat", cat)
    return FeatureMatrix(feature_names(spec), users, values)
