"""Directed weighted communication graph, income labels and the G/H split.

Nodes are stored in sorted user-id order and addressed internally by
integer index. Edges are kept as parallel numpy arrays; an incidence CSR
(each directed edge listed under both of its endpoints) backs the ring
traversals and the compiled feature kernel.
"""
from __future__ import annotations

import csv
import enum
import math
from collections import defaultdict
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .ingest import BankRecord, CallRecord, SmsRecord


class GraphError(ValueError):
    pass


class IncomeLabel(enum.IntEnum):
    LOW = 0
    HIGH = 1

    def __str__(self) -> str:
        return self.name.capitalize()

    @classmethod
    def parse(cls, text: str) -> "IncomeLabel":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown income label {text!r}") from None


class EdgeAggregate(NamedTuple):
    calls: int
    time: int
    sms: int


class SocialGraph:
    """Immutable directed graph. Build it with :func:`build_graph`."""

    def __init__(self, nodes, src, dst, calls, time, sms):
        self.nodes: tuple[str, ...] = tuple(nodes)
        self.index: dict[str, int] = {u: i for i, u in enumerate(self.nodes)}
        self.src = np.ascontiguousarray(src, dtype=np.int64)
        self.dst = np.ascontiguousarray(dst, dtype=np.int64)
        self.calls = np.ascontiguousarray(calls, dtype=np.int64)
        self.time = np.ascontiguousarray(time, dtype=np.int64)
        self.sms = np.ascontiguousarray(sms, dtype=np.int64)
        for a in (self.src, self.dst, self.calls, self.time, self.sms):
            a.setflags(write=False)
        self._build_incidence()

    def _build_incidence(self) -> None:
        n, m = len(self.nodes), len(self.src)
        owner = np.concatenate([self.src, self.dst])
        other = np.concatenate([self.dst, self.src])
        edge = np.concatenate([np.arange(m), np.arange(m)]).astype(np.int64)
        is_out = np.concatenate([np.ones(m, np.int8), np.zeros(m, np.int8)])
        order = np.lexsort((other, owner))
        self.inc_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(owner, minlength=n), out=self.inc_ptr[1:])
        self.inc_edge = np.ascontiguousarray(edge[order])
        self.inc_other = np.ascontiguousarray(other[order])
        self.inc_out = np.ascontiguousarray(is_out[order])

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, user: object) -> bool:
        return user in self.index

    def __repr__(self) -> str:
        return f"SocialGraph(nodes={len(self.nodes)}, edges={self.n_edges})"

    @property
    def n_edges(self) -> int:
        return len(self.src)

    @cached_property
    def edges(self) -> dict[tuple[str, str], EdgeAggregate]:
        nodes = self.nodes
        return {
            (nodes[s], nodes[d]): EdgeAggregate(int(c), int(t), int(k))
            for s, d, c, t, k in zip(self.src, self.dst, self.calls, self.time, self.sms)
        }

    @cached_property
    def _adjacency(self) -> list[list[int]]:
        ptr, other = self.inc_ptr.tolist(), self.inc_other.tolist()
        adj = []
        for i in range(len(self.nodes)):
            nb = other[ptr[i]:ptr[i + 1]]
            # sorted by construction; drop the duplicate from a reciprocal pair
            adj.append([w for j, w in enumerate(nb) if j == 0 or nb[j - 1] != w])
        return adj

    def neighbor_indices(self, i: int) -> list[int]:
        return self._adjacency[i]

    def neighbors(self, user: str) -> set[str]:
        """Undirected neighbours of ``user``."""
        nodes = self.nodes
        return {nodes[w] for w in self._adjacency[self._idx(user)]}

    def _idx(self, user: str) -> int:
        try:
            return self.index[user]
        except KeyError:
            raise GraphError(f"user {user!r} is not in the graph") from None


def build_graph(
    calls: Iterable[CallRecord],
    sms: Iterable[SmsRecord],
    telco_users: set[str] | None = None,
) -> SocialGraph:
    """Sum records into one directed edge per (origin, dest) pair.

    With ``telco_users`` given, any record with an endpoint outside that set
    is dropped. Pairs that only exchanged SMS still form an edge.
    """
    provisional: dict[str, int] = {}
    intern = provisional.setdefault

    def keep(r) -> bool:
        return telco_users is None or (r.origin in telco_users and r.dest in telco_users)

    c_src, c_dst, c_dur = [], [], []
    for r in calls:
        if keep(r):
            c_src.append(intern(r.origin, len(provisional)))
            c_dst.append(intern(r.dest, len(provisional)))
            c_dur.append(r.duration)
    s_src, s_dst = [], []
    for r in sms:
        if keep(r):
            s_src.append(intern(r.origin, len(provisional)))
            s_dst.append(intern(r.dest, len(provisional)))

    nodes = sorted(provisional)
    n = len(nodes)
    rank = np.empty(n, dtype=np.int64)
    rank[[provisional[u] for u in nodes]] = np.arange(n)
    src = rank[np.array(c_src + s_src, dtype=np.int64)]
    dst = rank[np.array(c_dst + s_dst, dtype=np.int64)]
    n_calls = len(c_src)
    keys, inv = np.unique(src * max(n, 1) + dst, return_inverse=True)
    m = len(keys)
    is_call = np.arange(len(src)) < n_calls
    calls_agg = np.bincount(inv, weights=is_call, minlength=m)
    time_agg = np.bincount(inv[:n_calls], weights=np.array(c_dur, dtype=np.float64), minlength=m)
    sms_agg = np.bincount(inv, weights=~is_call, minlength=m)
    return SocialGraph(nodes, keys // max(n, 1), keys % max(n, 1),
                       np.rint(calls_agg), np.rint(time_agg), np.rint(sms_agg))


@dataclass(frozen=True)
class GroundTruth:
    labels: dict[str, IncomeLabel]

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, user: object) -> bool:
        return user in self.labels

    def __getitem__(self, user: str) -> IncomeLabel:
        return self.labels[user]

    @property
    def low(self) -> set[str]:
        return {u for u, lab in self.labels.items() if lab is IncomeLabel.LOW}

    @property
    def high(self) -> set[str]:
        return {u for u, lab in self.labels.items() if lab is IncomeLabel.HIGH}


@dataclass(frozen=True)
class TruthPartition:
    feature_set: frozenset[str]
    train_set: frozenset[str]
    seed: int


def label_users(bank: Iterable[BankRecord], graph: SocialGraph) -> GroundTruth:
    """Median split of mean monthly income over users present in ``graph``.

    Users are ordered by ``(income, user)``; the lower half (with the extra
    user on odd counts) is Low.
    """
    sums: dict[str, list[float]] = defaultdict(lambda: [0.0, 0])
    for r in bank:
        s = sums[r.user]
        s[0] += r.income
        s[1] += 1
    if not sums:
        raise GraphError("bank data is empty")
    incomes = [(s / c, u) for u, (s, c) in sums.items() if u in graph.index]
    if not incomes:
        raise GraphError("no bank user matches a graph node; ground truth would be empty")
    incomes.sort()
    n_low = math.ceil(len(incomes) / 2)
    labels = {u: (IncomeLabel.LOW if k < n_low else IncomeLabel.HIGH) for k, (_, u) in enumerate(incomes)}
    return GroundTruth(labels)


def partition_truth(truth: GroundTruth, seed: int, feature_fraction: float = 0.75) -> TruthPartition:
    """Stratified random split of ``truth`` into the feature set G and train set H."""
    n = len(truth)
    if n < 4:
        raise GraphError(f"ground truth has {n} users; at least 4 are needed to partition")
    k_total = math.floor(feature_fraction * n)
    low, high = sorted(truth.low), sorted(truth.high)
    k_low = min(len(low), round(k_total * len(low) / n))
    k_high = k_total - k_low
    if k_high > len(high):
        k_high = len(high)
        k_low = k_total - k_high
    rng = np.random.default_rng(seed)
    pick_low = rng.permutation(len(low))[:k_low]
    pick_high = rng.permutation(len(high))[:k_high]
    feature = frozenset([low[i] for i in pick_low] + [high[i] for i in pick_high])
    train = frozenset(truth.labels) - feature
    return TruthPartition(feature, train, seed)


def ego_ring(graph: SocialGraph, v: str, n: int) -> set[str]:
    """Nodes at undirected hop distance exactly ``n`` from ``v``."""
    if n < 0:
        raise ValueError("ring index must be >= 0")
    return {graph.nodes[i] for i in _rings(graph, graph._idx(v), n)[n]}


def _rings(graph: SocialGraph, start: int, depth: int) -> list[list[int]]:
    seen = {start}
    rings = [[start]]
    for _ in range(depth):
        nxt = []
        for u in rings[-1]:
            for w in graph.neighbor_indices(u):
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        rings.append(nxt)
    return rings


class LevelEdge(NamedTuple):
    origin: str
    dest: str
    inner: str


def level_edges(graph: SocialGraph, v: str, n: int) -> set[LevelEdge]:
    """Directed edges linking ring ``n-1`` to ring ``n`` around ``v``.

    Each result names its inner (ring ``n-1``) endpoint. For ``n == 1`` these
    are exactly the edges incident to ``v``.
    """
    if n < 1:
        raise ValueError("level must be >= 1")
    rings = _rings(graph, graph._idx(v), n)
    outer = set(rings[n])
    nodes = graph.nodes
    out = set()
    ptr, inc_edge, inc_other = graph.inc_ptr, graph.inc_edge, graph.inc_other
    for u in rings[n - 1]:
        for j in range(ptr[u], ptr[u + 1]):
            if int(inc_other[j]) in outer:
                e = inc_edge[j]
                out.add(LevelEdge(nodes[graph.src[e]], nodes[graph.dst[e]], nodes[u]))
    return out


class GraphMode(str, enum.Enum):
    FULL = "full"
    INNER = "inner"


def eval_nodes(
    graph: SocialGraph,
    partition: TruthPartition,
    mode: GraphMode | str,
    inner_rule: str = "feature",
) -> set[str]:
    """Evaluation node set: all of H (full) or its labelled-connected part (inner).

    ``inner_rule="feature"`` keeps H members with a neighbour in G;
    ``inner_rule="train"`` keeps those with a neighbour in H.
    """
    mode = GraphMode(mode)
    if mode is GraphMode.FULL:
        return set(partition.train_set)
    if inner_rule == "feature":
        anchor = partition.feature_set
    elif inner_rule == "train":
        anchor = partition.train_set
    else:
        raise ValueError(f"inner_rule must be 'feature' or 'train', got {inner_rule!r}")
    out = set()
    for h in partition.train_set:
        if h in graph.index and not graph.neighbors(h).isdisjoint(anchor):
            out.add(h)
    return out


def write_graph_csv(graph: SocialGraph, path: str | Path) -> None:
    nodes = graph.nodes
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("origin", "dest", "calls", "time_s", "sms"))
        for s, d, c, t, k in zip(graph.src, graph.dst, graph.calls, graph.time, graph.sms):
            w.writerow((nodes[s], nodes[d], int(c), int(t), int(k)))


def write_labels_csv(truth: GroundTruth, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("user", "label"))
        for u in sorted(truth.labels):
            w.writerow((u, str(truth.labels[u])))


def read_labels_csv(path: str | Path) -> dict[str, IncomeLabel]:
    with open(path, newline="") as fh:
        rows = csv.DictReader(fh)
        return {r["user"]: IncomeLabel.parse(r["label"]) for r in rows}
