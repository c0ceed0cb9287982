"""Graph-only baselines: random selection and majority voting."""
from __future__ import annotations

from typing import Iterable

import numpy as np

from ..graph import GroundTruth, IncomeLabel, SocialGraph, TruthPartition
from .base import Prediction, TrainedModel, to_prediction


def random_select(nodes: Iterable[str], seed: int) -> list[Prediction]:
    """Score each node 0 or 1 by a fair seeded draw (nodes taken in sorted order)."""
    users = sorted(nodes)
    draws = np.random.default_rng(seed).integers(0, 2, size=len(users))
    return [to_prediction(u, float(d), seed) for u, d in zip(users, draws)]


def labeled_neighbor_counts(graph: SocialGraph, node: str, partition: TruthPartition,
                            truth: GroundTruth) -> tuple[int, int]:
    """``(n_high, n_low)`` over undirected neighbours that belong to the feature set."""
    n_high = n_low = 0
    for w in graph.neighbors(node):
        if w in partition.feature_set:
            if truth[w] is IncomeLabel.HIGH:
                n_high += 1
            else:
                n_low += 1
    return n_high, n_low


def majority_vote(graph: SocialGraph, node: str, partition: TruthPartition,
                  truth: GroundTruth, seed: int) -> Prediction:
    n_high, n_low = labeled_neighbor_counts(graph, node, partition, truth)
    score = n_high / (n_high + n_low) if n_high + n_low else 0.5
    return to_prediction(node, score, seed)


def fit_random(seed: int) -> TrainedModel:
    return TrainedModel(kind="random", seed=seed)


def fit_majority(seed: int) -> TrainedModel:
    return TrainedModel(kind="majority", seed=seed)
