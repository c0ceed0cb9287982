"""Homophily-aware Bayesian classifier over labelled ego-network counts.

Each labelled neighbour of a user is treated as an independent draw that is
High with probability ``beta_high`` when the user is High and ``beta_low``
when the user is Low. With prior ``prior_high`` the posterior after seeing
``n_h`` High and ``n_l`` Low neighbours is::

    pi * bH**n_h * (1-bH)**n_l
    -----------------------------------------------------------
    pi * bH**n_h * (1-bH)**n_l + (1-pi) * bL**n_h * (1-bL)**n_l

The three parameters are estimated from edges among feature-set users.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable

from ..graph import GroundTruth, IncomeLabel, SocialGraph, TruthPartition
from .base import ModelError, Prediction, TrainedModel, to_prediction
from .baselines import labeled_neighbor_counts

EPS = 1e-6


def _clamp(p: float) -> float:
    return min(max(p, EPS), 1.0 - EPS)


@dataclass(frozen=True)
class HomophilyParams:
    beta_high: float
    beta_low: float
    prior_high: float


def bayes_fit(graph: SocialGraph, truth: GroundTruth, partition: TruthPartition) -> HomophilyParams:
    """Estimate homophily parameters from undirected edges inside the feature set.

    Each unordered labelled pair counts once: ``beta_high = e_HH / (e_HH + e_HL)``
    and ``beta_low = e_HL / (e_HL + e_LL)``. A class with no incident labelled
    edges falls back to the prior.
    """
    feat = partition.feature_set
    labels = [truth[u] for u in feat if u in truth]
    if IncomeLabel.HIGH not in labels or IncomeLabel.LOW not in labels:
        raise ModelError("feature set must contain both income labels")
    prior = sum(1 for lab in labels if lab is IncomeLabel.HIGH) / len(labels)

    counts = {"hh": 0, "hl": 0, "ll": 0}
    for u in sorted(feat):
        if u not in graph.index:
            continue
        lu = truth[u]
        for w in graph.neighbors(u):
            # count each unordered pair from its smaller endpoint only
            if w <= u or w not in feat:
                continue
            lw = truth[w]
            if lu is IncomeLabel.HIGH and lw is IncomeLabel.HIGH:
                counts["hh"] += 1
            elif lu is IncomeLabel.LOW and lw is IncomeLabel.LOW:
                counts["ll"] += 1
            else:
                counts["hl"] += 1

    hi_den = counts["hh"] + counts["hl"]
    lo_den = counts["hl"] + counts["ll"]
    beta_high = counts["hh"] / hi_den if hi_den else prior
    beta_low = counts["hl"] / lo_den if lo_den else prior
    return HomophilyParams(_clamp(beta_high), _clamp(beta_low), _clamp(prior))


def bayes_posterior(params: HomophilyParams, n_high: int, n_low: int) -> float:
    if n_high < 0 or n_low < 0:
        raise ValueError("neighbour counts must be non-negative")
    bh, bl, pi = params.beta_high, params.beta_low, params.prior_high
    log_h = math.log(pi) + n_high * math.log(bh) + n_low * math.log1p(-bh)
    log_l = math.log1p(-pi) + n_high * math.log(bl) + n_low * math.log1p(-bl)
    # logistic of the log-odds, written to avoid overflow either way
    d = log_l - log_h
    if d >= 0:
        z = math.exp(-d)
        return z / (1.0 + z)
    return 1.0 / (1.0 + math.exp(d))


def fit_bayes(graph: SocialGraph, truth: GroundTruth, partition: TruthPartition,
              seed: int) -> TrainedModel:
    params = bayes_fit(graph, truth, partition)
    return TrainedModel(kind="bayes", params=asdict(params), seed=seed)


def bayes_predict(model: TrainedModel, graph: SocialGraph, nodes: Iterable[str],
                  partition: TruthPartition, truth: GroundTruth) -> list[Prediction]:
    params = HomophilyParams(**model.params)
    out = []
    for u in sorted(nodes):
        n_high, n_low = labeled_neighbor_counts(graph, u, partition, truth)
        out.append(to_prediction(u, bayes_posterior(params, n_high, n_low), model.seed))
    return out
