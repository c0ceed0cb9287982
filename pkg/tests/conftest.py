from __future__ import annotations

import numpy as np
import pytest

from cdrincome.graph import GroundTruth, IncomeLabel, TruthPartition, build_graph
from cdrincome.ingest import CallRecord, SmsRecord

H, L = IncomeLabel.HIGH, IncomeLabel.LOW


def make_graph(calls=(), sms=()):
    """Graph from ``(origin, dest[, duration])`` call tuples and ``(origin, dest)`` sms tuples."""
    call_recs = [CallRecord(c[0], c[1], 0, c[2] if len(c) > 2 else 1) for c in calls]
    sms_recs = [SmsRecord(o, d, 0) for o, d in sms]
    return build_graph(call_recs, sms_recs)


def random_records(n_nodes, n_records, rng, p_sms=0.4):
    names = [f"n{i:03d}" for i in range(n_nodes)]
    calls, sms = [], []
    for _ in range(n_records):
        a, b = rng.choice(n_nodes, size=2, replace=False)
        if rng.random() < p_sms:
            sms.append(SmsRecord(names[a], names[b], 0))
        else:
            calls.append(CallRecord(names[a], names[b], 0, int(rng.integers(0, 600))))
    return calls, sms


def random_labelling(graph, rng, frac_labelled=0.6, frac_feature=0.75):
    users = [u for u in graph.nodes if rng.random() < frac_labelled]
    labels = {u: IncomeLabel(int(rng.integers(0, 2))) for u in users}
    feat = frozenset(u for u in users if rng.random() < frac_feature)
    truth = GroundTruth(labels)
    return truth, TruthPartition(feat, frozenset(users) - feat, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
