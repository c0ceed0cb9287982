"""Synthetic call/SMS/bank fixtures with a planted income partition.

Users are split evenly into Low and High. Undirected contacts are drawn so
that each contact joins two users of the same class with probability
``homophily``; every contact then receives Poisson call and SMS counts
with uniformly random direction. Monthly incomes come from one lognormal
per class.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

import numpy as np

from .ingest import BANK_HEADER, CALLS_HEADER, SMS_HEADER

EPOCH = 1_500_000_000
SECONDS_PER_MONTH = 30 * 86_400


class SynthConfigError(ValueError):
    pass


@dataclass
class SynthConfig:
    n_users: int = 2000
    homophily: float = 0.8
    mean_degree: float = 10.0
    calls_per_edge: float = 3.0
    seconds_per_call: float = 120.0
    sms_per_edge: float = 2.0
    bank_coverage: float = 0.3
    months: int = 3
    income_median_low: float = 1000.0
    income_median_high: float = 4000.0
    income_sigma: float = 0.5
    seed: int = 0

    def validate(self) -> None:
        if self.n_users < 10:
            raise SynthConfigError(f"n_users must be >= 10, got {self.n_users}")
        if not 0.0 <= self.homophily <= 1.0:
            raise SynthConfigError(f"homophily must lie in [0, 1], got {self.homophily}")
        if not 0.0 < self.bank_coverage <= 1.0:
            raise SynthConfigError(f"bank_coverage must lie in (0, 1], got {self.bank_coverage}")
        if self.mean_degree <= 0 or self.mean_degree >= self.n_users:
            raise SynthConfigError(
                f"mean_degree must be in (0, n_users); got {self.mean_degree} for {self.n_users} users")
        if self.months < 1:
            raise SynthConfigError("months must be >= 1")
        for name in ("calls_per_edge", "seconds_per_call", "sms_per_edge", "income_sigma"):
            if getattr(self, name) < 0:
                raise SynthConfigError(f"{name} must be non-negative")
        if self.calls_per_edge == 0 and self.sms_per_edge == 0:
            raise SynthConfigError("calls_per_edge and sms_per_edge cannot both be zero")
        if self.income_median_low <= 0 or self.income_median_high <= 0:
            raise SynthConfigError("income medians must be positive")

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "SynthConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise SynthConfigError(f"unknown synth config keys: {sorted(unknown)}")
        cfg = cls(**doc)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "SynthConfig":
        doc = json.loads(Path(path).read_text())
        return cls.from_dict(doc.get("synth", doc))


@dataclass
class SynthPaths:
    calls: Path
    sms: Path
    bank: Path
    truth: Path


def user_ids(n: int) -> list[str]:
    width = len(str(n - 1))
    return [f"u{i:0{width}d}" for i in range(n)]


def sample_classes(n: int, rng: np.random.Generator) -> np.ndarray:
    """0/1 class per user with exactly ``n // 2`` High users."""
    cls = np.zeros(n, dtype=np.int8)
    cls[rng.permutation(n)[: n // 2]] = 1
    return cls


def sample_contacts(cls: np.ndarray, n_edges: int, homophily: float,
                    rng: np.random.Generator) -> np.ndarray:
    """``(n_edges, 2)`` distinct undirected pairs ``(a, b)`` with ``a < b``."""
    n = len(cls)
    members = [np.flatnonzero(cls == 0), np.flatnonzero(cls == 1)]
    sizes = np.array([len(members[0]), len(members[1])])
    pool = np.concatenate(members)
    start = np.array([0, sizes[0]])
    keys = np.empty(0, dtype=np.int64)
    for _ in range(1000):
        need = n_edges - len(keys)
        if need <= 0:
            break
        batch = int(need * 1.2) + 64
        u = rng.integers(0, n, size=batch)
        same = rng.random(batch) < homophily
        target = np.where(same, cls[u], 1 - cls[u])
        w = pool[start[target] + (rng.random(batch) * sizes[target]).astype(np.int64)]
        keep = u != w
        a, b = np.minimum(u, w)[keep], np.maximum(u, w)[keep]
        cand = np.concatenate([keys, a.astype(np.int64) * n + b])
        _, first = np.unique(cand, return_index=True)
        keys = cand[np.sort(first)]
    else:
        raise SynthConfigError("could not place the requested number of contacts")
    keys = keys[:n_edges]
    return np.stack([keys // n, keys % n], axis=1)


def generate(config: SynthConfig, out_dir: str | Path) -> SynthPaths:
    """Write ``calls.csv``, ``sms.csv``, ``bank.csv`` and ``truth.csv`` into ``out_dir``."""
    config.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(config.seed)
    n = config.n_users
    ids = user_ids(n)
    cls = sample_classes(n, rng)
    n_edges = int(round(n * config.mean_degree / 2))
    pairs = sample_contacts(cls, n_edges, config.homophily, rng)

    n_calls = rng.poisson(config.calls_per_edge, size=len(pairs))
    n_sms = rng.poisson(config.sms_per_edge, size=len(pairs))
    # a contact must carry at least one record to exist in the graph
    empty = (n_calls + n_sms) == 0
    if config.calls_per_edge > 0:
        n_calls[empty] = 1
    else:
        n_sms[empty] = 1

    window = config.months * SECONDS_PER_MONTH

    def directed(counts):
        e = np.repeat(np.arange(len(pairs)), counts)
        flip = rng.random(len(e)) < 0.5
        origin = np.where(flip, pairs[e, 1], pairs[e, 0])
        dest = np.where(flip, pairs[e, 0], pairs[e, 1])
        ts = EPOCH + rng.integers(0, window, size=len(e))
        return origin, dest, ts

    c_o, c_d, c_t = directed(n_calls)
    dur = np.rint(rng.exponential(config.seconds_per_call, size=len(c_o))).astype(np.int64)
    s_o, s_d, s_t = directed(n_sms)

    paths = SynthPaths(out / "calls.csv", out / "sms.csv", out / "bank.csv", out / "truth.csv")
    order = np.argsort(c_t, kind="stable")
    _write_lines(paths.calls, CALLS_HEADER,
                 (f"{ids[o]},{ids[d]},{t},{s}" for o, d, t, s in
                  zip(c_o[order].tolist(), c_d[order].tolist(), c_t[order].tolist(), dur[order].tolist())))
    order = np.argsort(s_t, kind="stable")
    _write_lines(paths.sms, SMS_HEADER,
                 (f"{ids[o]},{ids[d]},{t}" for o, d, t in
                  zip(s_o[order].tolist(), s_d[order].tolist(), s_t[order].tolist())))

    n_bank = max(1, int(round(config.bank_coverage * n)))
    banked = np.sort(rng.choice(n, size=n_bank, replace=False))
    medians = np.array([config.income_median_low, config.income_median_high])
    log_mu = np.log(medians[cls[banked]])
    incomes = np.exp(rng.normal(log_mu[:, None], config.income_sigma, size=(n_bank, config.months)))
    _write_lines(paths.bank, BANK_HEADER,
                 (f"{ids[u]},{m},{incomes[k, m]:.2f}"
                  for k, u in enumerate(banked.tolist()) for m in range(config.months)))
    _write_lines(paths.truth, ("user", "label"),
                 (f"{ids[i]},{'High' if c else 'Low'}" for i, c in enumerate(cls.tolist())))
    return paths


def _write_lines(path: Path, header, lines) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for chunk in _chunks(lines, 65536):
            fh.write("\n".join(chunk) + "\n")


def _chunks(it, size):
    buf = []
    for x in it:
        buf.append(x)
        if len(buf) == size:
            yield buf
            buf = []
    if buf:
        yield buf
