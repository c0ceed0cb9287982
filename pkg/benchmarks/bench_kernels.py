"""Compare the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py --users 2000 --repeat 3

Times ego/cat feature extraction over every node of a synthetic graph and
the growth of a handful of forest trees, checks that both backends return
identical results, and prints one line per (kernel, backend).
"""
from __future__ import annotations

import argparse
import tempfile
import time

import numpy as np

from cdrincome import kernels
from cdrincome.features import _compute, _node_categories
from cdrincome.graph import build_graph, label_users, partition_truth
from cdrincome.ingest import parse_bank, parse_calls, parse_sms
from cdrincome.models.base import label_array
from cdrincome.models.forest import grow_tree
from cdrincome.synth import SynthConfig, generate


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--users", type=int, default=2000)
    ap.add_argument("--level", type=int, default=3, choices=[1, 2, 3])
    ap.add_argument("--trees", type=int, default=5)
    ap.add_argument("--rows", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = {"python": kernels.fallback}
    if kernels.compiled is not None:
        backends["compiled"] = kernels.compiled
    else:
        print("compiled extension not built; timing the fallback only")

    with tempfile.TemporaryDirectory() as tmp:
        paths = generate(SynthConfig(n_users=args.users, seed=args.seed), tmp)
        g = build_graph(parse_calls(paths.calls).records, parse_sms(paths.sms).records)
        truth = label_users(parse_bank(paths.bank).records, g)
    part = partition_truth(truth, args.seed)
    node_cat = _node_categories(g, part, truth)
    targets = np.arange(len(g.nodes), dtype=np.int64)
    print(f"graph: {len(g.nodes)} nodes, {g.n_edges} edges")

    rng = np.random.default_rng(args.seed)
    X = np.ascontiguousarray(rng.normal(size=(args.rows, 24)))
    y = label_array((X[:, 0] + X[:, 1] * X[:, 2] + rng.normal(size=args.rows) > 0).astype(int))

    results = {}
    for name, impl in backends.items():
        for kind, with_cat in (("ego", False), ("cat", True)):
            t, vals = best_of(lambda: _compute(g, targets, args.level, with_cat, node_cat, impl), args.repeat)
            results[(f"{kind}{args.level}", name)] = (t, vals)

        def forest():
            trees = []
            for child in np.random.SeedSequence(args.seed).spawn(args.trees):
                r = np.random.default_rng(child)
                rows = r.integers(0, len(y), size=len(y)).astype(np.int64)
                trees.append(grow_tree(X, y, rows, None, r, splitter=impl.best_split))
            return np.concatenate([t.apply(X) for t in trees])

        results[(f"forest x{args.trees}", name)] = best_of(forest, args.repeat)

    for kernel in dict.fromkeys(k for k, _ in results):
        base = results[(kernel, "python")]
        for name in backends:
            t, vals = results[(kernel, name)]
            same = np.array_equal(vals, base[1])
            speed = base[0] / t if t > 0 else float("inf")
            print(f"{kernel:<12} {name:<9} {t * 1e3:10.1f} ms  speedup {speed:6.1f}x  identical={same}")


if __name__ == "__main__":
    main()
