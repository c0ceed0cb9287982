"""Command line entry point.

Subcommands::

    cdrincome synth    --config synth.json --out fixtures/
    cdrincome run      --config run.json [--out DIR] [--seed N] [--mode full|inner|both]
    cdrincome features --config run.json --level cat2 [--out DIR]
    cdrincome graph    --config run.json [--out DIR]

Exit codes: 0 success, 1 validation or domain error, 2 usage error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .features import LevelSpec, build_matrix
from .graph import write_graph_csv, write_labels_csv
from .pipeline import ConfigError, RunConfig, StageError, prepare, run
from .synth import SynthConfig, SynthConfigError, generate

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("cdrincome")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cdrincome", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="JSON configuration file")
        sp.add_argument("--out", help="output directory (overrides output_dir)")
        sp.add_argument("--seed", type=int, help="base seed (overrides seed)")
        return sp

    common(sub.add_parser("synth", help="generate a synthetic fixture"))
    r = common(sub.add_parser("run", help="run the full pipeline and write reports"))
    r.add_argument("--mode", choices=["full", "inner", "both"])
    f = common(sub.add_parser("features", help="dump a feature matrix CSV"))
    f.add_argument("--level", default="ego1", help="level spec, e.g. ego2 or cat3")
    common(sub.add_parser("graph", help="dump graph, labels and partition CSVs"))
    return p


def _run_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.partition_seed, cfg.model_seed, cfg.fold_seed = None, None, None
        cfg.__post_init__()
    if args.out:
        cfg.output_dir = str(Path(args.out).resolve())
    if getattr(args, "mode", None):
        cfg.modes = ["full", "inner"] if args.mode == "both" else [args.mode]
    return cfg


def cmd_synth(args) -> int:
    doc = json.loads(Path(args.config).read_text())
    body = doc.get("synth", doc)
    out = args.out or doc.get("output_dir", "synth_out")
    body = {k: v for k, v in body.items() if k != "output_dir"}
    if args.seed is not None:
        body["seed"] = args.seed
    paths = generate(SynthConfig.from_dict(body), out)
    for p in (paths.calls, paths.sms, paths.bank, paths.truth):
        print(p)
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _run_config(args)
    result = run(cfg)
    for mode, path in result.report_paths.items():
        print(f"{mode}: {path}")
    return EXIT_OK


def cmd_features(args) -> int:
    cfg = _run_config(args)
    cfg.validate()
    spec = LevelSpec.parse(args.level)
    data = prepare(cfg)
    out = cfg.resolve(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    matrix = build_matrix(data.graph, data.graph.nodes, spec, data.partition, data.truth)
    path = out / f"features_{spec}.csv"
    matrix.to_csv(path)
    print(path)
    return EXIT_OK


def cmd_graph(args) -> int:
    cfg = _run_config(args)
    cfg.validate()
    data = prepare(cfg)
    out = cfg.resolve(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_graph_csv(data.graph, out / "graph.csv")
    write_labels_csv(data.truth, out / "labels.csv")
    with open(out / "partition.csv", "w") as fh:
        fh.write("user,set\n")
        for u in sorted(data.partition.feature_set | data.partition.train_set):
            fh.write(f"{u},{'feature' if u in data.partition.feature_set else 'train'}\n")
    print(out / "graph.csv")
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "run": cmd_run, "features": cmd_features, "graph": cmd_graph}


def _classify(exc: BaseException) -> int:
    if isinstance(exc, StageError):
        exc = exc.cause
    if isinstance(exc, (OSError, UnicodeDecodeError)):
        return EXIT_IO
    return EXIT_DOMAIN


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if not Path(args.config).is_file():
        parser.print_usage(sys.stderr)
        print(f"cdrincome: error: config file not found: {args.config}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, SynthConfigError, json.JSONDecodeError) as exc:
        print(f"cdrincome: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except Exception as exc:  # noqa: BLE001 - mapped to an exit code
        code = _classify(exc)
        print(f"cdrincome: error: {exc}", file=sys.stderr)
        if args.verbose:
            log.exception("details")
        return code


if __name__ == "__main__":
    sys.exit(main())
