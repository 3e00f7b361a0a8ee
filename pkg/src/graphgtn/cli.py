"""Command-line entry point.

    graphgtn run --dataset DIR --mode {gcn,ggtn-vanilla,ggtn-split,wgtn} [...]
    graphgtn make-synthetic --vertices N --edges M --out DIR [...]

``run`` streams ``epoch<TAB>loss<TAB>seconds[<TAB>test_acc]`` lines to stdout
and writes a JSON report.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from graphgtn.data import (
    DatasetError,
    SyntheticOptions,
    generate_synthetic,
    load_dataset,
    random_graph,
    save_dataset,
)
from graphgtn.graph import GraphError
from graphgtn.pathfinder import EnumStrategy
from graphgtn.train import ConfigError, EpochMetrics, Mode, RunConfig, train

log = logging.getLogger("graphgtn")

# metapath graphs this small are always included in the report
DUMP_EDGE_LIMIT = 1000


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="graphgtn", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train a node classifier on a dataset directory")
    run.add_argument("--dataset", required=True, type=Path)
    run.add_argument("--mode", default="ggtn-split", choices=[m.value for m in Mode])
    run.add_argument("--layers", type=int, default=3, help="transformer layers; metapath length is layers + 1")
    run.add_argument("--num-walks", type=int, default=None, help="walks per vertex (wgtn; default 50)")
    run.add_argument("--hidden", type=int, default=64)
    run.add_argument("--epochs", type=int, default=300)
    run.add_argument("--lr", type=float, default=0.01)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--eval-every", type=int, default=5)
    run.add_argument("--timeout-seconds", type=float, default=28_800.0)
    run.add_argument("--enum", default="level", choices=[s.value for s in EnumStrategy])
    run.add_argument("--freeze-walks", action="store_true")
    run.add_argument("--deterministic", action="store_true", help="single-threaded kernels")
    run.add_argument("--synthetic", action="store_true",
                     help="replace features/labels/splits with synthetic filler values")
    run.add_argument("--dump-mg", action="store_true", help="include the first-epoch metapath graph in the report")
    run.add_argument("--report", type=Path, default=Path("report.json"))

    syn = sub.add_parser("make-synthetic", help="write a random graph dataset with synthetic metadata")
    syn.add_argument("--vertices", type=int, required=True)
    syn.add_argument("--edges", type=int, required=True)
    syn.add_argument("--types", type=int, default=4)
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("--out", type=Path, required=True)
    return p


def _config(args: argparse.Namespace) -> RunConfig:
    mode = Mode(args.mode)
    num_walks = args.num_walks
    if num_walks is None:
        num_walks = 50 if mode is Mode.W_GTN else 0
    return RunConfig(
        mode=mode,
        transformer_layers=args.layers,
        num_walks=num_walks,
        hidden=args.hidden,
        epochs=args.epochs,
        lr=args.lr,
        seed=args.seed,
        eval_every=args.eval_every,
        timeout_seconds=args.timeout_seconds,
        enum_strategy=EnumStrategy(args.enum),
        freeze_walks=args.freeze_walks,
        deterministic=args.deterministic,
    )


def _run(args: argparse.Namespace) -> int:
    config = _config(args)
    config.validate()
    bundle = load_dataset(args.dataset)
    if args.synthetic or bundle.features is None:
        if not args.synthetic:
            raise DatasetError("dataset has no features.tsv; pass --synthetic to generate filler values")
        synth = generate_synthetic(bundle.graph, config.seed, SyntheticOptions())
        bundle.features, bundle.labels, bundle.masks, bundle.num_classes = (
            synth.features, synth.labels, synth.masks, synth.num_classes,
        )
    if len(bundle.masks.train) == 0:
        raise DatasetError("dataset has no training vertices")
    config.self_edges = bundle.self_edges

    out = sys.stdout

    def stream(m: EpochMetrics) -> None:
        fields = [str(m.epoch), f"{m.loss:.6f}", f"{m.seconds:.6f}"]
        if m.test_accuracy is not None:
            fields.append(f"{m.test_accuracy:.4f}")
        out.write("\t".join(fields) + "\n")
        out.flush()

    result = train(bundle.graph, bundle.features, bundle.labels, bundle.masks, config,
                   score_table=bundle.score_table, on_epoch=stream)

    config_echo = {k: (v.value if hasattr(v, "value") else v) for k, v in dataclasses.asdict(config).items()}
    report = {
        "mode": config.mode.value,
        "l": config.metapath_length,
        "num_walks": config.num_walks,
        "seed": config.seed,
        "config": config_echo,
        "dataset": str(args.dataset),
        "num_vertices": bundle.num_vertices,
        "vertex_names": bundle.vertex_names,
        "epochs": [dataclasses.asdict(m) for m in result.epochs],
        "losses": result.losses,
        "eval_accuracies": result.eval_accuracies,
        "peak_accuracy": result.peak_accuracy,
        "avg_epoch_seconds": result.avg_epoch_seconds,
        "timeout": result.timed_out,
    }
    mg = result.first_mg
    if mg is not None and (args.dump_mg or mg.num_edges <= DUMP_EDGE_LIMIT):
        report["mg_dump"] = [
            [bundle.vertex_name(u), bundle.vertex_name(v), w]
            for (u, v), w in mg.to_dict().items()
        ]
    args.report.write_text(json.dumps(report, indent=2) + "\n")
    if result.timed_out:
        out.write("TIMEOUT\n")
    log.info("report written to %s", args.report)
    return 0


def _make_synthetic(args: argparse.Namespace) -> int:
    g = random_graph(args.vertices, args.edges, args.types, args.seed)
    bundle = generate_synthetic(g, args.seed, SyntheticOptions(num_types=args.types))
    save_dataset(bundle, args.out)
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            return _run(args)
        return _make_synthetic(args)
    except ConfigError as e:
        print(f"graphgtn: config error: {e}", file=sys.stderr)
        return 2
    except (DatasetError, GraphError) as e:
        print(f"graphgtn: dataset error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
