"""Command line entry point: ``vrwalk {split,walk,embed,eval-lp,eval-nc,diagnose,sweep}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import pipeline
from .evaluation import EDGE_OPERATORS, parse_labels
from .graph import read_edge_list, read_split, write_split
from .sgns import SgnsConfig, load_embeddings, save_embeddings, train
from .walks import (EXPLOITATION_MODES, EXPLORATION_MODES, WalkConfig, generate_corpus,
                    generate_walk, read_corpus, skipped_checkpoints, stuck_diagnostic,
                    write_corpus, write_diagnostic)

logger = logging.getLogger("vrwalk")


class UsageError(Exception):
    pass


def _csv_floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t]


def _csv_ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t]


def _variant(text: str) -> tuple[str, str, float | None]:
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise argparse.ArgumentTypeError("variant must be exploitation:exploration[:epsilon]")
    eps = float(parts[2]) if len(parts) == 3 and parts[2] else None
    return parts[0], parts[1], eps


def _add_walk_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("walk")
    g.add_argument("--exploitation", choices=sorted(EXPLOITATION_MODES), default="drrw-js")
    g.add_argument("--exploration", choices=sorted(EXPLORATION_MODES), default="ucb")
    g.add_argument("--epsilon", type=float, default=None,
                   help="random-move probability; only with --exploration epsilon-greedy "
                        "(default 0.5 there)")
    g.add_argument("--walks-per-node", type=int, default=80)
    g.add_argument("--walk-length", type=int, default=40, help="nodes per walk, start included")


def _add_sgns_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("skip-gram")
    g.add_argument("--window", type=int, default=10)
    g.add_argument("--dim", type=int, default=64)
    g.add_argument("--negatives", type=int, default=5)
    g.add_argument("--noise-exponent", type=float, default=0.75)
    g.add_argument("--epochs", type=int, default=5)
    g.add_argument("--lr-start", type=float, default=0.025)
    g.add_argument("--lr-end", type=float, default=0.0001)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON manifest whose 'config' supplies defaults")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--directed", action="store_true")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vrwalk", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="hold out edges for link prediction")
    _add_common(p)
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--fraction", type=float, default=0.5)
    p.add_argument("--output", required=True, type=Path)

    p = sub.add_parser("walk", help="generate a walk corpus")
    _add_common(p)
    _add_walk_args(p)
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--output", required=True, type=Path)

    p = sub.add_parser("embed", help="train embeddings from a corpus or fresh walks")
    _add_common(p)
    _add_walk_args(p)
    _add_sgns_args(p)
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--corpus", type=Path, help="existing corpus file; walks are generated if omitted")
    p.add_argument("--output", required=True, type=Path)

    p = sub.add_parser("eval-lp", help="link prediction AUC per edge operator")
    _add_common(p)
    _add_walk_args(p)
    _add_sgns_args(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", type=Path, help="edge list; split in-process")
    src.add_argument("--split", type=Path, help="split manifest written by 'vrwalk split'")
    p.add_argument("--fraction", type=float, default=0.5)
    p.add_argument("--embeddings", type=Path, help="pretrained embeddings for the residual graph")
    p.add_argument("--operators", default=",".join(EDGE_OPERATORS))
    p.add_argument("--dataset", default="")
    p.add_argument("--output", required=True, type=Path)

    p = sub.add_parser("eval-nc", help="multi-label node classification F1")
    _add_common(p)
    _add_walk_args(p)
    _add_sgns_args(p)
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--labels", required=True, type=Path)
    p.add_argument("--train-fraction", type=float, default=0.5)
    p.add_argument("--embeddings", type=Path)
    p.add_argument("--dataset", default="")
    p.add_argument("--output", required=True, type=Path)

    p = sub.add_parser("diagnose", help="distinct nodes in trailing windows of long walks")
    _add_common(p)
    _add_walk_args(p)
    p.set_defaults(exploitation="vrrw", exploration="none")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--steps", type=int, default=10000)
    p.add_argument("--window", type=int, default=100)
    p.add_argument("--checkpoints", type=_csv_ints, default=[100, 1000, 10000])
    p.add_argument("--start", help="start node id (random if omitted)")
    p.add_argument("--output", required=True, type=Path)

    p = sub.add_parser("sweep", help="pipeline over a grid of walk variants")
    _add_common(p)
    _add_walk_args(p)
    _add_sgns_args(p)
    p.add_argument("--task", choices=("lp", "nc"), required=True)
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--labels", type=Path)
    p.add_argument("--split", type=Path)
    p.add_argument("--fraction", type=float, default=0.5)
    p.add_argument("--train-fraction", type=float, default=0.5)
    p.add_argument("--operators", default=",".join(EDGE_OPERATORS))
    grid = p.add_mutually_exclusive_group()
    grid.add_argument("--epsilon-grid", type=_csv_floats,
                      help="epsilon-greedy values for --exploitation, e.g. 0,0.1,0.3,0.5,0.7,0.9,1")
    grid.add_argument("--variant", type=_variant, action="append",
                      help="exploitation:exploration[:epsilon]; repeatable")
    grid.add_argument("--variants-table", action="store_true",
                      help="all exploitation x exploration combinations")
    p.add_argument("--dataset", default="")
    p.add_argument("--output", required=True, type=Path)
    return parser


def _walk_config(args) -> WalkConfig:
    eps = args.epsilon
    if args.exploration == "epsilon-greedy" and eps is None:
        eps = 0.5
    if args.exploration != "epsilon-greedy" and eps is not None:
        raise UsageError("--epsilon requires --exploration epsilon-greedy")
    try:
        return WalkConfig(exploitation=args.exploitation, exploration=args.exploration, epsilon=eps,
                          walks_per_node=args.walks_per_node, walk_length=args.walk_length,
                          seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _sgns_config(args) -> SgnsConfig:
    try:
        return SgnsConfig(dim=args.dim, window=args.window, negatives=args.negatives,
                          noise_exponent=args.noise_exponent, epochs=args.epochs,
                          lr_start=args.lr_start, lr_end=args.lr_end, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _require(path: Path | None, what: str) -> None:
    if path is not None and not path.exists():
        raise FileNotFoundError(f"{what} not found: {path}")


def _resolved(args) -> dict:
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()
            if k not in ("func", "config", "verbose")}


def cmd_split(args) -> dict:
    _require(args.input, "edge list")
    graph = read_edge_list(args.input, directed=args.directed)
    split = pipeline.prepare_split(graph, args.fraction, args.seed)
    with open(args.output, "w", encoding="utf-8") as fh:
        write_split(split, fh)
    return {"achieved_fraction": split.achieved_fraction, "held_out": len(split.test_positive)}


def cmd_walk(args) -> dict:
    _require(args.input, "edge list")
    graph = read_edge_list(args.input, directed=args.directed)
    cfg = _walk_config(args)
    t0 = time.perf_counter()
    corpus = generate_corpus(graph, cfg, workers=args.workers)
    elapsed = time.perf_counter() - t0
    with open(args.output, "w", encoding="utf-8") as fh:
        write_corpus(corpus, graph, fh)
    return {"walks": len(corpus), "truncated": corpus.truncated, "seconds": round(elapsed, 3)}


def _embeddings_for(graph, args, walk_cfg, sgns_cfg):
    corpus_path = getattr(args, "corpus", None)
    if corpus_path is not None:
        _require(corpus_path, "corpus")
        with open(corpus_path, encoding="utf-8") as fh:
            corpus = read_corpus(fh, graph)
        return train(corpus, graph.ids, sgns_cfg, workers=args.workers)
    return pipeline.embed_graph(graph, walk_cfg, sgns_cfg, args.workers).embeddings


def cmd_embed(args) -> dict:
    _require(args.input, "edge list")
    graph = read_edge_list(args.input, directed=args.directed)
    walk_cfg, sgns_cfg = _walk_config(args), _sgns_config(args)
    emb = _embeddings_for(graph, args, walk_cfg, sgns_cfg)
    with open(args.output, "w", encoding="utf-8") as fh:
        save_embeddings(emb, fh)
    return {"nodes": emb.num_nodes, "dim": emb.dim}


def _load_embeddings(path: Path):
    _require(path, "embeddings")
    with open(path, encoding="utf-8") as fh:
        return load_embeddings(fh)


def _load_split(args):
    if args.split is not None:
        _require(args.split, "split manifest")
        with open(args.split, encoding="utf-8") as fh:
            return read_split(fh)
    _require(args.input, "edge list")
    return pipeline.prepare_split(read_edge_list(args.input), args.fraction, args.seed)


def cmd_eval_lp(args) -> dict:
    walk_cfg, sgns_cfg = _walk_config(args), _sgns_config(args)
    split = _load_split(args)
    emb = _load_embeddings(args.embeddings) if args.embeddings else None
    ops = [o for o in args.operators.split(",") if o]
    rows = pipeline.run_link_prediction(split, walk_cfg, sgns_cfg, ops, args.dataset,
                                        args.seed, args.workers, embeddings=emb)
    with open(args.output, "w", encoding="utf-8") as fh:
        pipeline.write_results(rows, fh)
    return {"rows": len(rows)}


def cmd_eval_nc(args) -> dict:
    _require(args.input, "edge list")
    _require(args.labels, "label file")
    walk_cfg, sgns_cfg = _walk_config(args), _sgns_config(args)
    graph = read_edge_list(args.input, directed=args.directed)
    with open(args.labels, encoding="utf-8") as fh:
        labels = parse_labels(fh)
    emb = _load_embeddings(args.embeddings) if args.embeddings else None
    rows = pipeline.run_node_classification(graph, labels, walk_cfg, sgns_cfg, args.train_fraction,
                                            args.dataset, args.seed, args.workers, embeddings=emb)
    with open(args.output, "w", encoding="utf-8") as fh:
        pipeline.write_results(rows, fh)
    return {"rows": len(rows)}


def cmd_diagnose(args) -> dict:
    _require(args.input, "edge list")
    graph = read_edge_list(args.input, directed=args.directed)
    cfg = _walk_config(args)
    rng = np.random.default_rng(args.seed)
    start = graph.to_dense(args.start) if args.start else int(rng.integers(graph.num_nodes))
    path = generate_walk(graph, start, cfg, rng, walk_length=args.steps + 1)
    for cp in skipped_checkpoints(len(path), args.checkpoints):
        logger.warning("checkpoint %d skipped: walk has only %d steps", cp, len(path) - 1)
    snaps = stuck_diagnostic(path, min(args.window, len(path)), args.checkpoints)
    with open(args.output, "w", encoding="utf-8", newline="") as fh:
        write_diagnostic(snaps, graph, fh)
    return {"start": graph.ids[start], "steps": len(path) - 1}


def cmd_sweep(args) -> dict:
    walk_cfg, sgns_cfg = _walk_config(args), _sgns_config(args)
    if args.variant:
        variants = args.variant
    elif args.variants_table:
        variants = list(pipeline.VARIANT_GRID)
    else:
        variants = pipeline.epsilon_variants(args.epsilon_grid or pipeline.EPSILON_GRID,
                                             args.exploitation)
    for v in variants:
        try:
            pipeline.walk_config_for(v, walk_cfg)
        except ValueError as exc:
            raise UsageError(f"bad variant {v}: {exc}") from None
    ops = [o for o in args.operators.split(",") if o]
    _require(args.input, "edge list")
    if args.task == "lp":
        split = _load_split(args)
        rows = pipeline.variant_sweep("lp", variants, walk_cfg, sgns_cfg, split=split,
                                      operators=ops, dataset=args.dataset, workers=args.workers)
    else:
        if args.labels is None:
            raise UsageError("--task nc needs --labels")
        _require(args.labels, "label file")
        graph = read_edge_list(args.input, directed=args.directed)
        with open(args.labels, encoding="utf-8") as fh:
            labels = parse_labels(fh)
        rows = pipeline.variant_sweep("nc", variants, walk_cfg, sgns_cfg, graph=graph,
                                      labels=labels, train_fraction=args.train_fraction,
                                      dataset=args.dataset, workers=args.workers)
    with open(args.output, "w", encoding="utf-8") as fh:
        pipeline.write_results(rows, fh)
    return {"rows": len(rows), "variants": len(variants)}


COMMANDS = {"split": cmd_split, "walk": cmd_walk, "embed": cmd_embed, "eval-lp": cmd_eval_lp,
            "eval-nc": cmd_eval_nc, "diagnose": cmd_diagnose, "sweep": cmd_sweep}


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is not None:
        # manifest values become defaults; flags given explicitly still win
        record = json.loads(Path(args.config).read_text())
        config = record.get("config", record)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        sub.set_defaults(**{k: v for k, v in config.items() if k in known and k != "command"})
        args = parser.parse_args(argv)
        for key in ("input", "output", "labels", "split", "corpus", "embeddings"):
            if isinstance(getattr(args, key, None), str):
                setattr(args, key, Path(getattr(args, key)))
    return args


def main(argv: list[str] | None = None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        t0 = time.perf_counter()
        info = COMMANDS[args.command](args)
        info["wall_seconds"] = round(time.perf_counter() - t0, 3)
        pipeline.write_manifest(args.output, args.command, _resolved(args), seed=args.seed, **info)
    except UsageError as exc:
        print(f"vrwalk {args.command}: usage error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError) as exc:
        print(f"vrwalk {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
