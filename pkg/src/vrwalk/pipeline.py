"""End-to-end experiment runners shared by the command line and the acceptance suite."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np

from .evaluation import (EDGE_OPERATORS, RESULT_COLUMNS, LabeledNodes, link_prediction_eval,
                         node_classification_eval, percent)
from .graph import EdgeSplit, Graph, split_edges
from .sgns import EmbeddingMatrix, SgnsConfig, train
from .walks import Corpus, WalkConfig, generate_corpus

logger = logging.getLogger(__name__)

EPSILON_GRID = (0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0)

# rows of the variant ablation: (exploitation, exploration, epsilon)
VARIANT_GRID = tuple(
    (exploit, explore, 0.5 if explore == "epsilon-greedy" else None)
    for exploit in ("vrrw", "drrw-kl", "drrw-js")
    for explore in ("none", "epsilon-greedy", "ucb")
)


@dataclass
class Embedded:
    corpus: Corpus
    embeddings: EmbeddingMatrix
    walk_seconds: float
    train_seconds: float


def embed_graph(graph: Graph, walk_cfg: WalkConfig, sgns_cfg: SgnsConfig,
                workers: int = 1) -> Embedded:
    t0 = time.perf_counter()
    corpus = generate_corpus(graph, walk_cfg, workers=workers)
    t1 = time.perf_counter()
    logger.info("generated %d walks in %.1fs (%d truncated)", len(corpus), t1 - t0, corpus.truncated)
    emb = train(corpus, graph.ids, sgns_cfg, workers=workers)
    t2 = time.perf_counter()
    logger.info("trained embeddings in %.1fs", t2 - t1)
    return Embedded(corpus, emb, t1 - t0, t2 - t1)


def result_row(dataset: str, walk_cfg: WalkConfig, target: str, metric: str, value: float,
               seed: int) -> dict:
    return {"dataset": dataset, "exploitation": walk_cfg.exploitation,
            "exploration": walk_cfg.exploration,
            "epsilon": "" if walk_cfg.epsilon is None else walk_cfg.epsilon,
            "operator_or_split": target, "metric": metric, "value": value, "seed": seed}


def run_link_prediction(split: EdgeSplit, walk_cfg: WalkConfig, sgns_cfg: SgnsConfig,
                        operators: Sequence[str] = EDGE_OPERATORS, dataset: str = "",
                        seed: int = 0, workers: int = 1,
                        embeddings: EmbeddingMatrix | None = None) -> list[dict]:
    if embeddings is None:
        embeddings = embed_graph(split.residual, walk_cfg, sgns_cfg, workers).embeddings
    scores = link_prediction_eval(embeddings, split, operators, rng=seed)
    return [result_row(dataset, walk_cfg, op, "auc", percent(v), seed) for op, v in scores.items()]


def run_node_classification(graph: Graph, labels: LabeledNodes, walk_cfg: WalkConfig,
                            sgns_cfg: SgnsConfig, train_fraction: float = 0.5,
                            dataset: str = "", seed: int = 0, workers: int = 1,
                            embeddings: EmbeddingMatrix | None = None) -> list[dict]:
    if embeddings is None:
        embeddings = embed_graph(graph, walk_cfg, sgns_cfg, workers).embeddings
    res = node_classification_eval(embeddings, labels, train_fraction, rng=seed)
    target = f"train={train_fraction:g}"
    return [result_row(dataset, walk_cfg, target, "micro_f1", percent(res.micro_f1), seed),
            result_row(dataset, walk_cfg, target, "macro_f1", percent(res.macro_f1), seed)]


def walk_config_for(variant: tuple[str, str, float | None], base: WalkConfig) -> WalkConfig:
    exploit, explore, eps = variant
    return WalkConfig(exploitation=exploit, exploration=explore, epsilon=eps,
                      walks_per_node=base.walks_per_node, walk_length=base.walk_length,
                      seed=base.seed)


def epsilon_variants(epsilons: Iterable[float] = EPSILON_GRID, exploitation: str = "drrw-js"):
    return [(exploitation, "epsilon-greedy", float(e)) for e in epsilons]


def variant_sweep(task: str, variants: Iterable[tuple[str, str, float | None]], base: WalkConfig,
                  sgns_cfg: SgnsConfig, *, graph: Graph | None = None,
                  labels: LabeledNodes | None = None, split: EdgeSplit | None = None,
                  train_fraction: float = 0.5, operators: Sequence[str] = EDGE_OPERATORS,
                  dataset: str = "", workers: int = 1) -> list[dict]:
    """Run the full walk/train/evaluate pipeline once per variant with a shared master seed."""
    rows: list[dict] = []
    for variant in variants:
        cfg = walk_config_for(variant, base)
        logger.info("sweep: %s", variant)
        if task == "lp":
            if split is None:
                raise ValueError("link-prediction sweep needs a split")
            rows += run_link_prediction(split, cfg, sgns_cfg, operators, dataset, base.seed, workers)
        elif task == "nc":
            if graph is None or labels is None:
                raise ValueError("node-classification sweep needs a graph and labels")
            rows += run_node_classification(graph, labels, cfg, sgns_cfg, train_fraction,
                                            dataset, base.seed, workers)
        else:
            raise ValueError(f"unknown task {task!r}")
    return rows


def prepare_split(graph: Graph, fraction: float, seed: int) -> EdgeSplit:
    split = split_edges(graph, fraction, seed)
    if split.shortfall:
        logger.warning("achieved removal fraction %.4f < requested %.4f",
                       split.achieved_fraction, fraction)
    return split


def write_results(rows: Iterable[dict], stream: TextIO) -> None:
    writer = csv.DictWriter(stream, fieldnames=RESULT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)


def read_results(stream: TextIO) -> list[dict]:
    return list(csv.DictReader(stream))


def sha256_of(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def manifest_path(output: str | Path) -> Path:
    return Path(str(output) + ".manifest.json")


def write_manifest(output: str | Path, command: str, config: dict, **extra) -> Path:
    """Sidecar JSON holding the resolved configuration, seed and output checksum."""
    record = {"command": command, "config": config, "output": str(output),
              "sha256": sha256_of(output), **extra}
    path = manifest_path(output)
    path.write_text(json.dumps(record, indent=2, sort_keys=True, default=str) + "\n")
    return path


def median_by(rows: Sequence[dict], key: str, metric: str) -> float:
    vals = [float(r["value"]) for r in rows if r["operator_or_split"] == key and r["metric"] == metric]
    return float(np.median(vals))
