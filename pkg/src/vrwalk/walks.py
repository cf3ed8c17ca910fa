"""Vertex- and distribution-reinforced random walks with bandit-style exploration."""

from __future__ import annotations

import csv
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Iterator, Sequence, TextIO

import numpy as np

from . import _kernels as K
from .graph import Graph

EXPLOITATION_MODES = {"first-order": K.FIRST_ORDER, "vrrw": K.VRRW,
                      "drrw-kl": K.DRRW_KL, "drrw-js": K.DRRW_JS}
EXPLORATION_MODES = {"none": K.NO_EXPLORATION, "epsilon-greedy": K.EPSILON_GREEDY, "ucb": K.UCB}


class DeadEnd(Exception):
    """The current node has no outgoing neighbor."""


@dataclass(frozen=True)
class WalkConfig:
    exploitation: str = "drrw-js"
    exploration: str = "ucb"
    epsilon: float | None = None
    walks_per_node: int = 80
    walk_length: int = 40
    seed: int = 0

    def __post_init__(self) -> None:
        if self.exploitation not in EXPLOITATION_MODES:
            raise ValueError(f"unknown exploitation mode {self.exploitation!r}")
        if self.exploration not in EXPLORATION_MODES:
            raise ValueError(f"unknown exploration mode {self.exploration!r}")
        if self.exploration == "epsilon-greedy":
            if self.epsilon is None or not 0.0 <= self.epsilon <= 1.0:
                raise ValueError("epsilon-greedy needs epsilon in [0, 1]")
        elif self.epsilon is not None:
            raise ValueError("epsilon is only meaningful with epsilon-greedy exploration")
        if self.walk_length < 2:
            raise ValueError("walk_length must be >= 2")
        if self.walks_per_node < 1:
            raise ValueError("walks_per_node must be >= 1")

    @property
    def codes(self) -> tuple[int, int, float]:
        return (EXPLOITATION_MODES[self.exploitation], EXPLORATION_MODES[self.exploration],
                0.0 if self.epsilon is None else float(self.epsilon))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class WalkState:
    """One in-progress walk.

    ``visit_counts`` counts every occurrence in ``path``, the start included, while
    local times only count visits at steps ``s >= 1``.
    """

    path: list[int]
    num_nodes: int
    visit_counts: Counter = field(default_factory=Counter)

    def __post_init__(self) -> None:
        if not self.path:
            raise ValueError("a walk starts with at least its start node")
        if not self.visit_counts:
            self.visit_counts = Counter(self.path)

    @classmethod
    def start(cls, u: int, num_nodes: int) -> "WalkState":
        return cls(path=[u], num_nodes=num_nodes)

    @property
    def start_node(self) -> int:
        return self.path[0]

    @property
    def current(self) -> int:
        return self.path[-1]

    @property
    def step(self) -> int:
        return len(self.path) - 1

    def append(self, v: int) -> None:
        self.path.append(v)
        self.visit_counts[v] += 1


def local_time(state: WalkState, v: int) -> int:
    """One plus the number of visits to ``v`` at steps 1..n."""
    return 1 + state.visit_counts.get(v, 0) - (v == state.start_node)


def local_times(state: WalkState, nodes: Iterable[int]) -> np.ndarray:
    return np.array([local_time(state, v) for v in nodes], dtype=np.float64)


def occupation_entries(state: WalkState) -> tuple[dict[int, float], float]:
    """Sparse occupation vector: explicit entries for visited nodes plus the default value."""
    denom = state.step + state.num_nodes
    counts = Counter(state.path[1:])
    return {v: (1 + c) / denom for v, c in counts.items()}, 1.0 / denom


def occupation_vector(state: WalkState, append: int | None = None) -> np.ndarray:
    """Dense occupation vector, optionally after hypothetically appending ``append``."""
    z = np.ones(state.num_nodes)
    np.add.at(z, np.asarray(state.path[1:], dtype=np.int64), 1.0)
    n = state.step
    if append is not None:
        z[append] += 1.0
        n += 1
    return z / (n + state.num_nodes)


def kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    nz = p > 0
    return float(np.sum(p[nz] * np.log(p[nz] / q[nz])))


def js_divergence(p: np.ndarray, q: np.ndarray) -> float:
    m = 0.5 * (np.asarray(p, dtype=np.float64) + np.asarray(q, dtype=np.float64))
    return 0.5 * kl_divergence(p, m) + 0.5 * kl_divergence(q, m)


def drrw_kl_divergence(state: WalkState, x: int) -> float:
    return K.kl_closed_form(float(local_time(state, x)), state.step, state.num_nodes)


def drrw_js_divergence(state: WalkState, x: int) -> float:
    return K.js_closed_form(float(local_time(state, x)), state.step, state.num_nodes)


def drrw_kl_score(state: WalkState, x: int) -> float:
    return 1.0 - drrw_kl_divergence(state, x)


def drrw_js_score(state: WalkState, x: int) -> float:
    return 1.0 - drrw_js_divergence(state, x)


def ucb_bonus(state: WalkState, x: int) -> float:
    return K.ucb_closed_form(float(local_time(state, state.start_node)), float(local_time(state, x)))


def _neighbors_or_raise(state: WalkState, graph: Graph) -> np.ndarray:
    nbrs = graph.neighbors_of(state.current)
    if len(nbrs) == 0:
        raise DeadEnd(f"node {graph.ids[state.current]} has no neighbors")
    return nbrs


def vrrw_transition(state: WalkState, graph: Graph) -> np.ndarray:
    z = local_times(state, _neighbors_or_raise(state, graph))
    return z / z.sum()


def transition_distribution(scores: Sequence[float]) -> np.ndarray:
    s = np.array(scores, dtype=np.float64)
    if s.size == 0:
        raise ValueError("need at least one score")
    K.softmax_inplace(s, len(s))
    return s


def step_distribution(state: WalkState, graph: Graph, config: WalkConfig) -> np.ndarray:
    """Marginal next-node distribution over ``graph.neighbors_of(state.current)``."""
    nbrs = _neighbors_or_raise(state, graph)
    exploit, explore, eps = config.codes
    deg = len(nbrs)
    probs = np.empty(deg)
    K.exploit_distribution(local_times(state, nbrs),
                           float(local_time(state, state.start_node)),
                           state.step, state.num_nodes, exploit, explore, probs)
    if explore == K.EPSILON_GREEDY:
        probs = eps / deg + (1.0 - eps) * probs
    return probs


def sample_next(state: WalkState, graph: Graph, config: WalkConfig,
                rng: np.random.Generator) -> int:
    nbrs = _neighbors_or_raise(state, graph)
    exploit, explore, eps = config.codes
    if exploit == K.FIRST_ORDER or (explore == K.EPSILON_GREEDY and rng.random() < eps):
        return int(nbrs[rng.integers(len(nbrs))])
    probs = np.empty(len(nbrs))
    K.exploit_distribution(local_times(state, nbrs),
                           float(local_time(state, state.start_node)),
                           state.step, state.num_nodes, exploit, explore, probs)
    return int(nbrs[K.pick(probs, len(nbrs), rng.random())])


@dataclass
class Corpus:
    """Walks stored row-wise; ``paths[i, :lengths[i]]`` is walk ``i``."""

    paths: np.ndarray
    lengths: np.ndarray
    truncated: int = 0

    def __len__(self) -> int:
        return len(self.lengths)

    def __iter__(self) -> Iterator[np.ndarray]:
        for row, n in zip(self.paths, self.lengths):
            yield row[:n]

    @classmethod
    def from_paths(cls, paths: Sequence[Sequence[int]]) -> "Corpus":
        width = max((len(p) for p in paths), default=0)
        arr = np.zeros((len(paths), width), dtype=np.int32)
        lengths = np.array([len(p) for p in paths], dtype=np.int64)
        for i, p in enumerate(paths):
            arr[i, :len(p)] = p
        return cls(arr, lengths, truncated=0)

    def token_count(self) -> int:
        return int(self.lengths.sum())


def _walk_rng(seed: int, pass_index: int, start: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, pass_index, start])))


def _run_walks(graph: Graph, starts: np.ndarray, uniforms: np.ndarray, config: WalkConfig,
               walk_length: int) -> tuple[np.ndarray, np.ndarray, int]:
    exploit, explore, eps = config.codes
    out = np.zeros((len(starts), walk_length), dtype=np.int32)
    lengths = np.zeros(len(starts), dtype=np.int64)
    counts = np.zeros(graph.num_nodes, dtype=np.int64)
    max_deg = max(int(graph.degrees().max(initial=0)), 1)
    truncated = K.walk_batch(graph.offsets, graph.neighbors, graph.num_nodes,
                             np.asarray(starts, dtype=np.int64), uniforms, walk_length,
                             exploit, explore, eps, out, lengths, counts,
                             np.empty(max_deg), np.empty(max_deg))
    return out, lengths, int(truncated)


def generate_walk(graph: Graph, u: int, config: WalkConfig, rng: np.random.Generator,
                  walk_length: int | None = None) -> list[int]:
    """A single walk of ``walk_length`` nodes (default ``config.walk_length``) from ``u``.

    Shorter only when a dead end is hit.
    """
    length = config.walk_length if walk_length is None else walk_length
    if not 0 <= u < graph.num_nodes:
        raise IndexError(f"start node {u} out of range")
    uniforms = rng.random((1, 2 * (length - 1)))
    out, lengths, _ = _run_walks(graph, np.array([u]), uniforms, config, length)
    return out[0, :lengths[0]].tolist()


def pass_order(graph: Graph, seed: int, pass_index: int) -> np.ndarray:
    return np.random.default_rng([seed, pass_index]).permutation(graph.num_nodes)


def _corpus_chunk(graph: Graph, config: WalkConfig, pass_index: int, starts: np.ndarray):
    steps = 2 * (config.walk_length - 1)
    uniforms = np.empty((len(starts), steps))
    for i, u in enumerate(starts):
        uniforms[i] = _walk_rng(config.seed, pass_index, int(u)).random(steps)
    return _run_walks(graph, starts, uniforms, config, config.walk_length)


def generate_corpus(graph: Graph, config: WalkConfig, workers: int = 1,
                    chunk_size: int = 2048) -> Corpus:
    """R passes over a fresh shuffle of all nodes; one independent walk per (pass, node).

    Each walk draws from its own stream keyed by (seed, pass, start node), so the result
    does not depend on ``workers``.
    """
    tasks = []
    for r in range(config.walks_per_node):
        order = pass_order(graph, config.seed, r)
        for lo in range(0, len(order), chunk_size):
            tasks.append((r, order[lo:lo + chunk_size]))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda t: _corpus_chunk(graph, config, *t), tasks))
    else:
        results = [_corpus_chunk(graph, config, *t) for t in tasks]
    paths = np.concatenate([r[0] for r in results]) if results else np.zeros((0, config.walk_length), np.int32)
    lengths = np.concatenate([r[1] for r in results]) if results else np.zeros(0, np.int64)
    return Corpus(paths, lengths, truncated=sum(r[2] for r in results))


def write_corpus(corpus: Corpus, graph: Graph, stream: TextIO) -> None:
    ids = graph.ids
    for path in corpus:
        stream.write(" ".join(ids[v] for v in path))
        stream.write("\n")


def read_corpus(stream: TextIO | Iterable[str], graph: Graph) -> Corpus:
    paths = []
    for lineno, raw in enumerate(stream, start=1):
        tokens = raw.split()
        if not tokens:
            continue
        try:
            paths.append([graph.index[t] for t in tokens])
        except KeyError as exc:
            raise KeyError(f"corpus line {lineno}: node {exc.args[0]!r} not in graph vocabulary") from None
    return Corpus.from_paths(paths)


@dataclass
class WindowSnapshot:
    checkpoint: int
    distinct_nodes: int
    frequencies: dict[int, int]


def stuck_diagnostic(path: Sequence[int], window: int = 100,
                     checkpoints: Iterable[int] = (100, 1000, 10000)) -> list[WindowSnapshot]:
    """Distinct nodes and their frequencies among the last ``window`` steps before each checkpoint.

    A checkpoint is the number of steps taken; checkpoints beyond the path are skipped.
    """
    path = list(path)
    steps = len(path) - 1
    if window > len(path):
        raise ValueError("window longer than path")
    out = []
    for cp in checkpoints:
        if cp > steps:
            continue
        tail = path[max(cp + 1 - window, 0):cp + 1]
        freq = Counter(tail)
        out.append(WindowSnapshot(cp, len(freq), dict(freq.most_common())))
    return out


def skipped_checkpoints(path_len: int, checkpoints: Iterable[int]) -> list[int]:
    return [cp for cp in checkpoints if cp > path_len - 1]


def write_diagnostic(snapshots: Iterable[WindowSnapshot], graph: Graph, stream: TextIO) -> None:
    writer = csv.writer(stream)
    writer.writerow(["checkpoint_step", "distinct_nodes", "frequencies"])
    for snap in snapshots:
        pairs = " ".join(f"{graph.ids[v]}:{c}" for v, c in snap.frequencies.items())
        writer.writerow([snap.checkpoint, snap.distinct_nodes, pairs])

