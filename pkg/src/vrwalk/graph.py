"""Compact adjacency graphs, edge-list I/O and connectivity-preserving edge splits."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

logger = logging.getLogger(__name__)


class GraphFormatError(ValueError):
    """Raised for malformed edge-list, manifest or label input."""


class DisconnectedGraphError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    """Immutable CSR adjacency with dense node indices ``0..N-1``.

    ``ids[i]`` is the external token of dense node ``i``.
    """

    offsets: np.ndarray
    neighbors: np.ndarray
    ids: tuple[str, ...]
    directed: bool = False
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "index", {tok: i for i, tok in enumerate(self.ids)})
        self.offsets.setflags(write=False)
        self.neighbors.setflags(write=False)

    @property
    def num_nodes(self) -> int:
        return len(self.offsets) - 1

    @property
    def num_edges(self) -> int:
        total = len(self.neighbors)
        return total if self.directed else total // 2

    def neighbors_of(self, v: int) -> np.ndarray:
        return self.neighbors[self.offsets[v]:self.offsets[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.offsets[v + 1] - self.offsets[v])

    def degrees(self) -> np.ndarray:
        return np.diff(self.offsets)

    def has_edge(self, u: int, v: int) -> bool:
        nbrs = self.neighbors_of(u)
        k = np.searchsorted(nbrs, v)
        return bool(k < len(nbrs) and nbrs[k] == v)

    def edges(self) -> np.ndarray:
        """Edge array of shape (M, 2); undirected edges are listed once with u < v."""
        src = np.repeat(np.arange(self.num_nodes, dtype=np.int64), self.degrees())
        dst = self.neighbors.astype(np.int64)
        if not self.directed:
            keep = src < dst
            src, dst = src[keep], dst[keep]
        return np.column_stack([src, dst])

    def edge_keys(self) -> np.ndarray:
        """Sorted int64 keys ``u * N + v`` of every stored (directed) adjacency entry."""
        src = np.repeat(np.arange(self.num_nodes, dtype=np.int64), self.degrees())
        return src * self.num_nodes + self.neighbors.astype(np.int64)

    def to_external(self, v: int) -> str:
        return self.ids[v]

    def to_dense(self, token: str) -> int:
        try:
            return self.index[token]
        except KeyError:
            raise KeyError(f"node {token!r} is not in the graph") from None


def from_edges(edges: np.ndarray, ids: Iterable[str], directed: bool = False) -> Graph:
    """Build a Graph from dense-index edges, dropping self-loops and duplicates."""
    ids = tuple(ids)
    n = len(ids)
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    src, dst = edges[:, 0], edges[:, 1]
    keep = src != dst
    src, dst = src[keep], dst[keep]
    if not directed:
        src, dst = np.concatenate([src, dst]), np.concatenate([dst, src])
    keys = np.unique(src * n + dst)
    src, dst = keys // n, keys % n
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=offsets[1:])
    return Graph(offsets=offsets, neighbors=dst.astype(np.int32), ids=ids, directed=directed)


def parse_edge_list(stream: TextIO | Iterable[str], directed: bool = False) -> Graph:
    """Parse a whitespace-separated edge list; ids are densified in first-appearance order."""
    index: dict[str, int] = {}
    pairs: list[tuple[int, int]] = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            if len(parts) == 3:
                raise GraphFormatError(f"line {lineno}: weighted edges are not supported: {line!r}")
            raise GraphFormatError(f"line {lineno}: expected two node tokens, got {len(parts)}")
        u = index.setdefault(parts[0], len(index))
        v = index.setdefault(parts[1], len(index))
        pairs.append((u, v))
    if not pairs:
        raise GraphFormatError("edge list contains no edges")
    graph = from_edges(np.array(pairs, dtype=np.int64), index.keys(), directed=directed)
    if graph.num_edges == 0:
        raise GraphFormatError("edge list contains only self-loops")
    return graph


def read_edge_list(path: str | Path, directed: bool = False) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh, directed=directed)


def write_edge_list(graph: Graph, stream: TextIO, edges: np.ndarray | None = None) -> None:
    edges = graph.edges() if edges is None else edges
    for u, v in edges:
        stream.write(f"{graph.ids[u]} {graph.ids[v]}\n")


def is_connected(graph: Graph) -> bool:
    """True iff the graph has one (weakly) connected component."""
    n = graph.num_nodes
    if n <= 1:
        return True
    if graph.directed:
        e = graph.edges()
        graph = from_edges(e, graph.ids, directed=False)
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    count = 1
    offsets, nbrs = graph.offsets, graph.neighbors
    while queue:
        v = queue.popleft()
        for w in nbrs[offsets[v]:offsets[v + 1]]:
            if not seen[w]:
                seen[w] = True
                count += 1
                queue.append(int(w))
    return count == n


def random_spanning_tree(graph: Graph, rng: np.random.Generator) -> np.ndarray:
    """Uniform random spanning tree via Wilson's loop-erased random walks.

    Returns a (N-1, 2) array of tree edges with u < v.
    """
    n = graph.num_nodes
    offsets, nbrs = graph.offsets, graph.neighbors
    in_tree = np.zeros(n, dtype=bool)
    nxt = np.full(n, -1, dtype=np.int64)
    root = int(rng.integers(n))
    in_tree[root] = True
    # draw uniforms in blocks; python-level rng calls dominate otherwise
    block = rng.random(4096)
    pos = 0
    for start in rng.permutation(n):
        u = int(start)
        while not in_tree[u]:
            if pos == len(block):
                block = rng.random(4096)
                pos = 0
            deg = offsets[u + 1] - offsets[u]
            nxt[u] = nbrs[offsets[u] + int(block[pos] * deg)]
            pos += 1
            u = int(nxt[u])
        u = int(start)
        while not in_tree[u]:
            in_tree[u] = True
            u = int(nxt[u])
    child = np.flatnonzero(np.arange(n) != root)
    parent = nxt[child]
    return np.sort(np.column_stack([child, parent]), axis=1)


@dataclass
class EdgeSplit:
    residual: Graph
    test_positive: np.ndarray
    test_negative: np.ndarray
    fraction: float
    achieved_fraction: float
    shortfall: int = 0  # requested removals that would have disconnected the residual


def _non_edge_sampler(n: int, forbidden: np.ndarray, rng: np.random.Generator, count: int) -> np.ndarray:
    """Uniform distinct unordered non-edges by rejection; ``forbidden`` holds sorted keys u*n+v."""
    taken: set[int] = set()
    out: list[tuple[int, int]] = []
    max_pairs = n * (n - 1) // 2
    if count > max_pairs - len(forbidden) // 2:
        raise ValueError(f"cannot draw {count} distinct non-edges")
    while len(out) < count:
        m = max(2 * (count - len(out)), 64)
        u = rng.integers(n, size=m)
        v = rng.integers(n, size=m)
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        ok = lo != hi
        keys = lo * n + hi
        pos = np.searchsorted(forbidden, keys)
        pos[pos == len(forbidden)] = 0
        ok &= forbidden[pos] != keys if len(forbidden) else ok
        for a, b, k, good in zip(lo, hi, keys, ok):
            if good and int(k) not in taken:
                taken.add(int(k))
                out.append((int(a), int(b)))
                if len(out) == count:
                    break
    return np.array(out, dtype=np.int64).reshape(-1, 2)


def sample_non_edges(graph: Graph, count: int, rng: np.random.Generator,
                     exclude: np.ndarray | None = None, allow_fewer: bool = False) -> np.ndarray:
    """Draw ``count`` distinct node pairs that are neither edges of ``graph`` nor in ``exclude``.

    With ``allow_fewer`` the count is capped at the number of such pairs instead of raising.
    """
    n = graph.num_nodes
    forbidden = graph.edge_keys()
    if exclude is not None and len(exclude):
        ex = np.sort(np.asarray(exclude, dtype=np.int64), axis=1)
        forbidden = np.concatenate([forbidden, ex[:, 0] * n + ex[:, 1], ex[:, 1] * n + ex[:, 0]])
    forbidden = np.unique(forbidden)
    if allow_fewer:
        count = min(count, n * (n - 1) // 2 - len(forbidden) // 2)
    return _non_edge_sampler(n, forbidden, rng, count)


def split_edges(graph: Graph, fraction: float, seed: int | np.random.Generator = 0) -> EdgeSplit:
    """Hold out ``fraction * M`` edges (rounded to nearest) while keeping the residual graph connected.

    Only edges outside a uniformly random spanning tree are eligible for removal, so
    connectivity holds by construction. When fewer edges are eligible than requested,
    all of them are removed and ``achieved_fraction`` records the shortfall.
    """
    if graph.directed:
        raise ValueError("split_edges requires an undirected graph")
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    if not is_connected(graph):
        raise DisconnectedGraphError("graph is not connected")
    rng = np.random.default_rng(seed)
    n = graph.num_nodes
    edges = graph.edges()
    m = len(edges)
    target = int(np.floor(fraction * m + 0.5))

    tree = random_spanning_tree(graph, rng)
    tree_keys = np.sort(tree[:, 0] * n + tree[:, 1])
    keys = edges[:, 0] * n + edges[:, 1]
    removable = np.flatnonzero(~np.isin(keys, tree_keys))
    if len(removable) < target:
        logger.warning("only %d of %d requested edges are removable; residual stays connected",
                       len(removable), target)
        chosen = removable
    else:
        chosen = rng.choice(removable, size=target, replace=False)
    chosen = np.sort(chosen)
    mask = np.ones(m, dtype=bool)
    mask[chosen] = False
    positives = edges[chosen]
    residual = from_edges(edges[mask], graph.ids, directed=False)
    available = n * (n - 1) // 2 - m
    if available < len(positives):
        logger.warning("only %d non-edges exist; test negatives are fewer than positives", available)
    negatives = sample_non_edges(graph, min(len(positives), available), rng)
    return EdgeSplit(residual=residual, test_positive=positives, test_negative=negatives,
                     fraction=fraction, achieved_fraction=len(chosen) / m,
                     shortfall=target - len(chosen))


def write_split(split: EdgeSplit, stream: TextIO) -> None:
    """Write a split manifest with ``%residual``, ``%pos`` and ``%neg`` sections."""
    g = split.residual
    stream.write(f"# fraction={split.fraction} achieved={split.achieved_fraction:.6f}\n")
    # isolated nodes cannot occur (residual is connected), so the id table is recoverable
    stream.write("%residual\n")
    write_edge_list(g, stream)
    stream.write("%pos\n")
    write_edge_list(g, stream, split.test_positive)
    stream.write("%neg\n")
    write_edge_list(g, stream, split.test_negative)


def read_split(stream: TextIO | Iterable[str]) -> EdgeSplit:
    sections: dict[str, list[tuple[str, str]]] = {}
    current = None
    fraction = achieved = float("nan")
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for part in line[1:].split():
                key, _, val = part.partition("=")
                if key == "fraction":
                    fraction = float(val)
                elif key == "achieved":
                    achieved = float(val)
            continue
        if line.startswith("%"):
            current = line[1:]
            if current not in ("residual", "pos", "neg"):
                raise GraphFormatError(f"line {lineno}: unknown section {line!r}")
            sections[current] = []
            continue
        if current is None:
            raise GraphFormatError(f"line {lineno}: edge before any section header")
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError(f"line {lineno}: expected two node tokens")
        sections[current].append((parts[0], parts[1]))
    missing = {"residual", "pos", "neg"} - sections.keys()
    if missing:
        raise GraphFormatError(f"split manifest lacks sections: {sorted(missing)}")
    residual = parse_edge_list((f"{a} {b}" for a, b in sections["residual"]))

    def dense(rows):
        try:
            return np.array([(residual.index[a], residual.index[b]) for a, b in rows],
                            dtype=np.int64).reshape(-1, 2)
        except KeyError as exc:
            raise GraphFormatError(f"test edge endpoint {exc} absent from residual graph") from None

    return EdgeSplit(residual=residual, test_positive=dense(sections["pos"]),
                     test_negative=dense(sections["neg"]), fraction=fraction,
                     achieved_fraction=achieved)
