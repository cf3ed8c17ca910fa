"""Skip-gram with negative sampling over walk corpora, and word2vec text I/O."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Sequence, TextIO

import numpy as np
from numba import njit

from .graph import GraphFormatError
from .walks import Corpus


@dataclass(frozen=True)
class SgnsConfig:
    dim: int = 64
    window: int = 10
    negatives: int = 5
    noise_exponent: float = 0.75
    epochs: int = 5
    lr_start: float = 0.025
    lr_end: float = 0.0001
    seed: int = 0

    def __post_init__(self) -> None:
        if self.dim < 1 or self.window < 1 or self.negatives < 1 or self.epochs < 1:
            raise ValueError("dim, window, negatives and epochs must all be >= 1")
        if self.lr_start <= 0 or self.lr_end <= 0:
            raise ValueError("learning rates must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EmbeddingMatrix:
    """Input vectors (the embedding) and, when trained here, the context vectors."""

    vectors: np.ndarray
    ids: tuple[str, ...]
    context: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def num_nodes(self) -> int:
        return self.vectors.shape[0]

    def index(self) -> dict[str, int]:
        return {tok: i for i, tok in enumerate(self.ids)}

    def aligned_to(self, ids: Sequence[str]) -> np.ndarray:
        """Rows reordered to match ``ids``; raises KeyError for a missing node."""
        idx = self.index()
        missing = [t for t in ids if t not in idx]
        if missing:
            raise KeyError(f"{len(missing)} nodes have no embedding, e.g. {missing[0]!r}")
        return self.vectors[[idx[t] for t in ids]]


def skipgram_probability(emb: EmbeddingMatrix, t: int, x: int) -> float:
    """Full-softmax p(x | t) over all nodes; meant for small graphs only."""
    z = emb.vectors
    logits = z @ z[t]
    logits -= logits.max()
    p = np.exp(logits)
    return float(p[x] / p.sum())


def extract_pairs(corpus: Iterable[Sequence[int]], window: int) -> Iterable[tuple[int, int]]:
    if window < 1:
        raise ValueError("window must be >= 1")
    for path in corpus:
        n = len(path)
        for i in range(n):
            for j in range(max(0, i - window), min(n, i + window + 1)):
                if j != i:
                    yield int(path[i]), int(path[j])


def pair_count(lengths, window: int) -> int:
    """Number of (anchor, context) pairs ``extract_pairs`` yields for these path lengths."""
    return int(_pairs_per_walk(np.asarray(lengths, dtype=np.int64), window).sum())


def _pairs_per_walk(lengths: np.ndarray, window: int) -> np.ndarray:
    c = np.clip(np.minimum(window, lengths - 1), 0, None)
    return 2 * (c * lengths - c * (c + 1) // 2)


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def sgns_loss(z_t: np.ndarray, c_x: np.ndarray, c_neg: np.ndarray) -> float:
    """-log s(z_t.c_x) - sum_k log s(-z_t.c_neg[k])."""
    return float(-_log_sigmoid(z_t @ c_x) - np.sum(_log_sigmoid(-(c_neg @ z_t))))


def sgns_gradients(z_t: np.ndarray, c_x: np.ndarray, c_neg: np.ndarray):
    """Analytic gradients of ``sgns_loss`` w.r.t. (z_t, c_x, c_neg)."""
    sig = lambda v: 0.5 * (1.0 + np.tanh(0.5 * v))  # noqa: E731
    g_pos = sig(z_t @ c_x) - 1.0
    g_neg = sig(c_neg @ z_t)
    d_t = g_pos * c_x + g_neg @ c_neg
    return d_t, g_pos * z_t, np.outer(g_neg, z_t)


def mean_sgns_loss(emb: EmbeddingMatrix, anchors: np.ndarray, contexts: np.ndarray,
                   negatives: np.ndarray) -> float:
    z, c = emb.vectors, emb.context
    zt = z[anchors]
    pos = np.einsum("ij,ij->i", zt, c[contexts])
    neg = np.einsum("ij,ikj->ik", zt, c[negatives])
    return float(np.mean(-_log_sigmoid(pos) - _log_sigmoid(-neg).sum(axis=1)))


def learning_rate(k: int, total: int, lr_start: float, lr_end: float) -> float:
    """Linear decay hitting ``lr_end`` exactly at the last of ``total`` updates."""
    if total <= 1:
        return lr_end
    return lr_start + (lr_end - lr_start) * (k / (total - 1))


@njit(cache=True, nogil=True)
def _sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@njit(cache=True, nogil=True)
def sgns_update(zin, zctx, t, x, negs, lr, grad_buf, with_loss=True):
    """One SGD step on the loss for anchor ``t``, context ``x`` and noise nodes ``negs``.

    Context rows are updated immediately, the anchor row after all targets (word2vec order).
    Noise draws equal to ``x`` are skipped. Returns the pair's loss before the update
    (0.0 when ``with_loss`` is false).
    """
    d = zin.shape[1]
    for j in range(d):
        grad_buf[j] = 0.0
    loss = 0.0
    for k in range(negs.shape[0] + 1):
        if k == 0:
            target = x
            label = 1.0
        else:
            target = negs[k - 1]
            if target == x:
                continue
            label = 0.0
        dot = 0.0
        for j in range(d):
            dot += zin[t, j] * zctx[target, j]
        s = _sigmoid(dot)
        if with_loss:
            if label == 1.0:
                loss -= math.log(max(s, 1e-300))
            else:
                loss -= math.log(max(1.0 - s, 1e-300))
        g = s - label
        for j in range(d):
            grad_buf[j] += g * zctx[target, j]
        for j in range(d):
            zctx[target, j] -= lr * g * zin[t, j]
    for j in range(d):
        zin[t, j] -= lr * grad_buf[j]
    return loss


@njit(cache=True, nogil=True)
def _train_span(paths, lengths, first, last, window, zin, zctx, noise_prob, noise_alias,
                n_neg, k0, total, lr_start, lr_end, seed):
    np.random.seed(seed)
    d = zin.shape[1]
    grad_buf = np.empty(d)
    negs = np.empty(n_neg, dtype=np.int64)
    n_nodes = noise_prob.shape[0]
    k = k0
    for w in range(first, last):
        n = lengths[w]
        for i in range(n):
            t = paths[w, i]
            lo = max(0, i - window)
            hi = min(n, i + window + 1)
            for j in range(lo, hi):
                if j == i:
                    continue
                x = paths[w, j]
                for q in range(n_neg):
                    u = np.random.random() * n_nodes
                    col = min(int(u), n_nodes - 1)
                    negs[q] = col if u - col < noise_prob[col] else noise_alias[col]
                if total > 1:
                    lr = lr_start + (lr_end - lr_start) * (k / (total - 1))
                else:
                    lr = lr_end
                sgns_update(zin, zctx, t, x, negs, lr, grad_buf, False)
                k += 1
    return k - k0


def noise_distribution(corpus: Corpus, num_nodes: int, exponent: float) -> np.ndarray:
    """Unigram frequencies raised to ``exponent``, normalised to sum to one."""
    mask = np.arange(corpus.paths.shape[1]) < corpus.lengths[:, None]
    tokens = corpus.paths[mask].astype(np.int64)
    freq = np.bincount(tokens, minlength=num_nodes).astype(np.float64) ** exponent
    return freq / freq.sum()


def alias_table(probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vose alias table: column i keeps i with probability prob[i], else yields alias[i]."""
    n = len(probs)
    scaled = np.asarray(probs, dtype=np.float64) * n
    prob = np.ones(n)
    alias = np.arange(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s, g = small.pop(), large.pop()
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] -= 1.0 - scaled[s]
        (small if scaled[g] < 1.0 else large).append(g)
    # leftovers are 1 up to rounding
    return prob, alias


def _walk_spans(lengths: np.ndarray, window: int, parts: int) -> list[tuple[int, int, int]]:
    """Split walks into ``parts`` contiguous spans; returns (first, last, pairs before first)."""
    per_walk = _pairs_per_walk(lengths, window)
    before = np.concatenate([[0], np.cumsum(per_walk)])
    bounds = np.linspace(0, len(lengths), parts + 1).astype(int)
    return [(int(a), int(b), int(before[a])) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def train(corpus: Corpus, ids: Sequence[str], config: SgnsConfig = SgnsConfig(),
          workers: int = 1,
          epoch_callback: Callable[[int, EmbeddingMatrix], None] | None = None) -> EmbeddingMatrix:
    """Train input/context vectors for all ``len(ids)`` nodes with SGNS.

    ``workers > 1`` trains walk spans concurrently without locking (Hogwild), which gives
    up bit reproducibility. ``epoch_callback(epoch, emb)`` is called with epoch 0 before
    training and after every epoch.
    """
    n_nodes = len(ids)
    if len(corpus) == 0 or corpus.token_count() == 0:
        raise ValueError("corpus is empty")
    if corpus.paths.size and int(corpus.paths.max()) >= n_nodes:
        raise KeyError("corpus references a node outside the vocabulary")
    rng = np.random.default_rng(config.seed)
    d = config.dim
    zin = (rng.random((n_nodes, d)) - 0.5) / d
    zctx = np.zeros((n_nodes, d))
    emb = EmbeddingMatrix(zin, tuple(ids), zctx)
    noise_prob, noise_alias = alias_table(noise_distribution(corpus, n_nodes, config.noise_exponent))
    paths = np.ascontiguousarray(corpus.paths, dtype=np.int64)
    lengths = np.asarray(corpus.lengths, dtype=np.int64)
    per_epoch = pair_count(lengths, config.window)
    total = per_epoch * config.epochs
    spans = _walk_spans(lengths, config.window, max(workers, 1))
    seeds = np.random.SeedSequence(config.seed).generate_state(config.epochs * len(spans) + 1)
    if epoch_callback:
        epoch_callback(0, emb)
    for epoch in range(config.epochs):
        base = epoch * per_epoch
        jobs = [(a, b, base + k, int(seeds[epoch * len(spans) + i]))
                for i, (a, b, k) in enumerate(spans)]

        def run(job):
            a, b, k0, s = job
            return _train_span(paths, lengths, a, b, config.window, zin, zctx, noise_prob,
                               noise_alias, config.negatives, k0, total, config.lr_start, config.lr_end, s)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(run, jobs))
        else:
            for job in jobs:
                run(job)
        if epoch_callback:
            epoch_callback(epoch + 1, emb)
    return emb


def save_embeddings(emb: EmbeddingMatrix, stream: TextIO) -> None:
    stream.write(f"{emb.num_nodes} {emb.dim}\n")
    for tok, row in zip(emb.ids, emb.vectors):
        stream.write(tok + " " + " ".join(f"{v:.9g}" for v in row) + "\n")


def load_embeddings(stream: TextIO | Iterable[str]) -> EmbeddingMatrix:
    lines = iter(stream)
    try:
        header = next(lines).split()
    except StopIteration:
        raise GraphFormatError("embedding file is empty") from None
    if len(header) != 2:
        raise GraphFormatError("embedding header must be 'N d'")
    n, d = int(header[0]), int(header[1])
    ids, rows = [], []
    for lineno, raw in enumerate(lines, start=2):
        parts = raw.split()
        if not parts:
            continue
        if len(parts) != d + 1:
            raise GraphFormatError(f"line {lineno}: expected {d} values, got {len(parts) - 1}")
        ids.append(parts[0])
        rows.append([float(v) for v in parts[1:]])
    if len(rows) != n:
        raise GraphFormatError(f"header announces {n} rows, found {len(rows)}")
    return EmbeddingMatrix(np.array(rows, dtype=np.float64).reshape(n, d), tuple(ids))
