"""Link prediction and multi-label node classification on learned embeddings."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from .graph import EdgeSplit, GraphFormatError, sample_non_edges
from .sgns import EmbeddingMatrix

logger = logging.getLogger(__name__)

EDGE_OPERATORS = ("average", "hadamard", "weighted-l1", "weighted-l2")


def edge_feature(op: str, z_u: np.ndarray, z_v: np.ndarray) -> np.ndarray:
    """Combine endpoint vectors into an edge vector; works row-wise on 2-D input."""
    z_u = np.asarray(z_u, dtype=np.float64)
    z_v = np.asarray(z_v, dtype=np.float64)
    if z_u.shape != z_v.shape:
        raise ValueError(f"dimension mismatch: {z_u.shape} vs {z_v.shape}")
    if op == "average":
        return 0.5 * (z_u + z_v)
    if op == "hadamard":
        return z_u * z_v
    if op == "weighted-l1":
        return np.abs(z_u - z_v)
    if op == "weighted-l2":
        return (z_u - z_v) ** 2
    raise ValueError(f"unknown edge operator {op!r}")


@dataclass
class LogRegModel:
    weights: np.ndarray
    bias: float
    l2: float
    tol: float
    converged: bool
    iterations: int
    loss_history: list[float] = field(default_factory=list)

    def decision_function(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) @ self.weights + self.bias

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return _sigmoid(self.decision_function(x))


def _sigmoid(t):
    return 0.5 * (1.0 + np.tanh(0.5 * t))


def _objective(theta, x, y, l2):
    n = len(y)
    w, b = theta[:-1], theta[-1]
    t = x @ w + b
    # mean log-loss written via logaddexp for stability
    loss = np.mean(np.logaddexp(0.0, t) - y * t) + 0.5 * l2 / n * (w @ w)
    r = (_sigmoid(t) - y) / n
    grad = np.empty_like(theta)
    grad[:-1] = x.T @ r + l2 / n * w
    grad[-1] = r.sum()
    return loss, grad


def logreg_gradient(model: LogRegModel, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    theta = np.append(model.weights, model.bias)
    return _objective(theta, np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64),
                      model.l2)[1]


def fit_logreg(x: np.ndarray, y: np.ndarray, l2: float = 1.0, tol: float = 1e-6,
               max_iter: int = 1000) -> LogRegModel:
    """L2-regularized logistic regression by gradient descent with Armijo backtracking.

    Minimizes mean log-loss + ``l2 / (2n) * ||w||^2`` (bias unpenalized). Trial steps use
    the Barzilai-Borwein length; stops when the gradient norm drops below ``tol``.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    for cls in (0.0, 1.0):
        if not np.any(y == cls):
            raise ValueError(f"logistic regression needs both classes; class {int(cls)} is absent")
    theta = np.zeros(x.shape[1] + 1)
    loss, grad = _objective(theta, x, y, l2)
    history = [loss]
    step = 1.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        gnorm2 = grad @ grad
        if np.sqrt(gnorm2) < tol:
            converged = True
            it -= 1
            break
        while True:
            cand = theta - step * grad
            cand_loss, cand_grad = _objective(cand, x, y, l2)
            if cand_loss <= loss - 1e-4 * step * gnorm2 or step < 1e-12:
                break
            step *= 0.5
        if cand_loss > loss:
            break
        s, g_diff = cand - theta, cand_grad - grad
        theta, loss, grad = cand, cand_loss, cand_grad
        history.append(loss)
        sy = s @ g_diff
        step = (s @ s) / sy if sy > 0 else step * 2.0
    else:
        converged = bool(np.linalg.norm(grad) < tol)
    return LogRegModel(theta[:-1].copy(), float(theta[-1]), l2, tol, converged, it, history)


def auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Mann-Whitney AUC with ties counted one half, via average ranks."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one positive and one negative")
    order = np.argsort(scores, kind="mergesort")
    sorted_scores = scores[order]
    _, first, counts = np.unique(sorted_scores, return_index=True, return_counts=True)
    avg_rank = first + (counts + 1) / 2.0  # 1-based mean rank of each tie group
    ranks = np.empty(len(scores))
    ranks[order] = np.repeat(avg_rank, counts)
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def auc_pairwise(scores: Sequence[float], labels: Sequence[int]) -> float:
    """O(P*Q) reference AUC by explicit pair counting."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    pos, neg = scores[labels], scores[~labels]
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("AUC needs at least one positive and one negative")
    diff = pos[:, None] - neg[None, :]
    return float(((diff > 0).sum() + 0.5 * (diff == 0).sum()) / diff.size)


def link_prediction_eval(emb: EmbeddingMatrix, split: EdgeSplit,
                         operators: Iterable[str] = EDGE_OPERATORS,
                         rng: np.random.Generator | int = 0, l2: float = 1.0,
                         tol: float = 1e-6, max_iter: int = 1000) -> dict[str, float]:
    """AUC per edge operator for a classifier trained on residual edges vs fresh non-edges."""
    rng = np.random.default_rng(rng)
    g = split.residual
    z = emb.aligned_to(g.ids)
    train_pos = g.edges()
    held = np.concatenate([split.test_positive, split.test_negative])
    # excluding test positives as well keeps training negatives non-edges of the original graph
    train_neg = sample_non_edges(g, len(train_pos), rng, exclude=held, allow_fewer=True)
    if len(train_neg) < len(train_pos):
        logger.warning("only %d non-edges left for %d training positives", len(train_neg), len(train_pos))
    train_pairs = np.concatenate([train_pos, train_neg])
    y_train = np.r_[np.ones(len(train_pos)), np.zeros(len(train_neg))]
    test_pairs = np.concatenate([split.test_positive, split.test_negative])
    y_test = np.r_[np.ones(len(split.test_positive)), np.zeros(len(split.test_negative))]
    out = {}
    for op in operators:
        f_train = edge_feature(op, z[train_pairs[:, 0]], z[train_pairs[:, 1]])
        f_test = edge_feature(op, z[test_pairs[:, 0]], z[test_pairs[:, 1]])
        model = fit_logreg(f_train, y_train, l2=l2, tol=tol, max_iter=max_iter)
        if not model.converged:
            logger.info("logreg for %s stopped at iteration cap (%d)", op, model.iterations)
        out[op] = auc(model.decision_function(f_test), y_test)
    return out


@dataclass
class LabeledNodes:
    labels: dict[str, frozenset[str]]
    universe: tuple[str, ...]

    def __post_init__(self) -> None:
        for node, labs in self.labels.items():
            if not labs:
                raise GraphFormatError(f"node {node!r} has an empty label set")


def parse_labels(stream: TextIO | Iterable[str]) -> LabeledNodes:
    labels: dict[str, set[str]] = {}
    universe: dict[str, None] = {}
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) < 2:
            raise GraphFormatError(f"line {lineno}: node {parts[0]!r} has no labels")
        labels.setdefault(parts[0], set()).update(parts[1:])
        universe.update(dict.fromkeys(parts[1:]))
    return LabeledNodes({k: frozenset(v) for k, v in labels.items()}, tuple(sorted(universe)))


def f1_scores(truth: np.ndarray, pred: np.ndarray) -> tuple[float, float]:
    """(micro, macro) F1 for boolean indicator matrices of shape (nodes, labels)."""
    truth = np.asarray(truth, dtype=bool)
    pred = np.asarray(pred, dtype=bool)
    tp = (truth & pred).sum(axis=0).astype(np.float64)
    fp = (~truth & pred).sum(axis=0)
    fn = (truth & ~pred).sum(axis=0)
    denom = 2 * tp + fp + fn
    micro = 2 * tp.sum() / denom.sum() if denom.sum() else 0.0
    per_label = np.divide(2 * tp, denom, out=np.zeros_like(tp), where=denom > 0)
    return float(micro), float(per_label.mean())


@dataclass
class ClassificationResult:
    micro_f1: float
    macro_f1: float
    unpredictable_labels: list[str]


def top_l_predictions(scores: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Mark the ``counts[i]`` highest-scoring labels of each row."""
    pred = np.zeros(scores.shape, dtype=bool)
    order = np.argsort(-scores, axis=1, kind="stable")
    for i, k in enumerate(counts):
        pred[i, order[i, :k]] = True
    return pred


def node_classification_eval(emb: EmbeddingMatrix, labels: LabeledNodes, train_fraction: float,
                             rng: np.random.Generator | int = 0, l2: float = 1.0,
                             tol: float = 1e-6, max_iter: int = 1000) -> ClassificationResult:
    """One-vs-rest logistic regression with top-l prediction on a random node split."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    rng = np.random.default_rng(rng)
    nodes = sorted(labels.labels)
    universe = labels.universe
    col = {lab: j for j, lab in enumerate(universe)}
    x = emb.aligned_to(nodes)
    y = np.zeros((len(nodes), len(universe)), dtype=bool)
    for i, node in enumerate(nodes):
        for lab in labels.labels[node]:
            y[i, col[lab]] = True
    perm = rng.permutation(len(nodes))
    n_train = int(round(train_fraction * len(nodes)))
    if not 0 < n_train < len(nodes):
        raise ValueError("train fraction leaves an empty train or test set")
    tr, te = perm[:n_train], perm[n_train:]
    scores = np.empty((len(te), len(universe)))
    unpredictable = []
    for j, lab in enumerate(universe):
        yj = y[tr, j]
        if not yj.any():
            unpredictable.append(lab)
            scores[:, j] = -np.inf
            continue
        if yj.all():
            scores[:, j] = np.inf
            continue
        model = fit_logreg(x[tr], yj, l2=l2, tol=tol, max_iter=max_iter)
        scores[:, j] = model.decision_function(x[te])
    if unpredictable:
        logger.warning("labels without training examples (never predicted): %s", unpredictable)
    pred = top_l_predictions(scores, y[te].sum(axis=1))
    micro, macro = f1_scores(y[te], pred)
    return ClassificationResult(micro, macro, unpredictable)


RESULT_COLUMNS = ("dataset", "exploitation", "exploration", "epsilon", "operator_or_split",
                  "metric", "value", "seed")


def percent(value: float) -> float:
    return round(100.0 * value, 1)

