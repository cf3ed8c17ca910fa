"""Acceptance suite: one test per criterion, each recorded as PASS/FAIL/BLOCKED.

Criteria needing the Facebook or PPI data look for files under ``$VRWALK_DATA`` (default
``data/``) and are skipped as BLOCKED when those are absent. Tests prefixed ``test_surrogate``
exercise the same code paths on synthetic graphs and do not stand in for the real criteria.
"""

import os
import time
from collections import Counter

import numpy as np
import pytest

from vrwalk import pipeline as P
from vrwalk import walks as W
from vrwalk.evaluation import LabeledNodes, auc, auc_pairwise, parse_labels
from vrwalk.graph import from_edges, read_edge_list
from vrwalk.sgns import SgnsConfig, sgns_gradients, sgns_loss
from vrwalk.walks import WalkConfig

from conftest import DATA_DIR

WORKERS = int(os.environ.get("VRWALK_WORKERS", "1"))
SEEDS = (0, 1, 2)


def data_file(*names):
    for name in names:
        path = DATA_DIR / name
        if path.exists():
            return path
    return None


def ppi_inputs(acceptance):
    edges = data_file("ppi.edgelist", "ppi.txt")
    labels = data_file("ppi.labels", "ppi_labels.txt")
    if edges is None or labels is None:
        acceptance.blocked(f"PPI edge list and labels not found in {DATA_DIR} "
                           "(see scripts/fetch_datasets.py)")
    graph = read_edge_list(edges)
    with open(labels, encoding="utf-8") as fh:
        return graph, parse_labels(fh)


def random_state(rng, max_nodes=50, max_steps=200):
    n_nodes = int(rng.integers(2, max_nodes + 1))
    steps = int(rng.integers(0, max_steps + 1))
    state = W.WalkState.start(int(rng.integers(n_nodes)), n_nodes)
    for v in rng.integers(n_nodes, size=steps):
        state.append(int(v))
    return state


# --- 1-5: oracle equivalences ------------------------------------------------------------


def test_criterion_01_divergence_oracle(acceptance):
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(1000):
        state = random_state(rng)
        w = W.occupation_vector(state)
        x = int(rng.integers(state.num_nodes))
        wx = W.occupation_vector(state, append=x)
        worst = max(worst,
                    abs(W.drrw_kl_score(state, x) - (1 - W.kl_divergence(w, wx))),
                    abs(W.drrw_js_score(state, x) - (1 - W.js_divergence(w, wx))))
    assert acceptance(worst <= 1e-12, f"max |closed - dense| = {worst:.2e} over 1000 states")


def test_criterion_02_occupation_recurrence(acceptance):
    rng = np.random.default_rng(102)
    n_nodes = 40
    state = W.WalkState.start(0, n_nodes)
    w = W.occupation_vector(state)
    eye = np.eye(n_nodes)
    worst = 0.0
    for _ in range(10_000):
        x = int(rng.integers(n_nodes))
        n = state.step
        expected = ((n + n_nodes) * w + eye[x]) / (n + 1 + n_nodes)
        state.append(x)
        w = W.occupation_vector(state)
        worst = max(worst, float(np.max(np.abs(w - expected))))
    assert acceptance(worst <= 1e-12, f"max deviation {worst:.2e} over 10000 steps")


def test_criterion_03_degenerate_uniform(acceptance):
    # node "c" has degree 4; the walk history makes reinforced scores unequal
    graph = from_edges(np.array([(0, 1), (0, 2), (0, 3), (0, 4), (1, 2)]), list("cabde"))
    state = W.WalkState.start(1, 5)
    for v in (2, 0, 1, 0, 2, 1, 0):
        state.append(v)
    draws = 100_000
    sigma = np.sqrt(0.25 * 0.75 / draws)
    worst = 0.0
    configs = {"epsilon=1": WalkConfig(exploitation="vrrw", exploration="epsilon-greedy", epsilon=1.0),
               "first-order": WalkConfig(exploitation="first-order", exploration="none")}
    for cfg in configs.values():
        rng = np.random.default_rng(103)
        freq = Counter(W.sample_next(state, graph, cfg, rng) for _ in range(draws))
        worst = max(worst, max(abs(freq[v] / draws - 0.25) for v in (1, 2, 3, 4)))
        # the batch kernel: leaf d has the single neighbor c, so step two leaves c
        paths, _, _ = W._run_walks(graph, np.full(draws, 3), rng.random((draws, 4)), cfg, 3)
        assert np.all(paths[:, 1] == 0)
        steps = Counter(paths[:, 2].tolist())
        worst = max(worst, max(abs(steps[v] / draws - 0.25) for v in (1, 2, 3, 4)))
    ok = worst <= 3 * sigma
    assert acceptance(ok, f"max |freq - 0.25| = {worst:.5f} (3 sigma = {3 * sigma:.5f})")


def finite_difference(z_t, c_x, c_neg, h=1e-5):
    grads = []
    for arr in (z_t, c_x, c_neg):
        g = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + h
            up = sgns_loss(z_t, c_x, c_neg)
            arr[idx] = old - h
            down = sgns_loss(z_t, c_x, c_neg)
            arr[idx] = old
            g[idx] = (up - down) / (2 * h)
        grads.append(g)
    return grads


def test_criterion_04_sgns_gradient_check(acceptance):
    rng = np.random.default_rng(104)
    worst = 0.0
    for _ in range(100):
        k = int(rng.integers(1, 11))
        z_t, c_x, c_neg = rng.normal(size=8), rng.normal(size=8), rng.normal(size=(k, 8))
        for a, n in zip(sgns_gradients(z_t, c_x, c_neg), finite_difference(z_t, c_x, c_neg)):
            rel = np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-8)
            worst = max(worst, float(rel.max()))
    assert acceptance(worst < 1e-4, f"max relative error {worst:.2e} over 100 configurations")


def test_criterion_05_auc_oracle(acceptance):
    rng = np.random.default_rng(105)
    worst = 0.0
    for i in range(1000):
        n = int(rng.integers(2, 300))
        labels = rng.integers(2, size=n)
        labels[:2] = (0, 1)
        # coarse grids force ties, including ties across classes
        levels = int(rng.integers(1, 20)) if i % 2 else 10 ** 6
        scores = rng.integers(levels, size=n) / levels
        worst = max(worst, abs(auc(scores, labels) - auc_pairwise(scores, labels)))
    assert acceptance(worst <= 1e-12, f"max |rank - pairwise| = {worst:.2e} over 1000 instances")


# --- 6-9: dataset reproductions ----------------------------------------------------------


def last_window_distinct(graph, cfg, seed, steps=10_000, window=100):
    rng = np.random.default_rng(seed)
    start = int(rng.integers(graph.num_nodes))
    path = W.generate_walk(graph, start, cfg, rng, walk_length=steps + 1)
    return len(set(path[-window:]))


def stuck_counts(graph, vrrw_graph=None):
    vrrw = WalkConfig(exploitation="vrrw", exploration="none")
    uniform = WalkConfig(exploitation="first-order", exploration="none")
    stuck = [last_window_distinct(vrrw_graph or graph, vrrw, s) for s in range(20)]
    control = [last_window_distinct(graph, uniform, s) for s in range(20)]
    return stuck, control


@pytest.mark.dataset
def test_criterion_06_stuck_set_ppi(acceptance):
    graph, _ = ppi_inputs(acceptance)
    stuck, control = stuck_counts(graph)
    few = sum(c <= 5 for c in stuck)
    many = sum(c > 20 for c in control)
    assert acceptance(few >= 15 and many >= 15,
                      f"VRRW <=5 distinct in {few}/20, uniform >20 distinct in {many}/20 "
                      f"(VRRW {sorted(stuck)})")


@pytest.mark.dataset
@pytest.mark.slow
def test_criterion_07_link_prediction_facebook(acceptance):
    path = data_file("facebook.edgelist", "facebook_combined.txt")
    if path is None:
        acceptance.blocked(f"Facebook edge list not found in {DATA_DIR} (see scripts/fetch_datasets.py)")
    graph = read_edge_list(path)
    ours, deepwalk = [], []
    for seed in SEEDS:
        split = P.prepare_split(graph, 0.5, seed)
        sg = SgnsConfig(seed=seed)
        for variant, bucket in ((("drrw-js", "ucb", None), ours),
                                (("drrw-js", "epsilon-greedy", 1.0), deepwalk)):
            cfg = P.walk_config_for(variant, WalkConfig(seed=seed))
            rows = P.run_link_prediction(split, cfg, sg, ["weighted-l2"], "facebook", seed, WORKERS)
            bucket.append(rows[0]["value"])
    a, b = float(np.median(ours)), float(np.median(deepwalk))
    assert acceptance(a >= 96.0 and abs(b - 95.8) <= 2.5,
                      f"DRRW-JS+UCB weighted-l2 AUC {a:.1f} (>= 96.0), epsilon=1 {b:.1f} (95.8 +- 2.5)")


def nc_median(graph, labels, variant, seeds=SEEDS):
    scores = []
    for seed in seeds:
        cfg = P.walk_config_for(variant, WalkConfig(seed=seed))
        rows = P.run_node_classification(graph, labels, cfg, SgnsConfig(seed=seed), 0.5, "ppi",
                                         seed, WORKERS)
        scores.append(next(r["value"] for r in rows if r["metric"] == "micro_f1"))
    return float(np.median(scores))


@pytest.mark.dataset
@pytest.mark.slow
def test_criterion_08_node_classification_ppi(acceptance):
    graph, labels = ppi_inputs(acceptance)
    full = nc_median(graph, labels, ("drrw-js", "ucb", None))
    no_explore = nc_median(graph, labels, ("drrw-js", "none", None))
    vrrw = nc_median(graph, labels, ("vrrw", "ucb", None))
    ok = full >= 20.0 and no_explore <= 15.0 and full >= vrrw
    assert acceptance(ok, f"Micro-F1 DRRW-JS+UCB {full:.1f} (>= 20.0), DRRW-JS alone "
                          f"{no_explore:.1f} (<= 15.0), VRRW+UCB {vrrw:.1f} (<= DRRW)")


@pytest.mark.dataset
@pytest.mark.slow
def test_criterion_09_epsilon_shape_ppi(acceptance):
    graph, labels = ppi_inputs(acceptance)
    med = {eps: nc_median(graph, labels, ("drrw-js", "epsilon-greedy", eps)) for eps in (0.0, 0.3, 0.5)}
    ok = all(med[0.0] <= med[e] - 3.0 for e in (0.3, 0.5))
    assert acceptance(ok, "Micro-F1 by epsilon " + ", ".join(f"{e}: {v:.1f}" for e, v in med.items()))


# --- 10: complexity ----------------------------------------------------------------------


def best_time(graph, cfg, repeats=3):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        W.generate_corpus(graph, cfg)
        best = min(best, time.perf_counter() - t0)
    return best


@pytest.mark.slow
def test_criterion_10_walk_complexity(acceptance):
    rng = np.random.default_rng(110)
    n = 10_000
    ring = np.c_[np.arange(n), np.roll(np.arange(n), 1)]
    graph = from_edges(np.concatenate([ring, rng.integers(n, size=(4 * n, 2))]),
                       [str(i) for i in range(n)])
    W.generate_corpus(graph, WalkConfig(walks_per_node=1, walk_length=5))  # compile and warm up
    rs, ls = (1, 2, 4, 8), (10, 20, 40, 80)
    t_r = [best_time(graph, WalkConfig(walks_per_node=r, walk_length=40)) for r in rs]
    t_l = [best_time(graph, WalkConfig(walks_per_node=2, walk_length=ell)) for ell in ls]
    slope_r = np.polyfit(np.log(rs), np.log(t_r), 1)[0]
    slope_l = np.polyfit(np.log(ls), np.log(t_l), 1)[0]
    ok = slope_r <= 1.2 and slope_l <= 2.2
    assert acceptance(ok, f"log-log slope in R {slope_r:.2f} (<= 1.2), in L {slope_l:.2f} (<= 2.2); "
                          f"times R {np.round(t_r, 2).tolist()} L {np.round(t_l, 2).tolist()}")


# --- surrogates (non-gating) -------------------------------------------------------------


def planted_partition(n, k, p_in, p_out, seed):
    """Block communities 0..k-1 plus a path through the nodes in order for connectivity."""
    rng = np.random.default_rng(seed)
    comm = np.arange(n) * k // n
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < np.where(comm[iu] == comm[ju], p_in, p_out)
    edges = np.concatenate([np.c_[iu[keep], ju[keep]], np.c_[np.arange(n - 1), np.arange(1, n)]])
    return from_edges(edges, [str(i) for i in range(n)]), comm


def test_surrogate_stuck_set_cycle(acceptance):
    # VRRW on a cycle localizes on a handful of sites; the uniform control runs on a sparse
    # random graph where 100 steps reach far more distinct nodes
    n = 2000
    cycle = from_edges(np.c_[np.arange(n), np.roll(np.arange(n), 1)], [str(i) for i in range(n)])
    rng = np.random.default_rng(6)
    chords = rng.integers(n, size=(4 * n, 2))
    expander = from_edges(np.concatenate([np.c_[np.arange(n), np.roll(np.arange(n), 1)], chords]),
                          [str(i) for i in range(n)])
    stuck, control = stuck_counts(expander, vrrw_graph=cycle)
    few = sum(c <= 5 for c in stuck)
    many = sum(c > 20 for c in control)
    assert acceptance(few >= 15 and many >= 15,
                      f"cycle VRRW <=5 distinct in {few}/20, random-graph uniform >20 in {many}/20")


def test_surrogate_link_prediction_planted(acceptance):
    graph, comm = planted_partition(400, 4, 0.08, 0.004, seed=7)
    sg = SgnsConfig(dim=16, window=5, epochs=1)
    values = {}
    for name, variant in (("drrw-js+ucb", ("drrw-js", "ucb", None)),
                          ("epsilon=1", ("drrw-js", "epsilon-greedy", 1.0))):
        scores = []
        for seed in SEEDS:
            cfg = P.walk_config_for(variant, WalkConfig(walks_per_node=10, walk_length=20, seed=seed))
            split = P.prepare_split(graph, 0.5, seed)
            scores.append(P.run_link_prediction(split, cfg, sg, ["weighted-l2"], seed=seed)[0]["value"])
        values[name] = float(np.median(scores))
    # held-out edges are mostly within a block and negatives mostly across
    ok = values["drrw-js+ucb"] >= 70.0 and abs(values["drrw-js+ucb"] - values["epsilon=1"]) <= 5.0
    assert acceptance(ok, f"weighted-l2 AUC {values}")


def test_surrogate_node_classification_planted(acceptance):
    graph, comm = planted_partition(400, 4, 0.08, 0.004, seed=8)
    labels = LabeledNodes({str(i): frozenset({f"block{comm[i]}"}) for i in range(400)},
                          tuple(f"block{b}" for b in range(4)))
    sg = SgnsConfig(dim=16, window=5, epochs=1)
    scores = []
    for seed in SEEDS:
        cfg = WalkConfig(walks_per_node=10, walk_length=20, seed=seed)
        rows = P.run_node_classification(graph, labels, cfg, sg, 0.5, seed=seed)
        scores.append(next(r["value"] for r in rows if r["metric"] == "micro_f1"))
    med = float(np.median(scores))
    assert acceptance(med >= 90.0, f"DRRW-JS+UCB Micro-F1 on planted blocks {med:.1f} (>= 90.0)")
