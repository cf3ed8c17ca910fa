import io
import math

import numpy as np
import pytest

from vrwalk import sgns as S
from vrwalk.graph import GraphFormatError
from vrwalk.walks import Corpus


def finite_difference_grads(z_t, c_x, c_neg, h=1e-5):
    def num(arr, f):
        g = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + h
            up = f()
            arr[idx] = old - h
            down = f()
            arr[idx] = old
            g[idx] = (up - down) / (2 * h)
        return g
    loss = lambda: S.sgns_loss(z_t, c_x, c_neg)  # noqa: E731
    return num(z_t, loss), num(c_x, loss), num(c_neg, loss)


def relative_error(a, b):
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-8)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    for _ in range(20):
        z_t, c_x, c_neg = rng.normal(size=8), rng.normal(size=8), rng.normal(size=(5, 8))
        analytic = S.sgns_gradients(z_t, c_x, c_neg)
        numeric = finite_difference_grads(z_t, c_x, c_neg)
        for a, n in zip(analytic, numeric):
            assert relative_error(a, n).max() < 1e-4


def test_kernel_update_is_a_gradient_step():
    rng = np.random.default_rng(1)
    zin, zctx = rng.normal(size=(6, 8)), rng.normal(size=(6, 8))
    t, x, negs, lr = 0, 1, np.array([2, 3, 4, 5]), 0.01
    d_t, d_x, d_neg = S.sgns_gradients(zin[t], zctx[x], zctx[negs])
    loss = S.sgns_loss(zin[t], zctx[x], zctx[negs])
    new_in, new_ctx = zin.copy(), zctx.copy()
    got = S.sgns_update(new_in, new_ctx, t, x, negs, lr, np.empty(8))
    assert got == pytest.approx(loss, rel=1e-12)
    assert np.allclose(new_in[t], zin[t] - lr * d_t, atol=1e-14)
    assert np.allclose(new_ctx[x], zctx[x] - lr * d_x, atol=1e-14)
    assert np.allclose(new_ctx[negs], zctx[negs] - lr * d_neg, atol=1e-14)


def test_kernel_skips_noise_equal_to_context():
    rng = np.random.default_rng(2)
    zin, zctx = rng.normal(size=(3, 4)), rng.normal(size=(3, 4))
    a_in, a_ctx = zin.copy(), zctx.copy()
    b_in, b_ctx = zin.copy(), zctx.copy()
    S.sgns_update(a_in, a_ctx, 0, 1, np.array([1, 2]), 0.1, np.empty(4))
    S.sgns_update(b_in, b_ctx, 0, 1, np.array([2]), 0.1, np.empty(4))
    assert np.array_equal(a_in, b_in) and np.array_equal(a_ctx, b_ctx)


def test_skipgram_probability_uniform_when_identical():
    emb = S.EmbeddingMatrix(np.ones((4, 3)), tuple("abcd"))
    for t in range(4):
        for x in range(4):
            assert S.skipgram_probability(emb, t, x) == pytest.approx(0.25)


def test_skipgram_probability_two_nodes():
    # z_0 . z_0 = 1 and z_0 . z_1 = 0
    emb = S.EmbeddingMatrix(np.array([[1.0, 0.0], [0.0, 1.0]]), ("a", "b"))
    e = math.e
    assert S.skipgram_probability(emb, 0, 0) == pytest.approx(e / (e + 1), abs=1e-15)
    assert S.skipgram_probability(emb, 0, 1) == pytest.approx(1 / (e + 1), abs=1e-15)


def test_skipgram_rows_sum_to_one():
    rng = np.random.default_rng(3)
    for n in (2, 17, 100):
        emb = S.EmbeddingMatrix(rng.normal(scale=3, size=(n, 5)), tuple(map(str, range(n))))
        for t in rng.integers(n, size=5):
            total = sum(S.skipgram_probability(emb, int(t), x) for x in range(n))
            assert abs(total - 1) < 1e-10


def test_extract_pairs_examples():
    assert list(S.extract_pairs([[0, 1, 2]], 1)) == [(0, 1), (1, 0), (1, 2), (2, 1)]
    assert list(S.extract_pairs([[7]], 5)) == []
    for n in range(1, 9):
        pairs = list(S.extract_pairs([list(range(n))], n))
        assert len(pairs) == n * (n - 1)
        assert S.pair_count([n], n) == n * (n - 1)


def test_pair_count_matches_enumeration():
    rng = np.random.default_rng(4)
    paths = [list(rng.integers(10, size=int(rng.integers(1, 30)))) for _ in range(40)]
    for window in (1, 3, 10, 50):
        assert S.pair_count([len(p) for p in paths], window) == len(list(S.extract_pairs(paths, window)))


def test_no_pairs_across_paths():
    pairs = set(S.extract_pairs([[0, 1], [2, 3]], 5))
    assert (1, 2) not in pairs and (0, 3) not in pairs


def test_learning_rate_schedule():
    total = 1000
    lrs = [S.learning_rate(k, total, 0.025, 0.0001) for k in range(total)]
    assert lrs[0] == 0.025
    assert lrs[-1] == pytest.approx(0.0001, abs=1e-18)
    assert all(a >= b for a, b in zip(lrs, lrs[1:]))


def test_training_saturates_single_pair():
    corpus = Corpus.from_paths([[0, 1]] * 10_000)
    emb = S.train(corpus, ("a", "b", "c"), S.SgnsConfig(dim=8, window=1, epochs=1, seed=0))
    assert emb.vectors.shape == (3, 8) and emb.context.shape == (3, 8)
    score = 1 / (1 + math.exp(-emb.vectors[0] @ emb.context[1]))
    assert score > 0.9
    # "c" never occurs: its input vector keeps its random initialisation
    assert np.all(np.abs(emb.vectors[2]) <= 0.5 / 8)


def test_training_bit_reproducible():
    rng = np.random.default_rng(5)
    corpus = Corpus.from_paths([list(rng.integers(20, size=10)) for _ in range(200)])
    ids = tuple(map(str, range(20)))
    cfg = S.SgnsConfig(dim=16, window=3, epochs=2, seed=11)
    a, b = S.train(corpus, ids, cfg), S.train(corpus, ids, cfg)
    assert np.array_equal(a.vectors, b.vectors) and np.array_equal(a.context, b.context)
    c = S.train(corpus, ids, S.SgnsConfig(dim=16, window=3, epochs=2, seed=12))
    assert not np.array_equal(a.vectors, c.vectors)


def test_training_loss_decreases():
    rng = np.random.default_rng(6)
    # two communities: walks stay inside {0..9} or {10..19}
    paths = [list(rng.integers(10, size=12) + 10 * (i % 2)) for i in range(400)]
    corpus = Corpus.from_paths(paths)
    pairs = np.array(list(S.extract_pairs(paths[:50], 3)))
    negs = rng.integers(20, size=(len(pairs), 5))
    losses = {}
    cb = lambda epoch, emb: losses.__setitem__(epoch, S.mean_sgns_loss(emb, pairs[:, 0], pairs[:, 1], negs))  # noqa: E731
    emb = S.train(corpus, tuple(map(str, range(20))), S.SgnsConfig(dim=8, window=3, epochs=3),
                  epoch_callback=cb)
    assert losses[2] < losses[0]
    assert np.all(np.isfinite(emb.vectors))
    assert not np.any(np.all(emb.vectors == 0, axis=1))


def test_hogwild_mode_runs():
    rng = np.random.default_rng(7)
    corpus = Corpus.from_paths([list(rng.integers(30, size=10)) for _ in range(300)])
    emb = S.train(corpus, tuple(map(str, range(30))), S.SgnsConfig(dim=8, epochs=1), workers=3)
    assert np.all(np.isfinite(emb.vectors))


def test_train_rejects_out_of_vocabulary_and_empty():
    with pytest.raises(KeyError):
        S.train(Corpus.from_paths([[0, 5]]), ("a", "b"))
    with pytest.raises(ValueError):
        S.train(Corpus.from_paths([]), ("a",))


def test_embedding_round_trip():
    rng = np.random.default_rng(8)
    emb = S.EmbeddingMatrix(rng.normal(size=(5, 7)), tuple("vwxyz"))
    buf = io.StringIO()
    S.save_embeddings(emb, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "5 7" and len(lines) == 6
    back = S.load_embeddings(io.StringIO(buf.getvalue()))
    assert back.ids == emb.ids
    assert np.max(np.abs(back.vectors - emb.vectors)) <= 1e-6


@pytest.mark.parametrize("text", ["3 2\na 1 2\nb 3 4\n", "2 2\na 1 2\nb 3\n", "2\n", ""])
def test_embedding_parse_errors(text):
    with pytest.raises(GraphFormatError):
        S.load_embeddings(io.StringIO(text))


def test_aligned_to_reports_missing():
    emb = S.EmbeddingMatrix(np.eye(2), ("a", "b"))
    assert np.array_equal(emb.aligned_to(["b", "a"]), [[0, 1], [1, 0]])
    with pytest.raises(KeyError):
        emb.aligned_to(["c"])


def test_alias_table_reproduces_distribution():
    rng = np.random.default_rng(9)
    for n in (1, 2, 7, 500):
        probs = rng.random(n) ** 3
        probs[rng.random(n) < 0.2] = 0.0
        if probs.sum() == 0:
            probs[0] = 1.0
        probs /= probs.sum()
        prob, alias = S.alias_table(probs)
        implied = prob.copy()
        np.add.at(implied, alias, 1.0 - prob)
        assert np.allclose(implied / n, probs, atol=1e-12)
        assert np.all(prob[probs == 0] == 0) or n == 1


def test_noise_distribution_counts_only_real_tokens():
    corpus = Corpus.from_paths([[0, 0, 1], [2]])
    probs = S.noise_distribution(corpus, 4, 0.75)
    expected = np.array([2 ** 0.75, 1, 1, 0])
    assert np.allclose(probs, expected / expected.sum())
