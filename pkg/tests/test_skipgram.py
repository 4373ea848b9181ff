import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from kgrec.errors import ParseError, ValidationError
from kgrec.skipgram import (
    EmbeddingTable,
    TrainConfig,
    Vocabulary,
    _pair_update,
    concat_embeddings,
    load_embeddings,
    noise_table,
    save_embeddings,
    sgns_loss_and_grad,
    train_skipgram,
)


def micro_batch(seed=0, d=8, k=5):
    rng = np.random.default_rng(seed)
    target = rng.normal(size=d)
    contexts = rng.normal(size=(k + 1, d)) * 0.5
    labels = np.array([1.0] + [0.0] * k)
    return target, contexts, labels


def rel_err(a, b):
    return np.max(np.abs(a - b)) / max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-12)


# -- reference loss and gradients ---------------------------------------------


def test_loss_matches_term_by_term_formula():
    target, contexts, labels = micro_batch()
    loss, _, _ = sgns_loss_and_grad(target, contexts, labels)
    assert loss == pytest.approx(oracles.sgns_loss(target, contexts, labels), rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_gradient_check(seed):
    target, contexts, labels = micro_batch(seed)
    _, g_t, g_c = sgns_loss_and_grad(target, contexts, labels)
    eps = 1e-6
    num_t = np.zeros_like(target)
    for i in range(target.size):
        e = np.zeros_like(target)
        e[i] = eps
        num_t[i] = (sgns_loss_and_grad(target + e, contexts, labels)[0]
                    - sgns_loss_and_grad(target - e, contexts, labels)[0]) / (2 * eps)
    num_c = np.zeros_like(contexts)
    for idx in np.ndindex(contexts.shape):
        e = np.zeros_like(contexts)
        e[idx] = eps
        num_c[idx] = (sgns_loss_and_grad(target, contexts + e, labels)[0]
                      - sgns_loss_and_grad(target, contexts - e, labels)[0]) / (2 * eps)
    assert rel_err(g_t, num_t) < 1e-4
    assert rel_err(g_c, num_c) < 1e-4


def test_loss_is_stable_for_large_scores():
    target = np.array([100.0, 0.0])
    contexts = np.array([[-100.0, 0.0], [100.0, 0.0]])
    loss, g_t, _ = sgns_loss_and_grad(target, contexts, [1, 0])
    assert np.isfinite(loss) and loss == pytest.approx(20000.0)
    assert np.all(np.isfinite(g_t))


# -- compiled kernel ----------------------------------------------------------


@pytest.mark.parametrize("seed", range(3))
def test_kernel_step_equals_reference_sgd(seed):
    rng = np.random.default_rng(seed)
    n, d, k = 10, 6, 3
    syn0 = rng.normal(size=(n, d)).astype(np.float32) * 0.3
    syn1 = rng.normal(size=(n, d)).astype(np.float32) * 0.3
    target, context, noise = 0, 1, np.array([2, 3, 4], dtype=np.int64)
    lr = 0.05
    rows = np.concatenate([[context], noise])
    labels = np.array([1.0] + [0.0] * k)
    ref_loss, g_t, g_c = sgns_loss_and_grad(syn0[target], syn1[rows], labels)
    s0, s1 = syn0.copy(), syn1.copy()
    loss = _pair_update(s0, s1, target, context, noise, np.float32(lr), np.zeros(d, dtype=np.float32))
    assert loss == pytest.approx(ref_loss, rel=1e-5)
    np.testing.assert_allclose(s0[target], syn0[target] - lr * g_t, rtol=1e-5, atol=1e-6)
    np.testing.assert_allclose(s1[rows], syn1[rows] - lr * g_c, rtol=1e-5, atol=1e-6)
    untouched = [i for i in range(n) if i not in (target, *rows)]
    np.testing.assert_array_equal(s1[untouched], syn1[untouched])


def test_noise_table_follows_three_quarter_power():
    counts = np.array([1, 16, 81, 0])
    table = noise_table(counts, size=100_000)
    freq = np.bincount(table, minlength=4) / table.size
    expected = counts ** 0.75 / (counts ** 0.75).sum()
    np.testing.assert_allclose(freq, expected, atol=1e-4)
    assert freq[3] == 0


# -- training -----------------------------------------------------------------


def corpus_two_groups():
    a = [["a1", "a2", "a3", "a4"] * 5 for _ in range(20)]
    b = [["b1", "b2", "b3", "b4"] * 5 for _ in range(20)]
    return a + b


def test_training_is_deterministic():
    cfg = TrainConfig(dimension=8, window=2, epochs=2, seed=3)
    e1 = train_skipgram(corpus_two_groups(), cfg)
    e2 = train_skipgram(corpus_two_groups(), cfg)
    assert e1.vocabulary == e2.vocabulary
    assert e1.vectors.tobytes() == e2.vectors.tobytes()
    e3 = train_skipgram(corpus_two_groups(), TrainConfig(dimension=8, window=2, epochs=2, seed=4))
    assert e1.vectors.tobytes() != e3.vectors.tobytes()


def test_training_separates_groups_and_loss_falls():
    emb = train_skipgram(corpus_two_groups(), TrainConfig(dimension=16, window=2, epochs=5, seed=0))
    unit = emb.vectors / np.linalg.norm(emb.vectors, axis=1, keepdims=True)
    sim = unit @ unit.T
    idx = {e: i for i, e in enumerate(emb.vocabulary)}
    assert sim[idx["a1"], idx["a2"]] > sim[idx["a1"], idx["b1"]]
    assert emb.loss_history[-1] < emb.loss_history[0]
    assert emb.vectors.dtype == np.float32 and emb.dimension == 16


def test_shrink_window_and_threads_run():
    corpus = corpus_two_groups()
    shrink = train_skipgram(corpus, TrainConfig(dimension=8, window=3, epochs=1, shrink_window=True))
    threaded = train_skipgram(corpus, TrainConfig(dimension=8, window=3, epochs=1, workers=2))
    assert np.all(np.isfinite(shrink.vectors)) and np.all(np.isfinite(threaded.vectors))


@pytest.mark.parametrize("corpus", [[], [["a"], []], [["a", "a"]]])
def test_training_input_errors(corpus):
    with pytest.raises(ValidationError):
        train_skipgram(corpus, TrainConfig(dimension=4))


@pytest.mark.parametrize("kwargs", [{"dimension": 0}, {"window": 0}, {"epochs": 0},
                                    {"learning_rate": 0.001, "min_learning_rate": 0.01}])
def test_train_config_validation(kwargs):
    with pytest.raises(ValidationError):
        TrainConfig(**kwargs)


# -- tables -------------------------------------------------------------------


def make_table(names, dim, seed=0):
    rng = np.random.default_rng(seed)
    return EmbeddingTable(Vocabulary(tuple(names)), rng.normal(size=(len(names), dim)).astype(np.float32))


def test_save_load_roundtrip(tmp_path):
    t = make_table(["x", "y", "z"], 5)
    path = tmp_path / "e.txt"
    save_embeddings(path, t)
    back = load_embeddings(path)
    assert back.vocabulary == t.vocabulary
    assert back.vectors.tobytes() == t.vectors.tobytes()


@pytest.mark.parametrize("body", ["3\n", "1 2\nx 1.0\n", "1 2\nx 1 2\ny 3 4\n", "2 2\nx 1 2\n"])
def test_load_errors(tmp_path, body):
    path = tmp_path / "e.txt"
    path.write_text(body)
    with pytest.raises(ParseError):
        load_embeddings(path)


def test_concat_dimension_and_alignment():
    a = make_table(["x", "y"], 64, seed=1)
    b = EmbeddingTable(Vocabulary(("y", "x")), make_table(["y", "x"], 64, seed=2).vectors)
    h = concat_embeddings(a, b)
    assert h.dimension == 128
    np.testing.assert_array_equal(h["x"][:64], a["x"])
    np.testing.assert_array_equal(h["x"][64:], b["x"])


def test_concat_vocabulary_mismatch_names_difference():
    with pytest.raises(ValidationError, match=r"\['w', 'z'\]"):
        concat_embeddings(make_table(["x", "z"], 3), make_table(["x", "w"], 3))


@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 1000))
def test_concat_property(d1, d2, seed):
    names = [f"e{i}" for i in range(5)]
    a, b = make_table(names, d1, seed), make_table(names, d2, seed + 1)
    h = concat_embeddings(a, b)
    assert h.dimension == d1 + d2
    np.testing.assert_array_equal(h.vectors[:, :d1], a.vectors)
