import io
import math
from dataclasses import replace
from types import SimpleNamespace

import numpy as np
import pytest

from cate.embedding import (
    FULL_GRID,
    DimensionMismatchError,
    EmbeddingTable,
    NonFiniteLossError,
    TrainConfig,
    batch_loss_and_grads,
    bpr_loss,
    cyclic_lr,
    dense_grads,
    grid_configs,
    grid_sweep,
    sample_negative,
    sample_negative_tails,
    score_ordere,
    score_transe,
    train,
)
from cate.graph import Graph

FAST = dict(lr_min=1e-2, lr_max=1e-1, cycle_length=100)


def chain_graph():
    g = Graph()
    g.add_edge_ids("a", "b")
    g.add_edge_ids("b", "c")
    return g


def test_score_transe_examples():
    assert score_transe([1, 2], [0, 0], [1, 2]) == 0
    assert score_transe([0, 0], [3, 4], [0, 0]) == -5
    with pytest.raises(DimensionMismatchError):
        score_transe([0, 0], [1, 1], [0, 0, 0])


def test_score_ordere_examples():
    assert score_ordere([2, 3], [1, 1]) == 0
    assert score_ordere([0, 0], [3, 4]) == -5
    assert score_ordere([1, 0], [0, 1]) == -1
    with pytest.raises(DimensionMismatchError):
        score_ordere([0, 0], [0, 0, 0])


def test_ordere_zero_iff_dominated():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        h = rng.integers(-3, 4, size=5).astype(float)
        t = rng.integers(-3, 4, size=5).astype(float)
        assert (score_ordere(h, t) == 0) == bool(np.all(t <= h))
        assert score_ordere(h, t) <= 0


def test_ordere_transitive_at_zero():
    rng = np.random.default_rng(1)
    for _ in range(200):
        c = rng.normal(size=8)
        b = c + rng.uniform(0, 1, size=8)
        a = b + rng.uniform(0, 1, size=8)
        assert score_ordere(a, b) == 0 and score_ordere(b, c) == 0
        assert score_ordere(a, c) == 0


def test_transe_nonpositive():
    rng = np.random.default_rng(2)
    h, r, t = rng.normal(size=(3, 100, 4))
    assert np.all(score_transe(h, r, t) <= 0)


def test_bpr_examples():
    assert bpr_loss(0.3, 0.3) == pytest.approx(math.log(2))
    assert bpr_loss(20.0, 0.0) < 1e-8
    assert bpr_loss(0.0, 20.0) == pytest.approx(20.0, abs=1e-8)
    xs = np.linspace(-5, 5, 50)
    losses = bpr_loss(xs, 0.0)
    assert np.all(losses > 0) and np.all(np.diff(losses) < 0)


def _relerr(a, b):
    a, b = np.ravel(a), np.ravel(b)
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return np.linalg.norm(a - b) / scale


def numeric_grads(E, r, h, t, tn, margin, l2, eps=1e-5):
    def f(E_, r_):
        return batch_loss_and_grads(E_, r_, h, t, tn, margin, l2)[0]

    gE = np.zeros_like(E)
    for idx in np.ndindex(E.shape):
        Ep, Em = E.copy(), E.copy()
        Ep[idx] += eps
        Em[idx] -= eps
        gE[idx] = (f(Ep, r) - f(Em, r)) / (2 * eps)
    gr = None
    if r is not None:
        gr = np.zeros_like(r)
        for i in range(len(r)):
            rp, rm = r.copy(), r.copy()
            rp[i] += eps
            rm[i] -= eps
            gr[i] = (f(E, rp) - f(E, rm)) / (2 * eps)
    return gE, gr


def gradient_check(variant, points=100, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(points):
        n, d = 5, 4
        E = rng.normal(size=(n, d))
        r = rng.normal(size=d) if variant == "graph" else None
        h = rng.integers(n, size=3)
        t = rng.integers(n, size=3)
        tn = rng.integers(n, size=3)
        margin = float(rng.choice([0.0, 0.02, 0.08]))
        l2 = float(rng.choice([0.0, 0.001]))
        _, gE, gr = dense_grads(E, r, h, t, tn, margin, l2)
        nE, nr = numeric_grads(E, r, h, t, tn, margin, l2)
        worst = max(worst, _relerr(gE, nE))
        if r is not None:
            worst = max(worst, _relerr(gr, nr))
    return worst


@pytest.mark.parametrize("variant", ["graph", "preorder"])
def test_gradients_match_finite_differences(variant):
    assert gradient_check(variant) < 1e-4


def test_sample_negative_two_nodes():
    rng = np.random.default_rng(0)
    assert all(sample_negative((0, 1), 2, rng) == (0, 0) for _ in range(50))


def test_sample_negative_reproducible():
    a = [sample_negative((0, 3), 10, np.random.default_rng(7)) for _ in range(5)]
    b = [sample_negative((0, 3), 10, np.random.default_rng(7)) for _ in range(5)]
    assert a == b
    with pytest.raises(ValueError):
        sample_negative((0, 0), 1, np.random.default_rng(0))


def test_sample_negative_uniform():
    n, draws, t = 10, 100_000, 3
    rng = np.random.default_rng(123)
    tails = sample_negative_tails(np.full(draws, t), n, rng)
    counts = np.bincount(tails, minlength=n)
    assert counts[t] == 0
    others = np.delete(counts, t)
    p = 1 / (n - 1)
    mean, sigma = draws * p, math.sqrt(draws * p * (1 - p))
    assert np.all(np.abs(others - mean) < 3 * sigma)
    chi2 = float(np.sum((others - mean) ** 2 / mean))
    assert chi2 < 26.12  # df = 8, p = 0.001


def test_cyclic_lr():
    cfg = TrainConfig(cycle_length=500)
    assert cyclic_lr(0, cfg) == pytest.approx(1e-5)
    assert cyclic_lr(500, cfg) == pytest.approx(1e-4)
    assert cyclic_lr(1000, cfg) == pytest.approx(1e-5)
    assert cyclic_lr(250, cfg) == pytest.approx(5.5e-5)
    assert cyclic_lr(750, cfg) == pytest.approx(5.5e-5)


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(lr_min=1e-3, lr_max=1e-4)
    with pytest.raises(ValueError):
        TrainConfig(dim=0)
    with pytest.raises(ValueError):
        TrainConfig(variant="distmult")


def test_zero_epochs_returns_init():
    g = chain_graph()
    cfg = TrainConfig(dim=8, epochs=0, seed=3)
    a = train(g, cfg)
    b = train(g, replace(cfg, epochs=5))
    assert not np.array_equal(a.vectors, b.vectors)
    assert np.abs(a.vectors).max() <= 0.5 / math.sqrt(8)
    assert a.history == []


def test_same_seed_bitwise_identical():
    g = chain_graph()
    cfg = TrainConfig(variant="graph", dim=8, epochs=30, seed=11, **FAST)
    a, b = train(g, cfg), train(g, cfg)
    assert np.array_equal(a.vectors, b.vectors) and np.array_equal(a.relation, b.relation)


@pytest.mark.parametrize("variant", ["preorder", "graph"])
def test_chain_positives_outrank_corruptions(variant):
    g = chain_graph()
    table = train(g, TrainConfig(variant=variant, dim=16, epochs=2000, **FAST))
    # a preorder scores reflexive and transitive pairs at zero too
    implied = {(i, i) for i in range(len(g.nodes))} | {(g.index["a"], g.index["c"])}
    for h, t in g.edges:
        others = [c for c in range(len(g.nodes)) if c != t]
        if variant == "preorder":
            others = [c for c in others if (h, c) not in implied]
        pos = table.score([h], [t])[0]
        neg = table.score([h] * len(others), others)
        assert np.all(pos > neg)


@pytest.mark.xfail(strict=True, reason="negative-sampling noise makes a 50-epoch moving average wobble")
@pytest.mark.parametrize("variant", ["graph", "preorder"])
def test_loss_moving_average_non_increasing(variant):
    g = chain_graph()
    table = train(g, TrainConfig(variant=variant, dim=16, epochs=2000, **FAST))
    h = np.asarray(table.history)
    smooth = np.convolve(h, np.ones(50) / 50, mode="valid")
    assert np.all(np.diff(smooth) <= 0)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_loss_trend_decreases(seed):
    g = chain_graph()
    table = train(g, TrainConfig(variant="graph", dim=16, epochs=2000, seed=seed, **FAST))
    blocks = np.asarray(table.history).reshape(-1, 400).mean(axis=1)
    assert np.all(np.diff(blocks) < 0)


def test_adam_option_learns_chain():
    g = chain_graph()
    table = train(g, TrainConfig(dim=16, epochs=500, optimizer="adam", lr_min=1e-3, lr_max=1e-2))
    assert table.history[-1] < table.history[0]


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_loss_detected():
    g = chain_graph()
    with pytest.raises(NonFiniteLossError, match="epoch"):
        train(g, TrainConfig(variant="graph", dim=4, epochs=3, lr_min=1e308, lr_max=1e308, cycle_length=1))


def test_table_tsv_round_trip():
    g = chain_graph()
    for variant in ("graph", "preorder"):
        table = train(g, TrainConfig(variant=variant, dim=4, epochs=3))
        buf = io.StringIO()
        table.write_tsv(buf)
        text = buf.getvalue()
        back = EmbeddingTable.read_tsv(io.StringIO(text))
        assert back.node_ids == table.node_ids
        assert np.array_equal(back.vectors, table.vectors)
        assert back.variant == variant
        if variant == "graph":
            assert "__arrow__\t" in text
            assert np.array_equal(back.relation, table.relation)


# ------------------------------------------------------------------ sweep


def fake_train(g, cfg):
    return cfg


def test_full_grid_size():
    assert len(grid_configs(FULL_GRID)) == 5 * 3 * 4 * 5 == 300


def test_grid_rejects_unknown_keys():
    with pytest.raises(ValueError):
        grid_configs({"learning_rate": [1]})


def test_sweep_singleton():
    cfg = TrainConfig(dim=16)
    res = grid_sweep(Graph(), [cfg], lambda t, c: SimpleNamespace(auc=0.5, mr=3.0), train_fn=fake_train)
    assert res.best == cfg


def test_sweep_picks_highest_auc_then_lowest_mr_then_first():
    scores = {16: (0.8, 5.0), 32: (0.9, 9.0), 64: (0.9, 4.0), 128: (0.9, 4.0)}

    def ev(table, cfg):
        auc, mr = scores[cfg.dim]
        return SimpleNamespace(auc=auc, mr=mr)

    res = grid_sweep(Graph(), {"dim": [16, 32, 64, 128]}, ev, train_fn=fake_train)
    assert res.best.dim == 64
    assert len(res.trials) == 4
    res = grid_sweep(Graph(), {"dim": [16, 32]}, ev, train_fn=fake_train)
    assert res.best.dim == 32


def test_sweep_empty_grid():
    with pytest.raises(ValueError):
        grid_sweep(Graph(), [], lambda t, c: None)
