import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cate.evaluation import (
    CandidateError,
    MissingNodeError,
    UnknownConceptError,
    aggregate,
    overlapping_edges,
    rank_head,
    rank_tail,
    read_pairs,
    remove_test_overlap,
    run_ppi,
    run_subsumption,
    run_unsat,
)
from cate.graph import Graph

from oracles import brute_aggregate, brute_rank


def table_scorer(table):
    """Scorer backed by a dense score matrix."""
    table = np.asarray(table, dtype=float)
    return lambda h, t: table[np.asarray(h), np.asarray(t)]


def constant(h, t):
    return np.zeros(len(h))


def test_rank_tail_examples():
    s = table_scorer([[0, 3, 2, 1]])
    assert rank_tail(0, 1, [1, 2, 3], s) == 1
    assert rank_tail(0, 3, [1, 2, 3], s) == 3
    # filtering a higher-scoring competitor lifts the rank
    assert rank_tail(0, 3, [1, 2, 3], s, {(0, 1)}) == 2


def test_ties_are_pessimistic():
    assert rank_tail(0, 2, [0, 1, 2, 3], constant) == 4
    assert rank_head(0, 2, [0, 1, 2, 3], constant) == 4


def test_true_candidate_never_filtered():
    s = table_scorer([[0, 3, 2]])
    assert rank_tail(0, 2, [1, 2], s, {(0, 2)}) == 2


def test_missing_candidate():
    with pytest.raises(CandidateError):
        rank_tail(0, 5, [1, 2], constant)
    with pytest.raises(CandidateError):
        rank_head(0, 5, [1, 2], constant)


def test_aggregate_example():
    rep = aggregate([1, 2, 3], 10)
    assert rep.mr == 2
    assert rep.hits[1] == pytest.approx(1 / 3)
    assert rep.hits[3] == 1
    assert rep.auc == pytest.approx((9 + 8 + 7) / 27)
    assert rep.auc == pytest.approx(0.8889, abs=1e-4)


def test_aggregate_edges():
    with pytest.raises(ValueError):
        aggregate([], 4)
    with pytest.raises(ValueError):
        aggregate([5], 4)
    assert aggregate([1], 1).auc == 1.0
    assert aggregate([4, 4], 4).auc == 0.0


def test_report_tsv():
    rep = aggregate([1, 2], 5, "x")
    rep.samples = [("A", "B"), ("C", "D")]
    buf = io.StringIO()
    rep.write_tsv(buf)
    text = buf.getvalue()
    assert "MR\t1.500000" in text and "C\tD\t2" in text
    assert "rank-AUC=87.50" in rep.summary()


@st.composite
def small_instances(draw):
    n = draw(st.integers(2, 6))
    pairs = [(h, t) for h in range(n) for t in range(n)]
    edges = draw(st.sets(st.sampled_from(pairs), max_size=12))
    scores = draw(
        st.lists(st.integers(-3, 3), min_size=n * n, max_size=n * n).map(
            lambda xs: np.asarray(xs, dtype=float).reshape(n, n)
        )
    )
    return n, edges, scores


@settings(max_examples=200, deadline=None)
@given(small_instances(), st.randoms(use_true_random=False))
def test_rank_matches_brute_force(inst, rnd):
    n, edges, scores = inst
    s = table_scorer(scores)
    cands = list(range(n))
    h, t = rnd.randrange(n), rnd.randrange(n)
    comp = [scores[h, c] for c in cands if c != t and (h, c) not in edges]
    assert rank_tail(h, t, cands, s, edges) == brute_rank(scores[h, t], comp)
    comp = [scores[c, t] for c in cands if c != h and (c, t) not in edges]
    assert rank_head(t, h, cands, s, edges) == brute_rank(scores[h, t], comp)


@settings(max_examples=100, deadline=None)
@given(small_instances(), st.randoms(use_true_random=False))
def test_rank_invariant_under_candidate_order(inst, rnd):
    n, edges, scores = inst
    s = table_scorer(scores)
    cands = list(range(n))
    h, t = rnd.randrange(n), rnd.randrange(n)
    before = rank_tail(h, t, cands, s, edges)
    rnd.shuffle(cands)
    assert rank_tail(h, t, cands, s, edges) == before


@settings(max_examples=100, deadline=None)
@given(small_instances(), st.randoms(use_true_random=False))
def test_filtered_never_worse_than_raw(inst, rnd):
    n, edges, scores = inst
    s = table_scorer(scores)
    h, t = rnd.randrange(n), rnd.randrange(n)
    assert rank_tail(h, t, range(n), s, edges) <= rank_tail(h, t, range(n), s)


@given(st.lists(st.integers(1, 40), min_size=1, max_size=30), st.integers(0, 60))
def test_aggregate_matches_brute_force(ranks, extra):
    n = max(ranks) + extra
    rep = aggregate(ranks, n)
    mr, hits, auc = brute_aggregate(ranks, n)
    assert rep.mr == pytest.approx(mr)
    assert rep.hits == pytest.approx(hits)
    assert rep.auc == pytest.approx(auc)


# ------------------------------------------------------------------ tasks


def concept_graph(*names):
    g = Graph()
    for n in names:
        g.intern(n)
    return g


def test_run_unsat_synthetic():
    g = concept_graph("A", "B", "C", "D")
    bot = g.index["bot"]
    scores = np.full((len(g.nodes), len(g.nodes)), -5.0)
    for name, v in {"A": -1.0, "B": -2.0, "C": -3.0, "D": -4.0}.items():
        scores[g.index[name], bot] = v
    rep = run_unsat(g, table_scorer(scores), ["A", "C"])
    assert rep.ranks == [1, 3]
    assert rep.num_candidates == 4
    assert rep.samples == [("A", "bot"), ("C", "bot")]


def test_run_unsat_errors():
    g = concept_graph("A")
    with pytest.raises(UnknownConceptError):
        run_unsat(g, constant, ["Z"])
    g.nodes.remove("bot")
    del g.index["bot"]
    with pytest.raises(MissingNodeError):
        run_unsat(g, constant, ["A"])


def test_run_subsumption_constant_scorer_ranks_last():
    g = concept_graph("A", "B", "C", "D", "E")
    rep = run_subsumption(g, constant, [("A", "B"), ("C", "D")])
    assert rep.ranks == [5, 5]
    assert rep.auc == 0.0


def test_run_subsumption_filter_and_unknown():
    g = concept_graph("A", "B", "C")
    g.add_edge_ids("A", "C")
    s = table_scorer(np.arange(len(g.nodes) ** 2).reshape(len(g.nodes), -1))
    # C has the highest index so it would outrank B without filtering
    assert run_subsumption(g, s, [("A", "B")], filter=set()).ranks == [2]
    assert run_subsumption(g, s, [("A", "B")]).ranks == [1]
    with pytest.raises(UnknownConceptError):
        run_subsumption(g, s, [("A", "Q")])


def ppi_graph():
    g = Graph()
    for p in ("p1", "p2", "p3"):
        g.intern(p)
        g.intern(f"some(interacts,{p})")
    g.add_edge_ids("p1", "some(interacts,p3)")
    return g


def test_run_ppi_raw_vs_filtered():
    g = ppi_graph()
    scores = np.zeros((len(g.nodes), len(g.nodes)))
    scores[g.index["p1"], g.index["some(interacts,p3)"]] = 2.0
    scores[g.index["p1"], g.index["some(interacts,p2)"]] = 1.0
    raw, filt = run_ppi(g, table_scorer(scores), [("p1", "p2")], ["p1", "p2", "p3"])
    assert raw.ranks == [2] and filt.ranks == [1]
    assert raw.num_candidates == 3


def test_run_ppi_missing_scaffold():
    g = ppi_graph()
    with pytest.raises(MissingNodeError):
        run_ppi(g, constant, [("p1", "p2")], ["p1", "p4"])


def test_test_overlap_removal():
    g = concept_graph("A", "B", "C")
    g.add_edge_ids("A", "B")
    g.add_edge_ids("B", "C")
    pairs = [("A", "B"), ("A", "C"), ("X", "Y")]
    assert overlapping_edges(g, pairs) == {(g.index["A"], g.index["B"])}
    assert remove_test_overlap(g, pairs) == 1
    assert not g.has_edge_ids("A", "B") and g.has_edge_ids("B", "C")


def test_read_pairs(tmp_path):
    p = tmp_path / "t.tsv"
    p.write_text("# comment\nA\tB\n\nC\tD\n")
    assert read_pairs(p) == [("A", "B"), ("C", "D")]
    p.write_text("A B\n")
    with pytest.raises(ValueError, match=":1:"):
        read_pairs(p)
