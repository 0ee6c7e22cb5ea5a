"""Filtered ranking evaluation for axiom prediction.

A test axiom ``C sub D`` becomes an edge query. Its rank is one plus the
number of competing candidates scoring at least as high as the true one,
after discarding competitors that are known training edges. Ties count
against the true candidate, so a constant scorer ranks last.

Reported metrics: mean rank, hits@k for k in (1, 3, 10, 50, 100) and a
rank-normalised AUC, ``(n - rank) / (n - 1)`` averaged over samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Collection, Iterable, Sequence

import numpy as np

from .graph import Graph

HITS_AT = (1, 3, 10, 50, 100)

# scorer(heads, tails) -> scores, elementwise over equal-length index arrays
Scorer = Callable[[np.ndarray, np.ndarray], np.ndarray]


class CandidateError(ValueError):
    pass


class UnknownConceptError(KeyError):
    pass


class MissingNodeError(KeyError):
    pass


@dataclass
class RankingReport:
    ranks: list[int]
    num_candidates: int
    mr: float
    hits: dict[int, float]
    auc: float
    label: str = ""
    samples: list[tuple[str, str]] = field(default_factory=list, repr=False)

    def summary(self) -> str:
        hits = "  ".join(f"H@{k}={100 * v:.2f}" for k, v in self.hits.items())
        head = f"[{self.label}] " if self.label else ""
        return (
            f"{head}n={len(self.ranks)} candidates={self.num_candidates}  "
            f"MR={self.mr:.2f}  {hits}  rank-AUC={100 * self.auc:.2f}"
        )

    def metrics(self) -> dict[str, float]:
        out = {"MR": self.mr}
        out.update({f"H@{k}": v for k, v in self.hits.items()})
        out["rank-AUC"] = self.auc
        return out

    def write_tsv(self, fh) -> None:
        fh.write("# metric\tvalue\n")
        for key, value in self.metrics().items():
            fh.write(f"{key}\t{value:.6f}\n")
        fh.write(f"num_samples\t{len(self.ranks)}\n")
        fh.write(f"num_candidates\t{self.num_candidates}\n")
        fh.write("# sub\tsup\trank\n")
        samples = self.samples or [("", "")] * len(self.ranks)
        for (sub, sup), rank in zip(samples, self.ranks):
            fh.write(f"{sub}\t{sup}\t{rank}\n")


def _rank(true_pos: int, scores: np.ndarray, keep: np.ndarray) -> int:
    competitors = keep.copy()
    competitors[true_pos] = False
    return 1 + int(np.count_nonzero(competitors & (scores >= scores[true_pos])))


def rank_tail(
    h: int,
    true_t: int,
    candidates: Sequence[int],
    scorer: Scorer,
    filter: Collection[tuple[int, int]] = (),
) -> int:
    """Rank of ``h -> true_t`` among ``h -> c`` for ``c`` in ``candidates``."""
    cands = np.asarray(candidates, dtype=np.int64)
    where = np.flatnonzero(cands == true_t)
    if len(where) == 0:
        raise CandidateError(f"true tail {true_t} is not a candidate")
    scores = np.asarray(scorer(np.full(len(cands), h), cands), dtype=float)
    keep = np.array([(h, int(c)) not in filter for c in cands], dtype=bool)
    return _rank(int(where[0]), scores, keep)


def rank_head(
    t: int,
    true_h: int,
    candidates: Sequence[int],
    scorer: Scorer,
    filter: Collection[tuple[int, int]] = (),
) -> int:
    """Rank of ``true_h -> t`` among ``c -> t`` for ``c`` in ``candidates``."""
    cands = np.asarray(candidates, dtype=np.int64)
    where = np.flatnonzero(cands == true_h)
    if len(where) == 0:
        raise CandidateError(f"true head {true_h} is not a candidate")
    scores = np.asarray(scorer(cands, np.full(len(cands), t)), dtype=float)
    keep = np.array([(int(c), t) not in filter for c in cands], dtype=bool)
    return _rank(int(where[0]), scores, keep)


def aggregate(ranks: Sequence[int], num_candidates: int, label: str = "") -> RankingReport:
    if len(ranks) == 0:
        raise ValueError("cannot aggregate an empty rank list")
    r = [int(x) for x in ranks]
    if min(r) < 1 or max(r) > num_candidates:
        raise ValueError("ranks must lie in 1..num_candidates")
    # integer numerators and one division each, so results are correctly rounded
    m, total = len(r), sum(r)
    if num_candidates > 1:
        auc = (num_candidates * m - total) / ((num_candidates - 1) * m)
    else:
        auc = 1.0
    hits = {k: sum(x <= k for x in r) / m for k in HITS_AT}
    return RankingReport(r, num_candidates, total / m, hits, auc, label)


# ---------------------------------------------------------------- tasks


def named_concepts(g: Graph, names: Iterable[str] | None = None) -> list[int]:
    """Candidate indices: the given names, or every bare-name non-role node."""
    if names is not None:
        missing = [n for n in names if n not in g.index]
        if missing:
            raise UnknownConceptError(f"candidates not in graph: {missing[:5]}")
        return [g.index[n] for n in names]
    from .projection import graph_role_names

    roles = graph_role_names(g)
    return [
        i
        for i, node in enumerate(g.nodes)
        if "(" not in node and node not in ("top", "bot") and node not in roles
    ]


def _lookup(g: Graph, name: str) -> int:
    try:
        return g.index[name]
    except KeyError:
        raise UnknownConceptError(f"{name!r} is not a node of the graph") from None


def run_unsat(
    g: Graph,
    scorer: Scorer,
    unsatisfiable: Sequence[str],
    candidates: Sequence[int] | None = None,
    filter: Collection[tuple[int, int]] | None = None,
) -> RankingReport:
    """Rank each ``C -> bot`` among ``C' -> bot`` for named ``C'``."""
    if "bot" not in g.index:
        raise MissingNodeError("graph has no 'bot' node")
    bot = g.index["bot"]
    cands = named_concepts(g) if candidates is None else list(candidates)
    filt = g.edges if filter is None else filter
    ranks, samples = [], []
    for name in unsatisfiable:
        h = _lookup(g, name)
        ranks.append(rank_head(bot, h, cands, scorer, filt))
        samples.append((name, "bot"))
    rep = aggregate(ranks, len(cands), "unsat")
    rep.samples = samples
    return rep


def overlapping_edges(g: Graph, pairs: Iterable[tuple[str, str]]) -> set[tuple[int, int]]:
    """Graph edges that coincide with test pairs."""
    out = set()
    for sub, sup in pairs:
        h, t = g.index.get(sub), g.index.get(sup)
        if h is not None and t is not None and (h, t) in g.edges:
            out.add((h, t))
    return out


def remove_test_overlap(g: Graph, pairs: Iterable[tuple[str, str]]) -> int:
    """Delete graph edges that coincide with test pairs before training."""
    return g.remove_edges(overlapping_edges(g, pairs))


def run_subsumption(
    g: Graph,
    scorer: Scorer,
    pairs: Sequence[tuple[str, str]],
    candidates: Sequence[int] | None = None,
    filter: Collection[tuple[int, int]] | None = None,
    label: str = "subsumption",
) -> RankingReport:
    """Tail ranking of ``C -> D`` over candidate superclasses ``D'``."""
    cands = named_concepts(g) if candidates is None else list(candidates)
    filt = g.edges if filter is None else filter
    ranks = []
    for sub, sup in pairs:
        ranks.append(rank_tail(_lookup(g, sub), _lookup(g, sup), cands, scorer, filt))
    rep = aggregate(ranks, len(cands), label)
    rep.samples = list(pairs)
    return rep


def run_ppi(
    g: Graph,
    scorer: Scorer,
    pairs: Sequence[tuple[str, str]],
    proteins: Sequence[str],
    role: str = "interacts",
    filter: Collection[tuple[int, int]] | None = None,
) -> tuple[RankingReport, RankingReport]:
    """Rank ``p1 -> some(role,p2)`` among ``p1 -> some(role,pj)``.

    Returns the raw and the filtered report.
    """
    cands = []
    for p in proteins:
        node = f"some({role},{p})"
        if node not in g.index:
            raise MissingNodeError(f"missing existential scaffold {node!r}")
        cands.append(g.index[node])
    filt = g.edges if filter is None else filter
    raw, filtered = [], []
    for p1, p2 in pairs:
        h = _lookup(g, p1)
        t = g.index.get(f"some({role},{p2})")
        if t is None:
            raise MissingNodeError(f"missing existential scaffold some({role},{p2})")
        raw.append(rank_tail(h, t, cands, scorer))
        filtered.append(rank_tail(h, t, cands, scorer, filt))
    samples = [(p1, f"some({role},{p2})") for p1, p2 in pairs]
    r = aggregate(raw, len(cands), "ppi raw")
    f = aggregate(filtered, len(cands), "ppi filtered")
    r.samples = f.samples = samples
    return r, f


# ------------------------------------------------------------ file I/O


def read_pairs(path) -> list[tuple[str, str]]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise ValueError(f"{path}:{lineno}: expected two tab-separated columns")
            pairs.append((cols[0], cols[1]))
    return pairs


def read_names(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
