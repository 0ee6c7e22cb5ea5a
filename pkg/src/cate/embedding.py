"""Node embeddings for the projected graph.

Two scoring strategies share one training loop:

* ``graph``: translational scoring ``-||h + r - t||`` with a single relation
  vector ``r`` for the implicit edge label.
* ``preorder``: order-embedding scoring ``-||max(0, t - h)||``; an edge
  ``h -> t`` scores 0 exactly when ``t <= h`` componentwise.

Training minimizes the BPR loss between each positive edge and one
tail-corrupted negative with plain SGD under a triangular cyclic learning
rate (Adam is available as an option). Gradients are computed in closed
form.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .graph import Graph

log = logging.getLogger(__name__)

VARIANTS = ("graph", "preorder")
OPTIMIZERS = ("sgd", "adam")
RELATION_KEY = "__arrow__"

FULL_GRID = {
    "dim": [16, 32, 64, 128, 256],
    "l2_reg": [0.0001, 0.001, 0.0],
    "margin": [0.0, 0.02, 0.04, 0.08],
    "batch_size": [512, 1024, 4096, 8192, 16384],
}


class DimensionMismatchError(ValueError):
    pass


class NonFiniteLossError(FloatingPointError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    variant: str = "preorder"
    dim: int = 32
    l2_reg: float = 0.0
    margin: float = 0.0
    batch_size: int = 512
    # epochs and cycle_length are not reported for the original experiments
    epochs: int = 4000
    seed: int = 0
    lr_min: float = 1e-5
    lr_max: float = 1e-4
    cycle_length: int = 500
    optimizer: str = "sgd"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.dim <= 0 or self.batch_size <= 0:
            raise ValueError("dim and batch_size must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.cycle_length <= 0:
            raise ValueError("cycle_length must be positive")
        if not 0 <= self.lr_min <= self.lr_max:
            raise ValueError("need 0 <= lr_min <= lr_max")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        if self.l2_reg < 0:
            raise ValueError("l2_reg must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------- scoring


def _check_dims(*vectors) -> list[np.ndarray]:
    arrs = [np.asarray(v, dtype=float) for v in vectors]
    shapes = {a.shape[-1] for a in arrs}
    if len(shapes) != 1:
        raise DimensionMismatchError(f"dimension mismatch: {[a.shape for a in arrs]}")
    return arrs


def score_transe(h, r, t) -> float | np.ndarray:
    h, r, t = _check_dims(h, r, t)
    return -np.linalg.norm(h + r - t, axis=-1)


def score_ordere(h, t) -> float | np.ndarray:
    h, t = _check_dims(h, t)
    return -np.linalg.norm(np.maximum(0.0, t - h), axis=-1)


def bpr_loss(s_pos, s_neg) -> float | np.ndarray:
    """``-log sigmoid(s_pos - s_neg)``, computed stably."""
    return np.logaddexp(0.0, -(np.asarray(s_pos, dtype=float) - s_neg))


def _unit(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    safe = np.where(norm > 0, norm, 1.0)
    return np.where(norm > 0, v / safe, 0.0), norm[..., 0]


def batch_loss_and_grads(
    vectors: np.ndarray,
    relation: np.ndarray | None,
    heads: np.ndarray,
    tails: np.ndarray,
    neg_tails: np.ndarray,
    margin: float = 0.0,
    l2_reg: float = 0.0,
):
    """Mean BPR loss of a batch plus L2 penalty, with gradients.

    ``relation is None`` selects order-embedding scoring. Returns
    ``(loss, row_grads, rows, relation_grad)`` where ``row_grads[k]`` is the
    data-term gradient for row ``rows[k]`` (rows repeat; accumulate them) and
    the L2 term's gradient ``2 * l2_reg * params`` is left to the caller.
    """
    b = len(heads)
    h = vectors[heads]
    t = vectors[tails]
    tn = vectors[neg_tails]
    if relation is None:
        up, s_pos = _unit(np.maximum(0.0, t - h))
        un, s_neg = _unit(np.maximum(0.0, tn - h))
        # ds/dt = -unit, ds/dh = +unit
        dpos_h, dpos_t = up, -up
        dneg_h, dneg_t = un, -un
    else:
        up, s_pos = _unit(h + relation - t)
        un, s_neg = _unit(h + relation - tn)
        dpos_h, dpos_t = -up, up
        dneg_h, dneg_t = -un, un
    s_pos, s_neg = -s_pos, -s_neg
    x = (s_pos - margin) - s_neg
    loss = float(np.mean(np.logaddexp(0.0, -x)))
    gx = -_sigmoid(-x) / b  # dL/dx per sample
    gpos = gx[:, None]
    gneg = -gx[:, None]
    rows = np.concatenate([heads, tails, neg_tails])
    row_grads = np.concatenate([gpos * dpos_h + gneg * dneg_h, gpos * dpos_t, gneg * dneg_t])
    rel_grad = None
    if relation is not None:
        # dpos_h == ds/dr for the translational score
        rel_grad = (gpos * dpos_h + gneg * dneg_h).sum(axis=0)
    if l2_reg:
        loss += l2_reg * float(np.sum(vectors * vectors))
        if relation is not None:
            loss += l2_reg * float(relation @ relation)
    return loss, row_grads, rows, rel_grad


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def dense_grads(vectors, relation, heads, tails, neg_tails, margin=0.0, l2_reg=0.0):
    """Full gradient arrays (data term + L2), for checks and small problems."""
    loss, row_grads, rows, rel_grad = batch_loss_and_grads(
        vectors, relation, heads, tails, neg_tails, margin, l2_reg
    )
    g = np.zeros_like(vectors)
    np.add.at(g, rows, row_grads)
    g += 2 * l2_reg * vectors
    if relation is not None:
        rel_grad = rel_grad + 2 * l2_reg * relation
    return loss, g, rel_grad


# ------------------------------------------------------------- sampling


def sample_negative(edge: tuple[int, int], num_nodes: int, rng: np.random.Generator) -> tuple[int, int]:
    """Replace the tail with a node drawn uniformly from all others."""
    if num_nodes < 2:
        raise ValueError("need at least two nodes to corrupt a tail")
    h, t = edge
    c = int(rng.integers(num_nodes - 1))
    return h, c + (c >= t)


def sample_negative_tails(tails: np.ndarray, num_nodes: int, rng: np.random.Generator) -> np.ndarray:
    c = rng.integers(num_nodes - 1, size=len(tails))
    return c + (c >= tails)


def cyclic_lr(step: int, cfg: TrainConfig) -> float:
    """Triangular wave: ``lr_min`` at step 0, ``lr_max`` at ``cycle_length``."""
    period = 2 * cfg.cycle_length
    pos = step % period
    frac = pos / cfg.cycle_length if pos <= cfg.cycle_length else (period - pos) / cfg.cycle_length
    return cfg.lr_min + (cfg.lr_max - cfg.lr_min) * frac


# ---------------------------------------------------------------- tables


@dataclass
class EmbeddingTable:
    node_ids: list[str]
    vectors: np.ndarray
    relation: np.ndarray | None = None
    history: list[float] = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        if self.vectors.shape[0] != len(self.node_ids):
            raise ValueError("one vector per node required")
        if self.relation is not None and self.relation.shape != (self.vectors.shape[1],):
            raise DimensionMismatchError("relation vector dimension differs from node vectors")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def variant(self) -> str:
        return "preorder" if self.relation is None else "graph"

    def score(self, heads, tails) -> np.ndarray:
        """Elementwise scores of edges ``heads[i] -> tails[i]`` (index arrays)."""
        h = self.vectors[np.asarray(heads)]
        t = self.vectors[np.asarray(tails)]
        if self.relation is None:
            return score_ordere(h, t)
        return score_transe(h, self.relation, t)

    def write_tsv(self, fh) -> None:
        fh.write(f"# variant\t{self.variant}\n")
        for node, vec in zip(self.node_ids, self.vectors):
            fh.write(node + "\t" + "\t".join(repr(float(x)) for x in vec) + "\n")
        if self.relation is not None:
            fh.write(RELATION_KEY + "\t" + "\t".join(repr(float(x)) for x in self.relation) + "\n")

    @classmethod
    def read_tsv(cls, fh) -> "EmbeddingTable":
        ids, rows, relation = [], [], None
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            cols = line.split("\t")
            try:
                vec = [float(x) for x in cols[1:]]
            except ValueError:
                raise ValueError(f"line {lineno}: non-numeric vector entry") from None
            if cols[0] == RELATION_KEY:
                relation = np.array(vec)
            else:
                ids.append(cols[0])
                rows.append(vec)
        if len({len(r) for r in rows}) > 1:
            raise DimensionMismatchError("rows have different dimensions")
        return cls(ids, np.array(rows, dtype=float), relation)


def save_embeddings(table: EmbeddingTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        table.write_tsv(fh)


def load_embeddings(path) -> EmbeddingTable:
    with open(path, encoding="utf-8") as fh:
        return EmbeddingTable.read_tsv(fh)


# -------------------------------------------------------------- training


def init_table(g: Graph, cfg: TrainConfig) -> tuple[EmbeddingTable, np.random.Generator]:
    rng = np.random.default_rng(cfg.seed)
    bound = 0.5 / math.sqrt(cfg.dim)
    vectors = rng.uniform(-bound, bound, size=(len(g.nodes), cfg.dim))
    relation = rng.uniform(-bound, bound, size=cfg.dim) if cfg.variant == "graph" else None
    return EmbeddingTable(list(g.nodes), vectors, relation), rng


class _Adam:
    beta1, beta2, eps = 0.9, 0.999, 1e-8

    def __init__(self, E, r):
        self.t = 0
        self.m = [np.zeros_like(E), None if r is None else np.zeros_like(r)]
        self.v = [np.zeros_like(E), None if r is None else np.zeros_like(r)]

    def step(self, E, r, gE, gr, lr):
        self.t += 1
        c1 = 1 - self.beta1**self.t
        c2 = 1 - self.beta2**self.t
        for i, (p, gp) in enumerate(((E, gE), (r, gr))):
            if p is None:
                continue
            self.m[i] *= self.beta1
            self.m[i] += (1 - self.beta1) * gp
            self.v[i] *= self.beta2
            self.v[i] += (1 - self.beta2) * gp * gp
            p -= lr * (self.m[i] / c1) / (np.sqrt(self.v[i] / c2) + self.eps)


def train(
    g: Graph,
    cfg: TrainConfig,
    edges: Sequence[tuple[int, int]] | None = None,
    progress: Callable[[int, float], None] | None = None,
) -> EmbeddingTable:
    """Fit node vectors to the edges of ``g`` (or to ``edges`` if given).

    Epoch mean losses are kept in ``table.history``.
    """
    if len(g.nodes) < 2:
        raise ValueError("training needs at least two nodes")
    pos = np.array(sorted(g.edges) if edges is None else sorted(edges), dtype=np.int64).reshape(-1, 2)
    if len(pos) == 0:
        raise ValueError("training needs at least one edge")
    table, rng = init_table(g, cfg)
    E, r = table.vectors, table.relation
    n = len(g.nodes)
    adam = _Adam(E, r) if cfg.optimizer == "adam" else None
    step = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(pos))
        total, batches = 0.0, 0
        for start in range(0, len(order), cfg.batch_size):
            batch = pos[order[start : start + cfg.batch_size]]
            heads, tails = batch[:, 0], batch[:, 1]
            negs = sample_negative_tails(tails, n, rng)
            loss, row_grads, rows, rel_grad = batch_loss_and_grads(
                E, r, heads, tails, negs, cfg.margin, cfg.l2_reg
            )
            if not math.isfinite(loss):
                raise NonFiniteLossError(
                    f"non-finite loss {loss} at epoch {epoch}, step {step}, "
                    f"lr {cyclic_lr(step, cfg):.3g}, max |v| {np.abs(E).max():.3g}"
                )
            lr = cyclic_lr(step, cfg)
            if adam is not None:
                gE = 2.0 * cfg.l2_reg * E
                np.add.at(gE, rows, row_grads)
                gr = None if r is None else rel_grad + 2.0 * cfg.l2_reg * r
                adam.step(E, r, gE, gr, lr)
            else:
                if cfg.l2_reg:
                    E *= 1.0 - 2.0 * lr * cfg.l2_reg
                np.add.at(E, rows, -lr * row_grads)
                if r is not None:
                    r -= lr * (rel_grad + 2.0 * cfg.l2_reg * r)
            total += loss
            batches += 1
            step += 1
        mean = total / batches
        table.history.append(mean)
        if progress is not None:
            progress(epoch, mean)
    return table


# ----------------------------------------------------------------- sweep


def grid_configs(grid: dict[str, Iterable], base: TrainConfig | None = None) -> list[TrainConfig]:
    """Every combination of ``grid`` values, in lexicographic grid order."""
    base = base or TrainConfig()
    keys = list(grid)
    unknown = set(keys) - set(TrainConfig.__dataclass_fields__)
    if unknown:
        raise ValueError(f"unknown grid keys: {sorted(unknown)}")
    values = [list(grid[k]) for k in keys]
    if any(not v for v in values):
        raise ValueError("every grid axis needs at least one value")
    return [replace(base, **dict(zip(keys, combo))) for combo in itertools.product(*values)]


@dataclass
class SweepResult:
    best: TrainConfig
    best_report: object
    trials: list[tuple[TrainConfig, object]]


def grid_sweep(
    g: Graph,
    grid: dict[str, Iterable] | Sequence[TrainConfig],
    eval_fn: Callable[[EmbeddingTable, TrainConfig], object],
    base: TrainConfig | None = None,
    train_fn: Callable[[Graph, TrainConfig], EmbeddingTable] = train,
) -> SweepResult:
    """Train every configuration and keep the best by validation AUC.

    ``eval_fn`` returns a report with ``auc`` and ``mr`` attributes. Ties on
    AUC go to the lower mean rank, then to the earlier configuration.
    """
    configs = grid_configs(grid, base) if isinstance(grid, dict) else list(grid)
    if not configs:
        raise ValueError("empty grid")
    trials = []
    best_key, best = None, None
    for i, cfg in enumerate(configs):
        report = eval_fn(train_fn(g, cfg), cfg)
        trials.append((cfg, report))
        key = (-report.auc, report.mr, i)
        log.info("sweep %d/%d %s auc=%.4f mr=%.2f", i + 1, len(configs), cfg, report.auc, report.mr)
        if best_key is None or key < best_key:
            best_key, best = key, (cfg, report)
    return SweepResult(best[0], best[1], trials)
