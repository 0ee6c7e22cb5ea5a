"""Rule-based saturation of a projected graph.

Every rule matches against a read-only snapshot of the input graph and its
consequences are projected into a copy, so one step is independent of rule
order and ``saturate(g, 2)`` is exactly two applications of
:func:`saturate_step`.

Quantified rule variables range over what is already in the graph: ``X`` in
the conjunction rule over named concepts, ``X`` in the disjunction rule over
present disjunction nodes, ``R'`` over role scaffolds, and the roles of the
two existential rules over existing ``some(R,C)`` nodes. Rules never invent
roles or fillers.
"""

from __future__ import annotations

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterator, Union

from .alc import (
    Atomic,
    And,
    Axiom,
    Bottom,
    Codomain,
    Domain,
    Entity,
    Exists,
    NamedRole,
    Not,
    Or,
    ScaffoldRole,
    Top,
    decode_id,
    is_concept,
)
from .graph import Graph
from .projection import graph_role_names, project_axiom, project_concept

log = logging.getLogger(__name__)

Consequence = Union[Axiom, Entity]  # an axiom to project, or a bare concept


class SaturationNotConverged(RuntimeError):
    def __init__(self, graph: Graph, steps: int):
        self.graph = graph
        self.steps = steps
        super().__init__(f"no fixed point after {steps} saturation steps (|E|={len(graph.edges)})")


@lru_cache(maxsize=1 << 18)
def _decode(node_id: str) -> Entity:
    return decode_id(node_id)


class Snapshot:
    """Decoded, indexed view of a graph for rule matching."""

    def __init__(self, g: Graph):
        roles = graph_role_names(g)
        ents = []
        for node in g.nodes:
            e = _decode(node)
            if isinstance(e, Atomic) and e.name in roles:
                e = NamedRole(e.name)
            ents.append(e)
        self.entities = ents
        self.edges = [(ents[h], ents[t]) for h, t in g.sorted_edges()]
        self.exists_roles: dict[Entity, list[str]] = defaultdict(list)
        self.domains: set[Domain] = set()
        for e in ents:
            if isinstance(e, Exists):
                self.exists_roles[e.filler].append(e.role)
            elif isinstance(e, Domain):
                self.domains.add(e)


def _double_negation(s: Snapshot) -> Iterator[Consequence]:
    for e in s.entities:
        if isinstance(e, Not) and isinstance(e.operand, Not):
            yield e.operand.operand


def _conjunction_bottom(s: Snapshot) -> Iterator[Consequence]:
    for c, d in s.edges:
        if isinstance(d, Bottom) and isinstance(c, And) and isinstance(c.right, Atomic):
            yield Axiom(c.right, Not(c.left))


def _top_disjunction(s: Snapshot) -> Iterator[Consequence]:
    for c, d in s.edges:
        if isinstance(c, Top) and isinstance(d, Or):
            yield Axiom(Not(d.left), d.right)


def _contraposition(s: Snapshot) -> Iterator[Consequence]:
    for c, d in s.edges:
        if isinstance(d, Not) and is_concept(c):
            yield Axiom(d.operand, Not(c))


def _role_domain(s: Snapshot) -> Iterator[Consequence]:
    # R' -> R and cod(R') -> C, with dom(some(R,C)) present
    super_roles: dict[Exists, list[str]] = defaultdict(list)
    cod_targets: dict[Exists, list[Entity]] = defaultdict(list)
    for c, d in s.edges:
        if isinstance(c, ScaffoldRole) and isinstance(d, NamedRole):
            super_roles[c.exists].append(d.name)
        elif isinstance(c, Codomain) and is_concept(d):
            cod_targets[c.exists].append(d)
    for sub_ex, names in super_roles.items():
        for r in names:
            for target in cod_targets.get(sub_ex, ()):
                dom = Domain(Exists(r, target))
                if dom in s.domains:
                    yield Axiom(Domain(sub_ex), dom)


def _bottom_existential(s: Snapshot) -> Iterator[Consequence]:
    for c, d in s.edges:
        if isinstance(d, Bottom) and is_concept(c):
            for r in s.exists_roles.get(c, ()):
                yield Axiom(Exists(r, c), d)


def _existential_monotone(s: Snapshot) -> Iterator[Consequence]:
    for c, d in s.edges:
        if not (is_concept(c) and is_concept(d)):
            continue
        rc = s.exists_roles.get(c)
        if not rc:
            continue
        rd = set(s.exists_roles.get(d, ()))
        for r in rc:
            if r in rd:
                yield Axiom(Exists(r, c), Exists(r, d))


@dataclass(frozen=True)
class SaturationRule:
    name: str
    match: Callable[[Snapshot], Iterator[Consequence]]


RULES: tuple[SaturationRule, ...] = (
    SaturationRule("double_negation", _double_negation),
    SaturationRule("conjunction_bottom", _conjunction_bottom),
    SaturationRule("top_disjunction", _top_disjunction),
    SaturationRule("contraposition", _contraposition),
    SaturationRule("role_domain", _role_domain),
    SaturationRule("bottom_existential", _bottom_existential),
    SaturationRule("existential_monotone", _existential_monotone),
)


def apply_consequence(g: Graph, cons: Consequence) -> None:
    if isinstance(cons, Axiom):
        project_axiom(g, cons)
    else:
        project_concept(g, cons)


def matches(g: Graph, rules=RULES) -> list[tuple[str, Consequence]]:
    """All (rule name, consequence) pairs matched on ``g``, in application order."""
    snap = Snapshot(g)
    return [(rule.name, cons) for rule in rules for cons in rule.match(snap)]


def saturate_step(g: Graph, stats: Counter | None = None) -> tuple[Graph, int]:
    """One round of all rules. Returns a new graph and the number of new edges.

    ``stats`` (if given) is incremented with per-rule counts of new edges.
    """
    out = g.copy()
    for name, cons in matches(g):
        before = len(out.edges)
        apply_consequence(out, cons)
        if stats is not None:
            stats[name] += len(out.edges) - before
    return out, len(out.edges) - len(g.edges)


def saturate(
    g: Graph,
    max_steps: int | None = None,
    stats: Counter | None = None,
    limit: int = 100,
) -> tuple[Graph, int]:
    """Apply :func:`saturate_step` until no edge is added or ``max_steps`` ran.

    Returns the graph and the number of steps executed; a step that adds
    nothing counts, so a graph already at its fixed point reports 1.
    ``max_steps=None`` asks for the fixed point and raises
    :class:`SaturationNotConverged` after ``limit`` steps. Complement-heavy
    ontologies typically have no finite fixed point.
    """
    if max_steps is not None and max_steps < 0:
        raise ValueError("max_steps must be non-negative")
    budget = limit if max_steps is None else max_steps
    steps = 0
    while steps < budget:
        g, added = saturate_step(g, stats)
        steps += 1
        log.debug("saturation step %d: +%d edges", steps, added)
        if added == 0:
            return g, steps
    if max_steps is None:
        raise SaturationNotConverged(g, steps)
    return g, steps
