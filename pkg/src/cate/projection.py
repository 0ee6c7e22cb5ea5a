"""Categorical projection of ALC axioms into graph edges.

Each concept description contributes the arrows of its categorical diagram:
projections out of a conjunction, injections into a disjunction, the
role/domain/codomain scaffold of an existential, the two-way link between
``all(R,C)`` and ``not(some(R,not(C)))``, and the ``bot``/``top`` arrows of
a complement. An axiom ``C sub D`` adds ``C -> D`` plus the diagrams of both
sides.

Complement and conjunction refer to each other (``not(C)`` needs
``and(C,not(C))`` which needs ``not(C)`` again), so the recursion tracks the
descriptions already expanded in the current call and stops there. The
result is the least set closed under the rules.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .alc import (
    BOTTOM,
    TOP,
    And,
    Atomic,
    Axiom,
    Codomain,
    Domain,
    Entity,
    Exists,
    Forall,
    Not,
    Or,
    ScaffoldRole,
    Signature,
    canonical_id,
    decode_id,
    is_concept,
)
from .graph import Graph

Edge = tuple[int, int]


class ScaffoldEndpointError(ValueError):
    """The edge touches a role/domain/codomain scaffold, so it is no axiom."""


class UnknownNameError(KeyError):
    pass


@dataclass(frozen=True)
class ProjectionOptions:
    # also project top sub or(not(C),D) for every axiom C sub D
    emit_top_complement_edge: bool = False


class _Projector:
    def __init__(self, g: Graph, visited: set[str] | None = None):
        self.g = g
        self.visited = set() if visited is None else visited
        self.out: set[Edge] = set()

    def emit(self, head: str, tail: str) -> None:
        h = self.g.intern(head)
        t = self.g.intern(tail)
        self.g.add_edge(h, t)
        self.out.add((h, t))

    def concept(self, c: Entity) -> None:
        cid = canonical_id(c)
        self.g.intern(cid)
        if cid in self.visited:
            return
        self.visited.add(cid)
        if isinstance(c, And):
            self.emit(cid, canonical_id(c.left))
            self.emit(cid, canonical_id(c.right))
            self.concept(c.left)
            self.concept(c.right)
        elif isinstance(c, Or):
            self.emit(canonical_id(c.left), cid)
            self.emit(canonical_id(c.right), cid)
            self.concept(c.left)
            self.concept(c.right)
        elif isinstance(c, Exists):
            self.emit(canonical_id(ScaffoldRole(c)), c.role)
            self.emit(canonical_id(Codomain(c)), canonical_id(c.filler))
            self.emit(canonical_id(Domain(c)), cid)
            self.concept(c.filler)
        elif isinstance(c, Forall):
            dual = Not(Exists(c.role, Not(c.filler)))
            did = canonical_id(dual)
            self.emit(cid, did)
            self.emit(did, cid)
            self.concept(dual)
        elif isinstance(c, Not):
            x = c.operand
            meet, join = And(x, c), Or(x, c)
            self.emit(canonical_id(meet), "bot")
            self.emit("top", canonical_id(join))
            self.concept(x)
            self.concept(meet)
            self.concept(join)
        # atomic, top, bot and domain/codomain objects carry no diagram

    def axiom(self, ax: Axiom) -> None:
        self.emit(canonical_id(ax.sub), canonical_id(ax.sup))
        self.concept(ax.sub)
        self.concept(ax.sup)


def project_concept(g: Graph, concept: Entity, visited: set[str] | None = None) -> set[Edge]:
    """Add the diagram of ``concept`` to ``g`` and return its edge set.

    The returned set is the full diagram, including edges that were already
    in the graph. Passing ``visited`` shares the expansion memo across calls.
    """
    p = _Projector(g, visited)
    p.concept(concept)
    return p.out


def project_axiom(g: Graph, ax: Axiom, opts: ProjectionOptions | None = None) -> set[Edge]:
    p = _Projector(g)
    p.axiom(ax)
    if opts is not None and opts.emit_top_complement_edge:
        p.axiom(Axiom(TOP, Or(Not(ax.sub), ax.sup)))
    return p.out


def project_ontology(ontology, opts: ProjectionOptions | None = None) -> Graph:
    g = Graph()
    sig = ontology.signature
    for name in sorted(sig.concept_names):
        g.intern(name)
    for name in sorted(sig.role_names):
        g.intern(name)
    for ax in ontology.tbox:
        project_axiom(g, ax, opts)
    return g


def graph_role_names(g: Graph) -> set[str]:
    """Role names recoverable from the ``role(some(R,C))`` scaffolds of ``g``."""
    roles = set()
    for node in g.nodes:
        if node.startswith("role("):
            roles.add(decode_id(node).exists.role)
    return roles


def decode_axiom_edge(g: Graph, edge: Edge, roles: Iterable[str] | None = None) -> Axiom:
    if roles is None:
        roles = graph_role_names(g)
    roles = set(roles)
    h, t = edge
    sub = decode_id(g.nodes[h], roles)
    sup = decode_id(g.nodes[t], roles)
    for end in (sub, sup):
        if not is_concept(end):
            raise ScaffoldEndpointError(f"edge {g.nodes[h]} -> {g.nodes[t]} has scaffold endpoint {canonical_id(end)}")
    return Axiom(sub, sup)


def add_existential_scaffold(
    g: Graph, role: str, fillers: Iterable[str], signature: Signature | None = None
) -> int:
    """Guarantee a ``some(role,p)`` node for every filler ``p``.

    Projects ``bot sub some(role,p)`` and ``some(role,p) sub top``; returns the
    number of distinct edges these projections emit.
    """
    fillers = list(fillers)
    if signature is not None:
        if role not in signature.role_names:
            raise UnknownNameError(f"unknown role {role!r}")
        missing = [p for p in fillers if p not in signature.concept_names]
    else:
        missing = [p for p in fillers if p not in g.index]
    if missing:
        raise UnknownNameError(f"unknown concept(s): {', '.join(sorted(set(missing)))}")
    emitted: set[Edge] = set()
    for p in fillers:
        ex = Exists(role, Atomic(p))
        emitted |= project_axiom(g, Axiom(BOTTOM, ex))
        emitted |= project_axiom(g, Axiom(ex, TOP))
    return len(emitted)

