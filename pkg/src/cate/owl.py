"""Reader for the ALC fragment of OWL 2 functional-style syntax.

Class expressions: named classes, ``owl:Thing``, ``owl:Nothing``,
``ObjectIntersectionOf``, ``ObjectUnionOf``, ``ObjectComplementOf``,
``ObjectSomeValuesFrom`` and ``ObjectAllValuesFrom``. N-ary intersections and
unions are right-folded: ``And(a, And(b, c))``.

Axioms: ``Declaration``, ``SubClassOf`` and ``EquivalentClasses`` (split into
two subsumptions per ordered pair). Annotation and ABox axioms are dropped.
With ``strict=False`` a few more TBox axioms with a direct ALC reading are
translated (``DisjointClasses``, ``ObjectPropertyDomain``,
``ObjectPropertyRange``) and other unsupported axioms are skipped; in strict
mode they raise :class:`NonALCConstructError`.
"""

from __future__ import annotations

import logging
import re

from .alc import (
    BOTTOM,
    TOP,
    ALCSyntaxError,
    And,
    Atomic,
    Axiom,
    Exists,
    Forall,
    NonALCConstructError,
    Not,
    Ontology,
    Or,
    _collect_signature,
)

log = logging.getLogger(__name__)

_TOKEN = re.compile(
    r"""\s+|\#[^\n]*                  # whitespace, comments
      |(?P<open>\()|(?P<close>\))
      |(?P<iri><[^>]*>)
      |(?P<lit>"(?:[^"\\]|\\.)*"(?:\^\^\S+?(?=[\s)])|@[\w-]+)?)
      |(?P<atom>[^\s()"<>]+)""",
    re.VERBOSE,
)

THING = {"owl:Thing", "http://www.w3.org/2002/07/owl#Thing"}
NOTHING = {"owl:Nothing", "http://www.w3.org/2002/07/owl#Nothing"}

NON_ALC = {
    "ObjectMinCardinality",
    "ObjectMaxCardinality",
    "ObjectExactCardinality",
    "ObjectOneOf",
    "ObjectHasValue",
    "ObjectHasSelf",
    "ObjectInverseOf",
    "DataSomeValuesFrom",
    "DataAllValuesFrom",
    "DataHasValue",
    "DataMinCardinality",
    "DataMaxCardinality",
    "DataExactCardinality",
}
IGNORED_AXIOMS = {
    "AnnotationAssertion",
    "SubAnnotationPropertyOf",
    "AnnotationPropertyDomain",
    "AnnotationPropertyRange",
    "Annotation",
    "ClassAssertion",
    "ObjectPropertyAssertion",
    "NegativeObjectPropertyAssertion",
    "DataPropertyAssertion",
    "NegativeDataPropertyAssertion",
    "SameIndividual",
    "DifferentIndividuals",
    "Import",
}


class _Node(list):
    """S-expression ``Head(args...)`` with the source line of its head."""

    def __init__(self, head, line):
        super().__init__()
        self.head = head
        self.line = line


def _sexpr(text: str) -> list:
    root = _Node("<root>", 1)
    stack = [root]
    last_atom = None
    line = 1
    pos = 0
    for m in _TOKEN.finditer(text):
        if m.start() != pos:
            raise ALCSyntaxError(f"unexpected character {text[pos]!r}", pos + 1, line=line)
        pos = m.end()
        kind = m.lastgroup
        if kind == "open":
            # the preceding atom becomes the head of the new node
            parent = stack[-1]
            if not parent or not isinstance(parent[-1], str) or last_atom is None:
                raise ALCSyntaxError("'(' without a construct name", m.start() + 1, line=line)
            head = parent.pop()
            node = _Node(head, line)
            parent.append(node)
            stack.append(node)
        elif kind == "close":
            if len(stack) == 1:
                raise ALCSyntaxError("unbalanced ')'", m.start() + 1, line=line)
            stack.pop()
        elif kind is not None:
            stack[-1].append(m.group(kind))
        if kind is not None:
            last_atom = m.group(kind) if kind in ("atom", "iri") else None
        line += m.group(0).count("\n")
    if pos != len(text):
        raise ALCSyntaxError(f"unexpected character {text[pos]!r}", pos + 1, line=line)
    if len(stack) != 1:
        raise ALCSyntaxError(f"unclosed {stack[-1].head!r}", len(text) + 1, line=stack[-1].line)
    return root


def entity_name(token: str) -> str:
    """``<http://x/y#A>`` -> ``http://x/y#A``; ``:A`` -> ``A``; ``obo:X`` kept."""
    if token.startswith("<") and token.endswith(">"):
        return token[1:-1]
    if token.startswith(":"):
        return token[1:]
    return token


class _Reader:
    def __init__(self, strict: bool):
        self.strict = strict
        self.axioms: list[Axiom] = []
        self.concepts: set[str] = set()
        self.roles: set[str] = set()
        self.individuals: set[str] = set()
        self.skipped = 0

    def _role(self, item, line):
        if isinstance(item, _Node):
            raise NonALCConstructError(item.head, item.line)
        if item.startswith('"'):
            raise ALCSyntaxError("expected object property", 1, line=line)
        return entity_name(item)

    def concept(self, item, line):
        if isinstance(item, str):
            if item.startswith('"'):
                raise ALCSyntaxError("literal where a class was expected", 1, line=line)
            name = entity_name(item)
            if item in THING or name in THING:
                return TOP
            if item in NOTHING or name in NOTHING:
                return BOTTOM
            return Atomic(name)
        head, args = item.head, [a for a in item]
        if head in NON_ALC:
            raise NonALCConstructError(head, item.line)
        if head in ("ObjectIntersectionOf", "ObjectUnionOf"):
            if len(args) < 2:
                raise ALCSyntaxError(f"{head} needs at least two operands", 1, line=item.line)
            ops = [self.concept(a, item.line) for a in args]
            cls = And if head == "ObjectIntersectionOf" else Or
            folded = ops[-1]
            for op in reversed(ops[:-1]):
                folded = cls(op, folded)
            return folded
        if head == "ObjectComplementOf":
            self._arity(item, 1)
            return Not(self.concept(args[0], item.line))
        if head in ("ObjectSomeValuesFrom", "ObjectAllValuesFrom"):
            self._arity(item, 2)
            role = self._role(args[0], item.line)
            filler = self.concept(args[1], item.line)
            return Exists(role, filler) if head == "ObjectSomeValuesFrom" else Forall(role, filler)
        raise NonALCConstructError(head, item.line)

    @staticmethod
    def _arity(item, n):
        if len(item) != n:
            raise ALCSyntaxError(f"{item.head} expects {n} argument(s), got {len(item)}", 1, line=item.line)

    @staticmethod
    def _strip_annotations(item):
        return [a for a in item if not (isinstance(a, _Node) and a.head == "Annotation")]

    def declaration(self, item, args):
        for decl in args:
            if not isinstance(decl, _Node) or len(decl) != 1:
                raise ALCSyntaxError("malformed Declaration", 1, line=item.line)
            name = entity_name(decl[0])
            if decl.head == "Class":
                if decl[0] not in THING | NOTHING and name not in THING | NOTHING:
                    self.concepts.add(name)
            elif decl.head == "ObjectProperty":
                self.roles.add(name)
            elif decl.head == "NamedIndividual":
                self.individuals.add(name)
            elif self.strict and decl.head not in ("AnnotationProperty",):
                raise NonALCConstructError(f"Declaration({decl.head})", item.line)

    def axiom(self, item):
        head = item.head
        args = self._strip_annotations(item)
        if head == "Declaration":
            self.declaration(item, args)
        elif head == "SubClassOf":
            self._arity_list(item, args, 2)
            self.axioms.append(Axiom(self.concept(args[0], item.line), self.concept(args[1], item.line)))
        elif head == "EquivalentClasses":
            cs = [self.concept(a, item.line) for a in args]
            for i, a in enumerate(cs):
                for b in cs[i + 1 :]:
                    self.axioms.append(Axiom(a, b))
                    self.axioms.append(Axiom(b, a))
        elif not self.strict and head == "DisjointClasses":
            cs = [self.concept(a, item.line) for a in args]
            for i, a in enumerate(cs):
                for b in cs[i + 1 :]:
                    self.axioms.append(Axiom(And(a, b), BOTTOM))
        elif not self.strict and head == "ObjectPropertyDomain":
            self._arity_list(item, args, 2)
            role = self._role(args[0], item.line)
            self.axioms.append(Axiom(Exists(role, TOP), self.concept(args[1], item.line)))
        elif not self.strict and head == "ObjectPropertyRange":
            self._arity_list(item, args, 2)
            role = self._role(args[0], item.line)
            self.axioms.append(Axiom(TOP, Forall(role, self.concept(args[1], item.line))))
        elif head in IGNORED_AXIOMS or not self.strict:
            self.skipped += 1
        else:
            raise NonALCConstructError(head, item.line)

    @staticmethod
    def _arity_list(item, args, n):
        if len(args) != n:
            raise ALCSyntaxError(f"{item.head} expects {n} argument(s), got {len(args)}", 1, line=item.line)


def parse_owl_functional(text: str, strict: bool = True) -> Ontology:
    root = _sexpr(text)
    reader = _Reader(strict)
    body = []
    for item in root:
        if isinstance(item, _Node) and item.head == "Ontology":
            body.extend(a for a in item if isinstance(a, _Node))
        elif isinstance(item, _Node) and item.head == "Prefix":
            continue
        elif isinstance(item, _Node):
            body.append(item)
    for item in body:
        if item.head in ("Import", "Annotation"):
            continue
        reader.axiom(item)
    if reader.skipped:
        log.info("skipped %d axioms outside the ALC TBox subset", reader.skipped)
    sig = _collect_signature(reader.axioms, reader.concepts, reader.roles, reader.individuals)
    return Ontology(sig, tuple(reader.axioms))
