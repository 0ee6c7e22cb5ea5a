"""ALC concept descriptions, axioms and ontologies.

Concepts are immutable trees. Structural equality is tree equality: no
sorting of conjuncts, no double-negation elimination. Every entity that can
become a graph node (concepts, named roles and the role/domain/codomain
scaffolds induced by an existential restriction) has a canonical string id,
and :func:`decode_id` inverts :func:`canonical_id`.

Node id grammar::

    C    := top | bot | NAME | not(C) | and(C,C) | or(C,C)
          | some(ROLE,C) | all(ROLE,C)
    id   := C | ROLE | role(some(ROLE,C)) | dom(some(ROLE,C))
          | cod(some(ROLE,C))
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union


class ALCSyntaxError(ValueError):
    """Malformed concept text. ``offset`` is the 1-based character column."""

    def __init__(self, message: str, offset: int, line: int | None = None):
        self.offset = offset
        self.line = line
        where = f"line {line}, offset {offset}" if line is not None else f"offset {offset}"
        super().__init__(f"{message} at {where}")


class NonALCConstructError(ValueError):
    """Input uses a construct outside ALC (cardinalities, nominals, ...)."""

    def __init__(self, construct: str, line: int | None = None):
        self.construct = construct
        self.line = line
        suffix = f" (line {line})" if line is not None else ""
        super().__init__(f"non-ALC construct {construct!r}{suffix}")


class MalformedIdError(ValueError):
    pass


# --------------------------------------------------------------------------
# concept descriptions


_NAME = re.compile(r"[^\s(),]+")


def _check_name(name: str, what: str) -> None:
    if not isinstance(name, str) or not _NAME.fullmatch(name) or name in ("top", "bot"):
        raise ValueError(f"invalid {what} name {name!r}")


@dataclass(frozen=True)
class Atomic:
    name: str

    def __post_init__(self):
        _check_name(self.name, "concept")


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bottom:
    pass


@dataclass(frozen=True)
class Not:
    operand: "Concept"


@dataclass(frozen=True)
class And:
    left: "Concept"
    right: "Concept"


@dataclass(frozen=True)
class Or:
    left: "Concept"
    right: "Concept"


@dataclass(frozen=True)
class Exists:
    role: str
    filler: "Concept"

    def __post_init__(self):
        _check_name(self.role, "role")


@dataclass(frozen=True)
class Forall:
    role: str
    filler: "Concept"

    def __post_init__(self):
        _check_name(self.role, "role")


Concept = Union[Atomic, Top, Bottom, Not, And, Or, Exists, Forall]
CONCEPT_TYPES = (Atomic, Top, Bottom, Not, And, Or, Exists, Forall)

TOP = Top()
BOTTOM = Bottom()


# role-category entities


@dataclass(frozen=True)
class NamedRole:
    name: str

    def __post_init__(self):
        _check_name(self.name, "role")


@dataclass(frozen=True)
class ScaffoldRole:
    """The role induced by an existential restriction ``some(R,C)``."""

    exists: Exists


@dataclass(frozen=True)
class Domain:
    """Domain object of the scaffold role of ``exists``; concept-like."""

    exists: Exists


@dataclass(frozen=True)
class Codomain:
    exists: Exists


RoleEntity = Union[NamedRole, ScaffoldRole]
Entity = Union[Concept, NamedRole, ScaffoldRole, Domain, Codomain]


@dataclass(frozen=True)
class Axiom:
    """Subsumption ``sub ⊑ sup``."""

    sub: Entity
    sup: Entity

    def __str__(self) -> str:
        return f"{canonical_id(self.sub)} sub {canonical_id(self.sup)}"


@dataclass(frozen=True)
class Signature:
    concept_names: frozenset[str] = frozenset()
    role_names: frozenset[str] = frozenset()
    individual_names: frozenset[str] = frozenset()

    def __post_init__(self):
        overlap = (
            (self.concept_names & self.role_names)
            | (self.concept_names & self.individual_names)
            | (self.role_names & self.individual_names)
        )
        if overlap:
            raise ValueError(f"signature name sets overlap: {sorted(overlap)}")


@dataclass(frozen=True)
class Ontology:
    signature: Signature
    tbox: tuple[Axiom, ...] = field(default_factory=tuple)


def is_concept(entity) -> bool:
    return isinstance(entity, CONCEPT_TYPES)


def subconcepts(concept: Concept) -> Iterator[Concept]:
    """Pre-order walk over a concept tree."""
    stack = [concept]
    while stack:
        c = stack.pop()
        yield c
        if isinstance(c, Not):
            stack.append(c.operand)
        elif isinstance(c, (And, Or)):
            stack.append(c.right)
            stack.append(c.left)
        elif isinstance(c, (Exists, Forall)):
            stack.append(c.filler)


def concept_names(concept: Concept) -> set[str]:
    return {c.name for c in subconcepts(concept) if isinstance(c, Atomic)}


def role_names(concept: Concept) -> set[str]:
    return {c.role for c in subconcepts(concept) if isinstance(c, (Exists, Forall))}


def depth(concept: Concept) -> int:
    if isinstance(concept, Not):
        return 1 + depth(concept.operand)
    if isinstance(concept, (And, Or)):
        return 1 + max(depth(concept.left), depth(concept.right))
    if isinstance(concept, (Exists, Forall)):
        return 1 + depth(concept.filler)
    return 1


# --------------------------------------------------------------------------
# canonical ids


def canonical_id(entity: Entity) -> str:
    """Serialize an entity to its node id. Injective over all entities."""
    match entity:
        case Atomic(name):
            return name
        case Top():
            return "top"
        case Bottom():
            return "bot"
        case Not(c):
            return f"not({canonical_id(c)})"
        case And(a, b):
            return f"and({canonical_id(a)},{canonical_id(b)})"
        case Or(a, b):
            return f"or({canonical_id(a)},{canonical_id(b)})"
        case Exists(r, c):
            return f"some({r},{canonical_id(c)})"
        case Forall(r, c):
            return f"all({r},{canonical_id(c)})"
        case NamedRole(name):
            return name
        case ScaffoldRole(ex):
            return f"role({canonical_id(ex)})"
        case Domain(ex):
            return f"dom({canonical_id(ex)})"
        case Codomain(ex):
            return f"cod({canonical_id(ex)})"
    raise TypeError(f"not an ALC entity: {entity!r}")


render_concept = canonical_id


_TOKEN = re.compile(r"\s*(?:([(),])|([^\s(),]+))")
_KEYWORDS = {"not": 1, "and": 2, "or": 2, "some": 2, "all": 2}
_SCAFFOLDS = {"role": ScaffoldRole, "dom": Domain, "cod": Codomain}
RESERVED = frozenset({"top", "bot"})


def _tokenize(text: str) -> list[tuple[str, int]]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            if text[pos:].strip() == "":
                break
            raise ALCSyntaxError(f"unexpected character {text[pos]!r}", pos + 1)
        start = m.start(1) if m.group(1) else m.start(2)
        tokens.append((m.group(1) or m.group(2), start))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str, allow_scaffolds: bool):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.allow_scaffolds = allow_scaffolds

    def _peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, len(self.text))

    def _next(self):
        tok = self._peek()
        self.i += 1
        return tok

    def _expect(self, symbol: str):
        tok, pos = self._next()
        if tok != symbol:
            got = "end of input" if tok is None else repr(tok)
            raise ALCSyntaxError(f"expected {symbol!r}, got {got}", pos + 1)

    def _name(self, what: str) -> str:
        tok, pos = self._next()
        if tok is None or tok in "(),":
            got = "end of input" if tok is None else repr(tok)
            raise ALCSyntaxError(f"expected {what}, got {got}", pos + 1)
        return tok

    def entity(self):
        tok, pos = self._peek()
        if tok in _SCAFFOLDS and self._lookahead_paren():
            if not self.allow_scaffolds:
                raise ALCSyntaxError(f"scaffold {tok!r} is not a concept", pos + 1)
            self._next()
            self._expect("(")
            inner_pos = self._peek()[1]
            inner = self.concept()
            if not isinstance(inner, Exists):
                raise ALCSyntaxError(f"{tok}(...) requires some(ROLE,C)", inner_pos + 1)
            self._expect(")")
            return _SCAFFOLDS[tok](inner)
        return self.concept()

    def _lookahead_paren(self) -> bool:
        return self.i + 1 < len(self.tokens) and self.tokens[self.i + 1][0] == "("

    def concept(self) -> Concept:
        tok, pos = self._next()
        if tok is None:
            raise ALCSyntaxError("unexpected end of input", pos + 1)
        if tok in "(),":
            raise ALCSyntaxError(f"unexpected {tok!r}", pos + 1)
        if self._peek()[0] == "(":
            if tok not in _KEYWORDS:
                raise ALCSyntaxError(f"unknown construct {tok!r}", pos + 1)
            self._expect("(")
            if tok == "not":
                c = Not(self.concept())
            elif tok in ("and", "or"):
                left = self.concept()
                self._expect(",")
                right = self.concept()
                c = And(left, right) if tok == "and" else Or(left, right)
            else:
                role = self._name("role name")
                self._expect(",")
                filler = self.concept()
                c = Exists(role, filler) if tok == "some" else Forall(role, filler)
            self._expect(")")
            return c
        if tok == "top":
            return TOP
        if tok == "bot":
            return BOTTOM
        return Atomic(tok)

    def finish(self):
        tok, pos = self._peek()
        if tok is not None:
            raise ALCSyntaxError(f"trailing input {tok!r}", pos + 1)


def parse_concept(text: str) -> Concept:
    """Parse plain-text ALC syntax, e.g. ``and(A,some(r,not(B)))``."""
    p = _Parser(text, allow_scaffolds=False)
    c = p.concept()
    p.finish()
    return c


def decode_id(node_id: str, roles: Iterable[str] = ()) -> Entity:
    """Inverse of :func:`canonical_id`.

    A bare name decodes to :class:`NamedRole` when it is listed in ``roles``
    and to :class:`Atomic` otherwise; the id alone cannot tell them apart.
    """
    try:
        p = _Parser(node_id, allow_scaffolds=True)
        e = p.entity()
        p.finish()
    except ALCSyntaxError as exc:
        raise MalformedIdError(f"malformed node id {node_id!r}: {exc}") from None
    if isinstance(e, Atomic) and e.name in set(roles):
        return NamedRole(e.name)
    return e


# --------------------------------------------------------------------------
# ontology documents


def _collect_signature(axioms, concepts=(), roles=(), individuals=()) -> Signature:
    cs, rs = set(concepts), set(roles)
    for ax in axioms:
        for side in (ax.sub, ax.sup):
            cs |= concept_names(side)
            rs |= role_names(side)
    return Signature(frozenset(cs), frozenset(rs), frozenset(individuals))


_SUB = re.compile(r"\s+sub\s+")


def parse_alc_text(text: str) -> Ontology:
    """One axiom per line: ``<C> sub <D>``. Blank lines and ``#`` comments skipped."""
    axioms = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = _SUB.split(line)
        if len(parts) != 2:
            raise ALCSyntaxError("expected '<C> sub <D>'", 1, line=lineno)
        try:
            axioms.append(Axiom(parse_concept(parts[0]), parse_concept(parts[1])))
        except ALCSyntaxError as exc:
            raise ALCSyntaxError(str(exc).rsplit(" at ", 1)[0], exc.offset, line=lineno) from None
    return Ontology(_collect_signature(axioms), tuple(axioms))


def parse_ontology(document: bytes | str, format: str = "alc-text", strict: bool = True) -> Ontology:
    """Parse an ontology document.

    ``format`` is ``"alc-text"`` or ``"owl-functional"``. See
    :func:`cate.owl.parse_owl_functional` for the accepted OWL subset and the
    meaning of ``strict``.
    """
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    if format == "alc-text":
        return parse_alc_text(document)
    if format in ("owl-functional", "owl-functional-subset", "ofn"):
        from .owl import parse_owl_functional

        return parse_owl_functional(document, strict=strict)
    raise ValueError(f"unknown ontology format {format!r}")
