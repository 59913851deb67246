"""Ontology schema for the semantic network, loaded from a restricted
Turtle subset.

The subset understands exactly three things: ``@prefix`` declarations,
``a``-typing of a term as Entity / Verb / Attribute, and domain / range
statements.  Example::

    @prefix civ:  <http://example.org/civ#> .
    @prefix kbrl: <http://example.org/kbrl#> .
    @prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
    @prefix xsd:  <http://www.w3.org/2001/XMLSchema#> .

    civ:Tile a kbrl:Entity .
    civ:Unit a kbrl:Entity .

    civ:standsOn a kbrl:Verb ;
        rdfs:domain civ:Unit ;
        rdfs:range  civ:Tile .

    civ:x a kbrl:Attribute ;
        rdfs:domain civ:Tile ;
        rdfs:range  xsd:integer .

Prefixed names are kept as literal strings of the form ``prefix/local``
(``civ:Tile`` becomes ``civ/Tile``); the IRI bound to a prefix is checked
for well-formedness but carries no further meaning.  The marker and
predicate names are matched on their local part, so ``kbrl:Entity`` and
``meta:Entity`` are interchangeable.  Scalar kinds are ``string``,
``integer``, ``float``, ``boolean`` and their ``...List`` variants
(e.g. ``xsd:integer``, ``kbrl:integerList``).

The ontology is non-hierarchical: there is no inheritance between
entity types, and matching elsewhere in the system is type-exact.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

_KIND_BY_LOCAL = {
    "string": "string",
    "integer": "integer",
    "int": "integer",
    "float": "float",
    "double": "float",
    "boolean": "boolean",
    "stringList": "list[string]",
    "integerList": "list[integer]",
    "floatList": "list[float]",
    "booleanList": "list[boolean]",
}

_MARKERS = ("Entity", "Verb", "Attribute")


class OntologyError(Exception):
    """Syntax or schema error in an ontology document."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        super().__init__(f"line {line}, col {col}: {message}" if line else message)


@dataclass(frozen=True)
class Ontology:
    """Schema constraining the semantic network.

    ``entities`` is the set of entity type names, ``verbs`` maps a verb
    name to its (from-type, to-type) pair, and ``attributes`` maps
    (entity type, attribute name) to a scalar kind.
    """

    entities: frozenset[str]
    verbs: dict[str, tuple[str, str]]
    attributes: dict[tuple[str, str], str]

    def attr_kind(self, entity_type: str, attr: str) -> str | None:
        return self.attributes.get((entity_type, attr))

    def attrs_of(self, entity_type: str) -> dict[str, str]:
        return {
            a: k for (e, a), k in self.attributes.items() if e == entity_type
        }


# --- tokenizer -------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<prefix>@prefix\b)
  | (?P<iri><[^<>\s]*>)
  | (?P<pname_ns>[A-Za-z_][\w.-]*:(?![\w]))
  | (?P<pname>[A-Za-z_][\w.-]*:[A-Za-z_][\w.-]*)
  | (?P<a>\ba\b)
  | (?P<punct>[;,.])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise OntologyError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        raw = m.group()
        if kind == "nl":
            line += 1
            col = 1
        else:
            if kind not in ("ws", "comment"):
                toks.append(_Tok(kind, raw, line, col))
            col += len(raw)
        pos = m.end()
    toks.append(_Tok("eof", "", line, col))
    return toks


@dataclass
class _Subject:
    name: str
    line: int
    col: int
    marker: str | None = None
    domains: list[str] = field(default_factory=list)
    ranges: list[str] = field(default_factory=list)


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0
        self.prefixes: dict[str, str] = {}
        self.subjects: dict[str, _Subject] = {}

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def next(self) -> _Tok:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str, what: str) -> _Tok:
        tok = self.next()
        if tok.kind != kind:
            raise OntologyError(
                f"expected {what}, got {tok.text or 'end of file'!r}", tok.line, tok.col
            )
        return tok

    def resolve(self, tok: _Tok) -> str:
        prefix, local = tok.text.split(":", 1)
        if prefix not in self.prefixes:
            raise OntologyError(f"undeclared prefix {prefix!r}", tok.line, tok.col)
        return f"{prefix}/{local}"

    def parse(self) -> Ontology:
        while self.peek().kind != "eof":
            if self.peek().kind == "prefix":
                self._prefix_decl()
            else:
                self._statement()
        return self._build()

    def _prefix_decl(self):
        self.next()
        ns = self.expect("pname_ns", "a prefix name like 'civ:'")
        self.expect("iri", "an IRI in angle brackets")
        dot = self.expect("punct", "'.'")
        if dot.text != ".":
            raise OntologyError("expected '.' after @prefix", dot.line, dot.col)
        self.prefixes[ns.text[:-1]] = ns.text

    def _statement(self):
        subj_tok = self.expect("pname", "a prefixed name")
        name = self.resolve(subj_tok)
        subj = self.subjects.setdefault(
            name, _Subject(name, subj_tok.line, subj_tok.col)
        )
        while True:
            pred = self.next()
            if pred.kind == "a":
                local = "a"
            elif pred.kind == "pname":
                local = pred.text.split(":", 1)[1]
                self.resolve(pred)
            else:
                raise OntologyError(
                    f"expected a predicate, got {pred.text!r}", pred.line, pred.col
                )
            while True:
                obj = self.expect("pname", "a prefixed name object")
                self._record(subj, local, obj)
                if self.peek().text == ",":
                    self.next()
                    continue
                break
            sep = self.expect("punct", "';' or '.'")
            if sep.text == ".":
                return
            if sep.text == ";":
                if self.peek().text == ".":  # tolerate trailing ';' before '.'
                    self.next()
                    return
                continue
            raise OntologyError(f"expected ';' or '.', got {sep.text!r}", sep.line, sep.col)

    def _record(self, subj: _Subject, pred_local: str, obj: _Tok):
        obj_name = self.resolve(obj)
        obj_local = obj.text.split(":", 1)[1]
        if pred_local == "a":
            if obj_local not in _MARKERS:
                raise OntologyError(
                    f"unknown declaration type {obj.text!r} "
                    f"(expected Entity, Verb or Attribute)",
                    obj.line,
                    obj.col,
                )
            if subj.marker is not None and subj.marker != obj_local:
                raise OntologyError(
                    f"{subj.name} declared both {subj.marker} and {obj_local}",
                    obj.line,
                    obj.col,
                )
            subj.marker = obj_local
        elif pred_local == "domain":
            subj.domains.append(obj_name)
        elif pred_local == "range":
            subj.ranges.append(obj_name)
        else:
            raise OntologyError(
                f"unsupported predicate local name {pred_local!r} "
                f"(only 'a', 'domain', 'range')",
                obj.line,
                obj.col,
            )

    def _build(self) -> Ontology:
        entities = set()
        for subj in self.subjects.values():
            if subj.marker is None:
                raise OntologyError(
                    f"{subj.name} has statements but no 'a Entity/Verb/Attribute' typing",
                    subj.line,
                    subj.col,
                )
            if subj.marker == "Entity":
                if subj.domains or subj.ranges:
                    raise OntologyError(
                        f"entity {subj.name} cannot carry domain/range",
                        subj.line,
                        subj.col,
                    )
                entities.add(subj.name)

        verbs: dict[str, tuple[str, str]] = {}
        attributes: dict[tuple[str, str], str] = {}
        for subj in self.subjects.values():
            if subj.marker == "Verb":
                if len(subj.domains) != 1 or len(subj.ranges) != 1:
                    raise OntologyError(
                        f"verb {subj.name} needs exactly one domain and one range",
                        subj.line,
                        subj.col,
                    )
                frm, to = subj.domains[0], subj.ranges[0]
                for side in (frm, to):
                    if side not in entities:
                        raise OntologyError(
                            f"verb {subj.name} references undeclared entity type {side}",
                            subj.line,
                            subj.col,
                        )
                verbs[subj.name] = (frm, to)
            elif subj.marker == "Attribute":
                if not subj.domains or len(subj.ranges) != 1:
                    raise OntologyError(
                        f"attribute {subj.name} needs at least one domain "
                        f"and exactly one range",
                        subj.line,
                        subj.col,
                    )
                kind_local = subj.ranges[0].split("/", 1)[1]
                kind = _KIND_BY_LOCAL.get(kind_local)
                if kind is None:
                    raise OntologyError(
                        f"unknown scalar kind {subj.ranges[0]!r} for {subj.name}",
                        subj.line,
                        subj.col,
                    )
                for owner in subj.domains:
                    if owner not in entities:
                        raise OntologyError(
                            f"attribute {subj.name} references undeclared "
                            f"entity type {owner}",
                            subj.line,
                            subj.col,
                        )
                    key = (owner, subj.name)
                    if key in attributes and attributes[key] != kind:
                        raise OntologyError(
                            f"attribute {subj.name} redeclared with a different "
                            f"kind for {owner}",
                            subj.line,
                            subj.col,
                        )
                    attributes[key] = kind
        return Ontology(frozenset(entities), verbs, attributes)


def load_ontology(text: str) -> Ontology:
    """Parse an ontology document in the restricted Turtle subset."""
    return _Parser(text).parse()
