"""The Knowledge Item rule language: parser, AST, and printer.

A Knowledge Item (KI) is one rule with four blocks::

    ki "found-city" {
        author: "common"
    }
    on {
        match civ/Settlers as $u { civ/id == $id, civ/moves_left > 0 }
            related via civ/standsOn to civ/Tile as $t { civ/terrain == "grass" }
    }
    when {
        issue.Destination == [$u.civ/x, $u.civ/y]
    }
    do {
        handler microciv "unit ${$id}; press b"
        issue.unset Destination
    }

``ki`` holds metadata, ``on`` is a pattern over the semantic graph,
``when`` is a boolean condition over the working memory (the Issue) and
the variables the pattern bound, and ``do`` is the program to execute.

Variables are introduced only in the ON block: ``as $u`` binds a node,
and a constraint ``attr == $x`` with a fresh ``$x`` binds that
attribute's value (if ``$x`` is already bound the constraint is a join).
WHEN and DO may only use variables the ON block bound; anything else is
an unbound-variable error.  An omitted or empty WHEN block is the
constant true.  The DO block must not be empty.

Rule identity is ``expert_tag + "/" + name``; the tag comes from the
pack a rule was loaded from, not from the rule source.

Parsing is pure; parsed rules are immutable and shareable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

COMPARE_OPS = ("==", "!=", "<=", ">=", "<", ">", "in")

KEYWORDS = {
    "ki", "on", "when", "do", "match", "as", "related", "via", "to",
    "issue", "graph", "handler", "and", "or", "not", "exists", "in",
    "true", "false",
}


class KiError(Exception):
    """Base class for rule-language errors."""


class KiSyntaxError(KiError):
    def __init__(self, message: str, line: int, col: int, block: str = "",
                 source: str = ""):
        self.line, self.col, self.block, self.source = line, col, block, source
        where = f"{source}:" if source else ""
        blk = f" in {block} block" if block else ""
        super().__init__(f"{where}line {line}, col {col}{blk}: {message}")


class UnboundVariableError(KiSyntaxError):
    pass


class EmptyDoError(KiSyntaxError):
    pass


class DuplicateRuleNameError(KiError):
    pass


# --- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Lit:
    value: object  # str | int | float | bool


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class VarAttr:
    var: str
    attr: str


@dataclass(frozen=True)
class IssueRef:
    attr: str


@dataclass(frozen=True)
class ListLit:
    items: tuple


@dataclass(frozen=True)
class Cmp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Exists:
    operand: object


@dataclass(frozen=True)
class Not:
    operand: object


@dataclass(frozen=True)
class And:
    parts: tuple


@dataclass(frozen=True)
class Or:
    parts: tuple


@dataclass(frozen=True)
class AttrConstraint:
    attr: str
    op: str
    value: object  # Lit | ListLit | VarRef


@dataclass(frozen=True)
class RelatedClause:
    verb: str
    entity_type: str
    var: str
    constraints: tuple = ()


@dataclass(frozen=True)
class MatchClause:
    entity_type: str
    var: str
    constraints: tuple = ()
    related: tuple = ()


@dataclass(frozen=True)
class Template:
    """Interpolated command text: a tuple of str chunks and expression parts."""

    parts: tuple


@dataclass(frozen=True)
class DoSet:
    attr: str
    value: object


@dataclass(frozen=True)
class DoUnset:
    attr: str


@dataclass(frozen=True)
class DoGraphSet:
    var: str
    attr: str
    value: object


@dataclass(frozen=True)
class DoHandler:
    handler: str
    template: Template


@dataclass(frozen=True)
class KnowledgeItem:
    name: str
    expert_tag: str
    meta: tuple  # ((key, value), ...) in source order
    on_pattern: tuple  # MatchClause, ...
    when_condition: object
    do_program: tuple

    @property
    def kid(self) -> str:
        """Rule identity, and the RL action identifier."""
        return f"{self.expert_tag}/{self.name}"


# --- lexer ---------------------------------------------------------------------

_LEX_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<number>-?\d+\.\d+|-?\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_-]*(?:/[A-Za-z_][A-Za-z0-9_-]*)?)
  | (?P<var>\$[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>==|!=|<=|>=|<|>)
  | (?P<punct>[{}\[\](),.:])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str  # STRING NUMBER NAME VAR OP PUNCT EOF
    text: str
    value: object
    line: int
    col: int


def _lex(text: str, source: str = "") -> list[_Tok]:
    toks: list[_Tok] = []
    line, col, pos = 1, 1, 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch == '"':
            value, raw_len, nl = _read_string(text, pos, line, col, source)
            toks.append(_Tok("STRING", text[pos:pos + raw_len], value, line, col))
            for c in text[pos:pos + raw_len]:
                if c == "\n":
                    line += 1
                    col = 1
                else:
                    col += 1
            pos += raw_len
            continue
        m = _LEX_RE.match(text, pos)
        if m is None:
            raise KiSyntaxError(f"unexpected character {ch!r}", line, col, source=source)
        kind = m.lastgroup
        raw = m.group()
        if kind == "ws":
            for c in raw:
                if c == "\n":
                    line += 1
                    col = 1
                else:
                    col += 1
        elif kind == "comment":
            col += len(raw)
        else:
            if kind == "number":
                value: object = float(raw) if "." in raw else int(raw)
                toks.append(_Tok("NUMBER", raw, value, line, col))
            elif kind == "name":
                toks.append(_Tok("NAME", raw, raw, line, col))
            elif kind == "var":
                toks.append(_Tok("VAR", raw, raw[1:], line, col))
            elif kind == "op":
                toks.append(_Tok("OP", raw, raw, line, col))
            else:
                toks.append(_Tok("PUNCT", raw, raw, line, col))
            col += len(raw)
        pos = m.end()
    toks.append(_Tok("EOF", "", None, line, col))
    return toks


def _read_string(text: str, pos: int, line: int, col: int, source: str):
    """Read a quoted string starting at pos; returns (value, raw length)."""
    out = []
    i = pos + 1
    while i < len(text):
        ch = text[i]
        if ch == '"':
            return "".join(out), i - pos + 1, None
        if ch == "\n":
            raise KiSyntaxError("unterminated string", line, col, source=source)
        if ch == "\\":
            if i + 1 >= len(text):
                break
            esc = text[i + 1]
            mapped = {"n": "\n", "t": "\t", '"': '"', "\\": "\\", "$": "$"}.get(esc)
            if mapped is None:
                raise KiSyntaxError(f"bad escape \\{esc}", line, col, source=source)
            out.append(mapped)
            i += 2
            continue
        out.append(ch)
        i += 1
    raise KiSyntaxError("unterminated string", line, col, source=source)


# --- parser --------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str, expert_tag: str, source: str = ""):
        self.toks = _lex(text, source)
        self.pos = 0
        self.expert_tag = expert_tag
        self.source = source
        self.block = ""
        self.node_vars: set[str] = set()
        self.scalar_vars: set[str] = set()

    # token helpers

    def peek(self, ahead: int = 0) -> _Tok:
        i = min(self.pos + ahead, len(self.toks) - 1)
        return self.toks[i]

    def next(self) -> _Tok:
        tok = self.toks[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def error(self, message: str, tok: _Tok | None = None, cls=KiSyntaxError):
        tok = tok or self.peek()
        raise cls(message, tok.line, tok.col, self.block, self.source)

    def expect_punct(self, ch: str):
        tok = self.next()
        if tok.kind != "PUNCT" or tok.text != ch:
            self.error(f"expected {ch!r}, got {tok.text or 'end of file'!r}", tok)
        return tok

    def expect_name(self, what: str = "a name") -> _Tok:
        tok = self.next()
        if tok.kind != "NAME":
            self.error(f"expected {what}, got {tok.text or 'end of file'!r}", tok)
        return tok

    def expect_keyword(self, word: str):
        tok = self.next()
        if tok.kind != "NAME" or tok.text != word:
            self.error(f"expected {word!r}, got {tok.text or 'end of file'!r}", tok)
        return tok

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "NAME" and tok.text == word

    # grammar

    def parse_rules(self) -> list[KnowledgeItem]:
        rules = []
        while self.peek().kind != "EOF":
            rules.append(self.parse_rule())
        if not rules:
            self.error("no rules in source")
        return rules

    def parse_rule(self) -> KnowledgeItem:
        self.node_vars = set()
        self.scalar_vars = set()
        self.block = "ki"
        self.expect_keyword("ki")
        name_tok = self.next()
        if name_tok.kind != "STRING":
            self.error("expected the rule name as a quoted string", name_tok)
        meta = self._meta_block()
        self.block = "on"
        self.expect_keyword("on")
        on = self._on_block()
        when = Lit(True)
        if self.at_keyword("when"):
            self.block = "when"
            self.next()
            when = self._when_block()
        self.block = "do"
        self.expect_keyword("do")
        do = self._do_block()
        return KnowledgeItem(
            name=name_tok.value,
            expert_tag=self.expert_tag,
            meta=meta,
            on_pattern=on,
            when_condition=when,
            do_program=do,
        )

    def _meta_block(self) -> tuple:
        self.expect_punct("{")
        entries = []
        seen = set()
        while not (self.peek().kind == "PUNCT" and self.peek().text == "}"):
            key = self.expect_name("a metadata key")
            if key.text in seen:
                self.error(f"duplicate metadata key {key.text!r}", key)
            seen.add(key.text)
            self.expect_punct(":")
            entries.append((key.text, self._literal().value))
            if self.peek().text == ",":
                self.next()
        self.expect_punct("}")
        return tuple(entries)

    def _literal(self) -> Lit:
        tok = self.next()
        if tok.kind == "STRING" or tok.kind == "NUMBER":
            return Lit(tok.value)
        if tok.kind == "NAME" and tok.text in ("true", "false"):
            return Lit(tok.text == "true")
        self.error(f"expected a literal, got {tok.text or 'end of file'!r}", tok)

    # ON block

    def _on_block(self) -> tuple:
        self.expect_punct("{")
        clauses = []
        while self.at_keyword("match"):
            clauses.append(self._match_clause())
        if not clauses:
            self.error("on block needs at least one match clause")
        self.expect_punct("}")
        return tuple(clauses)

    def _match_clause(self) -> MatchClause:
        self.expect_keyword("match")
        etype = self.expect_name("an entity type")
        self.expect_keyword("as")
        var = self._fresh_node_var()
        constraints = ()
        if self.peek().text == "{":
            constraints = self._constraints()
        related = []
        while self.at_keyword("related"):
            related.append(self._related_clause())
        return MatchClause(etype.text, var, constraints, tuple(related))

    def _related_clause(self) -> RelatedClause:
        self.expect_keyword("related")
        self.expect_keyword("via")
        verb = self.expect_name("a verb name")
        self.expect_keyword("to")
        etype = self.expect_name("an entity type")
        self.expect_keyword("as")
        var = self._fresh_node_var()
        constraints = ()
        if self.peek().text == "{":
            constraints = self._constraints()
        return RelatedClause(verb.text, etype.text, var, constraints)

    def _fresh_node_var(self) -> str:
        tok = self.next()
        if tok.kind != "VAR":
            self.error("expected a $variable", tok)
        if tok.value in self.node_vars or tok.value in self.scalar_vars:
            self.error(f"variable ${tok.value} is already bound", tok)
        self.node_vars.add(tok.value)
        return tok.value

    def _constraints(self) -> tuple:
        self.expect_punct("{")
        out = []
        while not (self.peek().kind == "PUNCT" and self.peek().text == "}"):
            attr = self.expect_name("an attribute name")
            op_tok = self.next()
            if not (op_tok.kind == "OP" or (op_tok.kind == "NAME" and op_tok.text == "in")):
                self.error("expected a comparison operator", op_tok)
            op = op_tok.text
            value = self._constraint_value(op, op_tok)
            out.append(AttrConstraint(attr.text, op, value))
            if self.peek().text == ",":
                self.next()
        self.expect_punct("}")
        return tuple(out)

    def _constraint_value(self, op: str, op_tok: _Tok):
        tok = self.peek()
        if tok.kind == "VAR":
            self.next()
            if tok.value in self.node_vars:
                return VarRef(tok.value)
            if tok.value in self.scalar_vars:
                return VarRef(tok.value)
            if op != "==":
                self.error(
                    f"${tok.value} is unbound; only '==' may introduce a variable",
                    tok,
                    UnboundVariableError,
                )
            self.scalar_vars.add(tok.value)
            return VarRef(tok.value)
        if tok.text == "[":
            return self._list_literal(literals_only=True)
        return self._literal()

    # WHEN block

    def _when_block(self):
        self.expect_punct("{")
        if self.peek().text == "}":
            self.next()
            return Lit(True)
        expr = self._or_expr()
        self.expect_punct("}")
        return expr

    def _or_expr(self):
        parts = [self._and_expr()]
        while self.at_keyword("or"):
            self.next()
            parts.append(self._and_expr())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def _and_expr(self):
        parts = [self._unary()]
        while self.at_keyword("and"):
            self.next()
            parts.append(self._unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def _unary(self):
        if self.at_keyword("not"):
            self.next()
            return Not(self._unary())
        if self.peek().text == "(" and self.peek().kind == "PUNCT":
            self.next()
            expr = self._or_expr()
            self.expect_punct(")")
            return expr
        return self._comparison()

    def _comparison(self):
        left = self._operand()
        tok = self.peek()
        if tok.kind == "NAME" and tok.text == "exists":
            self.next()
            return Exists(left)
        if tok.kind == "OP" or (tok.kind == "NAME" and tok.text == "in"):
            self.next()
            right = self._operand()
            return Cmp(tok.text, left, right)
        return left  # bare boolean operand (e.g. `true` or `$flag`)

    def _operand(self):
        tok = self.peek()
        if tok.text == "[":
            return self._list_literal(literals_only=False)
        if tok.kind == "VAR":
            self.next()
            if tok.value not in self.node_vars and tok.value not in self.scalar_vars:
                self.error(f"${tok.value} is not bound by the on block", tok,
                           UnboundVariableError)
            if self.peek().text == "." and self.peek().kind == "PUNCT":
                self.next()
                attr = self.expect_name("an attribute name")
                if tok.value not in self.node_vars:
                    self.error(
                        f"${tok.value} is a scalar binding and has no attributes", tok
                    )
                return VarAttr(tok.value, attr.text)
            return VarRef(tok.value)
        if tok.kind == "NAME" and tok.text == "issue":
            self.next()
            self.expect_punct(".")
            attr = self.expect_name("an issue attribute name")
            return IssueRef(attr.text)
        return self._literal()

    def _list_literal(self, literals_only: bool) -> ListLit:
        self.expect_punct("[")
        items = []
        while not (self.peek().kind == "PUNCT" and self.peek().text == "]"):
            if literals_only:
                items.append(self._literal())
            else:
                items.append(self._operand())
            if self.peek().text == ",":
                self.next()
        self.expect_punct("]")
        return ListLit(tuple(items))

    # DO block

    def _do_block(self) -> tuple:
        open_tok = self.expect_punct("{")
        stmts = []
        while not (self.peek().kind == "PUNCT" and self.peek().text == "}"):
            stmts.append(self._do_stmt())
        self.expect_punct("}")
        if not stmts:
            self.error("do block must not be empty", open_tok, EmptyDoError)
        return tuple(stmts)

    def _do_stmt(self):
        tok = self.peek()
        if tok.kind == "NAME" and tok.text == "issue":
            self.next()
            self.expect_punct(".")
            verb = self.expect_name("'set' or 'unset'")
            if verb.text == "set":
                attr = self.expect_name("an issue attribute name")
                return DoSet(attr.text, self._operand())
            if verb.text == "unset":
                attr = self.expect_name("an issue attribute name")
                return DoUnset(attr.text)
            self.error("expected issue.set or issue.unset", verb)
        if tok.kind == "NAME" and tok.text == "graph":
            self.next()
            self.expect_punct(".")
            verb = self.expect_name("'set'")
            if verb.text != "set":
                self.error("expected graph.set", verb)
            var_tok = self.next()
            if var_tok.kind != "VAR":
                self.error("graph.set needs a node $variable", var_tok)
            if var_tok.value not in self.node_vars:
                self.error(
                    f"${var_tok.value} is not a node bound by the on block",
                    var_tok,
                    UnboundVariableError,
                )
            self.expect_punct(".")
            attr = self.expect_name("an attribute name")
            return DoGraphSet(var_tok.value, attr.text, self._operand())
        if tok.kind == "NAME" and tok.text == "handler":
            self.next()
            name = self.expect_name("a handler name")
            text_tok = self.next()
            if text_tok.kind != "STRING":
                self.error("expected a command template string", text_tok)
            template = self._parse_template(text_tok)
            return DoHandler(name.text, template)
        self.error(
            f"expected issue.set / issue.unset / graph.set / handler, "
            f"got {tok.text or 'end of file'!r}",
            tok,
        )

    def _parse_template(self, tok: _Tok) -> Template:
        text = tok.value
        parts: list = []
        chunk = []
        i = 0
        while i < len(text):
            if text.startswith("${", i):
                end = text.find("}", i + 2)
                if end < 0:
                    self.error("unterminated ${...} in command template", tok)
                if chunk:
                    parts.append("".join(chunk))
                    chunk = []
                inner = text[i + 2:end]
                parts.append(self._parse_inner_operand(inner, tok))
                i = end + 1
                continue
            chunk.append(text[i])
            i += 1
        if chunk:
            parts.append("".join(chunk))
        return Template(tuple(parts))

    def _parse_inner_operand(self, inner: str, tok: _Tok):
        sub = _Parser(inner, self.expert_tag, self.source)
        sub.block = self.block
        sub.node_vars = self.node_vars
        sub.scalar_vars = self.scalar_vars
        try:
            expr = sub._operand()
        except KiSyntaxError as exc:
            if isinstance(exc, UnboundVariableError):
                raise UnboundVariableError(
                    f"in ${{...}}: {exc.args[0].split(': ', 1)[-1]}",
                    tok.line, tok.col, self.block, self.source,
                ) from None
            raise KiSyntaxError(
                f"bad ${{...}} expression {inner!r}", tok.line, tok.col,
                self.block, self.source,
            ) from None
        if sub.peek().kind != "EOF":
            self.error(f"bad ${{...}} expression {inner!r}", tok)
        return expr


# --- public API ------------------------------------------------------------------


def parse_rules(text: str, expert_tag: str = "", source: str = "") -> list[KnowledgeItem]:
    """Parse one or more rules from a source text."""
    return _Parser(text, expert_tag, source).parse_rules()


def parse_ki(text: str, expert_tag: str = "", source: str = "") -> KnowledgeItem:
    """Parse exactly one rule."""
    rules = parse_rules(text, expert_tag, source)
    if len(rules) != 1:
        raise KiError(f"expected exactly one rule, found {len(rules)}")
    return rules[0]


def parse_pack(
    sources: Iterable[tuple[str, str]], expert_tag: str
) -> list[KnowledgeItem]:
    """Parse a pack of rule sources, tagging every rule with expert_tag.

    Duplicate rule names within one pack are rejected; the same name may
    coexist across packs because identity includes the tag.
    """
    rules: list[KnowledgeItem] = []
    seen: dict[str, str] = {}
    for name, text in sources:
        for rule in parse_rules(text, expert_tag, source=name):
            if rule.name in seen:
                raise DuplicateRuleNameError(
                    f"rule {rule.name!r} defined in both {seen[rule.name]} and {name}"
                )
            seen[rule.name] = name
            rules.append(rule)
    return rules


def load_pack(directory: str | Path) -> list[KnowledgeItem]:
    """Load every .ki file from a pack directory; the directory name is the tag."""
    path = Path(directory)
    if not path.is_dir():
        raise KiError(f"pack directory not found: {path}")
    files = sorted(path.glob("*.ki"))
    if not files:
        raise KiError(f"no .ki files in pack directory {path}")
    return parse_pack(
        ((str(f), f.read_text(encoding="utf-8")) for f in files), path.name
    )


def load_knowledge_base(directories: Iterable[str | Path]) -> list[KnowledgeItem]:
    """Load several packs into one knowledge base, sorted by rule identity."""
    rules: list[KnowledgeItem] = []
    tags = set()
    for d in directories:
        tag = Path(d).name
        if tag in tags:
            raise KiError(f"pack tag {tag!r} given twice")
        tags.add(tag)
        rules.extend(load_pack(d))
    return sorted(rules, key=lambda r: r.kid)


# --- printer ---------------------------------------------------------------------


def _fmt_literal(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return '"' + _escape(value) + '"'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _escape(s: str) -> str:
    out = s.replace("\\", "\\\\").replace('"', '\\"')
    out = out.replace("\n", "\\n").replace("\t", "\\t")
    return out.replace("${", "\\${")


def _fmt_operand(expr) -> str:
    if isinstance(expr, Lit):
        return _fmt_literal(expr.value)
    if isinstance(expr, VarRef):
        return f"${expr.name}"
    if isinstance(expr, VarAttr):
        return f"${expr.var}.{expr.attr}"
    if isinstance(expr, IssueRef):
        return f"issue.{expr.attr}"
    if isinstance(expr, ListLit):
        return "[" + ", ".join(_fmt_operand(i) for i in expr.items) + "]"
    raise TypeError(f"not an operand: {expr!r}")


def _fmt_expr(expr) -> str:
    if isinstance(expr, Or):
        return " or ".join(
            f"({_fmt_expr(p)})" if isinstance(p, Or) else _fmt_expr(p)
            for p in expr.parts
        )
    if isinstance(expr, And):
        return " and ".join(
            f"({_fmt_expr(p)})" if isinstance(p, (Or, And)) else _fmt_expr(p)
            for p in expr.parts
        )
    if isinstance(expr, Not):
        return f"not ({_fmt_expr(expr.operand)})"
    if isinstance(expr, Exists):
        return f"{_fmt_operand(expr.operand)} exists"
    if isinstance(expr, Cmp):
        return f"{_fmt_operand(expr.left)} {expr.op} {_fmt_operand(expr.right)}"
    return _fmt_operand(expr)


def _fmt_constraints(constraints: tuple) -> str:
    if not constraints:
        return ""
    inner = ", ".join(
        f"{c.attr} {c.op} {_fmt_operand(c.value)}" for c in constraints
    )
    return " { " + inner + " }"


def _fmt_template(template: Template) -> str:
    out = []
    for part in template.parts:
        if isinstance(part, str):
            out.append(_escape(part))
        else:
            out.append("${" + _fmt_operand(part) + "}")
    return '"' + "".join(out) + '"'


def print_ki(rule: KnowledgeItem) -> str:
    """Render a rule in canonical form; parsing it back yields an equal AST."""
    lines = [f'ki "{_escape(rule.name)}" {{']
    for key, value in rule.meta:
        lines.append(f"    {key}: {_fmt_literal(value)}")
    lines.append("}")
    lines.append("on {")
    for clause in rule.on_pattern:
        lines.append(
            f"    match {clause.entity_type} as ${clause.var}"
            f"{_fmt_constraints(clause.constraints)}"
        )
        for rel in clause.related:
            lines.append(
                f"        related via {rel.verb} to {rel.entity_type} as ${rel.var}"
                f"{_fmt_constraints(rel.constraints)}"
            )
    lines.append("}")
    if rule.when_condition != Lit(True):
        lines.append("when {")
        lines.append(f"    {_fmt_expr(rule.when_condition)}")
        lines.append("}")
    lines.append("do {")
    for stmt in rule.do_program:
        if isinstance(stmt, DoSet):
            lines.append(f"    issue.set {stmt.attr} {_fmt_operand(stmt.value)}")
        elif isinstance(stmt, DoUnset):
            lines.append(f"    issue.unset {stmt.attr}")
        elif isinstance(stmt, DoGraphSet):
            lines.append(
                f"    graph.set ${stmt.var}.{stmt.attr} {_fmt_operand(stmt.value)}"
            )
        elif isinstance(stmt, DoHandler):
            lines.append(f"    handler {stmt.handler} {_fmt_template(stmt.template)}")
        else:
            raise TypeError(f"unknown do statement {stmt!r}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def print_rules(rules: Iterable[KnowledgeItem]) -> str:
    return "\n".join(print_ki(r) for r in rules)
