"""Concrete text syntaxes: parsers and printers for the three query
languages and their database formats.

The syntaxes mirror the usual notation: patterns like ``(P1 AND P2)`` with
triple patterns ``(?x, p, ?y)``; rules like ``q(X) :- p(X, Y), not r(X).``
with facts carrying a ``* n`` multiplicity suffix; algebra expressions like
``project{W}(select{X=b}(R join S))``.  Reserved tokens (``NULL``, ``_|_``,
``alpha0`` ...) are rejected in user-authored input and accepted when
parsing translator-emitted artifacts via ``allow_reserved=True``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import datalog as dl
from . import mra
from . import sparql as sp
from .multiset import Multiset
from .terms import BOTTOM, Iri, Lit, Term, is_reserved_name, is_reserved_term


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int
    line: int
    column: int


class ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan, expected: frozenset[str] = frozenset()):
        self.message = message
        self.span = span
        self.expected = expected
        where = f"line {span.line}, column {span.column}"
        extra = f" (expected one of: {', '.join(sorted(expected))})" if expected else ""
        super().__init__(f"{message} at {where}{extra}")


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+|\#[^\n]*)
      | (?P<qdash>\?-)
      | (?P<colondash>:-)
      | (?P<andand>&&|∧)
      | (?P<oror>\|\||∨)
      | (?P<bottom>_\|_)
      | (?P<var>\?[A-Za-z_][A-Za-z0-9_]*)
      | (?P<int>\d+)
      | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<iri><[^<>\s]*>)
      | (?P<lit>"(?:[^"\\\n]|\\.)*")
      | (?P<bang>!|¬)
      | (?P<punct>[(){},.*=/\\+:])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: SourceSpan


def _tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            span = SourceSpan(pos, pos + 1, line, pos - line_start + 1)
            raise ParseError(f"unexpected character {text[pos]!r}", span)
        kind = m.lastgroup or "ws"
        lexeme = m.group()
        if kind == "ws":
            newlines = lexeme.count("\n")
            if newlines:
                line += newlines
                line_start = pos + lexeme.rfind("\n") + 1
        else:
            if kind == "punct":
                kind = lexeme
            span = SourceSpan(pos, m.end(), line, pos - line_start + 1)
            tokens.append(Token(kind, lexeme, span))
        pos = m.end()
    tokens.append(Token("eof", "", SourceSpan(n, n, line, n - line_start + 1)))
    return tokens


class _Parser:
    def __init__(self, text: str, allow_reserved: bool = False):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.allow_reserved = allow_reserved

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, *kinds: str) -> Token:
        tok = self.peek()
        if tok.kind not in kinds:
            raise ParseError(
                f"unexpected {tok.text!r}" if tok.kind != "eof" else "unexpected end of input",
                tok.span,
                frozenset(kinds),
            )
        return self.next()

    def at_eof(self) -> bool:
        return self.peek().kind == "eof"

    def check_reserved(self, name: str, span: SourceSpan) -> None:
        if not self.allow_reserved and is_reserved_name(name):
            raise ParseError(f"reserved token {name!r} in user input", span)

    def unescape_lit(self, tok: Token) -> str:
        body = tok.text[1:-1]
        return body.replace('\\"', '"').replace("\\\\", "\\")


_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")
_LOWER_IDENT_RE = re.compile(r"[a-z_][A-Za-z0-9_]*$")

_SPARQL_KEYWORDS = frozenset({"SELECT", "AND", "UNION", "EXCEPT", "FILTER", "bound", "false"})
_MRA_KEYWORDS = frozenset({"project", "select", "rename", "join"})
_DATALOG_KEYWORDS = frozenset({"not"})


def _escape_lit(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _print_term(t: Term, *, bare_ok, keywords: frozenset[str]) -> str:
    if isinstance(t, Lit):
        return _escape_lit(t.value)
    if t == BOTTOM:
        return "_|_"
    if bare_ok(t.value) and not is_reserved_name(t.value) and t.value not in keywords:
        return t.value
    return f"<{t.value}>"


# ===========================================================================
# SPARQL patterns
# ===========================================================================

def _sparql_term(p: _Parser) -> sp.TriplePart:
    tok = p.peek()
    if tok.kind == "var":
        p.next()
        return sp.Var(tok.text[1:])
    return _sparql_const(p)


def _sparql_const(p: _Parser) -> Term:
    tok = p.expect("ident", "iri", "lit", "bottom")
    if tok.kind == "lit":
        return Lit(p.unescape_lit(tok))
    if tok.kind == "bottom":
        p.check_reserved("_|_", tok.span)
        return BOTTOM
    name = tok.text[1:-1] if tok.kind == "iri" else tok.text
    p.check_reserved(name, tok.span)
    return Iri(name)


def _sparql_condition(p: _Parser) -> sp.FilterCondition:
    tok = p.peek()
    if tok.kind == "bang":
        p.next()
        return sp.CondNot(_sparql_condition(p))
    if tok.kind == "ident" and tok.text == "bound":
        p.next()
        p.expect("(")
        var = p.expect("var")
        p.expect(")")
        return sp.Bound(var.text[1:])
    if tok.kind == "ident" and tok.text == "false":
        p.next()
        if not p.allow_reserved:
            raise ParseError("constant 'false' is not part of the user syntax", tok.span)
        return sp.ConstFalse()
    if tok.kind == "(":
        p.next()
        if p.peek().kind == "var" and p.peek(1).kind == "=":
            var = p.next()
            p.expect("=")
            rhs_tok = p.peek()
            if rhs_tok.kind == "var":
                p.next()
                cond: sp.FilterCondition = sp.EqVar(var.text[1:], rhs_tok.text[1:])
            else:
                cond = sp.EqConst(var.text[1:], _sparql_const(p))
            p.expect(")")
            return cond
        left = _sparql_condition(p)
        op = p.expect("andand", "oror")
        right = _sparql_condition(p)
        p.expect(")")
        if op.kind == "andand":
            return sp.CondAnd(left, right)
        return sp.CondOr(left, right)
    if tok.kind in ("ident", "iri", "lit"):
        raise ParseError(
            "filter equalities must start with a variable (constant = constant is not supported)",
            tok.span,
        )
    raise ParseError("expected a filter condition", tok.span, frozenset({"(", "!", "bound"}))


def _sparql_pattern(p: _Parser) -> sp.Pattern:
    open_tok = p.expect("(")
    tok = p.peek()
    if tok.kind == "ident" and tok.text == "SELECT":
        p.next()
        names: list[str] = []
        while p.peek().kind == "var":
            names.append(p.next().text[1:])
        inner = _sparql_pattern(p)
        p.expect(")")
        return sp.Select(frozenset(names), inner)
    if tok.kind == "(":
        left = _sparql_pattern(p)
        op = p.expect("ident")
        if op.text == "FILTER":
            cond = _sparql_condition(p)
            p.expect(")")
            return sp.Filter(left, cond)
        if op.text not in ("AND", "UNION", "EXCEPT"):
            raise ParseError(
                f"unknown pattern operator {op.text!r}", op.span,
                frozenset({"AND", "UNION", "EXCEPT", "FILTER"}),
            )
        right = _sparql_pattern(p)
        p.expect(")")
        ctor = {"AND": sp.And, "UNION": sp.Union, "EXCEPT": sp.Except}[op.text]
        return ctor(left, right)
    # triple pattern
    s = _sparql_term(p)
    p.expect(",")
    pred = _sparql_term(p)
    p.expect(",")
    o = _sparql_term(p)
    p.expect(")")
    triple = sp.TriplePattern(s, pred, o)
    try:
        sp.validate_pattern(triple)
    except sp.PatternInvalidError as exc:
        raise ParseError(str(exc), open_tok.span) from exc
    return triple


def parse_sparql(text: str, allow_reserved: bool = False) -> sp.Pattern:
    p = _Parser(text, allow_reserved)
    pattern = _sparql_pattern(p)
    tok = p.peek()
    if not p.at_eof():
        raise ParseError(f"trailing input {tok.text!r}", tok.span)
    sp.validate_pattern(pattern)
    return pattern


def _sparql_bare_ok(value: str) -> bool:
    return bool(_IDENT_RE.match(value))


def print_sparql_term(t: sp.TriplePart) -> str:
    if isinstance(t, sp.Var):
        return f"?{t.name}"
    return _print_term(t, bare_ok=_sparql_bare_ok, keywords=_SPARQL_KEYWORDS)


def print_sparql_condition(phi: sp.FilterCondition) -> str:
    if isinstance(phi, sp.EqConst):
        return f"(?{phi.var} = {print_sparql_term(phi.value)})"
    if isinstance(phi, sp.EqVar):
        return f"(?{phi.left} = ?{phi.right})"
    if isinstance(phi, sp.Bound):
        return f"bound(?{phi.var})"
    if isinstance(phi, sp.ConstFalse):
        return "false"
    if isinstance(phi, sp.CondAnd):
        return f"({print_sparql_condition(phi.left)} && {print_sparql_condition(phi.right)})"
    if isinstance(phi, sp.CondOr):
        return f"({print_sparql_condition(phi.left)} || {print_sparql_condition(phi.right)})"
    if isinstance(phi, sp.CondNot):
        return f"!{print_sparql_condition(phi.inner)}"
    raise TypeError(f"not a filter condition: {phi!r}")


def print_sparql(pattern: sp.Pattern) -> str:
    if isinstance(pattern, sp.TriplePattern):
        return (
            f"({print_sparql_term(pattern.s)}, {print_sparql_term(pattern.p)}, "
            f"{print_sparql_term(pattern.o)})"
        )
    if isinstance(pattern, sp.And):
        return f"({print_sparql(pattern.left)} AND {print_sparql(pattern.right)})"
    if isinstance(pattern, sp.Union):
        return f"({print_sparql(pattern.left)} UNION {print_sparql(pattern.right)})"
    if isinstance(pattern, sp.Except):
        return f"({print_sparql(pattern.left)} EXCEPT {print_sparql(pattern.right)})"
    if isinstance(pattern, sp.Filter):
        return f"({print_sparql(pattern.pattern)} FILTER {print_sparql_condition(pattern.condition)})"
    if isinstance(pattern, sp.Select):
        names = " ".join(f"?{v}" for v in sorted(pattern.variables))
        sep = " " if names else ""
        return f"(SELECT {names}{sep}{print_sparql(pattern.pattern)})"
    raise TypeError(f"not a pattern: {pattern!r}")


# ===========================================================================
# Datalog programs and fact files
# ===========================================================================

@dataclass
class ParsedDatalog:
    goal: dl.Atom | None
    rules: tuple[dl.Rule, ...]
    facts: Multiset = field(default_factory=Multiset)

    def query(self) -> dl.DatalogQuery:
        if self.goal is None:
            raise ValueError("input has no goal line (?- ...)")
        return dl.DatalogQuery(self.goal, self.rules)


def _datalog_term(p: _Parser) -> dl.DTerm:
    tok = p.peek()
    if tok.kind == "var":
        p.next()
        return dl.DVar(tok.text[1:])
    if tok.kind == "ident" and tok.text[0].isupper():
        p.next()
        return dl.DVar(tok.text)
    return _sparql_const(p)


def _datalog_atom(p: _Parser) -> dl.Atom:
    name = p.expect("ident")
    if name.text in _DATALOG_KEYWORDS or name.text in _MRA_KEYWORDS:
        raise ParseError(f"{name.text!r} cannot be used as a predicate name", name.span)
    p.expect("(")
    args: list[dl.DTerm] = []
    if p.peek().kind != ")":
        args.append(_datalog_term(p))
        while p.peek().kind == ",":
            p.next()
            args.append(_datalog_term(p))
    p.expect(")")
    return dl.Atom(name.text, tuple(args))


def _datalog_literal(p: _Parser) -> dl.Literal:
    tok = p.peek()
    if tok.kind == "bang":
        p.next()
        return dl.Literal(_datalog_atom(p), positive=False)
    if tok.kind == "ident" and tok.text == "not" and p.peek(1).kind == "ident":
        p.next()
        return dl.Literal(_datalog_atom(p), positive=False)
    return dl.Literal(_datalog_atom(p))


def parse_datalog(text: str, allow_reserved: bool = False) -> ParsedDatalog:
    p = _Parser(text, allow_reserved)
    goal: dl.Atom | None = None
    rules: list[dl.Rule] = []
    facts: list[tuple[dl.Atom, int]] = []
    while not p.at_eof():
        tok = p.peek()
        if tok.kind == "qdash":
            p.next()
            if goal is not None:
                raise ParseError("multiple goal lines", tok.span)
            goal = _datalog_atom(p)
            p.expect(".")
            continue
        head = _datalog_atom(p)
        tok = p.peek()
        if tok.kind == "colondash":
            p.next()
            body = [_datalog_literal(p)]
            while p.peek().kind == ",":
                p.next()
                body.append(_datalog_literal(p))
            p.expect(".")
            rules.append(dl.Rule(head, tuple(body)))
        else:
            count = 1
            if tok.kind == "*":
                p.next()
                count = int(p.expect("int").text)
                if count < 1:
                    raise ParseError("fact multiplicity must be positive", tok.span)
            dot = p.expect(".")
            if not head.is_ground():
                raise ParseError(f"fact {head} contains variables", dot.span)
            facts.append((head, count))
    return ParsedDatalog(goal, tuple(rules), Multiset(facts))


def _datalog_bare_const_ok(value: str) -> bool:
    return bool(_LOWER_IDENT_RE.match(value)) and value not in _DATALOG_KEYWORDS


def print_datalog_term(t: dl.DTerm) -> str:
    if isinstance(t, dl.DVar):
        if t.name[:1].isupper() and _IDENT_RE.match(t.name):
            return t.name
        return f"?{t.name}"
    return _print_term(t, bare_ok=_datalog_bare_const_ok, keywords=_DATALOG_KEYWORDS)


def print_datalog_atom(atom: dl.Atom) -> str:
    args = ", ".join(print_datalog_term(a) for a in atom.args)
    return f"{atom.pred}({args})"


def print_datalog_rule(rule: dl.Rule) -> str:
    body = ", ".join(
        ("" if lit.positive else "not ") + print_datalog_atom(lit.atom) for lit in rule.body
    )
    return f"{print_datalog_atom(rule.head)} :- {body}."


def print_datalog(parsed: ParsedDatalog) -> str:
    lines: list[str] = []
    for fact, n in sorted(parsed.facts.items(), key=lambda item: print_datalog_atom(item[0])):
        suffix = f" * {n}" if n != 1 else ""
        lines.append(f"{print_datalog_atom(fact)}{suffix}.")
    for rule in parsed.rules:
        lines.append(print_datalog_rule(rule))
    if parsed.goal is not None:
        lines.append(f"?- {print_datalog_atom(parsed.goal)}.")
    return "\n".join(lines) + ("\n" if lines else "")


def print_datalog_query(query: dl.DatalogQuery) -> str:
    return print_datalog(ParsedDatalog(query.goal, query.program))


def print_facts(facts: Multiset) -> str:
    return print_datalog(ParsedDatalog(None, (), facts))


# ===========================================================================
# Algebra expressions and relation files
# ===========================================================================

def _mra_operand(p: _Parser) -> mra.Operand:
    tok = p.peek()
    if tok.kind == "ident":
        p.next()
        p.check_reserved(tok.text, tok.span)
        return mra.AmbiguousName(tok.text)
    if tok.kind == "iri":
        p.next()
        name = tok.text[1:-1]
        p.check_reserved(name, tok.span)
        return mra.ConstRef(Iri(name))
    if tok.kind == "lit":
        p.next()
        return mra.ConstRef(Lit(p.unescape_lit(tok)))
    if tok.kind == "bottom":
        p.next()
        p.check_reserved("_|_", tok.span)
        return mra.ConstRef(BOTTOM)
    raise ParseError("expected an attribute or constant", tok.span,
                     frozenset({"ident", "iri", "lit"}))


def _mra_formula(p: _Parser) -> mra.SelectionFormula:
    tok = p.peek()
    if tok.kind == "bang":
        p.next()
        return mra.FNot(_mra_formula(p))
    if tok.kind == "(":
        p.next()
        left = _mra_formula(p)
        op = p.peek()
        if op.kind == ")":
            p.next()
            return left
        op = p.expect("andand", "oror")
        right = _mra_formula(p)
        p.expect(")")
        return mra.FAnd(left, right) if op.kind == "andand" else mra.FOr(left, right)
    left_op = _mra_operand(p)
    p.expect("=")
    right_op = _mra_operand(p)
    return mra.FEq(left_op, right_op)


def _mra_attr(p: _Parser) -> str:
    tok = p.expect("ident")
    return tok.text


def _mra_expr(p: _Parser) -> mra.MraExpr:
    tok = p.peek()
    if tok.kind == "ident" and tok.text == "project":
        p.next()
        p.expect("{")
        attrs = [_mra_attr(p)]
        while p.peek().kind == ",":
            p.next()
            attrs.append(_mra_attr(p))
        p.expect("}")
        p.expect("(")
        inner = _mra_expr(p)
        p.expect(")")
        return mra.Project(frozenset(attrs), inner)
    if tok.kind == "ident" and tok.text == "select":
        p.next()
        p.expect("{")
        formula = _mra_formula(p)
        p.expect("}")
        p.expect("(")
        inner = _mra_expr(p)
        p.expect(")")
        return mra.Select(formula, inner)
    if tok.kind == "ident" and tok.text == "rename":
        p.next()
        p.expect("{")
        old = _mra_attr(p)
        p.expect("/")
        new = _mra_attr(p)
        p.expect("}")
        p.expect("(")
        inner = _mra_expr(p)
        p.expect(")")
        return mra.Rename(old, new, inner)
    if tok.kind == "ident":
        p.next()
        if tok.text in _MRA_KEYWORDS:
            raise ParseError(f"{tok.text!r} cannot be used as a relation name", tok.span)
        return mra.RelName(tok.text)
    if tok.kind == "(":
        p.next()
        left = _mra_expr(p)
        op = p.peek()
        if op.kind == "ident" and op.text == "join":
            p.next()
            right = _mra_expr(p)
            p.expect(")")
            return mra.Join(left, right)
        if op.kind == "+":
            p.next()
            right = _mra_expr(p)
            p.expect(")")
            return mra.UnionExpr(left, right)
        if op.kind == "\\":
            p.next()
            right = _mra_expr(p)
            p.expect(")")
            return mra.ExceptExpr(left, right)
        raise ParseError(f"unexpected {op.text!r}", op.span, frozenset({"join", "+", "\\"}))
    raise ParseError("expected an algebra expression", tok.span,
                     frozenset({"ident", "("}))


def parse_mra(text: str, allow_reserved: bool = False) -> mra.MraExpr:
    p = _Parser(text, allow_reserved)
    expr = _mra_expr(p)
    tok = p.peek()
    if not p.at_eof():
        raise ParseError(f"trailing input {tok.text!r}", tok.span)
    return expr


def _mra_bare_ok(value: str) -> bool:
    return bool(_IDENT_RE.match(value)) and value not in _MRA_KEYWORDS


def print_mra_operand(op: mra.Operand) -> str:
    if isinstance(op, mra.AmbiguousName):
        return op.name
    if isinstance(op, mra.AttrRef):
        return op.name
    return _print_term(op.value, bare_ok=lambda _v: False, keywords=_MRA_KEYWORDS)


def print_mra_formula(psi: mra.SelectionFormula) -> str:
    if isinstance(psi, mra.FEq):
        return f"{print_mra_operand(psi.left)} = {print_mra_operand(psi.right)}"
    if isinstance(psi, mra.FAnd):
        return f"({print_mra_formula(psi.left)} && {print_mra_formula(psi.right)})"
    if isinstance(psi, mra.FOr):
        return f"({print_mra_formula(psi.left)} || {print_mra_formula(psi.right)})"
    if isinstance(psi, mra.FNot):
        inner = print_mra_formula(psi.inner)
        if isinstance(psi.inner, mra.FEq):
            return f"!({inner})"
        return f"!{inner}"
    raise TypeError(f"not a selection formula: {psi!r}")


def print_mra(expr: mra.MraExpr) -> str:
    if isinstance(expr, mra.RelName):
        return expr.name
    if isinstance(expr, mra.Project):
        return f"project{{{', '.join(sorted(expr.attributes))}}}({print_mra(expr.expr)})"
    if isinstance(expr, mra.Select):
        return f"select{{{print_mra_formula(expr.formula)}}}({print_mra(expr.expr)})"
    if isinstance(expr, mra.Rename):
        return f"rename{{{expr.old}/{expr.new}}}({print_mra(expr.expr)})"
    if isinstance(expr, mra.Join):
        return f"({print_mra(expr.left)} join {print_mra(expr.right)})"
    if isinstance(expr, mra.UnionExpr):
        return f"({print_mra(expr.left)} + {print_mra(expr.right)})"
    if isinstance(expr, mra.ExceptExpr):
        return f"({print_mra(expr.left)} \\ {print_mra(expr.right)})"
    raise TypeError(f"not an expression: {expr!r}")


_REL_HEADER_RE = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*\(([^)]*)\)\s*:\s*$")


def parse_relations(text: str, allow_reserved: bool = False) -> mra.MraDatabase:
    """Relation files: a ``Name(Attr, ...):`` header per relation followed by
    one row per line, with an optional ``* n`` multiplicity suffix."""
    db: mra.MraDatabase = {}
    current_name: str | None = None
    current_attrs: list[str] = []
    rows: list[tuple[mra.MraTuple, int]] = []

    def flush() -> None:
        nonlocal rows
        if current_name is not None:
            db[current_name] = mra.Relation(current_attrs, Multiset(rows))
        rows = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        header = _REL_HEADER_RE.match(line)
        if header:
            flush()
            current_name = header.group(1)
            if current_name in db:
                raise ParseError(
                    f"duplicate relation {current_name}",
                    SourceSpan(0, 0, lineno, 1),
                )
            attr_text = header.group(2).strip()
            current_attrs = (
                [a.strip() for a in attr_text.split(",")] if attr_text else []
            )
            if len(set(current_attrs)) != len(current_attrs):
                raise ParseError("duplicate attribute in header", SourceSpan(0, 0, lineno, 1))
            continue
        if current_name is None:
            raise ParseError("row before any relation header", SourceSpan(0, 0, lineno, 1))
        row_parser = _Parser(line, allow_reserved)
        values = [_rel_value(row_parser)]
        while row_parser.peek().kind == ",":
            row_parser.next()
            values.append(_rel_value(row_parser))
        count = 1
        if row_parser.peek().kind == "*":
            row_parser.next()
            count_tok = row_parser.expect("int")
            count = int(count_tok.text)
            if count < 1:
                raise ParseError("multiplicity must be positive", count_tok.span)
        if not row_parser.at_eof():
            tok = row_parser.peek()
            raise ParseError(f"trailing input {tok.text!r} in row", tok.span)
        if len(values) != len(current_attrs):
            raise ParseError(
                f"row has {len(values)} values, schema has {len(current_attrs)}",
                SourceSpan(0, 0, lineno, 1),
            )
        rows.append((mra.MraTuple(zip(current_attrs, values)), count))
    flush()
    return db


def _rel_value(p: _Parser) -> Term:
    tok = p.expect("ident", "iri", "lit", "bottom")
    if tok.kind == "lit":
        return Lit(p.unescape_lit(tok))
    if tok.kind == "bottom":
        p.check_reserved("_|_", tok.span)
        return BOTTOM
    name = tok.text[1:-1] if tok.kind == "iri" else tok.text
    p.check_reserved(name, tok.span)
    return Iri(name)


def _print_rel_value(t: Term) -> str:
    return _print_term(t, bare_ok=lambda v: bool(_IDENT_RE.match(v)), keywords=frozenset())


def print_relations(db: mra.MraDatabase) -> str:
    chunks: list[str] = []
    for name in sorted(db):
        rel = db[name]
        attrs = sorted(rel.attributes)
        lines = [f"{name}({', '.join(attrs)}):"]
        rendered = sorted(
            (
                ", ".join(_print_rel_value(t.get(a)) for a in attrs)
                + (f" * {n}" if n != 1 else "")
            )
            for t, n in rel.tuples.items()
        )
        lines.extend(f"  {row}" for row in rendered)
        chunks.append("\n".join(lines))
    return "\n\n".join(chunks) + ("\n" if chunks else "")


# ===========================================================================
# RDF graphs
# ===========================================================================

def parse_rdf(text: str, allow_reserved: bool = False) -> sp.Graph:
    """Line-oriented triples: ``<s> <p> <o> .`` with quoted literals in the
    object slot; duplicate lines collapse (a graph is a set)."""
    p = _Parser(text, allow_reserved)
    triples: set[sp.Triple] = set()
    while not p.at_eof():
        s = _rdf_iri(p)
        pred = _rdf_iri(p)
        tok = p.peek()
        if tok.kind == "lit":
            p.next()
            o: Term = Lit(p.unescape_lit(tok))
        else:
            o = _rdf_iri(p)
        p.expect(".")
        triples.add(sp.Triple(s, pred, o))
    return sp.Graph(triples)


def _rdf_iri(p: _Parser) -> Iri:
    tok = p.expect("iri")
    name = tok.text[1:-1]
    p.check_reserved(name, tok.span)
    return Iri(name)


def print_rdf(graph: sp.Graph) -> str:
    lines = sorted(
        f"<{t.s.value}> <{t.p.value}> "
        + (_escape_lit(t.o.value) if isinstance(t.o, Lit) else f"<{t.o.value}>")
        + " ."
        for t in graph
    )
    return "\n".join(lines) + ("\n" if lines else "")
