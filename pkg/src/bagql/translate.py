"""The six simulation triples between the SPARQL fragment (1), multiset
Datalog (2) and the multiset algebra (3).

Each direction is a triple (f, g, h): f translates queries, g translates
databases, h pulls answers back, and the contract is

    Eval_src(Q, D) = h(Eval_dst(f(Q), g(D))).

Constants are shared across languages (see ``terms``), so the h-functions
copy values verbatim and only handle the unbound/NULL markers.  Fresh
predicate, variable and attribute names are drawn from deterministic
counters scoped to one translation run, which keeps goldens stable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from . import datalog as dl
from . import mra
from . import sparql as sp
from .multiset import Multiset, coloring
from .terms import (
    BOTTOM,
    NULL,
    RESERVED_PREDICATES,
    RESERVED_RELATIONS,
    Iri,
    Term,
    alpha,
    is_reserved_name,
    is_reserved_term,
    term_text,
)


class TranslationError(Exception):
    """Base error for the translators."""


class PreconditionError(TranslationError):
    """Input query is not in the required normal form or fragment."""


class ReservedNameError(TranslationError):
    """User input collides with translator vocabulary."""


class MalformedAnswerError(TranslationError):
    """Answer multiset lacks or duplicates the variable-marker row."""


class _Fresh:
    """Deterministic fresh-name source for one translation run."""

    def __init__(self, used: Iterable[str] = ()):
        self._used = set(used)

    def claim(self, *names: str) -> None:
        self._used.update(names)

    def fresh(self, base: str) -> str:
        if base not in self._used:
            self._used.add(base)
            return base
        i = 2
        while f"{base}_{i}" in self._used:
            i += 1
        name = f"{base}_{i}"
        self._used.add(name)
        return name


def _check_term(t: Term, where: str) -> None:
    if is_reserved_term(t):
        raise ReservedNameError(f"reserved term {term_text(t)} in {where}")


# ===========================================================================
# SPARQL -> Datalog  (g12, f12, h12)
# ===========================================================================

def g12(graph: sp.Graph) -> dl.FactMultiset:
    """Encode a graph as facts: triple/3 plus the term, eq and comp tables
    and the unbound marker."""
    for t in sorted(graph.terms(), key=term_text):
        _check_term(t, "graph")
    facts: list[tuple[dl.Atom, int]] = []
    for t in graph.terms():
        facts.append((dl.Atom("term", (t,)), 1))
        facts.append((dl.Atom("eq", (t, t)), 1))
        facts.append((dl.Atom("comp", (t, t, t)), 1))
        facts.append((dl.Atom("comp", (t, BOTTOM, t)), 1))
        facts.append((dl.Atom("comp", (BOTTOM, t, t)), 1))
    for triple in graph:
        facts.append((dl.Atom("triple", (triple.s, triple.p, triple.o)), 1))
    facts.append((dl.Atom("comp", (BOTTOM, BOTTOM, BOTTOM)), 1))
    facts.append((dl.Atom("null", (BOTTOM,)), 1))
    return Multiset(facts)


def _pattern_terms(p: sp.Pattern) -> set[Term]:
    if isinstance(p, sp.TriplePattern):
        return {x for x in (p.s, p.p, p.o) if not isinstance(x, sp.Var)}
    if isinstance(p, (sp.And, sp.Union, sp.Except)):
        return _pattern_terms(p.left) | _pattern_terms(p.right)
    if isinstance(p, sp.Filter):
        return _pattern_terms(p.pattern) | _cond_terms(p.condition)
    if isinstance(p, sp.Select):
        return _pattern_terms(p.pattern)
    raise TypeError(f"not a pattern: {p!r}")


def _cond_terms(phi: sp.FilterCondition) -> set[Term]:
    if isinstance(phi, sp.EqConst):
        return {phi.value}
    if isinstance(phi, (sp.CondAnd, sp.CondOr)):
        return _cond_terms(phi.left) | _cond_terms(phi.right)
    if isinstance(phi, sp.CondNot):
        return _cond_terms(phi.inner)
    return set()


def _sorted_var_atom(pred: str, names: Iterable[str]) -> dl.Atom:
    return dl.Atom(pred, tuple(dl.DVar(v) for v in sorted(names)))


def f12(pattern: sp.Pattern) -> dl.DatalogQuery:
    """Compile a normalized, filter-reduced pattern into rules, one fresh
    predicate per parse-tree node in post-order."""
    sp.validate_pattern(pattern)
    if not sp.is_normalized(pattern):
        raise PreconditionError("pattern must be normalized before translation")
    if not sp.filters_atomic(pattern):
        raise PreconditionError("filter conditions must be atomic (run reduce_filters)")
    for t in sorted(_pattern_terms(pattern), key=term_text):
        _check_term(t, "pattern")

    fresh = _Fresh(sp.pattern_vars(pattern))
    rules: list[dl.Rule] = []
    counter = [0]

    def next_pred() -> str:
        counter[0] += 1
        return f"p{counter[0]}"

    def delta(p: sp.Pattern) -> dl.Atom:
        if isinstance(p, sp.TriplePattern):
            pred = next_pred()
            head = _sorted_var_atom(pred, sp.triple_pattern_vars(p))
            args = tuple(
                dl.DVar(x.name) if isinstance(x, sp.Var) else x
                for x in (p.s, p.p, p.o)
            )
            rules.append(dl.Rule(head, (dl.Literal(dl.Atom("triple", args)),)))
            return head
        if isinstance(p, sp.And):
            h1, h2 = delta(p.left), delta(p.right)
            pred = next_pred()
            shared = sorted(
                {a.name for a in h1.args} & {a.name for a in h2.args}
            )
            v1 = {x: fresh.fresh(f"{x}1") for x in shared}
            v2 = {x: fresh.fresh(f"{x}2") for x in shared}
            lit1 = dl.Atom(h1.pred, tuple(dl.DVar(v1.get(a.name, a.name)) for a in h1.args))
            lit2 = dl.Atom(h2.pred, tuple(dl.DVar(v2.get(a.name, a.name)) for a in h2.args))
            body = [dl.Literal(lit1), dl.Literal(lit2)]
            for x in shared:
                body.append(dl.Literal(dl.Atom("comp", (dl.DVar(v1[x]), dl.DVar(v2[x]), dl.DVar(x)))))
            head = _sorted_var_atom(pred, sp.in_scope(p))
            rules.append(dl.Rule(head, tuple(body)))
            return head
        if isinstance(p, sp.Union):
            h1, h2 = delta(p.left), delta(p.right)
            pred = next_pred()
            head = _sorted_var_atom(pred, sp.in_scope(p))
            rules.append(dl.Rule(head, (dl.Literal(dl.Atom(h1.pred, h1.args)),)))
            rules.append(dl.Rule(head, (dl.Literal(dl.Atom(h2.pred, h2.args)),)))
            return head
        if isinstance(p, sp.Except):
            h1, h2 = delta(p.left), delta(p.right)
            pred = next_pred()
            head = _sorted_var_atom(pred, sp.in_scope(p))
            rules.append(dl.Rule(head, (dl.Literal(h1), dl.Literal(h2, positive=False))))
            return head
        if isinstance(p, sp.Filter):
            h1 = delta(p.pattern)
            pred = next_pred()
            head = _sorted_var_atom(pred, sp.in_scope(p))
            phi = p.condition
            if isinstance(phi, sp.EqConst):
                extra = dl.Atom("eq", (dl.DVar(phi.var), phi.value))
            elif isinstance(phi, sp.EqVar):
                extra = dl.Atom("eq", (dl.DVar(phi.left), dl.DVar(phi.right)))
            elif isinstance(phi, sp.Bound):
                extra = dl.Atom("term", (dl.DVar(phi.var),))
            else:
                raise PreconditionError(
                    "constant-false filters cannot be translated; run reduce_filters"
                )
            rules.append(dl.Rule(head, (dl.Literal(h1), dl.Literal(extra))))
            return head
        if isinstance(p, sp.Select):
            h1 = delta(p.pattern)
            pred = next_pred()
            if not p.variables:
                raise PreconditionError("empty projection cannot be translated")
            head = _sorted_var_atom(pred, p.variables)
            body = [dl.Literal(h1)]
            padding = sorted(p.variables - sp.in_scope(p.pattern))
            for x in padding:
                body.append(dl.Literal(dl.Atom("null", (dl.DVar(x),))))
            rules.append(dl.Rule(head, tuple(body)))
            return head
        raise TypeError(f"not a pattern: {p!r}")

    goal = delta(pattern)
    return dl.DatalogQuery(goal, tuple(rules))


def h12(answer: dl.DatalogAnswer) -> Multiset:
    """Substitutions become mappings; unbound-marker values drop out of the
    domain, counts copy over."""
    out: list[tuple[sp.SolutionMapping, int]] = []
    for theta, n in answer.solutions.items():
        mu = sp.SolutionMapping(
            (v, t) for v, t in theta.items() if t != BOTTOM
        )
        out.append((mu, n))
    return Multiset(out)


# ===========================================================================
# Datalog -> SPARQL  (g21, f21, h21)
# ===========================================================================

def _fact_iri(fact: dl.Atom, copy: int) -> Iri:
    args = ",".join(term_text(a) for a in fact.args)
    return Iri(f"fact:{fact.pred}({args}):{copy}")


def g21(database: dl.FactMultiset) -> sp.Graph:
    """One triple cluster per colored fact copy: a predicate-name triple at
    position 0 and one triple per argument position."""
    triples: set[sp.Triple] = {sp.Triple(NULL, NULL, NULL)}
    for fact, copy in coloring(database):
        if is_reserved_name(fact.pred):
            raise ReservedNameError(f"reserved predicate name {fact.pred} in database")
        for a in fact.args:
            _check_term(a, "database")
        u = _fact_iri(fact, copy)
        triples.add(sp.Triple(u, alpha(0), Iri(fact.pred)))
        for i, a in enumerate(fact.args, start=1):
            triples.add(sp.Triple(u, alpha(i), a))
    return sp.Graph(triples)


def _require_linear_vars(atom: dl.Atom, what: str) -> list[str]:
    names: list[str] = []
    for a in atom.args:
        if not isinstance(a, dl.DVar):
            raise PreconditionError(f"constant argument in {what}: {atom}")
        names.append(a.name)
    if len(set(names)) != len(names):
        raise PreconditionError(f"repeated variable in {what}: {atom}")
    return names


def _vr(rule: dl.Rule, target: dl.Atom, fresh: _Fresh) -> dl.Rule:
    """Rename a rule so its head matches the referencing literal, renaming
    clashing body-only variables apart first."""
    head_vars = _require_linear_vars(rule.head, "rule head")
    target_vars = _require_linear_vars(target, "intensional literal")
    sub = dict(zip(head_vars, target_vars))
    existentials = sorted(rule.vars() - set(head_vars))
    for z in existentials:
        if z in target_vars:
            sub[z] = fresh.fresh(z)

    def rename_atom(atom: dl.Atom) -> dl.Atom:
        return dl.Atom(atom.pred, tuple(
            dl.DVar(sub.get(a.name, a.name)) if isinstance(a, dl.DVar) else a
            for a in atom.args
        ))

    return dl.Rule(
        rename_atom(rule.head),
        tuple(dl.Literal(rename_atom(l.atom), l.positive) for l in rule.body),
    )


def _and_chain(patterns: Sequence[sp.Pattern]) -> sp.Pattern:
    out = patterns[0]
    for p in patterns[1:]:
        out = sp.And(out, p)
    return out


def _union_chain(patterns: Sequence[sp.Pattern]) -> sp.Pattern:
    out = patterns[0]
    for p in patterns[1:]:
        out = sp.Union(out, p)
    return out


def f21(query: dl.DatalogQuery) -> sp.Pattern:
    """Translate a normalized query: extensional literals become basic graph
    patterns over the position IRIs, intensional ones become unions over
    their defining rules, and a variable-marker branch is appended."""
    dl.validate(query)
    if not dl.is_normal_program(query.program):
        raise PreconditionError("program must be normalized before translation")
    goal_vars = _require_linear_vars(query.goal, "goal")
    if not goal_vars:
        raise PreconditionError("goals without variables cannot be translated")
    for rule in query.program:
        for lit in rule.body:
            for a in lit.atom.args:
                if not isinstance(a, dl.DVar):
                    _check_term(a, "program")

    intensional = dl.intensional_predicates(query.program)
    rules_for: dict[str, list[dl.Rule]] = {}
    for rule in query.program:
        rules_for.setdefault(rule.head.pred, []).append(rule)

    all_vars = set(query.goal.vars())
    for rule in query.program:
        all_vars |= rule.vars()
    fresh = _Fresh(all_vars)

    def gp(literal: dl.Atom) -> sp.Pattern:
        if literal.pred not in intensional:
            u = fresh.fresh("u")
            parts: list[sp.Pattern] = [
                sp.TriplePattern(sp.Var(u), alpha(0), Iri(literal.pred))
            ]
            for i, arg in enumerate(literal.args, start=1):
                obj: sp.TriplePart = sp.Var(arg.name) if isinstance(arg, dl.DVar) else arg
                parts.append(sp.TriplePattern(sp.Var(u), alpha(i), obj))
            return sp.Select(frozenset(literal.vars()), _and_chain(parts))
        branches = [translate_rule(_vr(r, literal, fresh)) for r in rules_for[literal.pred]]
        return _union_chain(branches)

    def translate_rule(rule: dl.Rule) -> sp.Pattern:
        body = rule.body
        if len(body) == 1:
            inner = gp(body[0].atom)
            want = frozenset(rule.head.vars())
            # collapse nested projections: SELECT X (SELECT Y P) = SELECT X P
            if isinstance(inner, sp.Select) and want <= inner.variables:
                return sp.Select(want, inner.pattern)
            return sp.Select(want, inner)
        if body[1].positive:
            return sp.And(gp(body[0].atom), gp(body[1].atom))
        return sp.Except(gp(body[0].atom), gp(body[1].atom))

    var_query = _and_chain([
        sp.TriplePattern(NULL, NULL, sp.Var(v)) for v in sorted(goal_vars)
    ])
    return sp.Union(gp(query.goal), var_query)


def h21(omega: Multiset) -> dl.DatalogAnswer:
    """Read the variable set off the all-NULL marker row, drop it, and copy
    the remaining mappings as substitutions."""
    domains = {mu.domain() for mu, _ in omega.items()}
    if len(domains) != 1:
        raise MalformedAnswerError(f"mappings do not share one domain: {sorted(map(sorted, domains))}")
    variables = next(iter(domains))
    marker = sp.SolutionMapping({v: NULL for v in variables})
    count = omega.cardinality(marker)
    if count != 1:
        raise MalformedAnswerError(f"marker mapping occurs {count} times, expected 1")
    solutions = Multiset(
        (dl.Substitution(mu.items()), n)
        for mu, n in omega.items() if mu != marker
    )
    return dl.DatalogAnswer(frozenset(variables), solutions)


# ===========================================================================
# MRA -> Datalog  (g32, f32, h32)
# ===========================================================================

def g32(db: mra.MraDatabase) -> dl.FactMultiset:
    """One fact per tuple (attributes ordered lexicographically) plus an
    eq(c, c) fact per constant of the database."""
    facts: list[tuple[dl.Atom, int]] = []
    constants: set[Term] = set()
    for name in sorted(db):
        if name in RESERVED_PREDICATES:
            raise ReservedNameError(f"relation name {name} collides with reserved predicates")
        rel = db[name]
        attrs = sorted(rel.attributes)
        for t, n in rel.tuples.items():
            values = tuple(t.get(a) for a in attrs)
            constants.update(values)
            facts.append((dl.Atom(name, values), n))
    for c in sorted(constants, key=term_text):
        facts.append((dl.Atom("eq", (c, c)), 1))
    return Multiset(facts)


def f32(expr: mra.MraExpr, schema: Mapping[str, frozenset[str]]) -> dl.DatalogQuery:
    """Compile an algebra expression with atomic selection formulas into
    rules, one fresh predicate per operator."""
    resolved = mra.resolve_expr(expr, schema)
    if not mra.selections_atomic(resolved):
        raise PreconditionError("selection formulas must be atomic (run reduce_selections)")
    mra.check_expr(resolved, schema)

    used = set(schema) | set(RESERVED_PREDICATES)
    counter = [0]
    rules: list[dl.Rule] = []

    def next_pred() -> str:
        while True:
            counter[0] += 1
            name = f"q{counter[0]}"
            if name not in used:
                used.add(name)
                return name

    def gamma(e: mra.MraExpr) -> dl.Atom:
        attrs = mra.schema_of(e, schema)
        if not attrs:
            raise PreconditionError("empty-schema expressions cannot be translated")
        if isinstance(e, mra.RelName):
            head = _sorted_var_atom(next_pred(), schema[e.name])
            rules.append(dl.Rule(head, (dl.Literal(_sorted_var_atom(e.name, schema[e.name])),)))
            return head
        if isinstance(e, mra.Join):
            h1, h2 = gamma(e.left), gamma(e.right)
            head = _sorted_var_atom(next_pred(), attrs)
            rules.append(dl.Rule(head, (dl.Literal(h1), dl.Literal(h2))))
            return head
        if isinstance(e, mra.UnionExpr):
            h1, h2 = gamma(e.left), gamma(e.right)
            head = _sorted_var_atom(next_pred(), attrs)
            rules.append(dl.Rule(head, (dl.Literal(h1),)))
            rules.append(dl.Rule(head, (dl.Literal(h2),)))
            return head
        if isinstance(e, mra.ExceptExpr):
            h1, h2 = gamma(e.left), gamma(e.right)
            head = _sorted_var_atom(next_pred(), attrs)
            rules.append(dl.Rule(head, (dl.Literal(h1), dl.Literal(h2, positive=False))))
            return head
        if isinstance(e, mra.Project):
            h1 = gamma(e.expr)
            head = _sorted_var_atom(next_pred(), e.attributes)
            rules.append(dl.Rule(head, (dl.Literal(h1),)))
            return head
        if isinstance(e, mra.Rename):
            h1 = gamma(e.expr)
            head = _sorted_var_atom(next_pred(), attrs)
            eq_lit = dl.Atom("eq", (dl.DVar(e.old), dl.DVar(e.new)))
            rules.append(dl.Rule(head, (dl.Literal(h1), dl.Literal(eq_lit))))
            return head
        if isinstance(e, mra.Select):
            h1 = gamma(e.expr)
            head = _sorted_var_atom(next_pred(), attrs)
            psi = e.formula
            assert isinstance(psi, mra.FEq)
            left, right = psi.left, psi.right
            if isinstance(left, mra.ConstRef) and isinstance(right, mra.AttrRef):
                left, right = right, left
            if isinstance(left, mra.AttrRef):
                arg2: dl.DTerm = (
                    dl.DVar(right.name) if isinstance(right, mra.AttrRef) else right.value
                )
                eq_lit = dl.Atom("eq", (dl.DVar(left.name), arg2))
                rules.append(dl.Rule(head, (dl.Literal(h1), dl.Literal(eq_lit))))
            else:
                # constant = constant: identity when equal, empty otherwise
                assert isinstance(left, mra.ConstRef) and isinstance(right, mra.ConstRef)
                if left.value == right.value:
                    rules.append(dl.Rule(head, (dl.Literal(h1),)))
                else:
                    rules.append(dl.Rule(head, (dl.Literal(h1), dl.Literal(h1, positive=False))))
            return head
        raise TypeError(f"not an expression: {e!r}")

    goal = gamma(resolved)
    return dl.DatalogQuery(goal, tuple(rules))


def h32(answer: dl.DatalogAnswer) -> mra.Relation:
    """Variables become attributes, substitutions become tuples."""
    tuples = Multiset(
        (mra.MraTuple(theta.items()), n) for theta, n in answer.solutions.items()
    )
    return mra.Relation(answer.variables, tuples)


# ===========================================================================
# Datalog -> MRA  (g23, f23, h23)
# ===========================================================================

def _att(i: int) -> str:
    return f"att{i}"


def g23(
    database: dl.FactMultiset,
    vocabulary: Mapping[str, int] | None = None,
) -> mra.MraDatabase:
    """One relation per predicate with attributes att1..attn; the optional
    vocabulary declares empty relations for predicates a query mentions but
    the database does not contain."""
    arities: dict[str, int] = dict(vocabulary or {})
    grouped: dict[str, list[tuple[dl.Atom, int]]] = {}
    for fact, n in database.items():
        seen = arities.get(fact.pred)
        if seen is not None and seen != len(fact.args):
            raise dl.PredicateSortClashError(
                f"predicate {fact.pred} used with arities {seen} and {len(fact.args)}"
            )
        arities[fact.pred] = len(fact.args)
        grouped.setdefault(fact.pred, []).append((fact, n))
    out: mra.MraDatabase = {}
    for pred, arity in arities.items():
        if pred in RESERVED_RELATIONS:
            raise ReservedNameError(f"predicate name {pred} collides with reserved relations")
        attrs = [_att(i) for i in range(1, arity + 1)]
        tuples = Multiset(
            (mra.MraTuple(zip(attrs, fact.args)), n)
            for fact, n in grouped.get(pred, [])
        )
        out[pred] = mra.Relation(attrs, tuples)
    return out


def f23(query: dl.DatalogQuery) -> mra.MraExpr:
    """Extensional literals become select/project/rename chains over their
    relations; intensional ones become right-nested unions over their rules."""
    dl.validate(query)
    if not dl.is_normal_program(query.program):
        raise PreconditionError("program must be normalized before translation")
    goal_vars = _require_linear_vars(query.goal, "goal")
    if not goal_vars:
        raise PreconditionError("goals without variables cannot be translated")

    intensional = dl.intensional_predicates(query.program)
    rules_for: dict[str, list[dl.Rule]] = {}
    for rule in query.program:
        rules_for.setdefault(rule.head.pred, []).append(rule)
    all_vars = set(query.goal.vars())
    for rule in query.program:
        all_vars |= rule.vars()
    fresh = _Fresh(all_vars)

    def delta1(literal: dl.Atom) -> mra.MraExpr:
        if literal.pred not in intensional:
            return _extensional_expr(literal)
        branches = [delta2(_vr(r, literal, fresh)) for r in rules_for[literal.pred]]
        out = branches[-1]
        for b in reversed(branches[:-1]):
            out = mra.UnionExpr(b, out)
        return out

    def _extensional_expr(literal: dl.Atom) -> mra.MraExpr:
        if not literal.vars():
            raise PreconditionError(f"variable-free literal cannot be translated: {literal}")
        expr: mra.MraExpr = mra.RelName(literal.pred)
        first_pos: dict[str, int] = {}
        keep: list[int] = []
        for i, arg in enumerate(literal.args, start=1):
            if isinstance(arg, dl.DVar):
                if arg.name in first_pos:
                    expr = mra.Select(
                        mra.FEq(mra.AttrRef(_att(first_pos[arg.name])), mra.AttrRef(_att(i))),
                        expr,
                    )
                else:
                    first_pos[arg.name] = i
                    keep.append(i)
            else:
                expr = mra.Select(
                    mra.FEq(mra.AttrRef(_att(i)), mra.ConstRef(arg)), expr
                )
        if len(keep) != len(literal.args):
            expr = mra.Project(frozenset(_att(i) for i in keep), expr)
        # rename kept positions to the variable names, first position outermost
        for i in reversed(keep):
            var = next(v for v, pos in first_pos.items() if pos == i)
            expr = mra.Rename(_att(i), var, expr)
        return expr

    def delta2(rule: dl.Rule) -> mra.MraExpr:
        body = rule.body
        if len(body) == 1:
            return mra.Project(frozenset(rule.head.vars()), delta1(body[0].atom))
        if body[1].positive:
            return mra.Join(delta1(body[0].atom), delta1(body[1].atom))
        return mra.ExceptExpr(delta1(body[0].atom), delta1(body[1].atom))

    return delta1(query.goal)


def f23_vocabulary(query: dl.DatalogQuery) -> dict[str, int]:
    """Arities of the extensional predicates a query mentions, used to seed
    g23 with empty relations for predicates absent from the data."""
    intensional = dl.intensional_predicates(query.program)
    out: dict[str, int] = {}
    for rule in query.program:
        for lit in rule.body:
            if lit.atom.pred not in intensional:
                out[lit.atom.pred] = len(lit.atom.args)
    if query.goal.pred not in intensional:
        out[query.goal.pred] = len(query.goal.args)
    return out


def h23(rel: mra.Relation) -> dl.DatalogAnswer:
    """Attributes become variables, tuples become substitutions."""
    solutions = Multiset(
        (dl.Substitution(t.items()), n) for t, n in rel.tuples.items()
    )
    return dl.DatalogAnswer(rel.attributes, solutions)


# ===========================================================================
# MRA -> SPARQL  (g31, f31, h31)
# ===========================================================================

_MEMBER = Iri("member")


def _rel_iri(name: str) -> Iri:
    return Iri(f"rel:{name}")


def _attr_iri(name: str) -> Iri:
    return Iri(f"attr:{name}")


def _tuple_iri(rel_name: str, t: mra.MraTuple, copy: int) -> Iri:
    values = ",".join(f"{a}={term_text(v)}" for a, v in t.items())
    return Iri(f"tuple:{rel_name}({values}):{copy}")


def g31(db: mra.MraDatabase) -> sp.Graph:
    """One triple cluster per colored tuple copy: a membership triple plus
    one attribute triple per attribute."""
    triples: set[sp.Triple] = {sp.Triple(NULL, NULL, NULL)}
    for name in sorted(db):
        rel = db[name]
        for t, copy in coloring(rel.tuples):
            for _, v in t.items():
                _check_term(v, f"relation {name}")
            u = _tuple_iri(name, t, copy)
            triples.add(sp.Triple(u, _MEMBER, _rel_iri(name)))
            for a, v in t.items():
                triples.add(sp.Triple(u, _attr_iri(a), v))
    return sp.Graph(triples)


def f31(expr: mra.MraExpr, schema: Mapping[str, frozenset[str]]) -> sp.Pattern:
    """Relation names become SELECT-over-AND basic patterns anchored on the
    membership triple; operators map one-to-one; an attribute-marker branch
    is appended."""
    resolved = mra.reduce_selections(mra.resolve_expr(expr, schema))
    attrs = mra.check_expr(resolved, schema)
    if not attrs:
        raise PreconditionError("empty-schema expressions cannot be translated")

    all_attrs: set[str] = set(attrs)

    def collect(e: mra.MraExpr) -> None:
        all_attrs.update(mra.schema_of(e, schema))
        if isinstance(e, (mra.Select, mra.Project, mra.Rename)):
            collect(e.expr)
        elif isinstance(e, (mra.Join, mra.UnionExpr, mra.ExceptExpr)):
            collect(e.left)
            collect(e.right)

    collect(resolved)
    fresh = _Fresh(all_attrs)

    def trans(e: mra.MraExpr) -> sp.Pattern:
        if isinstance(e, mra.RelName):
            rel_attrs = sorted(schema[e.name])
            if not rel_attrs:
                raise PreconditionError("empty-schema relations cannot be translated")
            u = fresh.fresh("y")
            parts: list[sp.Pattern] = [
                sp.TriplePattern(sp.Var(u), _MEMBER, _rel_iri(e.name))
            ]
            for a in rel_attrs:
                parts.append(sp.TriplePattern(sp.Var(u), _attr_iri(a), sp.Var(a)))
            return sp.Select(frozenset(rel_attrs), _and_chain(parts))
        if isinstance(e, mra.Join):
            return sp.And(trans(e.left), trans(e.right))
        if isinstance(e, mra.UnionExpr):
            return sp.Union(trans(e.left), trans(e.right))
        if isinstance(e, mra.ExceptExpr):
            return sp.Except(trans(e.left), trans(e.right))
        if isinstance(e, mra.Project):
            if not e.attributes:
                raise PreconditionError("empty projections cannot be translated")
            return sp.Select(e.attributes, trans(e.expr))
        if isinstance(e, mra.Rename):
            return sp.rename_variable(trans(e.expr), e.old, e.new)
        if isinstance(e, mra.Select):
            psi = e.formula
            assert isinstance(psi, mra.FEq)
            left, right = psi.left, psi.right
            if isinstance(left, mra.ConstRef) and isinstance(right, mra.AttrRef):
                left, right = right, left
            inner = trans(e.expr)
            if isinstance(left, mra.AttrRef):
                if isinstance(right, mra.AttrRef):
                    return sp.Filter(inner, sp.EqVar(left.name, right.name))
                return sp.Filter(inner, sp.EqConst(left.name, right.value))
            assert isinstance(left, mra.ConstRef) and isinstance(right, mra.ConstRef)
            if left.value == right.value:
                return inner
            return sp.Filter(inner, sp.ConstFalse())
        raise TypeError(f"not an expression: {e!r}")

    attr_query = _and_chain([
        sp.TriplePattern(NULL, NULL, sp.Var(a)) for a in sorted(attrs)
    ])
    return sp.Union(trans(resolved), attr_query)


def h31(omega: Multiset) -> mra.Relation:
    """Schema comes from the all-NULL marker row; the rest become tuples."""
    domains = {mu.domain() for mu, _ in omega.items()}
    if len(domains) != 1:
        raise MalformedAnswerError(f"mappings do not share one domain: {sorted(map(sorted, domains))}")
    attrs = next(iter(domains))
    marker = sp.SolutionMapping({a: NULL for a in attrs})
    count = omega.cardinality(marker)
    if count != 1:
        raise MalformedAnswerError(f"marker mapping occurs {count} times, expected 1")
    tuples = Multiset(
        (mra.MraTuple(mu.items()), n) for mu, n in omega.items() if mu != marker
    )
    return mra.Relation(attrs, tuples)


# ===========================================================================
# SPARQL -> MRA  (g13, f13, h13)
# ===========================================================================

_TRIP_S, _TRIP_P, _TRIP_O = "S", "P", "O"
_COMP_A1, _COMP_A2, _COMP_A = "A1", "A2", "A"
_NULL_N = "N"


def g13(graph: sp.Graph) -> mra.MraDatabase:
    """Three relations: Trip holds the triples, Null the unbound marker and
    Comp the three compatibility rows per term plus the all-unbound row."""
    for t in sorted(graph.terms(), key=term_text):
        _check_term(t, "graph")
    trip = Multiset(
        (mra.MraTuple({_TRIP_S: t.s, _TRIP_P: t.p, _TRIP_O: t.o}), 1) for t in graph
    )
    null = Multiset([(mra.MraTuple({_NULL_N: BOTTOM}), 1)])
    comp_rows: list[tuple[mra.MraTuple, int]] = [
        (mra.MraTuple({_COMP_A1: BOTTOM, _COMP_A2: BOTTOM, _COMP_A: BOTTOM}), 1)
    ]
    for t in graph.terms():
        comp_rows.append((mra.MraTuple({_COMP_A1: t, _COMP_A2: t, _COMP_A: t}), 1))
        comp_rows.append((mra.MraTuple({_COMP_A1: t, _COMP_A2: BOTTOM, _COMP_A: t}), 1))
        comp_rows.append((mra.MraTuple({_COMP_A1: BOTTOM, _COMP_A2: t, _COMP_A: t}), 1))
    return {
        "Trip": mra.Relation([_TRIP_S, _TRIP_P, _TRIP_O], trip),
        "Null": mra.Relation([_NULL_N], null),
        "Comp": mra.Relation([_COMP_A1, _COMP_A2, _COMP_A], Multiset(comp_rows)),
    }


def _lambda_triple(tp: sp.TriplePattern) -> mra.MraExpr:
    """Triple patterns over Trip: select on constant slots and on repeated
    variables (linking consecutive occurrences, in slot order), rename the
    first occurrence of each variable, project onto the variables."""
    slots = ((_TRIP_S, tp.s), (_TRIP_P, tp.p), (_TRIP_O, tp.o))
    atoms: list[mra.SelectionFormula] = []
    last_attr: dict[str, str] = {}
    firsts: list[tuple[str, str]] = []  # (slot attribute, variable) per first occurrence
    for attr, part in slots:
        if isinstance(part, sp.Var):
            prev = last_attr.get(part.name)
            if prev is not None:
                atoms.append(mra.FEq(mra.AttrRef(prev), mra.AttrRef(attr)))
            else:
                firsts.append((attr, part.name))
            last_attr[part.name] = attr
        else:
            atoms.append(mra.FEq(mra.AttrRef(attr), mra.ConstRef(part)))

    expr: mra.MraExpr = mra.RelName("Trip")
    if atoms:
        formula = atoms[0]
        for atom in atoms[1:]:
            formula = mra.FAnd(formula, atom)
        expr = mra.Select(formula, expr)
    for attr, name in firsts:  # subject rename innermost, object outermost
        expr = mra.Rename(attr, name, expr)
    return mra.Project(frozenset(name for _, name in firsts), expr)


def _gamma(phi: sp.FilterCondition) -> mra.SelectionFormula:
    bottom = mra.ConstRef(BOTTOM)
    if isinstance(phi, sp.EqConst):
        x = mra.AttrRef(phi.var)
        return mra.FAnd(mra.FNot(mra.FEq(x, bottom)), mra.FEq(x, mra.ConstRef(phi.value)))
    if isinstance(phi, sp.EqVar):
        x, y = mra.AttrRef(phi.left), mra.AttrRef(phi.right)
        return mra.FAnd(
            mra.FAnd(mra.FNot(mra.FEq(x, bottom)), mra.FNot(mra.FEq(y, bottom))),
            mra.FEq(x, y),
        )
    if isinstance(phi, sp.Bound):
        return mra.FNot(mra.FEq(mra.AttrRef(phi.var), bottom))
    raise PreconditionError(f"filter condition {phi!r} is not atomic")


def f13(pattern: sp.Pattern) -> mra.MraExpr:
    """Translate a pattern after normalizing it and reducing its filters.

    AND becomes the compatibility join mediated by Comp, SELECT pads missing
    attributes with renamed copies of Null, FILTER becomes a selection with
    unbound-marker guards.
    """
    sp.validate_pattern(pattern)
    prepared = sp.reduce_filters(sp.normalize(pattern))
    for t in sorted(_pattern_terms(prepared), key=term_text):
        _check_term(t, "pattern")

    reserved_attrs = {_TRIP_S, _TRIP_P, _TRIP_O, _COMP_A1, _COMP_A2, _COMP_A, _NULL_N}
    fresh = _Fresh(set(sp.pattern_vars(prepared)) | reserved_attrs)

    def star(e1: mra.MraExpr, s1: frozenset[str], e2: mra.MraExpr, s2: frozenset[str]) -> mra.MraExpr:
        shared = sorted(s1 & s2)
        if not shared:
            return mra.Project(s1 | s2, mra.Join(e1, e2))
        v1 = {x: fresh.fresh(f"{x}1") for x in shared}
        v2 = {x: fresh.fresh(f"{x}2") for x in shared}
        comp_parts: list[mra.MraExpr] = []
        for x in shared:
            comp_parts.append(
                mra.Rename(_COMP_A, x,
                           mra.Rename(_COMP_A1, v1[x],
                                      mra.Rename(_COMP_A2, v2[x], mra.RelName("Comp"))))
            )
        comp = comp_parts[0]
        for part in comp_parts[1:]:
            comp = mra.Join(comp, part)
        for x in reversed(shared):
            e1 = mra.Rename(x, v1[x], e1)
            e2 = mra.Rename(x, v2[x], e2)
        return mra.Project(s1 | s2, mra.Join(mra.Join(comp, e1), e2))

    def trans(p: sp.Pattern) -> mra.MraExpr:
        if isinstance(p, sp.TriplePattern):
            return _lambda_triple(p)
        if isinstance(p, sp.And):
            return star(trans(p.left), sp.in_scope(p.left), trans(p.right), sp.in_scope(p.right))
        if isinstance(p, sp.Union):
            return mra.UnionExpr(trans(p.left), trans(p.right))
        if isinstance(p, sp.Except):
            return mra.ExceptExpr(trans(p.left), trans(p.right))
        if isinstance(p, sp.Filter):
            return mra.Select(_gamma(p.condition), trans(p.pattern))
        if isinstance(p, sp.Select):
            if not p.variables:
                raise PreconditionError("empty projection cannot be translated")
            inner = trans(p.pattern)
            padding = sorted(p.variables - sp.in_scope(p.pattern))
            if padding:
                delta = mra.Rename(_NULL_N, padding[0], mra.RelName("Null"))
                for y in padding[1:]:
                    delta = mra.Join(delta, mra.Rename(_NULL_N, y, mra.RelName("Null")))
                inner = mra.Join(inner, delta)
            return mra.Project(p.variables, inner)
        raise TypeError(f"not a pattern: {p!r}")

    return trans(prepared)


def h13(rel: mra.Relation) -> Multiset:
    """Tuples become mappings; unbound-marker attributes drop out."""
    return Multiset(
        (sp.SolutionMapping((a, v) for a, v in t.items() if v != BOTTOM), n)
        for t, n in rel.tuples.items()
    )


# ===========================================================================
# Direction registry
# ===========================================================================

@dataclass(frozen=True)
class SimulationTriple:
    """One direction of the triangle, bundled for the harness and the CLI.

    ``translate_query`` takes the source query plus the source database (the
    database is only consulted for schema information where the target needs
    it); ``translate_db`` maps databases; ``pull_back`` maps a destination
    answer to a source answer.
    """

    name: str
    source: str
    target: str
    translate_query: Callable
    translate_db: Callable
    pull_back: Callable


def _f12_full(q: sp.Pattern, _d: sp.Graph) -> dl.DatalogQuery:
    return f12(q)


def _f21_full(q: dl.DatalogQuery, _d: dl.FactMultiset) -> sp.Pattern:
    return f21(q)


def _f32_full(e: mra.MraExpr, d: mra.MraDatabase) -> dl.DatalogQuery:
    return f32(e, mra.db_schema(d))


def _f23_full(q: dl.DatalogQuery, _d: dl.FactMultiset) -> mra.MraExpr:
    return f23(q)


def _f31_full(e: mra.MraExpr, d: mra.MraDatabase) -> sp.Pattern:
    return f31(e, mra.db_schema(d))


def _f13_full(q: sp.Pattern, _d: sp.Graph) -> mra.MraExpr:
    return f13(q)


DIRECTIONS: dict[str, SimulationTriple] = {
    "sparql-datalog": SimulationTriple("sparql-datalog", "sparql", "datalog", _f12_full, g12, h12),
    "datalog-sparql": SimulationTriple("datalog-sparql", "datalog", "sparql", _f21_full, g21, h21),
    "mra-datalog": SimulationTriple("mra-datalog", "mra", "datalog", _f32_full, g32, h32),
    "datalog-mra": SimulationTriple("datalog-mra", "datalog", "mra", _f23_full, g23, h23),
    "mra-sparql": SimulationTriple("mra-sparql", "mra", "sparql", _f31_full, g31, h31),
    "sparql-mra": SimulationTriple("sparql-mra", "sparql", "mra", _f13_full, g13, h13),
}
