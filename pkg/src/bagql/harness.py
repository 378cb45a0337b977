"""Differential-equivalence harness.

For each enabled direction the harness generates random (query, database)
pairs in the source language, pushes them through the direction's
simulation triple, and checks that the pulled-back answer equals the
directly evaluated one, multiset-exactly.  Transitivity triangles check
that composing two directions agrees with the direct translation.  Failures
are shrunk to locally minimal counterexamples and reported; identical
configurations produce byte-identical reports.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Callable, Sequence

from . import answers as ans
from . import datalog as dl
from . import mra
from . import sparql as sp
from . import syntax as sx
from . import translate as tr
from .multiset import Multiset
from .terms import Iri, Lit, Term

ALL_DIRECTIONS = (
    "sparql-datalog",
    "datalog-sparql",
    "mra-datalog",
    "datalog-mra",
    "mra-sparql",
    "sparql-mra",
)

TRIANGLES = ("sparql-datalog-mra", "mra-datalog-sparql")


@dataclass(frozen=True)
class HarnessConfig:
    seed: int = 42
    iterations: int = 100
    max_terms: int = 3
    max_triples: int = 6
    max_facts: int = 6
    max_tuples: int = 6
    max_depth: int = 4
    directions: tuple[str, ...] = ALL_DIRECTIONS

    def __post_init__(self):
        for bound in (self.iterations, self.max_terms, self.max_triples,
                      self.max_facts, self.max_tuples, self.max_depth):
            if bound < 0:
                raise ValueError("bounds must be nonnegative")
        for d in self.directions:
            if d not in ALL_DIRECTIONS:
                raise ValueError(f"unknown direction {d}")


@dataclass
class Counterexample:
    direction: str
    iteration: int
    query_text: str
    database_text: str
    expected: str
    actual: str
    first_diff: str

    def to_obj(self) -> dict:
        return {
            "direction": self.direction,
            "iteration": self.iteration,
            "query": self.query_text,
            "database": self.database_text,
            "expected": self.expected,
            "actual": self.actual,
            "first_diff": self.first_diff,
        }


@dataclass
class FuzzReport:
    config: HarnessConfig
    checked: dict = field(default_factory=dict)
    counterexamples: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.counterexamples

    def to_text(self) -> str:
        obj = {
            "config": {
                "seed": self.config.seed,
                "iterations": self.config.iterations,
                "max_terms": self.config.max_terms,
                "max_triples": self.config.max_triples,
                "max_facts": self.config.max_facts,
                "max_tuples": self.config.max_tuples,
                "max_depth": self.config.max_depth,
                "directions": list(self.config.directions),
            },
            "checked": {k: self.checked[k] for k in sorted(self.checked)},
            "counterexamples": [c.to_obj() for c in self.counterexamples],
        }
        return json.dumps(obj, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# Random generators
# ---------------------------------------------------------------------------

_VAR_POOL = ("x", "y", "z", "w")


def _universe(rng: random.Random, cfg: HarnessConfig) -> list[Term]:
    n = rng.randint(1, max(1, cfg.max_terms))
    terms: list[Term] = [Iri(f"c{i}") for i in range(n)]
    if n > 1 and rng.random() < 0.3:
        terms[-1] = Lit(f"c{n - 1}")
    return terms


def gen_graph(rng: random.Random, cfg: HarnessConfig) -> sp.Graph:
    terms = _universe(rng, cfg)
    iris = [t for t in terms if isinstance(t, Iri)]
    triples = set()
    for _ in range(rng.randint(0, cfg.max_triples)):
        triples.add(sp.Triple(rng.choice(iris), rng.choice(iris), rng.choice(terms)))
    return sp.Graph(triples)


def _gen_triple_pattern(rng: random.Random, terms: Sequence[Term]) -> sp.TriplePattern:
    iris = [t for t in terms if isinstance(t, Iri)]

    def slot(allow_lit: bool) -> sp.TriplePart:
        roll = rng.random()
        if roll < 0.55:
            return sp.Var(rng.choice(_VAR_POOL))
        pool = list(terms) if allow_lit else iris
        return rng.choice(pool)

    while True:
        tp = sp.TriplePattern(slot(False), slot(False), slot(True))
        if sp.triple_pattern_vars(tp):
            return tp


def _gen_filter_condition(rng: random.Random, scope: Sequence[str],
                          terms: Sequence[Term]) -> sp.FilterCondition:
    def var() -> str:
        # mostly in-scope, occasionally fresh to exercise unbound handling
        if scope and rng.random() < 0.85:
            return rng.choice(list(scope))
        return rng.choice(_VAR_POOL)

    roll = rng.random()
    if roll < 0.45:
        return sp.EqConst(var(), rng.choice(list(terms)))
    if roll < 0.75:
        return sp.EqVar(var(), var())
    return sp.Bound(var())


def gen_pattern(rng: random.Random, cfg: HarnessConfig,
                terms: Sequence[Term] | None = None) -> sp.Pattern:
    """A normalized, atomic-filter pattern within the configured bounds."""
    if terms is None:
        terms = _universe(rng, cfg)

    def gen(depth: int, except_budget: int) -> sp.Pattern:
        if depth <= 0 or rng.random() < 0.3:
            return _gen_triple_pattern(rng, terms)
        ops = ["and", "union", "filter", "select"]
        if except_budget > 0:
            ops.append("except")
        op = rng.choice(ops)
        if op == "and":
            return sp.And(gen(depth - 1, except_budget), gen(depth - 1, except_budget))
        if op == "union":
            return sp.Union(gen(depth - 1, except_budget), gen(depth - 1, except_budget))
        if op == "except":
            return sp.Except(
                gen(depth - 1, except_budget - 1), gen(depth - 1, except_budget - 1)
            )
        if op == "filter":
            inner = gen(depth - 1, except_budget)
            return sp.Filter(inner, _gen_filter_condition(rng, sorted(sp.in_scope(inner)), terms))
        inner = gen(depth - 1, except_budget)
        scope = sorted(sp.in_scope(inner))
        keep = [v for v in scope if rng.random() < 0.7]
        if rng.random() < 0.3:
            extra = rng.choice(_VAR_POOL)
            if extra not in keep:
                keep.append(extra)
        if not keep:
            keep = scope[:1] if scope else [rng.choice(_VAR_POOL)]
        return sp.Select(frozenset(keep), inner)

    pattern = sp.reduce_filters(sp.normalize(gen(cfg.max_depth, 2)))
    return pattern


def gen_sparql_instance(rng: random.Random, cfg: HarnessConfig) -> tuple[sp.Pattern, sp.Graph]:
    terms = _universe(rng, cfg)
    graph = gen_graph(rng, cfg)
    # draw pattern constants from the graph's own universe to force matches
    return gen_pattern(rng, cfg, terms), graph


def gen_datalog_instance(rng: random.Random, cfg: HarnessConfig) -> tuple[dl.DatalogQuery, Multiset]:
    terms = _universe(rng, cfg)
    ext: dict[str, int] = {}
    for i in range(rng.randint(1, 2)):
        ext[f"e{i}"] = rng.randint(1, 2)
    facts: list[tuple[dl.Atom, int]] = []
    budget = rng.randint(0, cfg.max_facts)
    total = 0
    while total < budget:
        pred = rng.choice(sorted(ext))
        args = tuple(rng.choice(list(terms)) for _ in range(ext[pred]))
        count = min(rng.randint(1, 2), budget - total)
        facts.append((dl.Atom(pred, args), count))
        total += count

    rules: list[dl.Rule] = []
    available = dict(ext)  # predicate -> arity, usable in bodies
    n_layers = rng.randint(0, 2)
    top_pred: str | None = None
    for layer in range(n_layers):
        pred = f"i{layer}"
        pred_arity: int | None = None
        layer_rules: list[dl.Rule] = []
        for _ in range(rng.randint(1, 2)):
            body: list[dl.Literal] = []
            pos_vars: set[str] = set()
            for _ in range(rng.randint(1, 2)):
                bp = rng.choice(sorted(available))  # lower layers only
                arity = available[bp]
                if bp in ext:
                    args = tuple(
                        dl.DVar(rng.choice(_VAR_POOL)) if rng.random() < 0.8
                        else rng.choice(list(terms))
                        for _ in range(arity)
                    )
                    if not any(isinstance(a, dl.DVar) for a in args):
                        args = (dl.DVar(rng.choice(_VAR_POOL)),) + args[1:]
                else:
                    names = rng.sample(_VAR_POOL, arity)
                    args = tuple(dl.DVar(v) for v in names)
                lit = dl.Literal(dl.Atom(bp, args))
                body.append(lit)
                pos_vars |= lit.vars()
            if rng.random() < 0.4 and pos_vars:
                bp = rng.choice(sorted(available))
                arity = available[bp]
                pool = sorted(pos_vars)
                if bp in ext:
                    args = tuple(dl.DVar(rng.choice(pool)) for _ in range(arity))
                    body.append(dl.Literal(dl.Atom(bp, args), positive=False))
                elif arity <= len(pool):
                    # intensional references stay linear (translator fragment)
                    names = sorted(rng.sample(pool, arity))
                    args = tuple(dl.DVar(v) for v in names)
                    body.append(dl.Literal(dl.Atom(bp, args), positive=False))
            pool = sorted(pos_vars)
            if pred_arity is None:
                rng.shuffle(pool)
                head_names = sorted(pool[: rng.randint(1, len(pool))])
            elif pred_arity <= len(pool):
                head_names = sorted(rng.sample(pool, pred_arity))
            else:
                continue
            head = dl.Atom(pred, tuple(dl.DVar(v) for v in head_names))
            layer_rules.append(dl.Rule(head, tuple(body)))
            pred_arity = len(head.args)
        if layer_rules:
            rules.extend(layer_rules)
            available[pred] = len(layer_rules[0].head.args)
            top_pred = pred

    goal_pred = top_pred if top_pred is not None else rng.choice(sorted(ext))
    arity = available[goal_pred]
    goal_vars = [f"g{i}" for i in range(arity)]
    goal = dl.Atom(goal_pred, tuple(dl.DVar(v) for v in goal_vars))
    # drop rules for predicates that ended up undefined or unused
    query = dl.DatalogQuery(goal, tuple(rules))
    query = dl.normalize_program(query)
    return query, Multiset(facts)


_MRA_BASE_SCHEMA = {
    "R": frozenset({"A", "B"}),
    "S": frozenset({"B", "C"}),
    "T": frozenset({"D"}),
}


def gen_mra_instance(rng: random.Random, cfg: HarnessConfig) -> tuple[mra.MraExpr, mra.MraDatabase]:
    terms = _universe(rng, cfg)
    db: mra.MraDatabase = {}
    budget = rng.randint(0, cfg.max_tuples)
    total = 0
    rows: dict[str, list[tuple[mra.MraTuple, int]]] = {name: [] for name in _MRA_BASE_SCHEMA}
    while total < budget:
        name = rng.choice(sorted(_MRA_BASE_SCHEMA))
        attrs = sorted(_MRA_BASE_SCHEMA[name])
        t = mra.MraTuple({a: rng.choice(list(terms)) for a in attrs})
        count = min(rng.randint(1, 2), budget - total)
        rows[name].append((t, count))
        total += count
    for name, schema in _MRA_BASE_SCHEMA.items():
        db[name] = mra.Relation(schema, Multiset(rows[name]))

    schema = mra.db_schema(db)
    fresh_counter = [0]

    def gen(depth: int) -> mra.MraExpr:
        if depth <= 0 or rng.random() < 0.3:
            return mra.RelName(rng.choice(sorted(_MRA_BASE_SCHEMA)))
        op = rng.choice(["select", "project", "rename", "join", "union", "except"])
        inner = gen(depth - 1)
        attrs = sorted(mra.schema_of(inner, schema))
        if op == "select":
            return mra.Select(_gen_selection(rng, attrs, terms, 2), inner)
        if op == "project":
            keep = [a for a in attrs if rng.random() < 0.7] or attrs[:1]
            return mra.Project(frozenset(keep), inner)
        if op == "rename":
            fresh_counter[0] += 1
            return mra.Rename(rng.choice(attrs), f"X{fresh_counter[0]}", inner)
        other = gen(depth - 1)
        if op == "join":
            return mra.Join(inner, other)
        common = frozenset(attrs) & mra.schema_of(other, schema)
        if not common:
            return mra.Join(inner, other)
        left = mra.Project(common, inner)
        right = mra.Project(common, other)
        return mra.UnionExpr(left, right) if op == "union" else mra.ExceptExpr(left, right)

    expr = mra.reduce_selections(gen(cfg.max_depth))
    return expr, db


def _gen_selection(rng: random.Random, attrs: Sequence[str], terms: Sequence[Term],
                   connectives: int) -> mra.SelectionFormula:
    if connectives > 0 and rng.random() < 0.4:
        roll = rng.random()
        if roll < 0.4:
            return mra.FAnd(
                _gen_selection(rng, attrs, terms, connectives - 1),
                _gen_selection(rng, attrs, terms, 0),
            )
        if roll < 0.8:
            return mra.FOr(
                _gen_selection(rng, attrs, terms, connectives - 1),
                _gen_selection(rng, attrs, terms, 0),
            )
        return mra.FNot(_gen_selection(rng, attrs, terms, connectives - 1))
    roll = rng.random()
    if roll < 0.5:
        return mra.FEq(mra.AttrRef(rng.choice(list(attrs))), mra.ConstRef(rng.choice(list(terms))))
    return mra.FEq(mra.AttrRef(rng.choice(list(attrs))), mra.AttrRef(rng.choice(list(attrs))))


# ---------------------------------------------------------------------------
# Direction checking
# ---------------------------------------------------------------------------

def eval_sparql(q: sp.Pattern, g: sp.Graph):
    return sp.eval_pattern(q, g)


def eval_datalog(q: dl.DatalogQuery, d: Multiset):
    return dl.eval_query(q, d)


def eval_mra(e: mra.MraExpr, d: mra.MraDatabase):
    return mra.eval_expr(e, d)


EVALUATORS: dict[str, Callable] = {
    "sparql": eval_sparql,
    "datalog": eval_datalog,
    "mra": eval_mra,
}

GENERATORS: dict[str, Callable] = {
    "sparql": gen_sparql_instance,
    "datalog": gen_datalog_instance,
    "mra": gen_mra_instance,
}


def _translate_db(direction: tr.SimulationTriple, query, database, overrides):
    g = overrides.get(f"g:{direction.name}", direction.translate_db)
    if direction.name == "datalog-mra":
        return g(database, tr.f23_vocabulary(query))
    return g(database)


def _validate_target(direction: tr.SimulationTriple, dst_query, dst_db) -> None:
    if direction.target == "datalog":
        dl.validate(dst_query, dst_db)
    elif direction.target == "mra":
        mra.check_expr(dst_query, mra.db_schema(dst_db))
    else:
        sp.validate_pattern(dst_query)


def check_direction(name: str, query, database, overrides=None) -> tuple[bool, str, str]:
    """Run one simulation check; returns (ok, expected_text, actual_text)."""
    overrides = overrides or {}
    direction = tr.DIRECTIONS[name]
    expected = EVALUATORS[direction.source](query, database)
    dst_query = direction.translate_query(query, database)
    dst_db = _translate_db(direction, query, database, overrides)
    _validate_target(direction, dst_query, dst_db)
    dst_answer = EVALUATORS[direction.target](dst_query, dst_db)
    pulled = direction.pull_back(dst_answer)
    expected_text = ans.serialize_answer(expected)
    actual_text = ans.serialize_answer(pulled)
    return expected_text == actual_text, expected_text, actual_text


def _print_query(lang: str, query) -> str:
    if lang == "sparql":
        return sx.print_sparql(query)
    if lang == "datalog":
        return sx.print_datalog_query(query)
    return sx.print_mra(query)


def _print_db(lang: str, database) -> str:
    if lang == "sparql":
        return sx.print_rdf(database)
    if lang == "datalog":
        return sx.print_facts(database)
    return sx.print_relations(database)


def _first_diff(expected_text: str, actual_text: str) -> str:
    left = json.loads(expected_text)
    right = json.loads(actual_text)
    lk = left.get("solutions", left.get("tuples", []))
    rk = right.get("solutions", right.get("tuples", []))
    for item in lk:
        if item not in rk:
            return f"expected-only: {json.dumps(item, sort_keys=True)}"
    for item in rk:
        if item not in lk:
            return f"actual-only: {json.dumps(item, sort_keys=True)}"
    return "answers differ in domain/schema"


# ---------------------------------------------------------------------------
# Shrinking
# ---------------------------------------------------------------------------

def _shrink_db_candidates(lang: str, database):
    if lang == "sparql":
        triples = sorted(database.triples, key=repr)
        for i in range(len(triples)):
            yield sp.Graph(triples[:i] + triples[i + 1:])
    elif lang == "datalog":
        items = sorted(database.items(), key=repr)
        for i, (fact, n) in enumerate(items):
            rest = items[:i] + items[i + 1:]
            if n > 1:
                yield Multiset(rest + [(fact, n - 1)])
            else:
                yield Multiset(rest)
    else:
        for name in sorted(database):
            rel = database[name]
            items = sorted(rel.tuples.items(), key=repr)
            for i, (t, n) in enumerate(items):
                rest = items[:i] + items[i + 1:]
                smaller = rest + ([(t, n - 1)] if n > 1 else [])
                out = dict(database)
                out[name] = mra.Relation(rel.attributes, Multiset(smaller))
                yield out


def _shrink_query_candidates(lang: str, query):
    if lang == "sparql":
        def prune(p):
            if isinstance(p, (sp.And, sp.Union, sp.Except)):
                yield p.left
                yield p.right
                for c in prune(p.left):
                    yield type(p)(c, p.right)
                for c in prune(p.right):
                    yield type(p)(p.left, c)
            elif isinstance(p, sp.Filter):
                yield p.pattern
                for c in prune(p.pattern):
                    yield sp.Filter(c, p.condition)
            elif isinstance(p, sp.Select):
                yield p.pattern
                for c in prune(p.pattern):
                    yield sp.Select(p.variables, c)

        for cand in prune(query):
            try:
                sp.validate_pattern(cand)
            except sp.SparqlError:
                continue
            if sp.is_normalized(cand) and sp.filters_atomic(cand):
                yield cand
    elif lang == "datalog":
        rules = list(query.program)
        for i in range(len(rules)):
            yield dl.DatalogQuery(query.goal, tuple(rules[:i] + rules[i + 1:]))
    else:
        def prune(e):
            if isinstance(e, (mra.Join, mra.UnionExpr, mra.ExceptExpr)):
                yield e.left
                yield e.right
                for c in prune(e.left):
                    yield type(e)(c, e.right)
                for c in prune(e.right):
                    yield type(e)(e.left, c)
            elif isinstance(e, (mra.Select, mra.Project, mra.Rename)):
                yield e.expr
                for c in prune(e.expr):
                    yield type(e)(*(
                        (e.formula, c) if isinstance(e, mra.Select)
                        else (e.attributes, c) if isinstance(e, mra.Project)
                        else (e.old, e.new, c)
                    ))

        yield from prune(query)


def _still_fails(name: str, query, database, overrides) -> bool:
    try:
        ok, _, _ = check_direction(name, query, database, overrides)
        return not ok
    except Exception:
        # invalid candidate: does not count as a reproduction
        return False


def shrink(name: str, query, database, overrides=None):
    """Greedy single-step shrinking until locally minimal."""
    overrides = overrides or {}
    lang = tr.DIRECTIONS[name].source
    changed = True
    while changed:
        changed = False
        for cand in _shrink_db_candidates(lang, database):
            if _still_fails(name, query, cand, overrides):
                database = cand
                changed = True
                break
        if changed:
            continue
        for cand in _shrink_query_candidates(lang, query):
            if _still_fails(name, cand, database, overrides):
                query = cand
                changed = True
                break
    return query, database


# ---------------------------------------------------------------------------
# Fuzzing entry points
# ---------------------------------------------------------------------------

def fuzz_equivalence(cfg: HarnessConfig, overrides=None) -> FuzzReport:
    """Run the configured number of iterations per enabled direction."""
    overrides = overrides or {}
    report = FuzzReport(cfg)
    for name in cfg.directions:
        lang = tr.DIRECTIONS[name].source
        generate = GENERATORS[lang]
        passed = 0
        for i in range(cfg.iterations):
            rng = random.Random(f"{cfg.seed}:{name}:{i}")
            query, database = generate(rng, cfg)
            ok, expected, actual = check_direction(name, query, database, overrides)
            if ok:
                passed += 1
                continue
            query, database = shrink(name, query, database, overrides)
            ok2, expected, actual = check_direction(name, query, database, overrides)
            assert not ok2
            report.counterexamples.append(Counterexample(
                direction=name,
                iteration=i,
                query_text=_print_query(lang, query),
                database_text=_print_db(lang, database),
                expected=expected,
                actual=actual,
                first_diff=_first_diff(expected, actual),
            ))
        report.checked[name] = {"iterations": cfg.iterations, "passed": passed}
    return report


def check_triangle(name: str, query, database) -> tuple[bool, str, str]:
    """Compare direct translation against the two-step composition."""
    if name == "sparql-datalog-mra":
        src = ans.serialize_answer(sp.eval_pattern(query, database))
        direct = ans.serialize_answer(
            tr.h13(mra.eval_expr(tr.f13(query), tr.g13(database)))
        )
        q2 = dl.normalize_program(tr.f12(query))
        d2 = tr.g12(database)
        q3 = tr.f23(q2)
        d3 = tr.g23(d2, tr.f23_vocabulary(q2))
        composed = ans.serialize_answer(tr.h12(tr.h23(mra.eval_expr(q3, d3))))
    elif name == "mra-datalog-sparql":
        schema = mra.db_schema(database)
        src = ans.serialize_answer(mra.eval_expr(query, database))
        direct = ans.serialize_answer(
            tr.h31(sp.eval_pattern(tr.f31(query, schema), tr.g31(database)))
        )
        q2 = dl.normalize_program(tr.f32(query, schema))
        d2 = tr.g32(database)
        p = tr.f21(q2)
        g = tr.g21(d2)
        composed = ans.serialize_answer(tr.h32(tr.h21(sp.eval_pattern(p, g))))
    else:
        raise ValueError(f"unknown triangle {name}")
    ok = src == direct == composed
    return ok, src, direct if direct != src else composed


def fuzz_triangles(cfg: HarnessConfig) -> FuzzReport:
    report = FuzzReport(cfg)
    for name in TRIANGLES:
        lang = name.split("-")[0]
        generate = GENERATORS[lang]
        passed = 0
        for i in range(cfg.iterations):
            rng = random.Random(f"{cfg.seed}:{name}:{i}")
            query, database = generate(rng, cfg)
            ok, expected, actual = check_triangle(name, query, database)
            if ok:
                passed += 1
                continue
            report.counterexamples.append(Counterexample(
                direction=name,
                iteration=i,
                query_text=_print_query(lang, query),
                database_text=_print_db(lang, database),
                expected=expected,
                actual=actual,
                first_diff=_first_diff(expected, actual),
            ))
        report.checked[name] = {"iterations": cfg.iterations, "passed": passed}
    return report
