"""Non-recursive multiset Datalog with safe negation.

A database is a multiset of ground facts; the answer to a query counts, for
each substitution of the goal's variables, the number of distinct proofs of
the substituted goal.  Evaluation is bottom-up in dependency order; a
separate derivation-tree oracle materializes the proofs explicitly and is
used to cross-check the evaluator on small instances.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .multiset import Multiset, coloring
from .terms import Term


class DatalogError(Exception):
    """Base error for the Datalog engine."""


class UnsafeRuleError(DatalogError):
    pass


class RecursiveProgramError(DatalogError):
    pass


class ConstantInHeadError(DatalogError):
    pass


class VariableFreeLiteralError(DatalogError):
    pass


class PredicateSortClashError(DatalogError):
    pass


class InstanceTooLargeError(DatalogError):
    pass


# ---------------------------------------------------------------------------
# Syntax
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DVar:
    name: str


DTerm = DVar | Term  # a Datalog term is a variable or a constant


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[DTerm, ...]

    def vars(self) -> frozenset[str]:
        return frozenset(a.name for a in self.args if isinstance(a, DVar))

    def is_ground(self) -> bool:
        return not any(isinstance(a, DVar) for a in self.args)


@dataclass(frozen=True)
class Literal:
    atom: Atom
    positive: bool = True

    def vars(self) -> frozenset[str]:
        return self.atom.vars()


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: tuple[Literal, ...]

    def vars(self) -> frozenset[str]:
        out = set(self.head.vars())
        for lit in self.body:
            out |= lit.vars()
        return frozenset(out)


@dataclass(frozen=True)
class DatalogQuery:
    goal: Atom
    program: tuple[Rule, ...]


#: A database is a multiset of ground atoms.
FactMultiset = Multiset


@dataclass(frozen=True)
class DatalogAnswer:
    variables: frozenset[str]
    solutions: Multiset  # of Substitution

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DatalogAnswer):
            return NotImplemented
        return self.variables == other.variables and self.solutions == other.solutions


class Substitution:
    """A total map over a fixed variable set."""

    __slots__ = ("_items",)

    def __init__(self, bindings: Iterable[tuple[str, Term]]):
        self._items = tuple(sorted(bindings))

    def get(self, var: str) -> Term:
        for v, t in self._items:
            if v == var:
                return t
        raise KeyError(var)

    def items(self) -> tuple[tuple[str, Term], ...]:
        return self._items

    def domain(self) -> frozenset[str]:
        return frozenset(v for v, _ in self._items)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Substitution):
            return NotImplemented
        return self._items == other._items

    def __hash__(self) -> int:
        return hash(self._items)

    def __repr__(self) -> str:
        inner = ", ".join(f"{v}->{t!r}" for v, t in self._items)
        return f"{{{inner}}}"


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def intensional_predicates(program: Sequence[Rule]) -> frozenset[str]:
    return frozenset(r.head.pred for r in program)


def validate(query: DatalogQuery, database: FactMultiset | None = None) -> None:
    """Check safety, non-recursion, head purity, literal shape and predicate
    sorts; raises a named error for the first violation found."""
    program = query.program
    intensional = intensional_predicates(program)
    arity: dict[str, int] = {}

    def see(pred: str, n: int, where: str) -> None:
        if pred in arity and arity[pred] != n:
            raise PredicateSortClashError(
                f"predicate {pred} used with arities {arity[pred]} and {n} ({where})"
            )
        arity[pred] = n

    for rule in program:
        if any(not isinstance(a, DVar) for a in rule.head.args):
            raise ConstantInHeadError(f"constant in rule head: {rule.head}")
        see(rule.head.pred, len(rule.head.args), "rule head")
        if not rule.body:
            raise UnsafeRuleError(f"rule with empty body: {rule.head}")
        positive_vars: set[str] = set()
        for lit in rule.body:
            if not lit.vars():
                raise VariableFreeLiteralError(f"variable-free body literal: {lit.atom}")
            see(lit.atom.pred, len(lit.atom.args), "body literal")
            if lit.positive:
                positive_vars |= lit.vars()
        unsafe = rule.vars() - positive_vars
        if unsafe:
            raise UnsafeRuleError(
                f"variables {sorted(unsafe)} do not occur positively in rule for {rule.head.pred}"
            )

    if any(not isinstance(a, DVar) for a in query.goal.args):
        raise ConstantInHeadError(f"constant in goal: {query.goal}")
    see(query.goal.pred, len(query.goal.args), "goal")

    # dependency graph: edge body-predicate -> head-predicate
    edges: dict[str, set[str]] = {}
    for rule in program:
        for lit in rule.body:
            edges.setdefault(lit.atom.pred, set()).add(rule.head.pred)
    _check_acyclic(edges)

    if database is not None:
        for fact, _ in database.items():
            if not isinstance(fact, Atom) or not fact.is_ground():
                raise DatalogError(f"database entry is not a ground atom: {fact!r}")
            if fact.pred in intensional:
                raise PredicateSortClashError(
                    f"predicate {fact.pred} is both extensional and intensional"
                )
            see(fact.pred, len(fact.args), "fact")


def _check_acyclic(edges: dict[str, set[str]]) -> None:
    state: dict[str, int] = {}  # 1 = visiting, 2 = done

    def visit(node: str, trail: list[str]) -> None:
        mark = state.get(node)
        if mark == 2:
            return
        if mark == 1:
            cycle = trail[trail.index(node):] + [node]
            raise RecursiveProgramError(f"recursive dependency: {' -> '.join(cycle)}")
        state[node] = 1
        trail.append(node)
        for nxt in edges.get(node, ()):
            visit(nxt, trail)
        trail.pop()
        state[node] = 2

    for start in list(edges):
        visit(start, [])


def _topo_order(program: Sequence[Rule]) -> list[str]:
    """Intensional predicates ordered so that dependencies come first."""
    rules_for: dict[str, list[Rule]] = {}
    for rule in program:
        rules_for.setdefault(rule.head.pred, []).append(rule)
    order: list[str] = []
    done: set[str] = set()

    def visit(pred: str) -> None:
        if pred in done or pred not in rules_for:
            return
        done.add(pred)
        for rule in rules_for[pred]:
            for lit in rule.body:
                visit(lit.atom.pred)
        order.append(pred)

    for pred in rules_for:
        visit(pred)
    return order


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _unify(args: tuple[DTerm, ...], values: tuple[Term, ...],
           binding: dict[str, Term]) -> dict[str, Term] | None:
    out = binding
    copied = False
    for a, v in zip(args, values):
        if isinstance(a, DVar):
            bound = out.get(a.name)
            if bound is None:
                if not copied:
                    out = dict(out)
                    copied = True
                out[a.name] = v
            elif bound != v:
                return None
        elif a != v:
            return None
    return out


def _ground(atom: Atom, binding: dict[str, Term]) -> Atom:
    return Atom(atom.pred, tuple(
        binding[a.name] if isinstance(a, DVar) else a for a in atom.args
    ))


def _match_body(body: tuple[Literal, ...], relations: dict[str, Multiset]) -> list[tuple[dict[str, Term], int]]:
    """All substitutions grounding the body, with proof-count products.

    Positive literals bind variables and multiply multiplicities; negative
    literals act as guards over the already-computed relations.
    """
    positives = [lit for lit in body if lit.positive]
    negatives = [lit for lit in body if not lit.positive]
    partial: list[tuple[dict[str, Term], int]] = [({}, 1)]
    for lit in positives:
        rel = relations.get(lit.atom.pred, Multiset())
        grown: list[tuple[dict[str, Term], int]] = []
        for binding, count in partial:
            for fact, mult in rel.items():
                extended = _unify(lit.atom.args, fact.args, binding)
                if extended is not None:
                    grown.append((extended, count * mult))
        partial = grown
        if not partial:
            return []
    for lit in negatives:
        rel = relations.get(lit.atom.pred, Multiset())
        partial = [
            (binding, count) for binding, count in partial
            if rel.cardinality(_ground(lit.atom, binding)) == 0
        ]
    return partial


def _derived_relations(program: Sequence[Rule], database: FactMultiset) -> dict[str, Multiset]:
    relations: dict[str, Multiset] = {}
    for fact, n in database.items():
        existing = relations.get(fact.pred, Multiset())
        relations[fact.pred] = existing.add(fact, n)
    rules_for: dict[str, list[Rule]] = {}
    for rule in program:
        rules_for.setdefault(rule.head.pred, []).append(rule)
    for pred in _topo_order(program):
        counts: dict[Atom, int] = {}
        for rule in rules_for[pred]:
            for binding, count in _match_body(rule.body, relations):
                head = _ground(rule.head, binding)
                counts[head] = counts.get(head, 0) + count
        relations[pred] = Multiset(counts)
    return relations


def eval_query(query: DatalogQuery, database: FactMultiset) -> DatalogAnswer:
    """Answer = substitutions over the goal's variables, counted by proofs."""
    validate(query, database)
    relations = _derived_relations(query.program, database)
    goal = query.goal
    rel = relations.get(goal.pred, Multiset())
    solutions: dict[Substitution, int] = {}
    for fact, n in rel.items():
        binding = _unify(goal.args, fact.args, {})
        if binding is not None:
            theta = Substitution(binding.items())
            solutions[theta] = solutions.get(theta, 0) + n
    return DatalogAnswer(goal.vars(), Multiset(solutions))


# ---------------------------------------------------------------------------
# Derivation-tree oracle
# ---------------------------------------------------------------------------

#: Leaf trees are ("leaf", fact, color); rule trees are
#: ("rule", rule_index, head_fact, (child_trees...)).
DerivationTree = tuple


def derivation_trees(
    program: Sequence[Rule],
    database: FactMultiset,
    *,
    max_facts: int = 64,
    max_trees: int = 200_000,
) -> Multiset:
    """Materialize every derivation tree and count proofs per ground atom.

    This is the oracle against which ``eval_query`` is checked; it is only
    meant for small instances and raises once the configured bounds are hit.
    """
    if database.total() > max_facts:
        raise InstanceTooLargeError(f"database has {database.total()} facts (max {max_facts})")
    trees_by_root: dict[Atom, list[DerivationTree]] = {}
    total = 0
    for fact, color in sorted(coloring(database), key=repr):
        trees_by_root.setdefault(fact, []).append(("leaf", fact, color))
        total += 1

    rules_for: dict[str, list[tuple[int, Rule]]] = {}
    for idx, rule in enumerate(program):
        rules_for.setdefault(rule.head.pred, []).append((idx, rule))

    def atom_counts() -> dict[str, Multiset]:
        per_pred: dict[str, dict[Atom, int]] = {}
        for root, trees in trees_by_root.items():
            per_pred.setdefault(root.pred, {})[root] = len(trees)
        return {pred: Multiset(counts) for pred, counts in per_pred.items()}

    for pred in _topo_order(program):
        for idx, rule in rules_for[pred]:
            relations = atom_counts()
            positives = [lit for lit in rule.body if lit.positive]
            negatives = [lit for lit in rule.body if not lit.positive]
            groundings: list[dict[str, Term]] = []
            # enumerate substitutions grounding the positive body
            def grow(i: int, binding: dict[str, Term]) -> None:
                if i == len(positives):
                    groundings.append(binding)
                    return
                lit = positives[i]
                for fact in relations.get(lit.atom.pred, Multiset()).elements():
                    extended = _unify(lit.atom.args, fact.args, binding)
                    if extended is not None:
                        grow(i + 1, extended)

            grow(0, {})
            for binding in groundings:
                if any(
                    relations.get(lit.atom.pred, Multiset()).cardinality(_ground(lit.atom, binding))
                    for lit in negatives
                ):
                    continue
                head = _ground(rule.head, binding)
                child_lists = [
                    trees_by_root[_ground(lit.atom, binding)] for lit in positives
                ]
                combos = [()]
                for options in child_lists:
                    combos = [c + (t,) for c in combos for t in options]
                total += len(combos)
                if total > max_trees:
                    raise InstanceTooLargeError(f"more than {max_trees} derivation trees")
                bucket = trees_by_root.setdefault(head, [])
                for children in combos:
                    bucket.append(("rule", idx, head, children))

    return Multiset((root, len(trees)) for root, trees in trees_by_root.items())


def answer_from_atoms(goal: Atom, atoms: Multiset) -> DatalogAnswer:
    """Project a proof-counted atom multiset onto a goal, like eval_query."""
    solutions: dict[Substitution, int] = {}
    for fact, n in atoms.items():
        if fact.pred != goal.pred or len(fact.args) != len(goal.args):
            continue
        binding = _unify(goal.args, fact.args, {})
        if binding is not None:
            theta = Substitution(binding.items())
            solutions[theta] = solutions.get(theta, 0) + n
    return DatalogAnswer(goal.vars(), Multiset(solutions))


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

def _is_projection(rule: Rule) -> bool:
    return (
        len(rule.body) == 1
        and rule.body[0].positive
        and rule.head.vars() <= rule.body[0].vars()
    )


def _is_join(rule: Rule) -> bool:
    return (
        len(rule.body) == 2
        and rule.body[0].positive
        and rule.body[1].positive
        and rule.head.vars() == rule.body[0].vars() | rule.body[1].vars()
    )


def _is_negation(rule: Rule) -> bool:
    return (
        len(rule.body) == 2
        and rule.body[0].positive
        and not rule.body[1].positive
        and rule.body[1].vars() == rule.body[0].vars()
        and rule.head.vars() == rule.body[0].vars()
    )


def is_normal_rule(rule: Rule) -> bool:
    return _is_projection(rule) or _is_join(rule) or _is_negation(rule)


def is_normal_program(program: Sequence[Rule]) -> bool:
    return all(is_normal_rule(r) for r in program)


class _FreshNames:
    def __init__(self, used: Iterable[str]):
        self._used = set(used)
        self._n = 0

    def fresh(self, base: str) -> str:
        while True:
            self._n += 1
            candidate = f"{base}{self._n}"
            if candidate not in self._used:
                self._used.add(candidate)
                return candidate


def _var_tuple(names: Iterable[str]) -> tuple[DTerm, ...]:
    return tuple(DVar(v) for v in sorted(names))


def normalize_program(query: DatalogQuery) -> DatalogQuery:
    """Rewrite every rule into projection / join / negation shape.

    Positive literals fold into a chain of binary joins; each negative
    literal is widened to the full variable set of the chain (via a helper
    join) and then applied as a same-schema negation.  Answers, including
    multiplicities, are preserved.
    """
    validate(query)
    used = {query.goal.pred}
    for rule in query.program:
        used.add(rule.head.pred)
        for lit in rule.body:
            used.add(lit.atom.pred)
    names = _FreshNames(used)

    out: list[Rule] = []
    for rule in query.program:
        if is_normal_rule(rule):
            out.append(rule)
            continue
        out.extend(_normalize_rule(rule, names))
    return DatalogQuery(query.goal, tuple(out))


def _normalize_rule(rule: Rule, names: _FreshNames) -> list[Rule]:
    positives = [lit.atom for lit in rule.body if lit.positive]
    negatives = [lit.atom for lit in rule.body if not lit.positive]
    out: list[Rule] = []

    # chain of joins over the positive literals
    seen_vars: set[str] = set(positives[0].vars())
    current = Literal(positives[0])
    for atom in positives[1:]:
        seen_vars |= atom.vars()
        head = Atom(names.fresh("aux"), _var_tuple(seen_vars))
        out.append(Rule(head, (current, Literal(atom))))
        current = Literal(head)

    # negation cascade over the full variable set of the chain
    chain_vars = frozenset(seen_vars)
    carrier = Atom(names.fresh("aux"), _var_tuple(chain_vars))
    out.append(Rule(carrier, (current,)))
    current = Literal(carrier)
    for atom in negatives:
        widened = Atom(names.fresh("aux"), _var_tuple(chain_vars))
        out.append(Rule(widened, (current, Literal(atom))))
        guarded = Atom(names.fresh("aux"), _var_tuple(chain_vars))
        out.append(Rule(guarded, (current, Literal(widened, positive=False))))
        current = Literal(guarded)

    out.append(Rule(rule.head, (current,)))
    return out
