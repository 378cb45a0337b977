"""The SPARQL pattern fragment: AND / UNION / EXCEPT / FILTER / SELECT.

Covers the abstract syntax, 3-valued filter evaluation, multiset pattern
evaluation over an RDF graph, in-scope variable computation, normalization,
reduction of complex filter conditions to atomic ones, and variable
renaming.  Variables are bare strings (no ``?`` sigil) everywhere in the
AST; the concrete syntax adds the sigil back.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Mapping

from .multiset import Multiset
from .terms import Iri, Lit, Term, term_sort_key


class SparqlError(Exception):
    """Base error for the SPARQL engine."""


class PatternInvalidError(SparqlError):
    pass


class InvalidRenameError(SparqlError):
    pass


# ---------------------------------------------------------------------------
# Graphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Triple:
    s: Iri
    p: Iri
    o: Term


class Graph:
    """A set of RDF triples (no duplicates by construction)."""

    __slots__ = ("triples",)

    def __init__(self, triples: Iterable[Triple] = ()):
        self.triples = frozenset(triples)

    def terms(self) -> frozenset[Term]:
        out: set[Term] = set()
        for t in self.triples:
            out.add(t.s)
            out.add(t.p)
            out.add(t.o)
        return frozenset(out)

    def __len__(self) -> int:
        return len(self.triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(self.triples)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.triples == other.triples

    def __hash__(self) -> int:
        return hash(self.triples)

    def __repr__(self) -> str:
        return f"Graph({sorted(self.triples, key=lambda t: (term_sort_key(t.s), term_sort_key(t.p), term_sort_key(t.o)))!r})"


# ---------------------------------------------------------------------------
# Solution mappings
# ---------------------------------------------------------------------------

class SolutionMapping:
    """A partial map from variables to terms; unbound means absent."""

    __slots__ = ("_items",)

    def __init__(self, bindings: Mapping[str, Term] | Iterable[tuple[str, Term]] = ()):
        pairs = bindings.items() if isinstance(bindings, Mapping) else bindings
        self._items = tuple(sorted(pairs))
        if len({v for v, _ in self._items}) != len(self._items):
            raise ValueError(f"conflicting bindings in {self._items!r}")

    def domain(self) -> frozenset[str]:
        return frozenset(v for v, _ in self._items)

    def get(self, var: str) -> Term | None:
        for v, t in self._items:
            if v == var:
                return t
        return None

    def items(self) -> tuple[tuple[str, Term], ...]:
        return self._items

    def restrict(self, vars_: frozenset[str] | set[str]) -> "SolutionMapping":
        return SolutionMapping((v, t) for v, t in self._items if v in vars_)

    def compatible(self, other: "SolutionMapping") -> bool:
        mine = dict(self._items)
        for v, t in other._items:
            if v in mine and mine[v] != t:
                return False
        return True

    def merge(self, other: "SolutionMapping") -> "SolutionMapping":
        out = dict(self._items)
        out.update(other._items)
        return SolutionMapping(out)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SolutionMapping):
            return NotImplemented
        return self._items == other._items

    def __hash__(self) -> int:
        return hash(self._items)

    def __repr__(self) -> str:
        inner = ", ".join(f"?{v}->{t!r}" for v, t in self._items)
        return f"{{{inner}}}"


EMPTY_MAPPING = SolutionMapping()


# ---------------------------------------------------------------------------
# Filter conditions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EqConst:
    var: str
    value: Term


@dataclass(frozen=True)
class EqVar:
    left: str
    right: str


@dataclass(frozen=True)
class Bound:
    var: str


@dataclass(frozen=True)
class ConstFalse:
    """The constant-false condition.

    Not part of the user-facing syntax; produced by ``error_condition`` for
    bound() atoms, which never evaluate to error.
    """


@dataclass(frozen=True)
class CondAnd:
    left: "FilterCondition"
    right: "FilterCondition"


@dataclass(frozen=True)
class CondOr:
    left: "FilterCondition"
    right: "FilterCondition"


@dataclass(frozen=True)
class CondNot:
    inner: "FilterCondition"


FilterCondition = EqConst | EqVar | Bound | ConstFalse | CondAnd | CondOr | CondNot

ATOMIC_CONDS = (EqConst, EqVar, Bound, ConstFalse)


def cond_vars(phi: FilterCondition) -> frozenset[str]:
    if isinstance(phi, EqConst):
        return frozenset({phi.var})
    if isinstance(phi, EqVar):
        return frozenset({phi.left, phi.right})
    if isinstance(phi, Bound):
        return frozenset({phi.var})
    if isinstance(phi, ConstFalse):
        return frozenset()
    if isinstance(phi, (CondAnd, CondOr)):
        return cond_vars(phi.left) | cond_vars(phi.right)
    if isinstance(phi, CondNot):
        return cond_vars(phi.inner)
    raise TypeError(f"not a filter condition: {phi!r}")


class Truth(Enum):
    TRUE = "true"
    FALSE = "false"
    ERROR = "error"


_AND_TABLE = {
    (Truth.TRUE, Truth.TRUE): Truth.TRUE,
    (Truth.TRUE, Truth.FALSE): Truth.FALSE,
    (Truth.TRUE, Truth.ERROR): Truth.ERROR,
    (Truth.FALSE, Truth.TRUE): Truth.FALSE,
    (Truth.FALSE, Truth.FALSE): Truth.FALSE,
    (Truth.FALSE, Truth.ERROR): Truth.FALSE,
    (Truth.ERROR, Truth.TRUE): Truth.ERROR,
    (Truth.ERROR, Truth.FALSE): Truth.FALSE,
    (Truth.ERROR, Truth.ERROR): Truth.ERROR,
}

_OR_TABLE = {
    (Truth.TRUE, Truth.TRUE): Truth.TRUE,
    (Truth.TRUE, Truth.FALSE): Truth.TRUE,
    (Truth.TRUE, Truth.ERROR): Truth.TRUE,
    (Truth.FALSE, Truth.TRUE): Truth.TRUE,
    (Truth.FALSE, Truth.FALSE): Truth.FALSE,
    (Truth.FALSE, Truth.ERROR): Truth.ERROR,
    (Truth.ERROR, Truth.TRUE): Truth.TRUE,
    (Truth.ERROR, Truth.FALSE): Truth.ERROR,
    (Truth.ERROR, Truth.ERROR): Truth.ERROR,
}

_NOT_TABLE = {Truth.TRUE: Truth.FALSE, Truth.FALSE: Truth.TRUE, Truth.ERROR: Truth.ERROR}


def eval_filter(phi: FilterCondition, mu: SolutionMapping) -> Truth:
    """3-valued evaluation; error is a value, not a failure."""
    if isinstance(phi, EqConst):
        v = mu.get(phi.var)
        if v is None:
            return Truth.ERROR
        return Truth.TRUE if v == phi.value else Truth.FALSE
    if isinstance(phi, EqVar):
        a, b = mu.get(phi.left), mu.get(phi.right)
        if a is None or b is None:
            return Truth.ERROR
        return Truth.TRUE if a == b else Truth.FALSE
    if isinstance(phi, Bound):
        return Truth.TRUE if mu.get(phi.var) is not None else Truth.FALSE
    if isinstance(phi, ConstFalse):
        return Truth.FALSE
    if isinstance(phi, CondAnd):
        return _AND_TABLE[eval_filter(phi.left, mu), eval_filter(phi.right, mu)]
    if isinstance(phi, CondOr):
        return _OR_TABLE[eval_filter(phi.left, mu), eval_filter(phi.right, mu)]
    if isinstance(phi, CondNot):
        return _NOT_TABLE[eval_filter(phi.inner, mu)]
    raise TypeError(f"not a filter condition: {phi!r}")


# ---------------------------------------------------------------------------
# Patterns
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str


TriplePart = Term | Var


@dataclass(frozen=True)
class TriplePattern:
    s: TriplePart
    p: TriplePart
    o: TriplePart


@dataclass(frozen=True)
class And:
    left: "Pattern"
    right: "Pattern"


@dataclass(frozen=True)
class Union:
    left: "Pattern"
    right: "Pattern"


@dataclass(frozen=True)
class Except:
    left: "Pattern"
    right: "Pattern"


@dataclass(frozen=True)
class Filter:
    pattern: "Pattern"
    condition: FilterCondition


@dataclass(frozen=True)
class Select:
    variables: frozenset[str]
    pattern: "Pattern"


Pattern = TriplePattern | And | Union | Except | Filter | Select


def triple_pattern_vars(tp: TriplePattern) -> frozenset[str]:
    return frozenset(x.name for x in (tp.s, tp.p, tp.o) if isinstance(x, Var))


def pattern_vars(p: Pattern) -> frozenset[str]:
    """All variables occurring anywhere in the pattern, filters included."""
    if isinstance(p, TriplePattern):
        return triple_pattern_vars(p)
    if isinstance(p, (And, Union, Except)):
        return pattern_vars(p.left) | pattern_vars(p.right)
    if isinstance(p, Filter):
        return pattern_vars(p.pattern) | cond_vars(p.condition)
    if isinstance(p, Select):
        return p.variables | pattern_vars(p.pattern)
    raise TypeError(f"not a pattern: {p!r}")


def in_scope(p: Pattern) -> frozenset[str]:
    if isinstance(p, TriplePattern):
        return triple_pattern_vars(p)
    if isinstance(p, (And, Union)):
        return in_scope(p.left) | in_scope(p.right)
    if isinstance(p, (Except, Filter)):
        return in_scope(p.left if isinstance(p, Except) else p.pattern)
    if isinstance(p, Select):
        return p.variables
    raise TypeError(f"not a pattern: {p!r}")


def validate_pattern(p: Pattern) -> None:
    """Structural validity: triple patterns need at least one variable,
    subject/predicate slots cannot hold literals."""
    if isinstance(p, TriplePattern):
        if not triple_pattern_vars(p):
            raise PatternInvalidError(f"triple pattern without variables: {p!r}")
        for slot in (p.s, p.p):
            if isinstance(slot, Lit):
                raise PatternInvalidError(f"literal in subject/predicate slot: {p!r}")
    elif isinstance(p, (And, Union, Except)):
        validate_pattern(p.left)
        validate_pattern(p.right)
    elif isinstance(p, Filter):
        validate_pattern(p.pattern)
    elif isinstance(p, Select):
        validate_pattern(p.pattern)
    else:
        raise PatternInvalidError(f"not a pattern: {p!r}")


def is_normalized(p: Pattern) -> bool:
    if isinstance(p, TriplePattern):
        return True
    if isinstance(p, And):
        return is_normalized(p.left) and is_normalized(p.right)
    if isinstance(p, (Union, Except)):
        return (
            in_scope(p.left) == in_scope(p.right)
            and is_normalized(p.left)
            and is_normalized(p.right)
        )
    if isinstance(p, Filter):
        return cond_vars(p.condition) <= in_scope(p.pattern) and is_normalized(p.pattern)
    if isinstance(p, Select):
        return is_normalized(p.pattern)
    raise TypeError(f"not a pattern: {p!r}")


def filters_atomic(p: Pattern) -> bool:
    if isinstance(p, TriplePattern):
        return True
    if isinstance(p, (And, Union, Except)):
        return filters_atomic(p.left) and filters_atomic(p.right)
    if isinstance(p, Filter):
        return isinstance(p.condition, ATOMIC_CONDS) and filters_atomic(p.pattern)
    if isinstance(p, Select):
        return filters_atomic(p.pattern)
    raise TypeError(f"not a pattern: {p!r}")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _match_triple(tp: TriplePattern, triple: Triple) -> SolutionMapping | None:
    binding: dict[str, Term] = {}
    for part, value in ((tp.s, triple.s), (tp.p, triple.p), (tp.o, triple.o)):
        if isinstance(part, Var):
            if part.name in binding and binding[part.name] != value:
                return None
            binding[part.name] = value
        elif part != value:
            return None
    return SolutionMapping(binding)


def eval_pattern(p: Pattern, g: Graph) -> Multiset[SolutionMapping]:
    if isinstance(p, TriplePattern):
        out: dict[SolutionMapping, int] = {}
        for triple in g:
            mu = _match_triple(p, triple)
            if mu is not None:
                out[mu] = 1  # distinct triples yield distinct mappings
        return Multiset(out)
    if isinstance(p, And):
        return _eval_and(eval_pattern(p.left, g), eval_pattern(p.right, g))
    if isinstance(p, Union):
        return _eval_union(eval_pattern(p.left, g), eval_pattern(p.right, g))
    if isinstance(p, Except):
        return _eval_except(eval_pattern(p.left, g), eval_pattern(p.right, g))
    if isinstance(p, Filter):
        inner = eval_pattern(p.pattern, g)
        return Multiset(
            (mu, n) for mu, n in inner.items()
            if eval_filter(p.condition, mu) is Truth.TRUE
        )
    if isinstance(p, Select):
        inner = eval_pattern(p.pattern, g)
        out = {}
        for mu, n in inner.items():
            restricted = mu.restrict(p.variables)
            out[restricted] = out.get(restricted, 0) + n
        return Multiset(out)
    raise TypeError(f"not a pattern: {p!r}")


def _eval_and(m1: Multiset[SolutionMapping], m2: Multiset[SolutionMapping]) -> Multiset[SolutionMapping]:
    out: dict[SolutionMapping, int] = {}
    for (mu1, n1), (mu2, n2) in itertools.product(m1.items(), m2.items()):
        if mu1.compatible(mu2):
            merged = mu1.merge(mu2)
            out[merged] = out.get(merged, 0) + n1 * n2
    return Multiset(out)


def _eval_union(m1: Multiset[SolutionMapping], m2: Multiset[SolutionMapping]) -> Multiset[SolutionMapping]:
    return m1.additive_union(m2)


def _eval_except(m1: Multiset[SolutionMapping], m2: Multiset[SolutionMapping]) -> Multiset[SolutionMapping]:
    return Multiset((mu, n) for mu, n in m1.items() if mu not in m2)


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

def normalize(p: Pattern) -> Pattern:
    """Rewrite into normal form: filters mention only in-scope variables,
    UNION/EXCEPT operands share in-scope sets.  Already-normal patterns come
    back structurally unchanged."""
    if isinstance(p, TriplePattern):
        return p
    if isinstance(p, And):
        return And(normalize(p.left), normalize(p.right))
    if isinstance(p, (Union, Except)):
        left, right = normalize(p.left), normalize(p.right)
        sl, sr = in_scope(left), in_scope(right)
        if sl != sr:
            widened = sl | sr
            if sl != widened:
                left = Select(frozenset(widened), left)
            if sr != widened:
                right = Select(frozenset(widened), right)
        return type(p)(left, right)
    if isinstance(p, Filter):
        inner = normalize(p.pattern)
        extra = cond_vars(p.condition) - in_scope(inner)
        if extra:
            inner = Select(frozenset(in_scope(inner) | extra), inner)
        return Filter(inner, p.condition)
    if isinstance(p, Select):
        return Select(p.variables, normalize(p.pattern))
    raise TypeError(f"not a pattern: {p!r}")


# ---------------------------------------------------------------------------
# Error conditions and filter reduction
# ---------------------------------------------------------------------------

def error_condition(phi: FilterCondition) -> FilterCondition:
    """A condition that holds exactly when ``phi`` evaluates to error."""
    if isinstance(phi, Bound):
        return ConstFalse()
    if isinstance(phi, ConstFalse):
        # constant false never errors
        return ConstFalse()
    if isinstance(phi, EqConst):
        return CondNot(Bound(phi.var))
    if isinstance(phi, EqVar):
        bx, by = Bound(phi.left), Bound(phi.right)
        return CondOr(
            CondOr(CondAnd(CondNot(bx), by), CondAnd(bx, CondNot(by))),
            CondAnd(CondNot(bx), CondNot(by)),
        )
    if isinstance(phi, CondAnd):
        e1, e2 = error_condition(phi.left), error_condition(phi.right)
        return CondOr(
            CondOr(CondAnd(phi.left, e2), CondAnd(e1, phi.right)),
            CondAnd(e1, e2),
        )
    if isinstance(phi, CondOr):
        e1, e2 = error_condition(phi.left), error_condition(phi.right)
        return CondOr(
            CondOr(CondAnd(CondNot(phi.left), e2), CondAnd(e1, CondNot(phi.right))),
            CondAnd(e1, e2),
        )
    if isinstance(phi, CondNot):
        return error_condition(phi.inner)
    raise TypeError(f"not a filter condition: {phi!r}")


def reduce_filters(p: Pattern) -> Pattern:
    """Eliminate every connective (and the constant false) from filter
    conditions while preserving the evaluated multiset.

    Conjunctions split into nested filters; disjunctions become the
    five-branch disjoint union (both-true, left-only, right-only and the two
    one-side-errors branches); negations subtract the true. and the error
    rows; a constant-false filter becomes the empty pattern (P EXCEPT P).
    """
    if isinstance(p, TriplePattern):
        return p
    if isinstance(p, (And, Union, Except)):
        return type(p)(reduce_filters(p.left), reduce_filters(p.right))
    if isinstance(p, Select):
        return Select(p.variables, reduce_filters(p.pattern))
    if isinstance(p, Filter):
        return _reduce_filter(reduce_filters(p.pattern), p.condition)
    raise TypeError(f"not a pattern: {p!r}")


def _reduce_filter(p: Pattern, phi: FilterCondition) -> Pattern:
    # p is already reduced
    if isinstance(phi, ConstFalse):
        return Except(p, p)
    if isinstance(phi, (EqConst, EqVar, Bound)):
        return Filter(p, phi)
    if isinstance(phi, CondAnd):
        return _reduce_filter(_reduce_filter(p, phi.left), phi.right)
    if isinstance(phi, CondOr):
        f1, f2 = phi.left, phi.right
        e1, e2 = error_condition(f1), error_condition(f2)
        branches = [
            _reduce_filter(p, CondAnd(f1, f2)),
            _reduce_filter(p, CondAnd(f1, CondNot(f2))),
            _reduce_filter(p, CondAnd(CondNot(f1), f2)),
            _reduce_filter(p, CondAnd(f1, e2)),
            _reduce_filter(p, CondAnd(e1, f2)),
        ]
        out = branches[0]
        for b in branches[1:]:
            out = Union(out, b)
        return out
    if isinstance(phi, CondNot):
        inner = phi.inner
        return Except(
            Except(p, _reduce_filter(p, inner)),
            _reduce_filter(p, error_condition(inner)),
        )
    raise TypeError(f"not a filter condition: {phi!r}")


# ---------------------------------------------------------------------------
# Variable renaming
# ---------------------------------------------------------------------------

def _rename_part(part: TriplePart, old: str, new: str) -> TriplePart:
    if isinstance(part, Var) and part.name == old:
        return Var(new)
    return part


def _rename_cond(phi: FilterCondition, old: str, new: str) -> FilterCondition:
    def v(name: str) -> str:
        return new if name == old else name

    if isinstance(phi, EqConst):
        return EqConst(v(phi.var), phi.value)
    if isinstance(phi, EqVar):
        return EqVar(v(phi.left), v(phi.right))
    if isinstance(phi, Bound):
        return Bound(v(phi.var))
    if isinstance(phi, ConstFalse):
        return phi
    if isinstance(phi, (CondAnd, CondOr)):
        return type(phi)(_rename_cond(phi.left, old, new), _rename_cond(phi.right, old, new))
    if isinstance(phi, CondNot):
        return CondNot(_rename_cond(phi.inner, old, new))
    raise TypeError(f"not a filter condition: {phi!r}")


def _fresh_var(base: str, used: set[str]) -> str:
    i = 0
    candidate = f"{base}_{i}"
    while candidate in used:
        i += 1
        candidate = f"{base}_{i}"
    used.add(candidate)
    return candidate


def rename_variable(p: Pattern, old: str, new: str) -> Pattern:
    """Consistently rename in-scope variable ``old`` to ``new``.

    ``old`` must be in scope and ``new`` must not be; the result evaluates
    to the same multiset with ``old`` renamed in every mapping.
    """
    if old not in in_scope(p):
        raise InvalidRenameError(f"?{old} is not in scope")
    if new in in_scope(p):
        raise InvalidRenameError(f"?{new} is already in scope")
    used = set(pattern_vars(p)) | {old, new}
    return _subs(p, old, new, used)


def _subs(p: Pattern, old: str, new: str, used: set[str]) -> Pattern:
    if old not in in_scope(p):
        # nothing visible to rename under this node
        return p
    if isinstance(p, TriplePattern):
        return TriplePattern(
            _rename_part(p.s, old, new),
            _rename_part(p.p, old, new),
            _rename_part(p.o, old, new),
        )
    if isinstance(p, (And, Union, Except)):
        return type(p)(_subs(p.left, old, new, used), _subs(p.right, old, new, used))
    if isinstance(p, Filter):
        return Filter(_subs(p.pattern, old, new, used), _rename_cond(p.condition, old, new))
    if isinstance(p, Select):
        inner = p.pattern
        if new in in_scope(inner):
            # pre-rename the clashing variable inside the projection
            fresh = _fresh_var(new, used)
            inner = _subs(inner, new, fresh, used)
        if old in in_scope(inner):
            inner = _subs(inner, old, new, used)
        new_vars = frozenset((p.variables - {old}) | {new})
        return Select(new_vars, inner)
    raise TypeError(f"not a pattern: {p!r}")
