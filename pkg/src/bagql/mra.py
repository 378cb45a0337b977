"""Multiset relational algebra: selection, projection, rename, natural
join, arithmetic union and existential except.

Expressions carry a statically computable attribute set; well-formedness is
checked against a database schema before evaluation so that malformed trees
fail fast with a structural error instead of mid-evaluation.  Selection
formulas are two-valued (there is no error value here; the unbound marker
is an ordinary constant to the algebra).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .multiset import Multiset
from .terms import Term


class MraError(Exception):
    """Base error for the algebra engine."""


class SchemaViolation(MraError):
    pass


class UnknownRelationError(MraError):
    pass


# ---------------------------------------------------------------------------
# Relations
# ---------------------------------------------------------------------------

class MraTuple:
    """A total map from attributes to constants."""

    __slots__ = ("_items",)

    def __init__(self, values: Mapping[str, Term] | Iterable[tuple[str, Term]]):
        pairs = values.items() if isinstance(values, Mapping) else values
        self._items = tuple(sorted(pairs))
        if len({a for a, _ in self._items}) != len(self._items):
            raise ValueError(f"duplicate attributes in {self._items!r}")

    def attributes(self) -> frozenset[str]:
        return frozenset(a for a, _ in self._items)

    def get(self, attr: str) -> Term:
        for a, t in self._items:
            if a == attr:
                return t
        raise KeyError(attr)

    def items(self) -> tuple[tuple[str, Term], ...]:
        return self._items

    def project(self, attrs: frozenset[str] | set[str]) -> "MraTuple":
        return MraTuple((a, t) for a, t in self._items if a in attrs)

    def compatible(self, other: "MraTuple") -> bool:
        mine = dict(self._items)
        for a, t in other._items:
            if a in mine and mine[a] != t:
                return False
        return True

    def merge(self, other: "MraTuple") -> "MraTuple":
        out = dict(self._items)
        for a, t in other._items:
            out.setdefault(a, t)
        return MraTuple(out)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MraTuple):
            return NotImplemented
        return self._items == other._items

    def __hash__(self) -> int:
        return hash(self._items)

    def __repr__(self) -> str:
        inner = ", ".join(f"{a}={t!r}" for a, t in self._items)
        return f"({inner})"


class Relation:
    """A multiset of tuples, all total over one attribute set."""

    __slots__ = ("attributes", "tuples")

    def __init__(self, attributes: Iterable[str], tuples: Multiset | None = None):
        self.attributes = frozenset(attributes)
        self.tuples: Multiset = tuples if tuples is not None else Multiset()
        for t, _ in self.tuples.items():
            if t.attributes() != self.attributes:
                raise SchemaViolation(
                    f"tuple {t!r} does not match schema {sorted(self.attributes)}"
                )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Relation):
            return NotImplemented
        return self.attributes == other.attributes and self.tuples == other.tuples

    def __hash__(self) -> int:
        return hash((self.attributes, self.tuples))

    def __repr__(self) -> str:
        return f"Relation({sorted(self.attributes)}, {self.tuples!r})"


#: A database maps relation names to relations.
MraDatabase = dict[str, Relation]


def db_schema(db: MraDatabase) -> dict[str, frozenset[str]]:
    return {name: rel.attributes for name, rel in db.items()}


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RelName:
    name: str


@dataclass(frozen=True)
class Select:
    formula: "SelectionFormula"
    expr: "MraExpr"


@dataclass(frozen=True)
class Project:
    attributes: frozenset[str]
    expr: "MraExpr"


@dataclass(frozen=True)
class Rename:
    old: str
    new: str
    expr: "MraExpr"


@dataclass(frozen=True)
class Join:
    left: "MraExpr"
    right: "MraExpr"


@dataclass(frozen=True)
class UnionExpr:
    left: "MraExpr"
    right: "MraExpr"


@dataclass(frozen=True)
class ExceptExpr:
    left: "MraExpr"
    right: "MraExpr"


MraExpr = RelName | Select | Project | Rename | Join | UnionExpr | ExceptExpr


# Selection formulas: equalities over attribute references and constants,
# closed under and/or/not.  Bare names in the concrete syntax cannot be
# classified without a schema, so the parser emits AmbiguousName; resolution
# happens during the static check.

@dataclass(frozen=True)
class AttrRef:
    name: str


@dataclass(frozen=True)
class ConstRef:
    value: Term


@dataclass(frozen=True)
class AmbiguousName:
    name: str


Operand = AttrRef | ConstRef | AmbiguousName


@dataclass(frozen=True)
class FEq:
    left: Operand
    right: Operand


@dataclass(frozen=True)
class FAnd:
    left: "SelectionFormula"
    right: "SelectionFormula"


@dataclass(frozen=True)
class FOr:
    left: "SelectionFormula"
    right: "SelectionFormula"


@dataclass(frozen=True)
class FNot:
    inner: "SelectionFormula"


SelectionFormula = FEq | FAnd | FOr | FNot


def formula_attributes(psi: SelectionFormula) -> frozenset[str]:
    if isinstance(psi, FEq):
        return frozenset(
            op.name for op in (psi.left, psi.right) if isinstance(op, AttrRef)
        )
    if isinstance(psi, (FAnd, FOr)):
        return formula_attributes(psi.left) | formula_attributes(psi.right)
    if isinstance(psi, FNot):
        return formula_attributes(psi.inner)
    raise TypeError(f"not a selection formula: {psi!r}")


def formula_is_atomic(psi: SelectionFormula) -> bool:
    return isinstance(psi, FEq)


def selections_atomic(e: MraExpr) -> bool:
    if isinstance(e, RelName):
        return True
    if isinstance(e, Select):
        return formula_is_atomic(e.formula) and selections_atomic(e.expr)
    if isinstance(e, (Project, Rename)):
        return selections_atomic(e.expr)
    if isinstance(e, (Join, UnionExpr, ExceptExpr)):
        return selections_atomic(e.left) and selections_atomic(e.right)
    raise TypeError(f"not an expression: {e!r}")


def _resolve_operand(op: Operand, attrs: frozenset[str]) -> Operand:
    if isinstance(op, AmbiguousName):
        from .terms import Iri  # plain names default to IRI constants
        return AttrRef(op.name) if op.name in attrs else ConstRef(Iri(op.name))
    return op


def resolve_formula(psi: SelectionFormula, attrs: frozenset[str]) -> SelectionFormula:
    """Classify bare names as attributes (when in schema) or constants."""
    if isinstance(psi, FEq):
        return FEq(_resolve_operand(psi.left, attrs), _resolve_operand(psi.right, attrs))
    if isinstance(psi, (FAnd, FOr)):
        return type(psi)(resolve_formula(psi.left, attrs), resolve_formula(psi.right, attrs))
    if isinstance(psi, FNot):
        return FNot(resolve_formula(psi.inner, attrs))
    raise TypeError(f"not a selection formula: {psi!r}")


def resolve_expr(e: MraExpr, schema: Mapping[str, frozenset[str]]) -> MraExpr:
    """Resolve all ambiguous formula names against the static schemas."""
    if isinstance(e, RelName):
        return e
    if isinstance(e, Select):
        inner = resolve_expr(e.expr, schema)
        return Select(resolve_formula(e.formula, schema_of(inner, schema)), inner)
    if isinstance(e, Project):
        return Project(e.attributes, resolve_expr(e.expr, schema))
    if isinstance(e, Rename):
        return Rename(e.old, e.new, resolve_expr(e.expr, schema))
    if isinstance(e, (Join, UnionExpr, ExceptExpr)):
        return type(e)(resolve_expr(e.left, schema), resolve_expr(e.right, schema))
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# Static schema computation
# ---------------------------------------------------------------------------

def schema_of(e: MraExpr, schema: Mapping[str, frozenset[str]]) -> frozenset[str]:
    """Attribute set of ``e``; raises SchemaViolation naming the bad clause."""
    if isinstance(e, RelName):
        if e.name not in schema:
            raise UnknownRelationError(f"unknown relation name {e.name}")
        return schema[e.name]
    if isinstance(e, Select):
        inner = schema_of(e.expr, schema)
        missing = formula_attributes(e.formula) - inner
        if missing:
            raise SchemaViolation(
                f"select: attributes {sorted(missing)} not in schema {sorted(inner)}"
            )
        return inner
    if isinstance(e, Project):
        inner = schema_of(e.expr, schema)
        if not e.attributes <= inner:
            raise SchemaViolation(
                f"project: {sorted(e.attributes - inner)} not in schema {sorted(inner)}"
            )
        return e.attributes
    if isinstance(e, Rename):
        inner = schema_of(e.expr, schema)
        if e.old not in inner:
            raise SchemaViolation(f"rename: attribute {e.old} not in schema {sorted(inner)}")
        if e.new in inner:
            raise SchemaViolation(f"rename: attribute {e.new} already in schema {sorted(inner)}")
        return (inner - {e.old}) | {e.new}
    if isinstance(e, Join):
        return schema_of(e.left, schema) | schema_of(e.right, schema)
    if isinstance(e, (UnionExpr, ExceptExpr)):
        left, right = schema_of(e.left, schema), schema_of(e.right, schema)
        if left != right:
            op = "union" if isinstance(e, UnionExpr) else "except"
            raise SchemaViolation(
                f"{op}: operand schemas differ: {sorted(left)} vs {sorted(right)}"
            )
        return left
    raise TypeError(f"not an expression: {e!r}")


def check_expr(e: MraExpr, schema: Mapping[str, frozenset[str]]) -> frozenset[str]:
    """Resolve-free static check; formulas must already be resolved."""
    _ensure_resolved(e)
    return schema_of(e, schema)


def _ensure_resolved(e: MraExpr) -> None:
    if isinstance(e, Select):
        _ensure_formula_resolved(e.formula)
        _ensure_resolved(e.expr)
    elif isinstance(e, (Project, Rename)):
        _ensure_resolved(e.expr)
    elif isinstance(e, (Join, UnionExpr, ExceptExpr)):
        _ensure_resolved(e.left)
        _ensure_resolved(e.right)


def _ensure_formula_resolved(psi: SelectionFormula) -> None:
    if isinstance(psi, FEq):
        for op in (psi.left, psi.right):
            if isinstance(op, AmbiguousName):
                raise SchemaViolation(f"unresolved name {op.name} in selection formula")
    elif isinstance(psi, (FAnd, FOr)):
        _ensure_formula_resolved(psi.left)
        _ensure_formula_resolved(psi.right)
    elif isinstance(psi, FNot):
        _ensure_formula_resolved(psi.inner)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def eval_selection(psi: SelectionFormula, t: MraTuple) -> bool:
    """Two-valued satisfaction of a resolved selection formula."""
    if isinstance(psi, FEq):
        return _operand_value(psi.left, t) == _operand_value(psi.right, t)
    if isinstance(psi, FAnd):
        return eval_selection(psi.left, t) and eval_selection(psi.right, t)
    if isinstance(psi, FOr):
        return eval_selection(psi.left, t) or eval_selection(psi.right, t)
    if isinstance(psi, FNot):
        return not eval_selection(psi.inner, t)
    raise TypeError(f"not a selection formula: {psi!r}")


def _operand_value(op: Operand, t: MraTuple) -> Term:
    if isinstance(op, AttrRef):
        try:
            return t.get(op.name)
        except KeyError:
            raise SchemaViolation(f"attribute {op.name} missing from tuple {t!r}")
    if isinstance(op, ConstRef):
        return op.value
    raise SchemaViolation(f"unresolved name {op.name} in selection formula")


def eval_expr(e: MraExpr, db: MraDatabase) -> Relation:
    """Evaluate a checked expression; counts follow the multiset semantics
    (selection keeps, projection sums, join multiplies, union adds, except
    keeps left counts of tuples absent on the right)."""
    schema = db_schema(db)
    resolved = resolve_expr(e, schema)
    check_expr(resolved, schema)
    return _eval(resolved, db)


def _eval(e: MraExpr, db: MraDatabase) -> Relation:
    if isinstance(e, RelName):
        return db[e.name]
    if isinstance(e, Select):
        inner = _eval(e.expr, db)
        kept = Multiset(
            (t, n) for t, n in inner.tuples.items() if eval_selection(e.formula, t)
        )
        return Relation(inner.attributes, kept)
    if isinstance(e, Project):
        inner = _eval(e.expr, db)
        counts: dict[MraTuple, int] = {}
        for t, n in inner.tuples.items():
            small = t.project(e.attributes)
            counts[small] = counts.get(small, 0) + n
        return Relation(e.attributes, Multiset(counts))
    if isinstance(e, Rename):
        inner = _eval(e.expr, db)
        renamed = Multiset(
            (MraTuple((e.new if a == e.old else a, v) for a, v in t.items()), n)
            for t, n in inner.tuples.items()
        )
        return Relation((inner.attributes - {e.old}) | {e.new}, renamed)
    if isinstance(e, Join):
        left, right = _eval(e.left, db), _eval(e.right, db)
        counts = {}
        for t1, n1 in left.tuples.items():
            for t2, n2 in right.tuples.items():
                if t1.compatible(t2):
                    merged = t1.merge(t2)
                    counts[merged] = counts.get(merged, 0) + n1 * n2
        return Relation(left.attributes | right.attributes, Multiset(counts))
    if isinstance(e, UnionExpr):
        left, right = _eval(e.left, db), _eval(e.right, db)
        return Relation(left.attributes, left.tuples.additive_union(right.tuples))
    if isinstance(e, ExceptExpr):
        left, right = _eval(e.left, db), _eval(e.right, db)
        kept = Multiset((t, n) for t, n in left.tuples.items() if t not in right.tuples)
        return Relation(left.attributes, kept)
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# Selection reduction
# ---------------------------------------------------------------------------

def reduce_selections(e: MraExpr) -> MraExpr:
    """Rewrite so every selection formula is a single equality atom.

    Conjunctions nest, negations become except-with-self, disjunctions
    become the three-way disjoint split (left-only, right-only, both); the
    result evaluates identically.
    """
    if isinstance(e, RelName):
        return e
    if isinstance(e, Project):
        return Project(e.attributes, reduce_selections(e.expr))
    if isinstance(e, Rename):
        return Rename(e.old, e.new, reduce_selections(e.expr))
    if isinstance(e, (Join, UnionExpr, ExceptExpr)):
        return type(e)(reduce_selections(e.left), reduce_selections(e.right))
    if isinstance(e, Select):
        return _reduce_select(reduce_selections(e.expr), e.formula)
    raise TypeError(f"not an expression: {e!r}")


def _reduce_select(e: MraExpr, psi: SelectionFormula) -> MraExpr:
    if isinstance(psi, FEq):
        return Select(psi, e)
    if isinstance(psi, FAnd):
        return _reduce_select(_reduce_select(e, psi.left), psi.right)
    if isinstance(psi, FNot):
        return ExceptExpr(e, _reduce_select(e, psi.inner))
    if isinstance(psi, FOr):
        left_only = _reduce_select(e, psi.left)
        right_only = _reduce_select(e, psi.right)
        both = _reduce_select(left_only, psi.right)
        return UnionExpr(
            UnionExpr(
                ExceptExpr(left_only, _reduce_select(left_only, psi.right)),
                ExceptExpr(right_only, _reduce_select(right_only, psi.left)),
            ),
            both,
        )
    raise TypeError(f"not a selection formula: {psi!r}")
