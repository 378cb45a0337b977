"""Shared constant domain for all three query languages.

The three languages exchange data through translators, so they share one
value universe: IRIs and literals.  Datalog constants and relational
constants are the same tagged values; plain identifiers in Datalog/algebra
text denote IRIs, quoted strings denote literals.  A handful of spellings
are reserved for the translators (the unbound marker, the NULL marker and
the position IRIs) and are rejected in user-authored input.
"""

from __future__ import annotations

import re
from dataclasses import dataclass


@dataclass(frozen=True)
class Iri:
    value: str

    def __repr__(self) -> str:
        return f"Iri({self.value!r})"


@dataclass(frozen=True)
class Lit:
    value: str

    def __repr__(self) -> str:
        return f"Lit({self.value!r})"


# A term (RDF term, Datalog constant, relational constant) is Iri | Lit.
Term = Iri | Lit

#: Marker for SPARQL's unbound value inside Datalog and the algebra.
BOTTOM = Iri("_|_")

#: Marker IRI carrying answer variables/attributes through SPARQL.
NULL = Iri("NULL")

_ALPHA_RE = re.compile(r"alpha\d+$")

# IRI namespaces minted by the translators (fact/tuple identifiers etc.).
_RESERVED_PREFIXES = ("fact:", "rel:", "attr:", "tuple:")

#: Datalog predicate names installed by the graph translation.
RESERVED_PREDICATES = frozenset({"term", "eq", "comp", "triple", "null"})

#: Relation names installed by the graph translation.
RESERVED_RELATIONS = frozenset({"Trip", "Null", "Comp"})


def alpha(i: int) -> Iri:
    """Position IRI for argument slot ``i`` (slot 0 holds the predicate)."""
    return Iri(f"alpha{i}")


def is_reserved_name(name: str) -> bool:
    """True when a bare name collides with translator vocabulary."""
    if name in ("NULL", "_|_"):
        return True
    if _ALPHA_RE.match(name):
        return True
    return name.startswith(_RESERVED_PREFIXES) or name == "member"


def is_reserved_term(t: Term) -> bool:
    return isinstance(t, Iri) and is_reserved_name(t.value)


def term_text(t: Term) -> str:
    """Unambiguous one-token rendering, used for canonical sorting."""
    if isinstance(t, Iri):
        return f"<{t.value}>"
    return '"' + t.value + '"'


def term_sort_key(t: Term) -> str:
    return term_text(t)
