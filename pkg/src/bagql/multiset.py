"""Exact multisets with coloring, the common currency of all engines.

A multiset pairs a finite set of elements with a positive-integer count per
element.  Counts are plain Python ints, so products of cardinalities never
overflow silently.  Instances are immutable once built; use a builder dict
and ``Multiset(...)`` or the ``add``/``additive_union`` constructors that
return fresh instances.
"""

from __future__ import annotations

from typing import Generic, Hashable, Iterable, Iterator, Mapping, TypeVar

E = TypeVar("E", bound=Hashable)


class MalformedColoringError(ValueError):
    """Colors of some element are not exactly 1..k."""


class Multiset(Generic[E]):
    __slots__ = ("_card",)

    def __init__(self, items: Mapping[E, int] | Iterable[tuple[E, int]] = ()):
        card: dict[E, int] = {}
        pairs = items.items() if isinstance(items, Mapping) else items
        for elem, n in pairs:
            if n < 0:
                raise ValueError(f"negative cardinality {n} for {elem!r}")
            if n:
                card[elem] = card.get(elem, 0) + n
        self._card = card

    @classmethod
    def from_elements(cls, elements: Iterable[E]) -> "Multiset[E]":
        return cls((e, 1) for e in elements)

    def cardinality(self, elem: E) -> int:
        """Count of ``elem``; 0 for absent elements, never an error."""
        return self._card.get(elem, 0)

    def elements(self) -> frozenset[E]:
        return frozenset(self._card)

    def items(self) -> Iterator[tuple[E, int]]:
        return iter(self._card.items())

    def total(self) -> int:
        return sum(self._card.values())

    def add(self, elem: E, n: int = 1) -> "Multiset[E]":
        if n < 0:
            raise ValueError(f"negative cardinality {n}")
        out = dict(self._card)
        if n:
            out[elem] = out.get(elem, 0) + n
        return Multiset(out)

    def additive_union(self, other: "Multiset[E]") -> "Multiset[E]":
        """Pointwise sum of cardinalities."""
        out = dict(self._card)
        for elem, n in other._card.items():
            out[elem] = out.get(elem, 0) + n
        return Multiset(out)

    def __contains__(self, elem: object) -> bool:
        return elem in self._card

    def __len__(self) -> int:
        return len(self._card)

    def __bool__(self) -> bool:
        return bool(self._card)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Multiset):
            return NotImplemented
        return self._card == other._card

    def __hash__(self) -> int:
        return hash(frozenset(self._card.items()))

    def __repr__(self) -> str:
        inner = ", ".join(f"{e!r}x{n}" for e, n in self._card.items())
        return f"Multiset({{{inner}}})"


def coloring(m: Multiset[E]) -> frozenset[tuple[E, int]]:
    """The colored set of ``m``: one (element, i) pair per copy, i in 1..card."""
    return frozenset((e, i) for e, n in m.items() for i in range(1, n + 1))


def uncoloring(colored: Iterable[tuple[E, int]]) -> Multiset[E]:
    """Inverse of ``coloring``; rejects colorings with gaps or repeats."""
    seen: dict[E, set[int]] = {}
    for e, i in colored:
        seen.setdefault(e, set()).add(i)
    card: dict[E, int] = {}
    for e, colors in seen.items():
        k = len(colors)
        if colors != set(range(1, k + 1)):
            raise MalformedColoringError(
                f"colors of {e!r} are {sorted(colors)}, expected 1..{k}"
            )
        card[e] = k
    return Multiset(card)
