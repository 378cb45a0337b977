"""Canonical serialization of query answers.

Equal answer multisets serialize to byte-identical text: bindings are
sorted, cardinalities explicit, and the domain/schema spelled out even when
the answer is empty.  The harness compares answers by comparing these
documents.
"""

from __future__ import annotations

import json

from . import datalog as dl
from . import mra
from . import sparql as sp
from .multiset import Multiset
from .terms import term_text


def _binding_obj(items) -> dict[str, str]:
    return {name: term_text(value) for name, value in items}


def sparql_answer_obj(omega: Multiset) -> dict:
    solutions = [
        {"bindings": _binding_obj(mu.items()), "count": n} for mu, n in omega.items()
    ]
    solutions.sort(key=lambda s: json.dumps(s["bindings"], sort_keys=True))
    return {"language": "sparql", "solutions": solutions}


def datalog_answer_obj(answer: dl.DatalogAnswer) -> dict:
    solutions = [
        {"bindings": _binding_obj(theta.items()), "count": n}
        for theta, n in answer.solutions.items()
    ]
    solutions.sort(key=lambda s: json.dumps(s["bindings"], sort_keys=True))
    return {
        "language": "datalog",
        "variables": sorted(answer.variables),
        "solutions": solutions,
    }


def mra_answer_obj(rel: mra.Relation) -> dict:
    tuples = [
        {"values": _binding_obj(t.items()), "count": n} for t, n in rel.tuples.items()
    ]
    tuples.sort(key=lambda s: json.dumps(s["values"], sort_keys=True))
    return {
        "language": "mra",
        "attributes": sorted(rel.attributes),
        "tuples": tuples,
    }


def serialize_answer(answer) -> str:
    """Dispatch on the answer type and produce the canonical document."""
    if isinstance(answer, Multiset):
        obj = sparql_answer_obj(answer)
    elif isinstance(answer, dl.DatalogAnswer):
        obj = datalog_answer_obj(answer)
    elif isinstance(answer, mra.Relation):
        obj = mra_answer_obj(answer)
    else:
        raise TypeError(f"not an answer: {answer!r}")
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def answers_equal(a, b) -> bool:
    """Byte-compare of the canonical serializations."""
    return serialize_answer(a) == serialize_answer(b)
