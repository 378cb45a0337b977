"""Command line entry points: eval, translate, normalize, fuzz.

Exit codes: 0 success, 1 usage error, 2 parse/validation/evaluation error,
3 fuzzing found a counterexample.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import answers as ans
from . import datalog as dl
from . import harness as hz
from . import mra
from . import sparql as sp
from . import syntax as sx
from . import translate as tr

LANGS = ("sparql", "datalog", "mra")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we reserve 2
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="bagql", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    p_eval = sub.add_parser("eval", help="evaluate a query over a database")
    p_eval.add_argument("--lang", required=True, choices=LANGS)
    p_eval.add_argument("query", help="query file (.sparql/.dlog/.mra)")
    p_eval.add_argument("data", help="database file (.nt/.dlog/.rel)")
    p_eval.add_argument("--golden-update", metavar="PATH", default=None)

    p_tr = sub.add_parser("translate", help="translate a query (and database)")
    p_tr.add_argument("--from", dest="src", required=True, choices=LANGS)
    p_tr.add_argument("--to", dest="dst", required=True, choices=LANGS)
    p_tr.add_argument("query")
    p_tr.add_argument("data", nargs="?", default=None)
    p_tr.add_argument("--golden-update", metavar="PATH", default=None)

    p_norm = sub.add_parser("normalize", help="normalize a query")
    p_norm.add_argument("--lang", required=True, choices=LANGS)
    p_norm.add_argument("query")
    p_norm.add_argument("--golden-update", metavar="PATH", default=None)

    p_fuzz = sub.add_parser("fuzz", help="differential-equivalence fuzzing")
    p_fuzz.add_argument("--seed", type=int, default=42)
    p_fuzz.add_argument("--iterations", type=int, default=100)
    p_fuzz.add_argument("--max-terms", type=int, default=3)
    p_fuzz.add_argument("--max-triples", type=int, default=6)
    p_fuzz.add_argument("--max-facts", type=int, default=6)
    p_fuzz.add_argument("--max-tuples", type=int, default=6)
    p_fuzz.add_argument("--max-depth", type=int, default=4)
    p_fuzz.add_argument("--direction", action="append", choices=hz.ALL_DIRECTIONS,
                        help="repeatable; default: all six")
    p_fuzz.add_argument("--triangles", type=int, default=0, metavar="N",
                        help="also run N transitivity-triangle iterations")
    return parser


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _emit(text: str, golden_update: str | None) -> None:
    if golden_update:
        Path(golden_update).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _parse_query(lang: str, path: str):
    text = _read(path)
    if lang == "sparql":
        return sx.parse_sparql(text)
    if lang == "datalog":
        parsed = sx.parse_datalog(text)
        return parsed.query()
    return sx.parse_mra(text)


def _parse_data(lang: str, path: str):
    text = _read(path)
    if lang == "sparql":
        return sx.parse_rdf(text)
    if lang == "datalog":
        return sx.parse_datalog(text).facts
    return sx.parse_relations(text)


def _cmd_eval(args) -> int:
    query = _parse_query(args.lang, args.query)
    if args.lang == "datalog":
        # facts may live in the query file, the data file, or both
        extra = sx.parse_datalog(_read(args.query)).facts
        data = _parse_data(args.lang, args.data).additive_union(extra)
        answer = dl.eval_query(query, data)
    elif args.lang == "sparql":
        data = _parse_data(args.lang, args.data)
        answer = sp.eval_pattern(query, data)
    else:
        data = _parse_data(args.lang, args.data)
        answer = mra.eval_expr(query, data)
    _emit(ans.serialize_answer(answer), args.golden_update)
    return 0


def _prepare_source(lang: str, query, schema=None):
    """Bring a query into the form its translators require, with a notice."""
    if lang == "sparql":
        if not (sp.is_normalized(query) and sp.filters_atomic(query)):
            print("note: normalizing pattern before translation", file=sys.stderr)
            query = sp.reduce_filters(sp.normalize(query))
        return query
    if lang == "datalog":
        if not dl.is_normal_program(query.program):
            print("note: normalizing program before translation", file=sys.stderr)
            query = dl.normalize_program(query)
        return query
    resolved = mra.resolve_expr(query, schema or {})
    if not mra.selections_atomic(resolved):
        print("note: reducing selection formulas before translation", file=sys.stderr)
        resolved = mra.reduce_selections(resolved)
    return resolved


def _print_query(lang: str, query) -> str:
    if lang == "sparql":
        return sx.print_sparql(query) + "\n"
    if lang == "datalog":
        return sx.print_datalog_query(query)
    return sx.print_mra(query) + "\n"


def _print_data(lang: str, data) -> str:
    if lang == "sparql":
        return sx.print_rdf(data)
    if lang == "datalog":
        return sx.print_facts(data)
    return sx.print_relations(data)


def _cmd_translate(args) -> int:
    if args.src == args.dst:
        raise UsageError("--from and --to must differ")
    name = f"{args.src}-{args.dst}"
    direction = tr.DIRECTIONS[name]
    query = _parse_query(args.src, args.query)
    data = _parse_data(args.src, args.data) if args.data else None

    if args.src == "mra":
        if data is None:
            raise UsageError("translating from mra requires the database (for its schema)")
        query = _prepare_source("mra", query, mra.db_schema(data))
    else:
        query = _prepare_source(args.src, query)

    dst_query = direction.translate_query(query, data)
    out = _print_query(args.dst, dst_query)
    if data is not None:
        if name == "datalog-mra":
            dst_data = tr.g23(data, tr.f23_vocabulary(query))
        else:
            dst_data = direction.translate_db(data)
        out += "---\n" + _print_data(args.dst, dst_data)
    _emit(out, args.golden_update)
    return 0


def _cmd_normalize(args) -> int:
    query = _parse_query(args.lang, args.query)
    if args.lang == "sparql":
        out = _print_query("sparql", sp.reduce_filters(sp.normalize(query)))
    elif args.lang == "datalog":
        out = _print_query("datalog", dl.normalize_program(query))
    else:
        out = _print_query("mra", mra.reduce_selections(query))
    _emit(out, args.golden_update)
    return 0


def _cmd_fuzz(args) -> int:
    directions = tuple(args.direction) if args.direction else hz.ALL_DIRECTIONS
    cfg = hz.HarnessConfig(
        seed=args.seed,
        iterations=args.iterations,
        max_terms=args.max_terms,
        max_triples=args.max_triples,
        max_facts=args.max_facts,
        max_tuples=args.max_tuples,
        max_depth=args.max_depth,
        directions=directions,
    )
    report = hz.fuzz_equivalence(cfg)
    sys.stdout.write(report.to_text())
    ok = report.ok
    if args.triangles:
        tri_cfg = hz.HarnessConfig(
            seed=args.seed,
            iterations=args.triangles,
            max_terms=args.max_terms,
            max_triples=args.max_triples,
            max_facts=args.max_facts,
            max_tuples=args.max_tuples,
            max_depth=args.max_depth,
        )
        tri_report = hz.fuzz_triangles(tri_cfg)
        sys.stdout.write(tri_report.to_text())
        ok = ok and tri_report.ok
    return 0 if ok else 3


_COMMANDS = {
    "eval": _cmd_eval,
    "translate": _cmd_translate,
    "normalize": _cmd_normalize,
    "fuzz": _cmd_fuzz,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    if args.command is None:
        parser.print_help(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (sx.ParseError, sp.SparqlError, dl.DatalogError, mra.MraError,
            tr.TranslationError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
