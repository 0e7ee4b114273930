"""Command-line front end: analyze, chase, umodel, enumerate, test-answer, gen, bench.

Exit codes: 0 success, 1 semantic failure (unsatisfiable input, query not
eligible, reduction not applicable, instance too large), 2 usage, parse or
file errors.
"""
from __future__ import annotations

import argparse
import statistics
import sys
import time
from pathlib import Path

from . import bench, gen, oracle
from .analysis import classify
from .enumeration import preprocess_complete
from .errors import OMQError, ParseError
from .horn import chase, naive_chase
from .partial import (MULTI, SINGLE, enumerate_partial, format_tuple, is_minimal_partial_answer,
                      is_partial_answer, mode_of, parse_tuple)
from .reasoner import Reasoner
from .syntax import (OMQ, Database, parse_database, parse_ontology, parse_query, print_database,
                     print_ontology, print_query)
from .umodel import build_u_dq


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror or e}") from None


def _sorted_dump(d: Database) -> str:
    """Database file text with facts sorted, so dumps do not depend on derivation order."""
    return print_database(Database(sorted(d.unary), sorted(d.binary), d.nulls))


def _load(args, need_db: bool = True, need_query: bool = True):
    o = parse_ontology(_read(args.ontology))
    q = parse_query(_read(args.query)) if need_query else None
    d = parse_database(_read(args.db)) if need_db else None
    if args.sigma is not None:
        sigma = {s.strip() for s in args.sigma.split(",") if s.strip()}
    else:
        sigma = o.signature() | (q.signature() if q else set())
        if d is not None:
            # facts over symbols the OMQ never mentions cannot change any answer
            sigma &= d.signature()
            extra = d.signature() - sigma
            if extra:
                print(f"note: ignoring facts over {', '.join(sorted(extra))}", file=sys.stderr)
                d = Database([f for f in d.unary if f[0] in sigma],
                             [f for f in d.binary if f[0] in sigma], d.nulls)
    Q = OMQ(o, frozenset(sigma), q) if q is not None else None
    return Reasoner(o), Q, d


# ---------------------------------------------------------------- subcommands

def cmd_analyze(args) -> int:
    reasoner, Q, _ = _load(args, need_db=False)
    for line in classify(reasoner, Q).lines():
        print(line)
    return 0


def cmd_chase(args) -> int:
    reasoner, _, d = _load(args, need_query=False)
    out = naive_chase(reasoner, d) if args.naive else chase(reasoner, d)
    sys.stdout.write(_sorted_dump(out))
    return 0


def cmd_umodel(args) -> int:
    reasoner, Q, d = _load(args)
    u = build_u_dq(reasoner, d, Q)
    sys.stdout.write(_sorted_dump(u.db))
    return 0


def _answers(args, reasoner, Q, d):
    """(preprocessing seconds, answer iterator) for the requested mode and path."""
    t0 = time.perf_counter()
    if args.oracle:
        if args.mode == "complete":
            found = sorted(oracle.brute_answers(reasoner, Q, d))
        else:
            found = sorted(oracle.brute_minimal_partial(reasoner, Q, d, _wild_mode(args.mode)))
        return time.perf_counter() - t0, iter(found)
    if args.mode == "complete":
        state = preprocess_complete(reasoner, Q, d)
        return time.perf_counter() - t0, iter(state)
    verdict = classify(reasoner, Q)
    if not verdict.partial_eligible:
        print("warning: q+ over the original answer variables is not free-connex acyclic; "
              "falling back to backtracking search", file=sys.stderr)
    it = enumerate_partial(reasoner, Q, d, _wild_mode(args.mode))
    return time.perf_counter() - t0, it


def _wild_mode(mode: str) -> str:
    return MULTI if mode == "multi" else SINGLE


def cmd_enumerate(args) -> int:
    reasoner, Q, d = _load(args)
    prep, it = _answers(args, reasoner, Q, d)
    out: list[tuple[str, ...]] = []
    gaps: list[int] = []
    limit = args.limit
    if args.measure_delay:
        clock = time.perf_counter_ns
        last = clock()
        for t in it:
            now = clock()
            if out:
                gaps.append(now - last)
            out.append(t)
            if limit is not None and len(out) >= limit:
                break
            last = clock()
    else:
        for t in it:
            out.append(t)
            if limit is not None and len(out) >= limit:
                break
    if args.sort:
        out.sort()
    sys.stdout.write("".join(format_tuple(t) + "\n" for t in out))
    if args.measure_delay:
        mx = max(gaps) / 1e3 if gaps else 0.0
        med = statistics.median(gaps) / 1e3 if gaps else 0.0
        print(f"answers={len(out)} preprocess_ms={prep * 1e3:.3f} max_delay_us={mx:.3f} "
              f"median_delay_us={med:.3f}", file=sys.stderr)
    return 0


def cmd_test_answer(args) -> int:
    reasoner, Q, d = _load(args)
    c = parse_tuple(args.tuple)
    mode = _wild_mode(args.mode) if args.mode else mode_of(c)
    if len(c) != len(Q.query.answer_vars):
        raise UsageError(f"tuple has {len(c)} entries, the query has {len(Q.query.answer_vars)} answer variables")
    if args.oracle:
        part = c in oracle.brute_partial(reasoner, Q, d, mode)
        minimal = c in oracle.brute_minimal_partial(reasoner, Q, d, mode)
    else:
        u = build_u_dq(reasoner, d, Q)
        part = is_partial_answer(reasoner, Q, d, c, mode, u)
        minimal = part and is_minimal_partial_answer(reasoner, Q, d, c, mode, u)
    yn = {True: "yes", False: "no"}
    print(f"partial answer: {yn[part]}")
    print(f"minimal partial answer: {yn[minimal]}")
    return 0


def _fixed_omq(name: str) -> OMQ:
    return {"triangle": gen.triangle_omq, "hyperclique": gen.hyperclique_omq, "mm": gen.mm_omq,
            "bmm": gen.bmm_omq}[name]()


def _matrices(rows: list[tuple[str, ...]]) -> tuple[list, list]:
    m1, m2 = [], []
    for r in rows:
        if len(r) != 3 or r[0] not in ("1", "2"):
            raise UsageError(f"matrix entries are written `1 i j` or `2 i j`, got {' '.join(r)!r}")
        (m1 if r[0] == "1" else m2).append((r[1], r[2]))
    return m1, m2


def cmd_gen(args) -> int:
    rows = gen.parse_edges(_read(args.input))
    if args.omq:
        o = parse_ontology(_read(args.omq[0]))
        q = parse_query(_read(args.omq[1]))
        sigma = ({s.strip() for s in args.sigma.split(",") if s.strip()} if args.sigma is not None
                 else o.signature() | q.signature())
        Q = OMQ(o, frozenset(sigma), q)
    else:
        Q = _fixed_omq(args.reduction)
    reasoner = Reasoner(Q.ontology)
    if args.reduction == "triangle":
        if any(len(r) != 2 for r in rows):
            raise UsageError("triangle input: one edge `u v` per line")
        d = gen.gen_triangle_db(reasoner, Q, rows)
    elif args.reduction == "hyperclique":
        d = gen.gen_hyperclique_db(reasoner, Q, rows)
    elif args.reduction == "mm":
        d = gen.gen_mm_db(reasoner, Q, *_matrices(rows))
    else:
        if args.omq:
            raise UsageError("the bmm reduction uses its own fixed OMQ")
        Q, d = gen.gen_bmm_instance(*_matrices(rows))
    text = print_database(d)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.omq_out:
        Path(args.omq_out + ".ont").write_text(print_ontology(Q.ontology))
        Path(args.omq_out + ".q").write_text(print_query(Q.query))
    return 0


def _sizes(text: str) -> list[int]:
    """`12-17` (exponents of two) or a comma list of fact counts."""
    if "-" in text:
        lo, hi = (int(x) for x in text.split("-", 1))
        return [2 ** k for k in range(lo, hi + 1)]
    return [int(x) for x in text.split(",")]


def cmd_bench(args) -> int:
    try:
        sizes = _sizes(args.sizes)
    except ValueError:
        raise UsageError(f"bad --sizes {args.sizes!r}") from None
    if args.backends:
        rows = bench.backend_comparison(sizes, args.repeats, args.seed)
        cols = list(rows[0]) if rows else []
        lines = [",".join(cols)] + [",".join(f"{r[c]:.3f}" if isinstance(r[c], float) else str(r[c])
                                             for c in cols) for r in rows]
    else:
        rows = bench.scaling(sizes, args.repeats, args.seed)
        lines = [",".join(bench.CSV_COLUMNS)] + [r.csv() for r in rows]
    text = "".join(line + "\n" for line in lines)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------- parser

def _inputs(p: argparse.ArgumentParser, db: bool = True, query: bool = True) -> None:
    p.add_argument("-o", "--ontology", required=True, help="ontology file")
    if db:
        p.add_argument("-d", "--db", required=True, help="database file")
    if query:
        p.add_argument("-q", "--query", required=True, help="query file")
    p.add_argument("--sigma", help="comma-separated data schema (default: symbols of O and q used in the data)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="omqe", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="FA-extension and enumerability verdicts")
    _inputs(p, db=False)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("chase", help="dump the chase of a database")
    _inputs(p, query=False)
    p.add_argument("--naive", action="store_true", help="use the rule-based reference chase")
    p.set_defaults(func=cmd_chase)

    p = sub.add_parser("umodel", help="dump the query-directed universal model")
    _inputs(p)
    p.set_defaults(func=cmd_umodel)

    p = sub.add_parser("enumerate", help="stream answers, one per line")
    _inputs(p)
    p.add_argument("--mode", choices=("complete", "partial", "multi"), default="complete")
    p.add_argument("--limit", type=int, help="stop after this many answers")
    p.add_argument("--measure-delay", action="store_true", help="report timing on stderr")
    p.add_argument("--oracle", action="store_true", help="use the brute-force reference")
    p.add_argument("--sort", action="store_true", help="sort answers before printing")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("test-answer", help="is a wildcard tuple a (minimal) partial answer")
    _inputs(p)
    p.add_argument("--tuple", required=True, help='comma-separated, e.g. "mary,*" or "*1,a,*1"')
    p.add_argument("--mode", choices=("partial", "multi"), help="default: inferred from the tuple")
    p.add_argument("--oracle", action="store_true", help="use the brute-force reference")
    p.set_defaults(func=cmd_test_answer)

    p = sub.add_parser("gen", help="generate a reduction database")
    p.add_argument("--reduction", required=True, choices=("triangle", "hyperclique", "bmm", "mm"))
    p.add_argument("--in", dest="input", required=True,
                   help="edges `u v`, hyperedges `a b c`, or matrix entries `1 i j` / `2 i j`")
    p.add_argument("--omq", nargs=2, metavar=("ONTOLOGY", "QUERY"), help="OMQ files (default: built-in OMQ)")
    p.add_argument("--sigma", help="data schema for --omq (default: symbols of O and q)")
    p.add_argument("--out", help="database output file (default: stdout)")
    p.add_argument("--omq-out", help="also write the OMQ used to PREFIX.ont and PREFIX.q")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="scaling or backend benchmark as CSV")
    p.add_argument("--sizes", default="12-17", help="exponent range like 12-17, or a comma list of fact counts")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backends", action="store_true", help="compare the numba and numpy kernels")
    p.add_argument("--out", help="CSV output file (default: stdout)")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except (UsageError, ParseError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OMQError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
