"""Command-line front end.

Subcommands: compress, solve, count, td, check-td, qcsp, suite.  Exit
codes: 0 ok, 1 verdict failure (mismatch / invalid decomposition),
2 parse error, 3 precondition violation, 4 internal assertion,
5 oracle limit exceeded.
"""

import argparse
import concurrent.futures
import os
import random
import sys
import time

from . import qcsp as qcsp_mod
from . import randgen
from .compressor import CompressError, CompressOptions, compress, iterate
from .decomp import DecompError, check_td, compute_pd, compute_td, read_td, write_td
from .formula import ParseError, QbfError, parse_qbf, serialize_qbf
from .graphs import primal_graph
from .oracle import LimitError, OracleError, count_projected, evaluate

EXIT_PARSE = 2
EXIT_PRECONDITION = 3
EXIT_INTERNAL = 4
EXIT_LIMIT = 5


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _atomic_write(path, text):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _read(path):
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(EXIT_PARSE, "cannot read %s: %s" % (path, exc))


def _parse_file(path):
    try:
        return parse_qbf(_read(path))
    except ParseError as exc:
        raise CliError(EXIT_PARSE, "%s: %s" % (path, exc))
    except QbfError as exc:
        raise CliError(EXIT_PARSE, "%s: %s" % (path, exc))


def _stem(path, out_dir):
    base = os.path.basename(path)
    for suffix in (".qdimacs", ".qcsp", ".txt"):
        if base.endswith(suffix):
            base = base[:-len(suffix)]
            break
    d = out_dir or os.path.dirname(path) or "."
    os.makedirs(d, exist_ok=True)
    return os.path.join(d, base)


def _stats_text(stats):
    return "".join("%s=%s\n" % (k, stats[k]) for k in sorted(stats))


def _options(args):
    return CompressOptions(strategy=args.strategy, c=args.c,
                           pd=getattr(args, "pd", False))


def _compress_one(path, args):
    q = _parse_file(path)
    stem = _stem(path, args.out)
    t0 = time.time()
    results = iterate(q, max(1, args.iterate), _options(args))
    wall = time.time() - t0
    last = results[-1]
    _atomic_write(stem + ".out.qdimacs", serialize_qbf(last.reduced))
    _atomic_write(stem + ".out.td", write_td(last.compressed_td))
    atlas_lines = [last.atlas.describe(nv) for nv in sorted(last.atlas.origin)]
    _atomic_write(stem + ".atlas", "\n".join(atlas_lines) + "\n")
    blocks = []
    for hop, res in enumerate(results, start=1):
        stats = dict(res.stats)
        stats["hop"] = hop
        stats["wall_seconds"] = "%.3f" % wall
        blocks.append(_stats_text(stats))
    _atomic_write(stem + ".stats", "\n".join(blocks))
    return "%s: rank %d -> %d, width %d (bound %d)" % (
        path, results[0].stats["rank_in"], last.stats["rank_out"],
        last.stats["width_out"], last.stats["width_bound"])


def cmd_compress(args):
    if args.jobs > 1 and len(args.files) > 1:
        with concurrent.futures.ProcessPoolExecutor(args.jobs) as pool:
            futs = [pool.submit(_compress_one, f, args) for f in args.files]
            for fut in futs:
                print(fut.result())
    else:
        for f in args.files:
            print(_compress_one(f, args))
    return 0


def cmd_solve(args):
    limit = args.oracle_limit if args.oracle_limit > 0 else None
    code = 0
    for path in args.files:
        q = _parse_file(path)
        verdict = evaluate(q, limit=limit)
        print("%s: %s" % (path, "VALID" if verdict else "INVALID"))
        if args.check_compress:
            res = compress(q, _options(args))
            reduced_verdict = evaluate(res.reduced, limit=None)
            if reduced_verdict != verdict:
                print("%s: MISMATCH after compression" % path)
                code = 1
    return code


def cmd_count(args):
    limit = args.oracle_limit if args.oracle_limit > 0 else None
    for path in args.files:
        q = _parse_file(path)
        print("%s: %d" % (path, count_projected(q, limit=limit)))
    return 0


def cmd_td(args):
    for path in args.files:
        q = _parse_file(path)
        g = primal_graph(q.matrix)
        td = compute_pd(g) if args.pd else compute_td(g, args.strategy)
        stem = _stem(path, args.out)
        _atomic_write(stem + ".td", write_td(td))
        print("%s: width=%d nodes=%d" % (path, td.width, len(td.nodes)))
    return 0


def cmd_check_td(args):
    q = _parse_file(args.instance)
    try:
        td = read_td(_read(args.tdfile))
    except DecompError as exc:
        raise CliError(EXIT_PARSE, "%s: %s" % (args.tdfile, exc))
    report = check_td(primal_graph(q.matrix), td)
    if report.ok:
        print("OK width=%d" % td.width)
        return 0
    for violation in report.violations:
        print("violation %s" % violation)
    return 1


def cmd_qcsp(args):
    code = 0
    for path in args.files:
        try:
            q = qcsp_mod.parse_qcsp(_read(path))
        except qcsp_mod.QcspError as exc:
            raise CliError(EXIT_PARSE, "%s: %s" % (path, exc))
        t0 = time.time()
        res = qcsp_mod.compress_qcsp(q, strategy=args.strategy, c=args.c)
        stats = dict(res.stats)
        stats["wall_seconds"] = "%.3f" % (time.time() - t0)
        stem = _stem(path, args.out)
        _atomic_write(stem + ".out.qcsp", qcsp_mod.serialize_qcsp(res.reduced))
        _atomic_write(stem + ".stats", _stats_text(stats))
        line = "%s: rank %d -> %d, vars %d -> %d" % (
            path, stats["rank_in"], stats["rank_out"],
            stats["vars_in"], stats["vars_out"])
        if args.check:
            a = qcsp_mod.evaluate_qcsp(q, limit=args.oracle_limit or None)
            b = qcsp_mod.evaluate_qcsp(res.reduced, limit=None)
            line += ", oracle %s" % ("agrees" if a == b else "MISMATCH")
            if a != b:
                code = 1
        print(line)
    return code


def cmd_suite(args):
    """Seeded random equivalence suite: compress each instance and
    compare oracle verdicts."""
    rng = random.Random(args.seed)
    mismatches = 0
    for i in range(args.count):
        if args.kind == "qbf":
            q = randgen.random_qbf(rng, max_vars=args.max_vars)
            a = evaluate(q, limit=None)
            res = compress(q, _options(args))
            b = evaluate(res.reduced, limit=None)
        else:
            q = randgen.random_qcsp(rng, max_vars=args.max_vars)
            a = qcsp_mod.evaluate_qcsp(q, limit=None)
            res = qcsp_mod.compress_qcsp(q, strategy=args.strategy, c=args.c)
            b = qcsp_mod.evaluate_qcsp(res.reduced, limit=None)
        if a != b:
            mismatches += 1
            print("instance %d: MISMATCH" % i)
    print("%d instances, %d mismatches" % (args.count, mismatches))
    return 1 if mismatches else 0


def _add_compress_flags(p):
    p.add_argument("--strategy", default="min-fill",
                   choices=["min-fill", "min-degree", "exact-tiny"])
    p.add_argument("--c", type=int, default=None,
                   help="introduction budget of the decomposition")
    p.add_argument("--pd", action="store_true",
                   help="use a path decomposition (2-local output)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qbfcompress",
        description="treewidth compression toolkit for prenex QBFs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", help="compress instances, emit artifacts")
    p.add_argument("files", nargs="+")
    _add_compress_flags(p)
    p.add_argument("--iterate", type=int, default=1)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("solve", help="oracle verdict (desk scale)")
    p.add_argument("files", nargs="+")
    p.add_argument("--oracle-limit", type=int, default=24)
    p.add_argument("--check-compress", action="store_true")
    _add_compress_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("count", help="projected model count over free vars")
    p.add_argument("files", nargs="+")
    p.add_argument("--oracle-limit", type=int, default=24)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("td", help="decompose the primal graph")
    p.add_argument("files", nargs="+")
    _add_compress_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_td)

    p = sub.add_parser("check-td", help="validate a decomposition file")
    p.add_argument("instance")
    p.add_argument("tdfile")
    p.set_defaults(func=cmd_check_td)

    p = sub.add_parser("qcsp", help="compress a finite-domain instance")
    p.add_argument("files", nargs="+")
    p.add_argument("--strategy", default="min-fill",
                   choices=["min-fill", "min-degree", "exact-tiny"])
    p.add_argument("--c", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--check", action="store_true")
    p.add_argument("--oracle-limit", type=int, default=24)
    p.set_defaults(func=cmd_qcsp)

    p = sub.add_parser("suite", help="seeded random equivalence suite")
    p.add_argument("--kind", default="qbf", choices=["qbf", "qcsp"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--max-vars", type=int, default=8)
    _add_compress_flags(p)
    p.set_defaults(func=cmd_suite)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return exc.code
    except LimitError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_LIMIT
    except (CompressError, OracleError, DecompError, QbfError,
            qcsp_mod.QcspError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_PRECONDITION
    except AssertionError as exc:
        print("internal error: %s" % exc, file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
