"""Command line interface: ``hypermis {gen,solve,validate,decompose,bench}``.

Exit codes: 0 success, 2 usage error, 3 invalid or non-maximal solution
(or invalid instance), 4 iteration cap exceeded, 5 message budget violated,
6 I/O or format error, 7 decomposition failed after all retries,
8 internal invariant violated.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

from .config import SolverConfig
from .congest import BudgetViolation, RoundCapExceeded
from .core import InvariantViolation
from .decomposition import DecompositionFailure, decompose_with_retry, verify_partition
from .hypergraph import GenerationWarning, dimension, gen_random_linear, validate
from .io import FormatError, append_record, dumps_hypergraph, load_hypergraph, load_solution, save_json
from .oracle import SolutionAssignment, check_maximal, check_valid
from .pipeline import ALGORITHMS, InstanceError, bench, solve

EXIT_OK = 0
EXIT_INVALID = 3
EXIT_CAP = 4
EXIT_BUDGET = 5
EXIT_IO = 6
EXIT_DECOMP = 7
EXIT_INVARIANT = 8

log = logging.getLogger("hypermis")


def _config(args) -> SolverConfig:
    doc = {}
    if getattr(args, "config", None):
        doc.update(json.loads(Path(args.config).read_text()))
    for item in getattr(args, "set", None) or []:
        key, _, raw = item.partition("=")
        try:
            doc[key] = json.loads(raw)
        except json.JSONDecodeError:
            doc[key] = raw
    return SolverConfig.from_dict(doc)


def _write(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _sizes(args) -> tuple[int, ...]:
    if args.sizes:
        return tuple(int(x) for x in args.sizes.split(","))
    return tuple(range(2, args.d + 1))


def cmd_gen(args) -> int:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", GenerationWarning)
        h = gen_random_linear(args.n, args.edges, _sizes(args), "mis" if args.mode == "mis" else "uniform", args.seed)
    _write(dumps_hypergraph(h), args.out)
    report = validate(h, require_linear=True)
    print(f"n: {h.n}  m: {h.m}  dimension: {dimension(h)}", file=sys.stderr)
    print(f"linear: {'ok' if report.ok else 'FAILED'}", file=sys.stderr)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if not report.ok:
        return EXIT_INVALID
    if caught and args.strict:
        return EXIT_INVALID
    return EXIT_OK


def cmd_solve(args) -> int:
    h = load_hypergraph(args.instance)
    cfg = _config(args)
    res = solve(h, args.algorithm, cfg, args.seed)
    doc = {
        "n": h.n,
        **res.assignment.to_dict(),
        "algorithm": args.algorithm,
        "seed": args.seed,
        "valid": res.valid,
        "maximal": res.maximal,
        "config": res.transcript.config,
    }
    if args.out:
        save_json(doc, args.out)
        # round trip: the file on disk must re-validate on its own
        back = load_solution(args.out)
        asg = SolutionAssignment.from_included(h, back["included"])
        if not (check_valid(h, asg).ok and check_maximal(h, asg).ok) and res.valid and res.maximal:
            print("solution file failed to re-validate", file=sys.stderr)
            return EXIT_IO
    rec = res.record(h)
    if args.metrics:
        append_record(rec, args.metrics)
    if args.transcript:
        save_json(res.transcript.to_dict(), args.transcript)
    print(f"valid: {str(res.valid).lower()}, maximal: {str(res.maximal).lower()}")
    print(f"included: {len(res.assignment.included)}/{h.n}  rounds: {rec['rounds']}  max_bits: {rec['max_bits']}/{rec['budget']}  colors: {rec['colors']}")
    for v in res.violations[:10]:
        print(f"  {v}", file=sys.stderr)
    if res.transcript.flags.get("capped"):
        return EXIT_CAP
    return EXIT_OK if res.valid and res.maximal else EXIT_INVALID


def cmd_validate(args) -> int:
    h = load_hypergraph(args.instance)
    report = validate(h, require_linear=h.linear)
    print(f"instance: {'ok' if report.ok else 'INVALID'} (n={h.n}, m={h.m}, linear={str(h.linear).lower()})")
    for v in report.violations[:20]:
        print(f"  {v}")
    code = EXIT_OK if report.ok else EXIT_INVALID
    if args.solution:
        doc = load_solution(args.solution)
        if doc["n"] != h.n:
            print(f"solution is for n={doc['n']}, instance has n={h.n}")
            return EXIT_INVALID
        asg = SolutionAssignment(frozenset(doc["included"]), frozenset(doc["excluded"]))
        valid = check_valid(h, asg)
        maximal = check_maximal(h, asg)
        print(f"valid: {str(valid.ok).lower()}, maximal: {str(maximal.ok).lower()}")
        for v in (valid.violations + maximal.violations)[:20]:
            print(f"  {v}")
        if args.witness:
            print(json.dumps({"witness": {str(v): k for v, k in sorted(maximal.witness.items())}}))
        if not (valid.ok and maximal.ok):
            code = EXIT_INVALID
    return code


def cmd_decompose(args) -> int:
    h = load_hypergraph(args.instance)
    cfg = _config(args)
    part = decompose_with_retry(h, cfg, args.seed)
    report = verify_partition(h, part)
    doc = part.to_dict()
    doc["verified"] = report.ok
    doc["violations"] = report.violations
    if args.out:
        save_json(doc, args.out)
    print(f"clusters: {len(part.clusters)}  colors: {part.num_colors}  max diameter: {part.max_diameter}  "
          f"rounds: {part.rounds}  retries: {part.retries}  truncated: {part.truncated}")
    print(f"verified: {str(report.ok).lower()}")
    return EXIT_OK if report.ok else EXIT_INVALID


def _powers(lo: int, hi: int) -> list[int]:
    out, n = [], lo
    while n <= hi:
        out.append(n)
        n *= 2
    return out


def cmd_bench(args) -> int:
    cfg = _config(args)
    if args.out:
        Path(args.out).write_text("")
    sink = (lambda rec: append_record(rec, args.out)) if args.out else None
    n_values = [int(x) for x in args.n.split(",")] if args.n else _powers(args.n_min, args.n_max)
    summary = bench(n_values, range(args.seeds), args.algorithm, cfg, args.density, sink=sink)
    print(f"{'n':>6} {'seed':>4} {'rounds':>8} {'bits':>5} {'B':>4} {'colors':>6} {'diam':>4} {'iters':>5} ok")
    for r in summary.records:
        ok = r["valid"] and r["maximal"] and not r["capped"]
        print(f"{r['n']:>6} {r['seed']:>4} {r['rounds']:>8} {r['max_bits']:>5} {r['budget']:>4} "
              f"{r['colors'] if r['colors'] is not None else '-':>6} {r['max_diameter'] if r['max_diameter'] is not None else '-':>4} "
              f"{r['iterations']:>5} {'yes' if ok else 'NO'}")
    if summary.slope is not None:
        print(f"log-log slope of rounds vs log2 n: {summary.slope:.3f}")
    print(f"max_bits within budget: {str(summary.max_bits_ok).lower()}")
    print(f"colors within cap: {summary.colors_ok_fraction:.1%}  diameter within cap: {summary.diameter_ok_fraction:.1%}")
    bad = [r for r in summary.records if not (r["valid"] and r["maximal"])]
    if any(r["capped"] for r in summary.records):
        return EXIT_CAP
    return EXIT_INVALID if bad else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hypermis", description="Distributed MIS / GMIS simulator for linear hypergraphs.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add_config(sp):
        sp.add_argument("--config", help="JSON file with solver settings")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one solver setting")

    g = sub.add_parser("gen", help="generate a random linear instance")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--edges", type=int)
    g.add_argument("--mode", choices=("mis", "gmis"), default="mis")
    g.add_argument("--d", type=int, default=3, help="largest edge size when --sizes is not given")
    g.add_argument("--sizes", help="comma-separated edge sizes to draw from")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", "-o")
    g.add_argument("--strict", action="store_true", help="fail if the edge target is not reached")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve an instance end to end and audit the result")
    s.add_argument("instance")
    s.add_argument("--algorithm", "-a", choices=ALGORITHMS, default="mis")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", "-o", help="solution file")
    s.add_argument("--metrics", help="append one metrics record (JSON lines)")
    s.add_argument("--transcript", help="write the full transcript")
    add_config(s)
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("validate", help="validate an instance and optionally a solution")
    v.add_argument("instance")
    v.add_argument("--solution")
    v.add_argument("--witness", action="store_true", help="print the maximality witness map")
    v.set_defaults(func=cmd_validate)

    d = sub.add_parser("decompose", help="run and audit the network decomposition")
    d.add_argument("instance")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", "-o")
    add_config(d)
    d.set_defaults(func=cmd_decompose)

    b = sub.add_parser("bench", help="sweep n and seeds, emit metrics records")
    b.add_argument("--n", help="comma-separated sizes (overrides --n-min/--n-max)")
    b.add_argument("--n-min", type=int, default=64)
    b.add_argument("--n-max", type=int, default=1024)
    b.add_argument("--seeds", type=int, default=20)
    b.add_argument("--algorithm", "-a", choices=ALGORITHMS, default="mis")
    b.add_argument("--density", type=float, default=2.0, help="edges per node")
    b.add_argument("--out", "-o", help="metrics file (JSON lines)")
    add_config(b)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "gen" and args.edges is None:
        args.edges = 2 * args.n
    try:
        return args.func(args)
    except (FormatError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InstanceError as exc:
        print(f"invalid instance: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BudgetViolation as exc:
        print(f"budget violation: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except RoundCapExceeded as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except DecompositionFailure as exc:
        print(f"decomposition failed: {exc}", file=sys.stderr)
        return EXIT_DECOMP
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
