"""Command line entry point (``orthantwalks``).

Exit codes: 0 success, 1 usage error, 2 memory budget refusal,
3 internal inconsistency (sign parity conflict, failed verification).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .algebra import DEFAULT_PRIME, ExprSyntaxError
from .counting import DEFAULT_MEMORY_BUDGET, MemoryBudgetExceeded, count_walks, endpoint_table
from .counting import verify_orbit_identity
from .group import ParityConflict, group_bfs, identify_group, orbit_sum_zero_test, verify_orbit_sum_expression
from .guess import InsufficientTerms, guess_ode, guess_recurrence
from .scan import ScanConfig, classify, scan
from .stepset import StepSetParseError, parse_step_set

EXIT_OK, EXIT_USAGE, EXIT_MEMORY, EXIT_INCONSISTENT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _cardinalities(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _common(p: argparse.ArgumentParser, *names: str) -> None:
    if "dimension" in names:
        p.add_argument("--dimension", type=int, default=None, help="D (inferred from the model if omitted)")
    if "bound" in names:
        p.add_argument("--bound", type=int, default=800, help="largest group order accepted as finite")
    if "prime" in names:
        p.add_argument("--prime", type=int, default=DEFAULT_PRIME)
    if "seed" in names:
        p.add_argument("--seed", type=int, default=0)
    if "terms" in names:
        p.add_argument("--terms", type=int, default=None)
    if "output" in names:
        p.add_argument("--output", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="orthantwalks", description="Classify small-step walk models in the orthant.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("scan", help="enumerate and filter step sets")
    _common(p, "bound", "prime", "seed", "output")
    p.add_argument("--dimension", type=int, default=4)
    p.add_argument("--cardinality", type=_cardinalities, required=True, help="e.g. 5 or 1-3,7")
    p.add_argument("--points", type=int, default=4, help="fingerprint points per group element")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--resume", default=None, help="state file to checkpoint to and resume from")
    p.add_argument("--verbose", action="store_true", help="also record every rejection")
    p.add_argument("--long-running", action="store_true", help="allow scans of more than 5e7 sets")
    p.add_argument("--terms", type=int, default=16, help="length of the reported prefixes")

    p = sub.add_parser("classify", help="full report for one model")
    p.add_argument("model")
    _common(p, "dimension", "bound", "prime", "seed")
    p.add_argument("--terms", type=int, default=16)
    p.add_argument("--identity", type=int, default=None, metavar="N", help="check the orbit identity to length N")
    p.add_argument("--guess", type=int, default=None, metavar="N", help="guess from N terms")

    p = sub.add_parser("count", help="count confined walks")
    p.add_argument("model")
    _common(p, "dimension", "prime", "output")
    p.add_argument("--terms", type=int, default=16)
    p.add_argument("--mode", choices=("exact", "modular"), default="exact")
    p.add_argument("--free", default="", help="comma separated 1-based coordinates left unconstrained")
    p.add_argument("--memory-budget", type=int, default=DEFAULT_MEMORY_BUDGET)
    p.add_argument("--table", action="store_true", help="write the last endpoint table (binary) to --output")

    p = sub.add_parser("group", help="group of the walk and orbit sums")
    p.add_argument("model")
    _common(p, "dimension", "bound", "prime", "seed")
    p.add_argument("--points", type=int, default=4)

    p = sub.add_parser("guess", help="guess a recurrence and an ODE")
    p.add_argument("source", help="a model, or a file with one term per line")
    _common(p, "dimension", "prime")
    p.add_argument("--terms", type=int, default=60)
    p.add_argument("--max-order", type=int, default=4)
    p.add_argument("--max-degree", type=int, default=4)
    p.add_argument("--holdout", type=int, default=20)

    p = sub.add_parser("verify-orbit-sum", help="check printed orbit sums against the group")
    p.add_argument("model", nargs="?", help="label or step string; all fixtures if omitted")
    _common(p, "bound", "seed")
    p.add_argument("--fixtures", default=None, help="JSON-lines fixture file (packaged one by default)")

    p = sub.add_parser("verify-orbit-identity", help="check the orbit identity length by length")
    p.add_argument("model")
    _common(p, "dimension", "bound", "prime", "seed")
    p.add_argument("--terms", type=int, default=30, help="largest length N")
    p.add_argument("--points", type=int, default=4)
    p.add_argument("--unsigned", action="store_true")
    return parser


def _emit(obj, output: Optional[str] = None) -> None:
    text = json.dumps(obj, sort_keys=True)
    if output:
        Path(output).write_text(text + "\n")
    else:
        print(text)


def _model(args):
    try:
        return parse_step_set(args.model, args.dimension)
    except StepSetParseError as exc:
        raise UsageError(str(exc)) from exc


def cmd_scan(args) -> int:
    config = ScanConfig(args.dimension, tuple(args.cardinality), args.bound, args.points, args.prime, args.seed,
                        args.threads, args.output, args.resume, prefix_terms=args.terms, verbose=args.verbose,
                        long_running=args.long_running)
    try:
        result = scan(config)
    except ValueError as exc:  # oversized scan or a resume state from another config
        raise UsageError(str(exc)) from exc
    if not args.output:
        sys.stdout.write(result.survivor_lines())
    sys.stderr.write(result.summary_tsv())
    return EXIT_OK


def cmd_classify(args) -> int:
    rep = classify(_model(args), group_bound=args.bound, seed=args.seed, prime=args.prime,
                   prefix_terms=args.terms, identity_terms=args.identity, guess_terms=args.guess)
    _emit(rep.to_json(timings=True))
    if rep.orbit_identity is not None and not all(rep.orbit_identity):
        return EXIT_INCONSISTENT
    return EXIT_OK


def cmd_count(args) -> int:
    s = _model(args)
    free = {int(c) - 1 for c in args.free.split(",") if c}
    if any(not 0 <= c < s.D for c in free):
        raise UsageError("--free coordinates out of range")
    restricted = sum(1 << d for d in range(s.D) if d not in free)
    if args.table:
        if not args.output:
            raise UsageError("--table needs --output")
        table = endpoint_table(s, args.terms - 1, args.mode, restricted, args.prime, args.memory_budget)
        with open(args.output, "wb") as fh:
            table.write_binary(fh)
        return EXIT_OK
    seq = count_walks(s, args.terms - 1, args.mode, restricted, args.prime, args.memory_budget)
    _emit(seq.to_json(), args.output)
    return EXIT_OK


def cmd_group(args) -> int:
    s = _model(args)
    g = group_bfs(s, args.bound, args.points, args.seed, args.prime)
    out = {"model": args.model, "finite": g.finite, "order": g.order, "parity_conflict": g.parity_conflict}
    if g.finite:
        verdict = orbit_sum_zero_test(g, seed=args.seed + 1)
        out.update(g.to_json(verdict.to_json()))
        out["group_type"] = identify_group(g)
        out["log2_error_bound"] = verdict.log2_error_bound
    _emit(out)
    return EXIT_INCONSISTENT if g.parity_conflict else EXIT_OK


def cmd_guess(args) -> int:
    path = Path(args.source)
    if path.is_file():
        seq = [int(x) for x in path.read_text().split()]
    else:
        args.model = args.source
        seq = count_walks(_model(args), args.terms - 1, "modular", prime=args.prime)
    try:
        rec = guess_recurrence(seq, args.max_order, args.max_degree, args.holdout, args.prime)
        ode = guess_ode(seq, args.max_order, args.max_degree, args.holdout, args.prime)
    except InsufficientTerms as exc:
        raise UsageError(str(exc)) from exc
    _emit({"recurrence": rec and rec.to_json(), "ode": ode and ode.to_json()})
    return EXIT_OK


def cmd_verify_orbit_sum(args) -> int:
    from .corpus import ORBIT_SUM_VARIABLES, load_models

    records = load_models(args.fixtures)
    if args.model:
        records = [r for r in records if args.model in (r.label, r.steps)]
        if not records:
            raise UsageError(f"no fixture matches {args.model!r}")
    failures = 0
    for rec in records:
        g = group_bfs(rec.stepset, args.bound, seed=args.seed)
        if not g.finite:
            ok, detail = False, "group not finite within bound"
        elif rec.orbit_sum_zero:
            ok = orbit_sum_zero_test(g, seed=args.seed + 1).signed is True
            detail = "zero"
        else:
            match = verify_orbit_sum_expression(g, rec.orbit_sum_expr, ORBIT_SUM_VARIABLES, seed=args.seed + 2)
            ok = match is not None
            detail = "no assignment" if match is None else json.dumps(match.assignment, sort_keys=True)
        failures += not ok
        print(f"{rec.label}\t{'ok' if ok else 'FAIL'}\t{detail}")
    return EXIT_INCONSISTENT if failures else EXIT_OK


def cmd_verify_orbit_identity(args) -> int:
    s = _model(args)
    g = group_bfs(s, args.bound, seed=args.seed, prime=args.prime)
    if not g.finite:
        raise UsageError("the group is not finite within the bound")
    verdicts = verify_orbit_identity(s, g, args.terms, args.points, not args.unsigned, args.seed, args.prime)
    _emit({"model": args.model, "holds": verdicts, "all": all(verdicts)})
    return EXIT_OK if all(verdicts) else EXIT_INCONSISTENT


COMMANDS = {
    "scan": cmd_scan,
    "classify": cmd_classify,
    "count": cmd_count,
    "group": cmd_group,
    "guess": cmd_guess,
    "verify-orbit-sum": cmd_verify_orbit_sum,
    "verify-orbit-identity": cmd_verify_orbit_identity,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ExprSyntaxError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MemoryBudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MEMORY
    except ParityConflict as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT


if __name__ == "__main__":
    sys.exit(main())
