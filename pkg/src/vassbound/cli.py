"""Command-line front end.

Commands: `analyze` (bound analysis, text or JSON report, optional layer
tree DOT export), `witness` (lower-bound path dump with optional
self-check), `oracle` (brute-force metrics as CSV), and `validate` (parse
and connectivity check).

Exit codes: 0 success, 1 parse/input error, 2 input not connected,
3 internal invariant violation, failed witness check, or oracle budget
exhaustion, 4 witness requested for an input with at-least-exponential
complexity.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

from . import oracle as oracle_mod
from .analyzer import AnalysisResult, InternalInvariantError, POLYNOMIAL, analyze
from .model import (
    NotConnectedError,
    Vass,
    VassError,
    VassSyntaxError,
    parse_vass,
    unconnected_pair,
)
from .witness import (
    CertificateError,
    build_witness,
    exponential_certificate,
    verify_witness,
)

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_NOT_CONNECTED = 2
EXIT_INTERNAL = 3
EXIT_EXPONENTIAL_INPUT = 4

BUDGET_ENV = "VASSBOUND_ORACLE_BUDGET"


def _load(path: str) -> Vass:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as err:
        raise VassSyntaxError(f"cannot read '{path}': {err.strerror}", 0)
    return parse_vass(text)


def _exp_str(e: Optional[int]) -> str:
    return "inf" if e is None else str(e)


def _render_text_report(result: AnalysisResult) -> str:
    report = result.report
    v = result.vass
    lines = [f"status: {report.status}"]
    if report.status == POLYNOMIAL:
        lines.append(f"complexity exponent: {report.complexity_exponent}")
    else:
        lines.append(f"stalled at layer: {report.exponential_layer}")
    lines.append("variable bounds:")
    for x, e in report.variable_exponents.items():
        lines.append(f"  {x}: N^{_exp_str(e)}")
    lines.append("transition bounds:")
    for tid, e in report.transition_exponents.items():
        lines.append(f"  [{tid}] {v.transition(tid)}: N^{_exp_str(e)}")
    if report.status != POLYNOMIAL:
        try:
            cert = exponential_certificate(result)
            lines.append(cert.dump().rstrip("\n"))
        except CertificateError as err:
            lines.append(f"certificate unavailable: {err}")
    return "\n".join(lines) + "\n"


def cmd_analyze(args) -> int:
    v = _load(args.input)
    result = analyze(v, skip_optimization=(args.skip_opt == "on"))
    if args.tree:
        with open(args.tree, "w", encoding="utf-8") as handle:
            handle.write(result.tree.to_dot())
    if args.json:
        sys.stdout.write(result.report.to_json(v))
    else:
        sys.stdout.write(_render_text_report(result))
    return EXIT_OK


def cmd_witness(args) -> int:
    v = _load(args.input)
    result = analyze(v)
    if result.report.status != POLYNOMIAL:
        print("input has at-least-exponential complexity; no polynomial witness",
              file=sys.stderr)
        return EXIT_EXPONENTIAL_INPUT
    witness = build_witness(result, args.n)
    dump = witness.dump(v)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(dump)
    else:
        sys.stdout.write(dump)
    if args.check:
        verification = verify_witness(v, witness, result.report)
        sys.stdout.write(verification.dump())
        if not verification.passed:
            print("witness verification failed", file=sys.stderr)
            return EXIT_INTERNAL
    return EXIT_OK


def _parse_sweep(spec: str) -> range:
    lo, _, hi = spec.partition("..")
    try:
        return range(int(lo), int(hi) + 1)
    except ValueError:
        raise VassSyntaxError(f"bad sweep range '{spec}'", 0)


def cmd_oracle(args) -> int:
    v = _load(args.input)
    budget = args.budget
    if budget is None:
        budget = int(os.environ.get(BUDGET_ENV, oracle_mod.DEFAULT_BUDGET))
    if args.sweep:
        ns = _parse_sweep(args.sweep)
    else:
        ns = [args.n]
    rows = oracle_mod.sweep(v, args.metric, ns, budget)
    sys.stdout.write(oracle_mod.sweep_csv(rows))
    return EXIT_OK


def cmd_validate(args) -> int:
    v = _load(args.input)
    pair = unconnected_pair(v)
    if pair is not None:
        print(f"not connected: no path from '{pair[0]}' to '{pair[1]}'",
              file=sys.stderr)
        return EXIT_NOT_CONNECTED
    print(f"ok: {len(v.states)} states, {len(v.transitions)} transitions, "
          f"{v.dimension} variables")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vassbound",
        description="Asymptotic variable and transition bounds for VASSs")
    from . import __version__

    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="compute variable and transition bounds")
    p.add_argument("input")
    p.add_argument("--json", action="store_true", help="emit the JSON report")
    p.add_argument("--skip-opt", choices=["on", "off"], default="on",
                   help="layer skip optimization (default on)")
    p.add_argument("--tree", metavar="PATH", help="write the layer tree as DOT")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("witness", help="emit a lower-bound witness path")
    p.add_argument("input")
    p.add_argument("--n", type=int, required=True, help="scale parameter N >= 1")
    p.add_argument("--check", action="store_true",
                   help="verify the witness and fail on any violated check")
    p.add_argument("--out", metavar="PATH", help="write the dump to a file")
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("oracle", help="brute-force metrics over the {0..N} box")
    p.add_argument("input")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--n", type=int, help="single scale parameter")
    group.add_argument("--sweep", metavar="A..B", help="inclusive range of N values")
    p.add_argument("--metric", required=True,
                   help="'longest', 'var:<name>' or 'trans:<id>'")
    p.add_argument("--budget", type=int,
                   help=f"configuration budget (default {oracle_mod.DEFAULT_BUDGET}; "
                        f"env {BUDGET_ENV})")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("validate", help="parse and check connectivity")
    p.add_argument("input")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VassSyntaxError as err:
        print(f"parse error: {err}", file=sys.stderr)
        return EXIT_PARSE
    except NotConnectedError as err:
        print(f"not connected: {err}", file=sys.stderr)
        return EXIT_NOT_CONNECTED
    except InternalInvariantError as err:
        print(f"internal invariant violation: {err}", file=sys.stderr)
        return EXIT_INTERNAL
    except oracle_mod.BudgetExceededError as err:
        print(f"oracle budget exceeded: {err}", file=sys.stderr)
        return EXIT_INTERNAL
    except VassError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
