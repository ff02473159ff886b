# cli.py

import argparse
import json
import logging
import os
import sys
from fractions import Fraction as Frac
from pathlib import Path
from typing import Dict, List, Optional

from dotenv import load_dotenv

from orchestrator import PackingSweepOrchestrator
from packing import edge_key

EXIT_OK = 0
EXIT_CLAIM_FAILED = 1
EXIT_USAGE = 2

ENGINE_LOGGERS = ("GraphEnumerator", "LPSolver", "PackingConstructor", "SweepOrchestrator")
USAGE_ERRORS = {"Graph6ParseError", "PreconditionError", "ValueError", "FileNotFoundError", "ReductionError"}


# ------------------------------------------------------------------
# ARGUMENT PARSING
# ------------------------------------------------------------------

def rational(text: str) -> Frac:
    try:
        return Frac(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")


GLOBAL_DEFAULTS = {"verbose": False, "jobs": None, "out": "results", "cutoff": 13, "presolve": True}


def _add_global_options(parser: argparse.ArgumentParser, with_defaults: bool):
    # on subcommands the defaults are SUPPRESS, so a flag given before the subcommand survives
    def default(name):
        return GLOBAL_DEFAULTS[name] if with_defaults else argparse.SUPPRESS

    parser.add_argument("--verbose", action="store_true", default=default("verbose"),
                        help="debug logging for every engine")
    parser.add_argument("--jobs", type=int, default=default("jobs"), help="worker processes (default: $TRIPACK_JOBS or 1)")
    parser.add_argument("--out", default=default("out"), help="output directory")
    parser.add_argument("--cutoff", type=int, default=default("cutoff"),
                        help="largest n handed to the LP by the constructor")
    parser.add_argument("--presolve", dest="presolve", action="store_true", default=default("presolve"),
                        help="float pre-solve with exact re-verification (default)")
    parser.add_argument("--no-presolve", dest="presolve", action="store_false", default=default("presolve"),
                        help="exact simplex only")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tripack",
        description="Exact fractional triangle packings of near-complete graphs."
    )
    _add_global_options(parser, with_defaults=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="isomorph-free census of graphs with n vertices and m edges")
    _add_global_options(p, with_defaults=False)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)

    p = sub.add_parser("prove", help="exact optimum for every graph with n - 4 + a missing edges")
    _add_global_options(p, with_defaults=False)
    p.add_argument("--n", type=int)
    p.add_argument("--a", type=int, default=0)
    p.add_argument("--beta", type=rational, default=Frac(1, 2))
    p.add_argument("--relevant", action="store_true", help="run every computer-checked (n, a) pair")
    p.add_argument("--pdf", action="store_true", help="also render a PDF summary")

    p = sub.add_parser("solve", help="exact minimum uncovered weight of one graph")
    _add_global_options(p, with_defaults=False)
    p.add_argument("graph6")
    p.add_argument("--beta", type=rational, default=Frac(1, 2))
    p.add_argument("--capacities", help="JSON file of [u, v, \"p/q\"] edge capacities")
    p.add_argument("--output", help="write the certificate here instead of stdout")

    p = sub.add_parser("construct", help="inductive packing with uncovered weight at most a")
    _add_global_options(p, with_defaults=False)
    p.add_argument("graph6")
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--output", help="write the certificate here instead of stdout")

    p = sub.add_parser("verify", help="re-check a certificate in exact arithmetic")
    _add_global_options(p, with_defaults=False)
    p.add_argument("certificate")
    p.add_argument("--graph6", help="graph the certificate must be isomorphic to")
    p.add_argument("--a", type=rational)
    p.add_argument("--beta", type=rational)
    return parser


# ------------------------------------------------------------------
# COMMANDS
# ------------------------------------------------------------------

def cmd_enumerate(orch: PackingSweepOrchestrator, args) -> int:
    if args.n < 0 or not 0 <= args.m <= args.n * (args.n - 1) // 2:
        print(f"error: m={args.m} outside 0..C({args.n},2)", file=sys.stderr)
        return EXIT_USAGE
    result = orch.enumerate(args.n, args.m, str(Path(args.out) / f"N{args.n}M{args.m}"))
    if not result["success"]:
        return _report_failure(result)
    for seq, count in result["counts"].items():
        print(f"{seq}\t{count}")
    print(f"total\t{result['total']}")
    return EXIT_OK


def cmd_prove(orch: PackingSweepOrchestrator, args) -> int:
    if args.relevant:
        runs = orch.prove_relevant(beta=args.beta, pdf=args.pdf)
    elif args.n is None:
        print("error: prove needs --n or --relevant", file=sys.stderr)
        return EXIT_USAGE
    else:
        runs = [orch.prove(args.n, args.a, beta=args.beta, pdf=args.pdf)]

    code = EXIT_OK
    for result in runs:
        if not result["success"]:
            code = max(code, _report_failure(result))
            continue
        print(f"N={result['n']}\ta={result['a']}\tgraphs={result['count']}\t"
              f"max_optimum={result['max_optimum']}\tfailed={len(result['failures'])}")
        for text in result["failures"]:
            print(f"FAIL\t{text}")
        if result["failures"]:
            code = max(code, EXIT_CLAIM_FAILED)
    return code


def cmd_solve(orch: PackingSweepOrchestrator, args) -> int:
    capacities = None
    if args.capacities:
        try:
            capacities = _read_capacities(args.capacities)
        except (OSError, ValueError) as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_USAGE
    result = orch.solve(args.graph6, beta=args.beta, capacities=capacities)
    if not result["success"]:
        return _report_failure(result)
    _emit(result["certificate"], args)
    print(f"optimum\t{result['optimum']}", file=sys.stderr)
    return EXIT_OK


def cmd_construct(orch: PackingSweepOrchestrator, args) -> int:
    result = orch.construct(args.graph6, args.a)
    if not result["success"]:
        return _report_failure(result)
    _emit(result["certificate"], args)
    return EXIT_OK


def cmd_verify(orch: PackingSweepOrchestrator, args) -> int:
    result = orch.verify(args.certificate, text=args.graph6, a=args.a, beta=args.beta)
    if not result["success"]:
        return _report_failure(result)
    print(json.dumps(result["report"], indent=2))
    return EXIT_OK if result["passed"] else EXIT_CLAIM_FAILED


COMMANDS = {
    "enumerate": cmd_enumerate,
    "prove": cmd_prove,
    "solve": cmd_solve,
    "construct": cmd_construct,
    "verify": cmd_verify,
}


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        _enable_debug()

    jobs = args.jobs if args.jobs is not None else int(os.getenv("TRIPACK_JOBS", "1"))
    orch = PackingSweepOrchestrator(
        out_dir=args.out,
        jobs=jobs,
        presolve=args.presolve,
        lp_cutoff=args.cutoff,
        show_progress=args.verbose
    )
    return COMMANDS[args.command](orch, args)


# ------------------------------------------------------------------
# INTERNAL HELPERS
# ------------------------------------------------------------------

def _emit(doc: dict, args):
    text = json.dumps(doc, indent=2)
    if args.output:
        path = Path(args.output)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _read_capacities(path: str) -> Dict:
    rows = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        return {edge_key(int(u), int(v)): Frac(phi) for u, v, phi in rows}
    except (TypeError, ValueError, ZeroDivisionError) as e:
        raise ValueError(f"malformed capacities file {path}: {e}") from e


def _report_failure(result: dict) -> int:
    print(f"error ({result.get('error_type', 'Error')}): {result['error']}", file=sys.stderr)
    return EXIT_USAGE if result.get("error_type") in USAGE_ERRORS else EXIT_CLAIM_FAILED


def _enable_debug():
    for name in ENGINE_LOGGERS:
        logger = logging.getLogger(name)
        if not logger.handlers:
            handler = logging.StreamHandler()
            handler.setFormatter(logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s"))
            logger.addHandler(handler)
        logger.setLevel(logging.DEBUG)


if __name__ == "__main__":
    sys.exit(main())
