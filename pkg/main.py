"""Pseudo-Substitutability Toolkit - command line.

Decides preference-domain predicates for matching markets with contracts,
enumerates stable allocations and builds markets without stable allocations.

Usage:
    python main.py stable fixtures/example2_P.json
    python main.py pseudo --agent h fixtures/example1.json
    python main.py subpref --sub fixtures/ptilde.json --agent h fixtures/example1.json
    python main.py --format json classify fixtures/bilateral_not_pseudo.json

Exit codes:
    0  predicate true / success
    1  predicate false (witness in the report)
    2  usage, validation or precondition error
    3  guard exceeded
"""
import argparse
import logging
import sys
from typing import List, Optional

from commands import run_command
from config import settings
from errors import GuardExceeded, MarketValidationError, ToolkitError
from reports import render_report

logger = logging.getLogger(__name__)


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    """Global flags; subcommands repeat them with suppressed defaults so either position works."""
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--guard-contracts", type=int, default=default, metavar="N",
                        help="Max contracts per agent for the sub-preference oracle")
    parser.add_argument("--guard-family", type=int, default=default, metavar="N",
                        help="Max acceptable sets (including the empty set)")
    parser.add_argument("--format", choices=["table", "json"], default=default, help="Report format")
    parser.add_argument("--seed", type=int, default=default, help="Seed for generation")
    parser.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS if suppress else 0,
                        help="Log progress to stderr (-vv for debug)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Pseudo-substitutability toolkit for matching markets with contracts",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__,
    )
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="Check a market document")
    p.add_argument("file")

    p = sub.add_parser("choice", parents=[common], help="Evaluate an agent's choice function")
    p.add_argument("file")
    p.add_argument("--agent", required=True)
    p.add_argument("--offer", help="Comma-separated offered contract ids")
    p.add_argument("--all", action="store_true", help="List the choice at every menu")

    p = sub.add_parser("substitutable", parents=[common], help="Substitutability of each relation")
    p.add_argument("file")
    p.add_argument("--agent")

    p = sub.add_parser("pseudo", parents=[common], help="Pseudo-substitutability with certificate")
    p.add_argument("file")
    p.add_argument("--agent", required=True)
    p.add_argument("--certificate", metavar="PATH", help="Write the market with the certificate relation")

    p = sub.add_parser("subpref", parents=[common], help="Is the --sub relation a sub-preference")
    p.add_argument("file")
    p.add_argument("--sub", required=True, metavar="FILE")
    p.add_argument("--agent", required=True)

    p = sub.add_parser("minimal", parents=[common], help="Minimal sub-preferences")
    p.add_argument("file")
    p.add_argument("--agent", required=True)
    p.add_argument("--sub", metavar="FILE", help="Check minimality of this relation instead")

    p = sub.add_parser("classify", parents=[common], help="Domain membership of hospital relations")
    p.add_argument("file")
    p.add_argument("--agent")
    p.add_argument("--permissive-completion", action="store_true",
                   help="Let completions promote feasible sets missing from the chain")

    p = sub.add_parser("stable", parents=[common], help="Enumerate stable allocations")
    p.add_argument("file")
    p.add_argument("--corewise", action="store_true")
    p.add_argument("--allocation", metavar="IDS", help="Check one allocation (comma-separated ids)")

    p = sub.add_parser("inclusion", parents=[common], help="S(sub profile) is inside S(profile)")
    p.add_argument("file")
    p.add_argument("--sub", required=True, metavar="FILE")

    p = sub.add_parser("counterexample", parents=[common], help="Market with an empty stable set")
    p.add_argument("file", nargs="?")
    p.add_argument("--agent")
    p.add_argument("-o", "--output", metavar="FILE", help="Write the constructed market document")
    p.add_argument("--synthesize", action="store_true",
                   help="Search linear co-agent profiles when the recipe does not certify")
    p.add_argument("--reference", metavar="CASE", help="Check the documented blocking rows of a case")

    p = sub.add_parser("claim1", parents=[common], help="Remainder contracts are kept one by one")
    p.add_argument("file")
    p.add_argument("--agent", required=True)
    p.add_argument("--sub", metavar="FILE", help="Minimal sub-preference (default: from the witness)")
    p.add_argument("--remainder", metavar="IDS", help="Comma-separated remainder ids")

    p = sub.add_parser("gen", parents=[common], help="Generate a seeded market document")
    p.add_argument("--doctors", type=int, default=3)
    p.add_argument("--hospitals", type=int, default=1)
    p.add_argument("--contracts", type=int, default=3)
    p.add_argument("--chain-length", type=int, default=4)
    p.add_argument("--bias", type=float, default=0.5)
    p.add_argument("-o", "--output", metavar="FILE")

    return parser


def configure_logging(verbosity: int) -> None:
    level = {0: getattr(logging, settings.log_level.upper(), logging.WARNING), 1: logging.INFO}.get(
        verbosity, logging.DEBUG
    )
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)

    cfg = settings.with_guards(agent_contracts=args.guard_contracts, family=args.guard_family)
    output_format = args.format or cfg.output_format

    try:
        report, code = run_command(args.command, args, cfg)
    except GuardExceeded as e:
        print(f"⚠️  {e}", file=sys.stderr)
        return e.exit_code
    except MarketValidationError as e:
        print(f"❌ {e}", file=sys.stderr)
        for v in e.violations:
            print(f"   {v.code}: {v.message}", file=sys.stderr)
        return e.exit_code
    except ToolkitError as e:
        print(f"❌ {e}", file=sys.stderr)
        return e.exit_code

    sys.stdout.write(render_report(report, output_format, color=cfg.color))
    sys.stdout.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
