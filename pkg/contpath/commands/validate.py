"""
contpath - Validate Command
Runs the randomized invariant suites and reports violations with their seeds
"""

import logging

from ..config import EXIT_CODES
from ..models import Command
from ..validation import run_suites
from .options import add_common_args, build_config

# Configure logging
logger = logging.getLogger(__name__)


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser("validate", help="run the invariant suites on random instances")
    add_common_args(parser)
    parser.add_argument("--trials", type=int, default=20, help="instances per suite (default 20)")
    parser.set_defaults(handler=handle)


def handle(args) -> int:
    config = build_config(args, Command.VALIDATE)
    results = run_suites(config.trials, seed=config.seed)

    violations = 0
    for result in results:
        print(f"{result.suite}: {result.passed}/{result.trials} passed")
        for violation in result.violations:
            print(f"  seed={violation.seed} {violation.suite}: {violation.detail}")
        violations += len(result.violations)

    if violations:
        logger.error(f"{violations} invariant violations, rerun with --seed <seed> --trials 1 to reproduce")
        return EXIT_CODES["failure"]
    return EXIT_CODES["success"]
