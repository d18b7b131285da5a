"""
contpath - Command-Line Entry Point
Logging setup, subcommand dispatch and exit-code mapping
"""

import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from .commands import bench, path, solve, synth, validate
from .commands.options import CliParser
from .config import EXIT_CODES, settings
from .exceptions import BudgetExceededError, ContPathError

# Configure logging
logger = logging.getLogger(__name__)

COMMANDS = (solve, path, bench, synth, validate)


def configure_logging(verbosity: int = 0) -> None:
    """Root handlers once; the package level follows -v / -q."""
    handlers = [logging.StreamHandler(sys.stderr)]
    if settings.LOG_FILE:
        handlers.append(logging.FileHandler(settings.LOG_FILE))
    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=handlers,
    )
    if verbosity > 0:
        level = logging.DEBUG
    elif verbosity < 0:
        level = logging.WARNING
    else:
        level = getattr(logging, settings.LOG_LEVEL)
    logging.getLogger("contpath").setLevel(level)


def build_parser() -> CliParser:
    parser = CliParser(
        prog="contpath",
        description="Certified approximate regularization paths for the Lasso",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.VERSION}")
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True
    for command in COMMANDS:
        command.add_parser(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # --help and --version
        return int(e.code or 0)
    except ContPathError as e:
        configure_logging()
        logger.error(f"Usage error: {e}")
        return EXIT_CODES["usage"]

    configure_logging(args.verbose - args.quiet)
    try:
        return args.handler(args)
    except BudgetExceededError as e:
        logger.error(f"Budget exceeded: {e}")
        return EXIT_CODES["budget"]
    except ValidationError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CODES["usage"]
    except ContPathError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_CODES["usage"]
    except OSError as e:
        logger.error(f"File error: {e}")
        return EXIT_CODES["usage"]


if __name__ == "__main__":
    sys.exit(main())
