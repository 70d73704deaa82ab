"""
Command-line entry point.

Builds the parser from the command modules, configures logging and maps failures to
the exit-code contract: 0 success, 1 usage, 2 domain failure, 3 I/O or parse error.
"""

import argparse
import logging
import sys
from typing import List, NoReturn, Optional

from pydantic import ValidationError

from app import __version__
from app.commands import COMMANDS
from app.config import settings
from app.core.exceptions import HawkesException
from app.core.logging_config import setup_logging

logger = logging.getLogger(__name__)

EXIT_USAGE = 1
EXIT_IO = 3


class ArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors reported as exit code 1."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def create_parser() -> ArgumentParser:
    """Top-level parser with one subcommand per command module."""
    parser = ArgumentParser(
        prog=settings.APP_NAME,
        description="Nonparametric Hawkes estimation through INAR bin-count regression",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL, help="Logging level")
    parser.add_argument(
        "--json-logs",
        action=argparse.BooleanOptionalAction,
        default=not settings.DEBUG,
        help="JSON log records on stderr",
    )
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Run one command and return its exit code."""
    parser = create_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_request:
        return int(exit_request.code or 0)

    setup_logging(
        service_name=settings.APP_NAME,
        log_level=args.log_level,
        json_logs=args.json_logs,
    )
    logger.info(f"Starting {settings.APP_NAME} {args.command} ({settings.APP_ENV})")

    try:
        return args.handler(args)
    except HawkesException as exc:
        logger.error(exc.message, extra={"details": exc.details, "exit_code": exc.exit_code})
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValidationError as exc:
        logger.error(f"Invalid run configuration: {exc.error_count()} error(s)")
        print(f"error: invalid arguments: {exc.errors()[0]['msg']}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        logger.error(f"I/O failure: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
