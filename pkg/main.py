#!/usr/bin/env python3
"""
spearmix - Mixtures of Mallows models with Spearman distance
"""
import argparse
import sys
from typing import List, Optional

from config import LOG_FILE, LOG_LEVEL, VERSION, validate_config
from spearmix.handlers import setup_handlers
from spearmix.utils.logger import setup_logging


def build_parser() -> argparse.ArgumentParser:
    """Top-level parser with global logging options and one subparser per command"""
    parser = argparse.ArgumentParser(
        prog="spearmix",
        description="Maximum likelihood inference for mixtures of Mallows models with Spearman distance",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    parser.add_argument("--log-level", default=LOG_LEVEL, type=str.upper,
                        choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    parser.add_argument("--log-file", default=LOG_FILE, help="rotating log file")
    parser.add_argument("--quiet", "-q", action="store_true", help="only warnings and errors on stderr")

    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True
    setup_handlers(subparsers)
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, set up logging and dispatch; returns the exit status"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 2

    logger = setup_logging(args.log_level, args.log_file, quiet=args.quiet)
    try:
        validate_config()
    except ValueError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1

    logger.debug(f"spearmix {VERSION}: {args.command}")
    return args.func(args)


def main():
    """Main entry point"""
    sys.exit(run())


if __name__ == "__main__":
    main()
