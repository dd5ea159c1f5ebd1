"""
Handler registration module
"""
import argparse
import logging

from spearmix.handlers.analysis import analysis_handlers
from spearmix.handlers.commands import command_handlers

logger = logging.getLogger(__name__)


def setup_handlers(subparsers: argparse._SubParsersAction) -> None:
    """Register every subcommand with the parser"""
    for command_name, handler_func, configure, help_text in command_handlers + analysis_handlers:
        parser = subparsers.add_parser(command_name, help=help_text, description=handler_func.__doc__)
        configure(parser)
        parser.set_defaults(func=handler_func)
        logger.debug(f"Registered command: {command_name}")
