"""
Logging configuration for the library and the command line
"""
import logging
import sys
from pathlib import Path
from logging.handlers import RotatingFileHandler
from typing import Optional, Union

from config import LOG_BACKUP_COUNT, LOG_MAX_BYTES

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'

NOISY_LOGGERS = ("concurrent.futures", "matplotlib")


def _file_handler(path: Union[str, Path], formatter: logging.Formatter) -> RotatingFileHandler:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handler = RotatingFileHandler(
        path, maxBytes=LOG_MAX_BYTES, backupCount=LOG_BACKUP_COUNT, encoding="utf-8",
    )
    handler.setFormatter(formatter)
    return handler


def setup_logging(level: str = "INFO", log_file: Optional[Union[str, Path]] = None,
                  quiet: bool = False) -> logging.Logger:
    """Configure the root logger for a spearmix process.

    Console output goes to stderr so that commands printing JSON on stdout
    stay machine-readable. With ``quiet`` only warnings reach the console,
    the file handler (if any) keeps the requested level.
    """
    formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)

    root = logging.getLogger()
    root.setLevel(getattr(logging, level.upper()))
    root.handlers.clear()

    console = logging.StreamHandler(sys.stderr)
    console.setFormatter(formatter)
    console.setLevel(logging.WARNING if quiet else logging.NOTSET)
    root.addHandler(console)

    if log_file:
        root.addHandler(_file_handler(log_file, formatter))

    # numpy floating-point warnings end up in the log instead of raw stderr
    logging.captureWarnings(True)

    for name in NOISY_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)

    return root
