"""
Decorators for command handlers
"""
import functools
import logging
import sys
import time
from typing import Callable

logger = logging.getLogger(__name__)


def log_action(action: str) -> Callable:
    """Decorator to log a command run and its wall time"""
    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(args, *extra, **kwargs):
            logger.info(f"{action} started (seed={getattr(args, 'seed', None)})")
            start = time.perf_counter()
            try:
                result = func(args, *extra, **kwargs)
                logger.info(f"{action} completed in {time.perf_counter() - start:.3f}s")
                return result
            except Exception as e:
                logger.error(f"{action} failed: {e}", exc_info=logger.isEnabledFor(logging.DEBUG))
                raise

        return wrapper
    return decorator


def error_handler(func: Callable) -> Callable:
    """Decorator turning handler exceptions into a one-line diagnostic and exit code 1"""
    @functools.wraps(func)
    def wrapper(*args, **kwargs) -> int:
        try:
            code = func(*args, **kwargs)
            return 0 if code is None else int(code)
        except Exception as e:
            logger.debug(f"Error in {func.__name__}", exc_info=True)
            print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
            return 1

    return wrapper


def requires_seed(func: Callable) -> Callable:
    """Decorator rejecting stochastic commands run without --seed"""
    @functools.wraps(func)
    def wrapper(args, *extra, **kwargs):
        if getattr(args, "seed", None) is None:
            raise ValueError(f"'{args.command}' is stochastic: pass --seed for a reproducible run")
        return func(args, *extra, **kwargs)

    return wrapper
