"""
Process-wide cache of Spearman distance distributions
"""
import threading
from typing import Callable, Dict, Any
import logging

logger = logging.getLogger(__name__)

# Global cache with thread-safe access
_cache: Dict[Any, Any] = {}
_cache_lock = threading.Lock()


def cached(key: Any, factory: Callable[[], Any]) -> Any:
    """Return the cached value for key, building it once with factory"""
    with _cache_lock:
        if key in _cache:
            return _cache[key]
    value = factory()
    with _cache_lock:
        # another thread may have won the race; keep the first value
        value = _cache.setdefault(key, value)
    logger.debug(f"Cached {key!r}")
    return value


def cache_info() -> Dict[str, Any]:
    """Keys currently held in the cache"""
    with _cache_lock:
        return {"size": len(_cache), "keys": sorted(map(repr, _cache))}


def clear_cache() -> None:
    """Drop all cached entries"""
    with _cache_lock:
        _cache.clear()
    logger.debug("Distribution cache cleared")
