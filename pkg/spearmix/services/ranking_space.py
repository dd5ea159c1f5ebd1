"""
Permutation spaces in lexicographic order
"""
from functools import lru_cache
import logging

import numpy as np

logger = logging.getLogger(__name__)

# 11! rows of int8 take ~440 MB; larger spaces are never materialized
MAX_SPACE_SIZE = 11


@lru_cache(maxsize=16)
def permutations_array(m: int) -> np.ndarray:
    """All m! permutations of 0..m-1 as rows, lexicographic, read-only int8.

    Built block-wise: the block with leading value f is f followed by the
    (m-1)-permutations with every value >= f shifted up by one.
    """
    if m < 0 or m > MAX_SPACE_SIZE:
        raise ValueError(f"permutation space size must lie in 0..{MAX_SPACE_SIZE}, got {m}")

    perms = np.zeros((1, 0), dtype=np.int8)
    for k in range(1, m + 1):
        blocks = []
        for first in range(k):
            tail = np.where(perms >= first, perms + 1, perms).astype(np.int8)
            head = np.full((tail.shape[0], 1), first, dtype=np.int8)
            blocks.append(np.hstack([head, tail]))
        perms = np.vstack(blocks)

    perms.setflags(write=False)
    logger.debug(f"Built permutation space of size {m} ({perms.shape[0]} rows)")
    return perms


@lru_cache(maxsize=16)
def ranking_space(n: int) -> np.ndarray:
    """All rankings of n items (1-based), lexicographic, read-only int8"""
    space = (permutations_array(n) + 1).astype(np.int8)
    space.setflags(write=False)
    return space
