"""
Operations on ranking data: conversion, censoring, completion, augmentation
and descriptive summaries
"""
import logging
from typing import Optional, Tuple, List, Union

import numpy as np

from config import AUGMENT_MAX_MISSING
from spearmix.models.errors import RankingFormatError, AugmentationCapacityError
from spearmix.models.ranking import (
    RankingDataset,
    DataDescription,
    as_partial_matrix,
    as_complete_matrix,
    resolve_subset,
)
from spearmix.services.ranking_space import permutations_array

logger = logging.getLogger(__name__)

CENSOR_TYPES = ("topk", "mar")


def convert(data) -> np.ndarray:
    """Switch rows between ranking and ordering representation.

    Entry i of a ranking is the rank of item i; entry j of an ordering is the
    item at rank j. Unmatched positions stay missing, so the map is an
    involution on partial rows too.
    """
    arr = as_partial_matrix(data)
    out = np.full(arr.shape, np.nan)
    rows, cols = np.nonzero(~np.isnan(arr))
    out[rows, arr[rows, cols].astype(np.int64) - 1] = cols + 1
    return out


def _draw_nranked(N: int, n: int, nranked, probs, rng: np.random.Generator) -> np.ndarray:
    if (nranked is None) == (probs is None):
        raise ValueError("exactly one of nranked and probs must be supplied")

    if nranked is not None:
        k = np.asarray(nranked, dtype=np.int64)
        if k.ndim == 0:
            k = np.full(N, int(k), dtype=np.int64)
        if k.shape != (N,):
            raise ValueError(f"nranked must be a scalar or have length {N}, got {k.size}")
        if ((k < 1) | (k > n - 1)).any():
            raise ValueError(f"nranked entries must lie in 1..{n - 1}")
        return k

    p = np.asarray(probs, dtype=float)
    if p.shape != (n - 1,):
        raise ValueError(f"probs must have {n - 1} entries, got {p.size}")
    if (p < 0).any() or not np.isfinite(p).all() or p.sum() <= 0:
        raise ValueError("probs must be nonnegative with a positive total")
    cdf = np.cumsum(p / p.sum())
    u = rng.random(N)
    return np.minimum(np.searchsorted(cdf, u, side="right") + 1, n - 1).astype(np.int64)


def censor(data, type: str = "topk", nranked=None, probs=None,
           rng: Optional[np.random.Generator] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Censor complete rankings.

    ``topk`` keeps the ranks 1..k of each row, ``mar`` keeps k positions
    chosen uniformly at random. The number of kept positions per row comes
    from ``nranked`` (scalar or per row) or is drawn from ``probs`` over
    1..n-1 (normalized). Returns the partial rows and the kept counts.
    """
    if type not in CENSOR_TYPES:
        raise ValueError(f"censoring type must be one of {CENSOR_TYPES}, got {type!r}")
    arr = as_complete_matrix(data)
    N, n = arr.shape
    if n < 2:
        raise RankingFormatError("censoring needs at least two items")
    rng = rng if rng is not None else np.random.default_rng()

    k = _draw_nranked(N, n, nranked, probs, rng)
    out = arr.astype(float)

    if type == "topk":
        out[arr > k[:, np.newaxis]] = np.nan
    else:
        for s in range(N):
            hidden = rng.permutation(n)[k[s]:]
            out[s, hidden] = np.nan

    logger.debug(f"Censored {N} rows ({type}), mean kept positions {k.mean():.2f}")
    return out, k


def complete(data, ref_rho) -> np.ndarray:
    """Fill each partial row from a reference ranking.

    Missing items receive the unused ranks in ascending order, assigned so
    that their relative order follows the reference row.
    """
    arr = as_partial_matrix(data)
    ref = as_complete_matrix(ref_rho, "reference rankings")
    if ref.shape[0] == 1 and arr.shape[0] > 1:
        ref = np.repeat(ref, arr.shape[0], axis=0)
    if ref.shape != arr.shape:
        raise RankingFormatError(
            f"reference shape {ref.shape} does not match data shape {arr.shape}"
        )

    N, n = arr.shape
    missing = np.isnan(arr)
    if not missing.any():
        return arr.astype(np.int64)

    n_missing = missing.sum(axis=1)

    # missing items first, ordered by reference rank
    item_order = np.argsort(np.where(missing, ref, n + 1 + ref), axis=1, kind="stable")

    used = np.zeros((N, n + 1), dtype=bool)
    rows, cols = np.nonzero(~missing)
    used[rows, arr[rows, cols].astype(np.int64)] = True
    # unused ranks first, ascending
    free_ranks = np.argsort(used[:, 1:], axis=1, kind="stable") + 1

    slot_rows, slots = np.nonzero(np.arange(n)[np.newaxis, :] < n_missing[:, np.newaxis])
    out = np.where(missing, 0, arr).astype(np.int64)
    out[slot_rows, item_order[slot_rows, slots]] = free_ranks[slot_rows, slots]
    return out


def augment(partial, limit: int = AUGMENT_MAX_MISSING) -> np.ndarray:
    """All complete rankings compatible with one partial ranking.

    Rows are the lexicographic permutations of the unused ranks assigned to
    the missing items in item order; there are (#missing)! of them.
    """
    row = as_partial_matrix(partial)
    if row.shape[0] != 1:
        raise RankingFormatError("augment takes a single partial ranking; use augment_rows")
    row = row[0]
    n = row.shape[0]

    missing = np.flatnonzero(np.isnan(row))
    m = missing.size
    if m > limit:
        raise AugmentationCapacityError(m, limit)

    observed = row[~np.isnan(row)].astype(np.int64)
    free_ranks = np.setdiff1d(np.arange(1, n + 1), observed)

    perms = permutations_array(m)
    completions = np.empty((perms.shape[0], n), dtype=np.int32)
    completions[:] = np.where(np.isnan(row), 0, row).astype(np.int32)
    if m:
        completions[:, missing] = free_ranks[perms]
    return completions


def augment_rows(data, limit: int = AUGMENT_MAX_MISSING) -> List[np.ndarray]:
    """Compatible sets for every row, checking capacity before building any"""
    arr = as_partial_matrix(data)
    n_missing = np.isnan(arr).sum(axis=1)
    over = np.flatnonzero(n_missing > limit)
    if over.size:
        first = int(over[0])
        raise AugmentationCapacityError(int(n_missing[first]), limit, row=first + 1)
    return [augment(row, limit) for row in arr]


def _topk_shaped(arr: np.ndarray) -> np.ndarray:
    """Rows whose observed values are exactly {1..k} for some k < n"""
    observed = ~np.isnan(arr)
    k = observed.sum(axis=1)
    top = np.where(observed, arr, 0).max(axis=1)
    return (k > 0) & (k < arr.shape[1]) & (top == k)


def pairwise_comparison(data, topk_inference: bool = True) -> np.ndarray:
    """pc[i, i'] = number of rows where item i is preferred to item i'.

    With ``topk_inference`` a top-k shaped row also states that each
    observed item precedes every censored one.
    """
    arr = as_partial_matrix(data)
    n = arr.shape[1]
    effective = arr.copy()
    if topk_inference:
        topk = _topk_shaped(arr)
        effective[topk] = np.where(np.isnan(arr[topk]), np.inf, arr[topk])

    pc = np.zeros((n, n), dtype=np.int64)
    with np.errstate(invalid="ignore"):
        for i in range(n):
            pc[i] = (effective[:, [i]] < effective).sum(axis=0)
    return pc


def first_order_marginals(data) -> np.ndarray:
    """fm[j, i] = number of rows ranking item i in position j+1"""
    arr = as_partial_matrix(data)
    n = arr.shape[1]
    fm = np.zeros((n, n), dtype=np.int64)
    rows, cols = np.nonzero(~np.isnan(arr))
    np.add.at(fm, (arr[rows, cols].astype(np.int64) - 1, cols), 1)
    return fm


def mean_ranks(data) -> np.ndarray:
    """Mean rank of each item over its observed entries (NaN if never observed)"""
    arr = as_partial_matrix(data)
    observed = ~np.isnan(arr)
    counts = observed.sum(axis=0)
    totals = np.where(observed, arr, 0).sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(counts > 0, totals / np.maximum(counts, 1), np.nan)


def borda_ordering(means: np.ndarray) -> np.ndarray:
    """Items (1-based) by ascending mean rank; never-observed items last"""
    means = np.asarray(means, dtype=float)
    key = np.where(np.isnan(means), np.inf, means)
    return np.argsort(key, kind="stable") + 1


def describe(data: Union[RankingDataset, np.ndarray], subset=None,
             item_labels: Optional[List[str]] = None) -> DataDescription:
    """Descriptive summaries of a (sub)sample of rankings"""
    dataset = RankingDataset.from_any(data, item_labels)
    index = resolve_subset(subset, dataset.n_rows)
    arr = dataset.rows[index]
    n = dataset.n_items

    observed_count = (~np.isnan(arr)).sum(axis=1)
    means = mean_ranks(arr)
    topk = _topk_shaped(arr)

    description = DataDescription(
        n_rows=arr.shape[0],
        item_labels=list(dataset.item_labels),
        n_ranked_distribution=np.bincount(observed_count, minlength=n + 1),
        missing_per_item=np.isnan(arr).sum(axis=0),
        mean_ranks=means,
        borda_ordering=borda_ordering(means),
        first_order_marginals=first_order_marginals(arr),
        pairwise_comparison=pairwise_comparison(arr),
        metadata={
            "pairwise_topk_inference": True,
            "n_topk_rows": int(topk.sum()),
            "complete": bool(observed_count.min() == n),
            "subset_size": int(index.size),
        },
    )
    logger.info(f"Described {arr.shape[0]} rankings of {n} items")
    return description
