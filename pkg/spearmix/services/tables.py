"""
Exact Spearman distance tables: generation, storage and loading

The cardinalities N_d are the coefficients of the permanent of the matrix
[q^{(i-j)^2}]. Two exact generators are offered: Ryser's inclusion-exclusion
formula evaluated on big integers, and a dynamic programme over the sets of
ranks already assigned. The embedded table file holds n = 2..20.
"""
import hashlib
import logging
import math
from pathlib import Path
from typing import Dict, Union, Iterable

import numpy as np

from config import EXACT_MAX_N
from spearmix.models.distribution import SpearmanDistanceDistribution
from spearmix.services.ranking_space import permutations_array
from spearmix.utils.helpers import sum_of_squares, max_spearman_distance

logger = logging.getLogger(__name__)

TABLE_METHODS = ("ryser", "subset-dp")
CHECKSUM_PREFIX = "checksum sha256 "
ENUMERATION_MAX_N = 10


def _ryser_counts(n: int) -> Dict[int, int]:
    """Coefficients of perm([q^{(i-j)^2}]) by Ryser's formula.

    Polynomials are evaluated at q = 2^B with B wide enough for every final
    coefficient (all lie in [0, n!]); evaluation is a ring homomorphism, so
    the signed sum of products of row sums is the permanent evaluated at 2^B
    and its base-2^B digits are the coefficients.
    """
    bits = math.factorial(n).bit_length() + 1
    power = [1 << (bits * ((i - j) ** 2)) for i in range(n) for j in range(n)]

    row_sums = [0] * n
    in_set = [False] * n
    total = 0
    size = 0
    for k in range(1, 1 << n):
        j = (k & -k).bit_length() - 1  # gray code flips column j
        sign = -1 if in_set[j] else 1
        in_set[j] = not in_set[j]
        size += sign
        for i in range(n):
            row_sums[i] += sign * power[i * n + j]
        product = 1
        for value in row_sums:
            product *= value
        total += product if (n - size) % 2 == 0 else -product

    counts = {}
    mask = (1 << bits) - 1
    d = 0
    while total:
        coefficient = total & mask
        if coefficient:
            counts[d] = coefficient
        total >>= bits
        d += 1
    return counts


def _subset_dp_counts(n: int) -> Dict[int, int]:
    """Distribution of S = sum_i i * r_i by layers of assigned-rank sets.

    Layer k holds, for every set of k used ranks, the counts of the partial
    sums S over items 1..k, on a window [lo_k, hi_k]. d = 2 (c_n - S).
    Peak memory is C(n, n/2) x window int64 (about 1 GB at n = 20).
    """
    full = 1 << n
    masks = np.arange(full, dtype=np.int64)
    popcount = np.zeros(full, dtype=np.int64)
    for b in range(n):
        popcount += (masks >> b) & 1
    index = np.zeros(full, dtype=np.int64)
    layers = []
    for k in range(n + 1):
        members = np.flatnonzero(popcount == k)
        index[members] = np.arange(members.size)
        layers.append(members)

    lo = [sum(i * (k + 1 - i) for i in range(1, k + 1)) for k in range(n + 1)]
    hi = [sum(i * (n - k + i) for i in range(1, k + 1)) for k in range(n + 1)]
    width = [hi[k] - lo[k] + 1 for k in range(n + 1)]

    current = np.zeros((1, 1), dtype=np.int64)
    current[0, 0] = 1
    for k in range(n):
        item = k + 1
        following = np.zeros((layers[k + 1].size, width[k + 1]), dtype=np.int64)
        members = layers[k]
        for rank in range(1, n + 1):
            bit = 1 << (rank - 1)
            free = (members & bit) == 0
            source = np.flatnonzero(free)
            target = index[members[free] | bit]
            shift = lo[k] + item * rank - lo[k + 1]
            # reachable sums stay inside both windows; the clipped cells are zero
            start, stop = max(shift, 0), min(shift + width[k], width[k + 1])
            following[target, start:stop] += current[source][:, start - shift:stop - shift]
        current = following
        logger.debug(f"subset-dp n={n}: layer {k + 1} done")

    cn = sum_of_squares(n)
    sums = lo[n] + np.arange(width[n])
    counts = {}
    for s, c in zip(sums[::-1], current[0][::-1]):
        if c:
            counts[int(2 * (cn - s))] = int(c)
    return counts


def enumerate_counts(n: int) -> Dict[int, int]:
    """Brute-force N_d over all n! rankings"""
    if n > ENUMERATION_MAX_N:
        raise ValueError(f"enumeration supported for n <= {ENUMERATION_MAX_N}")
    space = permutations_array(n).astype(np.int64) + 1
    d = 2 * (sum_of_squares(n) - space @ np.arange(1, n + 1))
    values, freqs = np.unique(d, return_counts=True)
    return {int(v): int(c) for v, c in zip(values, freqs)}


def counts_to_distribution(n: int, counts: Dict[int, int],
                           method: str = "exact") -> SpearmanDistanceDistribution:
    """Expand sparse counts to the full even support with -inf gaps"""
    distances = np.arange(0, max_spearman_distance(n) + 1, 2, dtype=np.int64)
    dense = np.zeros(distances.size, dtype=np.int64)
    for d, c in counts.items():
        dense[d // 2] = c
    log_card = np.full(distances.size, -np.inf)
    nonzero = dense > 0
    log_card[nonzero] = np.log(dense[nonzero].astype(float))
    return SpearmanDistanceDistribution(
        n_items=n, distances=distances, log_card=log_card,
        exact=True, method=method, counts=dense,
    )


def generate_exact_table(n: int, method: str = "ryser",
                         verify: bool = False) -> SpearmanDistanceDistribution:
    """Exact distance distribution for 2 <= n <= 20"""
    if not 2 <= n <= EXACT_MAX_N:
        raise ValueError(f"exact tables are generated for 2 <= n <= {EXACT_MAX_N}, got {n}")
    if method not in TABLE_METHODS:
        raise ValueError(f"method must be one of {TABLE_METHODS}, got {method!r}")

    counts = _ryser_counts(n) if method == "ryser" else _subset_dp_counts(n)

    if verify and n <= ENUMERATION_MAX_N:
        if counts != enumerate_counts(n):
            raise RuntimeError(f"{method} table for n={n} disagrees with enumeration")
        logger.info(f"{method} table for n={n} verified against enumeration")

    return counts_to_distribution(n, counts)


def _format_tables(tables: Iterable[SpearmanDistanceDistribution]) -> str:
    lines = [
        "# exact Spearman distance cardinalities under the uniform model",
        "# record: 'n <n_items> <support points>' then '<d> <N_d>' lines; unattainable distances omitted",
    ]
    for table in tables:
        nonzero = np.flatnonzero(table.counts > 0)
        lines.append(f"n {table.n_items} {nonzero.size}")
        lines.extend(f"{table.distances[i]} {table.counts[i]}" for i in nonzero)
    return "\n".join(lines) + "\n"


def write_tables(path: Union[str, Path], n_max: int = EXACT_MAX_N,
                 method: str = "subset-dp", n_min: int = 2) -> str:
    """Generate and write the table file; returns its checksum"""
    tables = []
    for n in range(n_min, n_max + 1):
        tables.append(generate_exact_table(n, method=method))
        logger.info(f"Generated exact table for n={n}")
    body = _format_tables(tables)
    digest = hashlib.sha256(body.encode("ascii")).hexdigest()
    Path(path).write_text(body + CHECKSUM_PREFIX + digest + "\n", encoding="ascii")
    logger.info(f"Wrote {len(tables)} tables to {path}")
    return digest


def load_tables(path: Union[str, Path]) -> Dict[int, SpearmanDistanceDistribution]:
    """Read the table file, verifying its checksum"""
    text = Path(path).read_text(encoding="ascii")
    try:
        cut = text.rindex(CHECKSUM_PREFIX)
    except ValueError:
        raise ValueError(f"no checksum line in {path}") from None
    body, expected = text[:cut], text[cut + len(CHECKSUM_PREFIX):].strip()
    actual = hashlib.sha256(body.encode("ascii")).hexdigest()
    if actual != expected:
        raise ValueError(f"checksum mismatch in {path}: expected {expected}, got {actual}")

    tables: Dict[int, SpearmanDistanceDistribution] = {}
    n, remaining, counts = None, 0, {}
    for line_no, line in enumerate(body.splitlines(), start=1):
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if fields[0] == "n":
            if remaining:
                raise ValueError(f"truncated record for n={n} before line {line_no} of {path}")
            n, remaining, counts = int(fields[1]), int(fields[2]), {}
        else:
            counts[int(fields[0])] = int(fields[1])
            remaining -= 1
            if remaining == 0:
                tables[n] = counts_to_distribution(n, counts)
    if remaining:
        raise ValueError(f"truncated record for n={n} in {path}")

    logger.debug(f"Loaded exact tables for n={sorted(tables)} from {path}")
    return tables
