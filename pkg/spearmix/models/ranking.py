"""
Ranking data models
"""
from dataclasses import dataclass, field
from typing import List, Dict, Any, Optional, Tuple
import logging

import numpy as np

from spearmix.models.errors import RankingFormatError

logger = logging.getLogger(__name__)


def as_partial_matrix(data, name: str = "rankings") -> np.ndarray:
    """Validate and return a float matrix of partial rankings (NaN = missing).

    Accepts 1-D rows, nested lists with None, or arrays. Observed entries
    must be integers in 1..n and pairwise distinct within a row.
    """
    arr = np.array(data, dtype=float)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise RankingFormatError(f"{name} must be a 2-D matrix with at least one column")

    n = arr.shape[1]
    observed = ~np.isnan(arr)
    values = arr[observed]

    bad = observed & ((arr != np.round(arr)) | (arr < 1) | (arr > n))
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise RankingFormatError(
            f"{name} entries must be integers in 1..{n}, got {arr[row, col]:g}",
            row=int(row) + 1, column=int(col) + 1,
        )

    if values.size:
        filled = np.where(observed, arr, 0).astype(np.int64)
        counts = np.zeros((arr.shape[0], n + 1), dtype=np.int64)
        np.add.at(counts, (np.repeat(np.arange(arr.shape[0]), n), filled.ravel()), 1)
        dup = counts[:, 1:] > 1
        if dup.any():
            row, value = np.argwhere(dup)[0]
            col = int(np.flatnonzero(filled[row] == value + 1)[1])
            raise RankingFormatError(
                f"duplicated value {value + 1} in {name}",
                row=int(row) + 1, column=col + 1,
            )
    return arr


def as_complete_matrix(data, name: str = "rankings") -> np.ndarray:
    """Validate and return an integer matrix of complete rankings"""
    arr = as_partial_matrix(data, name)
    missing = np.isnan(arr)
    if missing.any():
        row, col = np.argwhere(missing)[0]
        raise RankingFormatError(
            f"{name} must be complete, found a missing entry",
            row=int(row) + 1, column=int(col) + 1,
        )
    return arr.astype(np.int64)


def is_complete(data: np.ndarray) -> bool:
    """Check if every row is a full ranking.

    A row with a single missing entry is logically complete; it still has to
    be filled before it counts as complete here.
    """
    return not np.isnan(np.asarray(data, dtype=float)).any()


def default_labels(n: int) -> List[str]:
    """Item labels used when none are given"""
    return [f"Item{i + 1}" for i in range(n)]


@dataclass
class RankingDataset:
    """N x n sample of (possibly partial) rankings with item labels"""
    rows: np.ndarray
    item_labels: List[str] = field(default_factory=list)

    def __post_init__(self):
        """Validate rows and normalize labels"""
        self.rows = as_partial_matrix(self.rows)
        if not self.item_labels:
            self.item_labels = default_labels(self.n_items)
        if len(self.item_labels) != self.n_items:
            raise RankingFormatError(
                f"{len(self.item_labels)} item labels for {self.n_items} items"
            )
        self.item_labels = [str(label) for label in self.item_labels]
        self._aggregated = None

    @classmethod
    def from_any(cls, data, item_labels: Optional[List[str]] = None) -> 'RankingDataset':
        """Wrap a matrix, or pass a dataset through unchanged"""
        if isinstance(data, cls):
            return data
        return cls(rows=data, item_labels=list(item_labels or []))

    @property
    def n_items(self) -> int:
        return self.rows.shape[1]

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def complete(self) -> bool:
        return is_complete(self.rows)

    @property
    def n_missing(self) -> np.ndarray:
        """Number of missing entries per row"""
        return np.isnan(self.rows).sum(axis=1)

    @property
    def aggregated(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Distinct rows, their frequencies and the row -> distinct row map"""
        if self._aggregated is None:
            self._aggregated = aggregate(self.rows)
        return self._aggregated

    def subset(self, rows) -> 'RankingDataset':
        """Restrict to a boolean mask or a list of 0-based row indices"""
        index = resolve_subset(rows, self.n_rows)
        return RankingDataset(rows=self.rows[index], item_labels=list(self.item_labels))

    def expand(self) -> np.ndarray:
        """Rebuild the row multiset from the aggregated view"""
        distinct, freqs, _ = self.aggregated
        return np.repeat(distinct, freqs, axis=0)

    def to_dict(self) -> Dict[str, Any]:
        """Convert dataset to a JSON-friendly dictionary"""
        return {
            "item_labels": list(self.item_labels),
            "rows": [[None if np.isnan(v) else int(v) for v in row] for row in self.rows],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RankingDataset':
        """Create dataset from dictionary"""
        rows = [[np.nan if v is None else v for v in row] for row in data["rows"]]
        return cls(rows=np.array(rows, dtype=float), item_labels=data.get("item_labels", []))

    def __len__(self) -> int:
        return self.n_rows

    def __repr__(self) -> str:
        return f"RankingDataset(N={self.n_rows}, n={self.n_items}, complete={self.complete})"


def aggregate(rows: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Aggregate duplicated rows.

    Returns the distinct rows (lexicographic order, NaN preserved), their
    frequencies and, for every input row, the index of its distinct row.
    """
    rows = np.asarray(rows, dtype=float)
    coded = np.where(np.isnan(rows), 0, rows).astype(np.int64)
    distinct, inverse, counts = np.unique(
        coded, axis=0, return_inverse=True, return_counts=True
    )
    distinct = distinct.astype(float)
    distinct[distinct == 0] = np.nan
    return distinct, counts.astype(np.int64), np.asarray(inverse).reshape(-1)


def resolve_subset(subset, n_rows: int) -> np.ndarray:
    """Turn a subset selection (mask or row indices) into sorted row indices"""
    if subset is None:
        return np.arange(n_rows)
    subset = np.asarray(subset)
    if subset.dtype == bool:
        if subset.shape != (n_rows,):
            raise RankingFormatError(f"subset mask must have length {n_rows}")
        index = np.flatnonzero(subset)
    else:
        index = np.unique(subset.astype(np.int64))
        if index.size and (index[0] < 0 or index[-1] >= n_rows):
            raise RankingFormatError(f"subset indices must lie in 0..{n_rows - 1}")
    if index.size == 0:
        raise RankingFormatError("subset selects no rows")
    return index


@dataclass
class DataDescription:
    """Descriptive summaries of a ranking sample"""
    n_rows: int
    item_labels: List[str]
    n_ranked_distribution: np.ndarray
    missing_per_item: np.ndarray
    mean_ranks: np.ndarray
    borda_ordering: np.ndarray
    first_order_marginals: np.ndarray
    pairwise_comparison: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def n_items(self) -> int:
        return len(self.item_labels)

    def to_dict(self) -> Dict[str, Any]:
        """Convert description to dictionary"""
        return {
            "sample_size": int(self.n_rows),
            "n_items": self.n_items,
            "item_labels": list(self.item_labels),
            "n_ranked_distribution": {str(k): int(c) for k, c in enumerate(self.n_ranked_distribution)},
            "missing_per_item": dict(zip(self.item_labels, map(int, self.missing_per_item))),
            "mean_ranks": dict(zip(
                self.item_labels,
                [None if np.isnan(v) else float(v) for v in self.mean_ranks],
            )),
            "borda_ordering": [self.item_labels[i - 1] for i in self.borda_ordering],
            "first_order_marginals": self.first_order_marginals.tolist(),
            "pairwise_comparison": self.pairwise_comparison.tolist(),
            "metadata": dict(self.metadata),
        }
