"""
Spearman distance distribution under the uniform model
"""
from dataclasses import dataclass
from typing import Dict, Any, Optional

import numpy as np


@dataclass
class SpearmanDistanceDistribution:
    """Support of the Spearman distance with log-cardinalities.

    ``log_card`` is ``-inf`` at unattainable distances of exact tables.
    ``counts`` holds the integer cardinalities for exact tables only.
    """
    n_items: int
    distances: np.ndarray
    log_card: np.ndarray
    exact: bool
    method: str = "exact"
    counts: Optional[np.ndarray] = None

    def __post_init__(self):
        self.distances = np.asarray(self.distances, dtype=np.int64)
        self.log_card = np.asarray(self.log_card, dtype=float)
        if self.distances.shape != self.log_card.shape:
            raise ValueError("distances and log-cardinalities must be aligned")
        if (self.distances % 2).any() or (np.diff(self.distances) <= 0).any():
            raise ValueError("distances must be ascending even integers")
        for array in (self.distances, self.log_card):
            array.setflags(write=False)

    @property
    def max_distance(self) -> int:
        return int(self.distances[-1])

    @property
    def size(self) -> int:
        return int(self.distances.size)

    def cardinalities(self) -> np.ndarray:
        """N_d as floats (exact integers are in ``counts``)"""
        return np.exp(self.log_card)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_items": self.n_items,
            "exact": self.exact,
            "method": self.method,
            "distances": self.distances.tolist(),
            "log_card": [None if np.isinf(v) else float(v) for v in self.log_card],
        }
