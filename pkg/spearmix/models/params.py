"""
Model parameter data structures
"""
from dataclasses import dataclass
from typing import Dict, Any, Optional, Sequence
import logging

import numpy as np

from spearmix.models.ranking import as_complete_matrix
from spearmix.models.errors import RankingFormatError

logger = logging.getLogger(__name__)


@dataclass
class MMSParams:
    """Single Mallows-Spearman component: consensus ranking and concentration"""
    rho: np.ndarray
    theta: float

    def __post_init__(self):
        """Validate consensus and concentration"""
        self.rho = as_complete_matrix(self.rho, "consensus ranking").reshape(-1)
        self.theta = float(self.theta)
        if not np.isfinite(self.theta) or self.theta < 0:
            raise ValueError(f"theta must be a nonnegative real, got {self.theta}")

    @property
    def n_items(self) -> int:
        return self.rho.shape[0]

    def to_dict(self) -> Dict[str, Any]:
        return {"rho": self.rho.tolist(), "theta": self.theta}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'MMSParams':
        return cls(rho=np.asarray(data["rho"]), theta=data["theta"])


@dataclass
class MixtureParams:
    """G triples (rho_g, theta_g, omega_g)"""
    rho: np.ndarray
    theta: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        """Validate dimensions and the weight simplex"""
        self.rho = as_complete_matrix(self.rho, "consensus rankings")
        self.theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        self.weights = np.atleast_1d(np.asarray(self.weights, dtype=float))

        G = self.rho.shape[0]
        if self.theta.shape != (G,) or self.weights.shape != (G,):
            raise RankingFormatError(
                f"{G} consensus rankings but {self.theta.size} concentrations "
                f"and {self.weights.size} weights"
            )
        if (self.theta < 0).any() or not np.isfinite(self.theta).all():
            raise ValueError("concentrations must be nonnegative reals")
        if (self.weights < 0).any() or abs(self.weights.sum() - 1.0) > 1e-8:
            raise ValueError(f"weights must lie on the simplex, got {self.weights.tolist()}")

    @classmethod
    def single(cls, params: MMSParams) -> 'MixtureParams':
        """One-component mixture"""
        return cls(rho=params.rho[np.newaxis, :], theta=[params.theta], weights=[1.0])

    @property
    def n_clust(self) -> int:
        return self.rho.shape[0]

    @property
    def n_items(self) -> int:
        return self.rho.shape[1]

    def component(self, g: int) -> MMSParams:
        """Parameters of component g (0-based)"""
        return MMSParams(rho=self.rho[g], theta=self.theta[g])

    def permuted(self, order: Sequence[int]) -> 'MixtureParams':
        """Relabel components: new component g is old component order[g]"""
        order = np.asarray(order, dtype=np.int64)
        return MixtureParams(
            rho=self.rho[order], theta=self.theta[order], weights=self.weights[order]
        )

    def to_dict(self) -> Dict[str, Any]:
        """Convert parameters to dictionary"""
        return {
            "n_clust": self.n_clust,
            "rho": self.rho.tolist(),
            "theta": self.theta.tolist(),
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'MixtureParams':
        """Create parameters from dictionary"""
        return cls(
            rho=np.asarray(data["rho"]),
            theta=np.asarray(data["theta"], dtype=float),
            weights=np.asarray(data["weights"], dtype=float),
        )

    def __repr__(self) -> str:
        return f"MixtureParams(G={self.n_clust}, n={self.n_items}, theta={np.round(self.theta, 6).tolist()})"


def as_mixture_params(value: Optional[Any]) -> Optional[MixtureParams]:
    """Accept MixtureParams, MMSParams or a dict"""
    if value is None or isinstance(value, MixtureParams):
        return value
    if isinstance(value, MMSParams):
        return MixtureParams.single(value)
    if isinstance(value, dict):
        return MixtureParams.from_dict(value)
    raise TypeError(f"cannot interpret {type(value).__name__} as mixture parameters")
