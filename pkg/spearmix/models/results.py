"""
Result data structures for fits, samples and confidence intervals
"""
from dataclasses import dataclass, field
from typing import List, Dict, Any, Optional
import logging

import numpy as np

from spearmix.models.params import MixtureParams

logger = logging.getLogger(__name__)


@dataclass
class StartInfo:
    """Diagnostics of one EM start"""
    index: int
    seed: Optional[int]
    log_lik: float = float("-inf")
    n_iter: int = 0
    converged: bool = False
    discarded: bool = False
    reason: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "index": self.index,
            "seed": self.seed,
            "log_lik": None if not np.isfinite(self.log_lik) else float(self.log_lik),
            "n_iter": self.n_iter,
            "converged": self.converged,
            "discarded": self.discarded,
            "reason": self.reason,
        }


@dataclass
class FitResult:
    """Estimates, memberships and diagnostics of a fitted mixture.

    ``z_hat`` has one row per distinct observed ranking (per unit for MCEM);
    ``freqs`` are the multiplicities of those rows and ``inverse`` maps each
    input row to its ``z_hat`` row.
    """
    params: MixtureParams
    z_hat: np.ndarray
    map_classification: np.ndarray
    log_lik: List[float]
    bic: float
    conv: bool
    n_iter: int
    method: str
    n_items: int
    freqs: np.ndarray
    inverse: np.ndarray
    seed_info: List[Optional[int]] = field(default_factory=list)
    best_start: int = 0
    starts: List[StartInfo] = field(default_factory=list)
    ties: List[bool] = field(default_factory=list)
    theta_boundary: List[Optional[str]] = field(default_factory=list)
    kappa: Optional[float] = None

    @property
    def n_clust(self) -> int:
        return self.params.n_clust

    @property
    def n_rows(self) -> int:
        return int(self.freqs.sum())

    @property
    def final_log_lik(self) -> float:
        return float(self.log_lik[-1])

    @property
    def cluster_sizes(self) -> np.ndarray:
        """Expected component sizes N_g = sum_l N_l z_lg"""
        return self.freqs @ self.z_hat

    def row_memberships(self) -> np.ndarray:
        """Posterior memberships expanded to one row per input ranking"""
        return self.z_hat[self.inverse]

    def to_dict(self) -> Dict[str, Any]:
        """Convert fit to dictionary"""
        return {
            "method": self.method,
            "n_items": self.n_items,
            "n_clust": self.n_clust,
            "sample_size": self.n_rows,
            "params": self.params.to_dict(),
            "z_hat": self.z_hat.tolist(),
            "freqs": self.freqs.tolist(),
            "map_classification": self.map_classification.tolist(),
            "log_lik": [float(v) for v in self.log_lik],
            "bic": float(self.bic),
            "conv": bool(self.conv),
            "n_iter": int(self.n_iter),
            "seed_info": list(self.seed_info),
            "best_start": int(self.best_start),
            "starts": [start.to_dict() for start in self.starts],
            "ties": [bool(t) for t in self.ties],
            "theta_boundary": list(self.theta_boundary),
            "kappa": self.kappa,
        }


@dataclass
class SampleResult:
    """Simulated rankings together with the parameters actually used"""
    samples: np.ndarray
    rho: np.ndarray
    theta: np.ndarray
    weights: np.ndarray
    classification: np.ndarray
    method: str = "mh"

    @property
    def params(self) -> MixtureParams:
        return MixtureParams(rho=self.rho, theta=self.theta, weights=self.weights)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": self.method,
            "rho": self.rho.tolist(),
            "theta": self.theta.tolist(),
            "weights": self.weights.tolist(),
            "classification": self.classification.tolist(),
            "sample_size": int(self.samples.shape[0]),
        }


@dataclass
class WeightIntervals:
    """Wald intervals for mixture weights from the observed information"""
    intervals: Optional[np.ndarray]
    se: Optional[np.ndarray]
    singular: bool
    information: np.ndarray

    def to_dict(self) -> Dict[str, Any]:
        return {
            "intervals": None if self.intervals is None else self.intervals.tolist(),
            "se": None if self.se is None else self.se.tolist(),
            "singular": self.singular,
        }


@dataclass
class CIResult:
    """Confidence intervals for the mixture parameters"""
    conf_level: float
    theta_ci: np.ndarray
    method: str
    theta_point: np.ndarray
    weights_ci: Optional[np.ndarray] = None
    weights_point: Optional[np.ndarray] = None
    rho_itemwise: Optional[List[List[List[int]]]] = None
    rho_point: Optional[np.ndarray] = None
    point_rank_added: Optional[List[List[bool]]] = None
    weights_se: Optional[np.ndarray] = None
    weights_singular: bool = False

    def to_dict(self) -> Dict[str, Any]:
        """Convert intervals to dictionary"""
        return {
            "conf_level": self.conf_level,
            "method": self.method,
            "theta_point": self.theta_point.tolist(),
            "theta_ci": self.theta_ci.tolist(),
            "weights_point": None if self.weights_point is None else self.weights_point.tolist(),
            "weights_ci": None if self.weights_ci is None else self.weights_ci.tolist(),
            "weights_se": None if self.weights_se is None else self.weights_se.tolist(),
            "weights_singular": self.weights_singular,
            "rho_point": None if self.rho_point is None else self.rho_point.tolist(),
            "rho_itemwise": self.rho_itemwise,
            "point_rank_added": self.point_rank_added,
        }


@dataclass
class BootstrapResult:
    """Bootstrap replicates and the derived intervals"""
    n_boot: int
    boot_type: str
    ci: CIResult
    marginals: np.ndarray
    n_failed: int = 0
    rho_samples: Optional[np.ndarray] = None
    theta_samples: Optional[np.ndarray] = None
    weights_samples: Optional[np.ndarray] = None
    seed: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        """Convert bootstrap summary to dictionary"""
        return {
            "n_boot": self.n_boot,
            "boot_type": self.boot_type,
            "n_failed": self.n_failed,
            "seed": self.seed,
            "ci": self.ci.to_dict(),
            "marginals": self.marginals.tolist(),
            "rho_samples": None if self.rho_samples is None else self.rho_samples.tolist(),
            "theta_samples": None if self.theta_samples is None else self.theta_samples.tolist(),
            "weights_samples": None if self.weights_samples is None else self.weights_samples.tolist(),
        }
