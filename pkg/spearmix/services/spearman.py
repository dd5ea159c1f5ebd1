"""
Spearman distance, its uniform-model distribution and the partition function
"""
import logging
from typing import Optional, Union

import numpy as np
from scipy.optimize import brentq
from scipy.spatial.distance import pdist, squareform
from scipy.special import gammaln, logsumexp

from config import EXACT_MAX_N, GRID_MIN_N, GRID_SIZE, TABLES_FILE
from spearmix.models.distribution import SpearmanDistanceDistribution
from spearmix.models.errors import RankingFormatError
from spearmix.models.ranking import as_complete_matrix
from spearmix.services.tables import load_tables
from spearmix.utils.helpers import (
    sum_of_squares,
    max_spearman_distance,
    uniform_mean,
    uniform_variance,
)
from spearmix.utils.state import cached

logger = logging.getLogger(__name__)

Number = Union[int, float]


def spear_dist(r, rho) -> int:
    """Spearman distance sum_i (r_i - rho_i)^2 between two rankings"""
    r = as_complete_matrix(r, "ranking").reshape(-1)
    rho = as_complete_matrix(rho, "consensus ranking").reshape(-1)
    if r.shape != rho.shape:
        raise RankingFormatError(f"rankings of different lengths: {r.size} and {rho.size}")
    return int(((r - rho) ** 2).sum())


def spear_dist_to(data, rho) -> np.ndarray:
    """Distances of every row of ``data`` to one ranking"""
    arr = as_complete_matrix(data)
    rho = as_complete_matrix(rho, "consensus ranking").reshape(-1)
    if arr.shape[1] != rho.size:
        raise RankingFormatError(f"rankings of {arr.shape[1]} items against a consensus of {rho.size}")
    return 2 * (sum_of_squares(rho.size) - arr @ rho)


def spear_dist_matrix(data) -> np.ndarray:
    """Symmetric matrix of pairwise Spearman distances"""
    arr = as_complete_matrix(data)
    if arr.shape[0] < 2:
        return np.zeros((arr.shape[0], arr.shape[0]), dtype=np.int64)
    return np.rint(squareform(pdist(arr, "sqeuclidean"))).astype(np.int64)


def _approximation_support(n: int, grid: Optional[int]):
    """Even support points and the number of even distances each one carries"""
    half = max_spearman_distance(n) // 2
    if grid is None and n < GRID_MIN_N:
        distances = 2 * np.arange(half + 1, dtype=np.int64)
        return distances, np.ones(distances.size)

    size = min(grid or GRID_SIZE, half + 1)
    distances = 2 * np.unique(np.rint(np.linspace(0, half, size)).astype(np.int64))
    steps = np.diff(distances) / 2
    # trapezoidal share of the lattice between neighbouring grid points
    widths = np.zeros(distances.size)
    widths[:-1] += steps / 2
    widths[1:] += steps / 2
    widths[0] += 0.5
    widths[-1] += 0.5
    return distances, widths


def approximate_distribution(n: int, grid: Optional[int] = None) -> SpearmanDistanceDistribution:
    """Moment-matched discrete Gaussian substitute for N_d.

    Mass sits on even distances in [0, 2 C(n+1, 3)], centred at the uniform
    mean; the scale is solved so that the discrete variance equals the
    uniform variance, then the total is renormalized to n!. For
    n >= GRID_MIN_N (or an explicit ``grid``) the support is a fixed grid
    with trapezoidal masses.
    """
    if n < 4:
        raise ValueError(f"the approximation needs n >= 4, got {n}")
    distances, widths = _approximation_support(n, grid)
    mean = uniform_mean(n)
    target = uniform_variance(n)
    centred = (distances - mean).astype(float)
    log_widths = np.log(widths)

    def log_mass(scale: float) -> np.ndarray:
        return log_widths - centred ** 2 / (2 * scale ** 2)

    def excess_variance(scale: float) -> float:
        lm = log_mass(scale)
        p = np.exp(lm - logsumexp(lm))
        return float(p @ centred ** 2) - target

    sigma = np.sqrt(target)
    scale = brentq(excess_variance, 0.5 * sigma, 50 * sigma, xtol=1e-10 * sigma)

    lm = log_mass(scale)
    log_card = lm - logsumexp(lm) + gammaln(n + 1)
    method = "gaussian" if grid is None and n < GRID_MIN_N else "gaussian-grid"
    logger.debug(f"Approximate distribution n={n}: scale/sigma={scale / sigma:.8f}, {distances.size} points")
    return SpearmanDistanceDistribution(
        n_items=n, distances=distances, log_card=log_card, exact=False, method=method,
    )


def _exact_tables():
    return cached("exact_tables", lambda: load_tables(TABLES_FILE))


def distance_distribution(n: int) -> SpearmanDistanceDistribution:
    """Distance distribution under uniformity: exact for n <= 20, approximate beyond"""
    if n < 2:
        raise ValueError(f"distance distribution needs n >= 2, got {n}")
    if n <= EXACT_MAX_N:
        return _exact_tables()[n]
    return cached(("approximate", n), lambda: approximate_distribution(n))


def _probabilities(theta: Number, n: int):
    """Distance-law probabilities under MMS(theta) and log Z"""
    if theta < 0 or not np.isfinite(theta):
        raise ValueError(f"theta must be a nonnegative real, got {theta}")
    dist = distance_distribution(n)
    lw = dist.log_card - theta * dist.distances
    log_z = logsumexp(lw)
    return dist.distances.astype(float), np.exp(lw - log_z), float(log_z)


def partition_function(theta: Number, n: int, log: bool = False) -> float:
    """Z(theta) = sum_d N_d exp(-theta d)"""
    _, _, log_z = _probabilities(theta, n)
    return log_z if log else float(np.exp(log_z))


def expected_dist(theta: Number, n: int, log: bool = False) -> float:
    """E_theta[D] under the MMS"""
    d, p, _ = _probabilities(theta, n)
    mean = float(p @ d)
    if log:
        return float(np.log(mean)) if mean > 0 else -np.inf
    return mean


def var_dist(theta: Number, n: int, log: bool = False) -> float:
    """V_theta[D] under the MMS"""
    d, p, _ = _probabilities(theta, n)
    mean = p @ d
    variance = float(p @ (d - mean) ** 2)
    if log:
        return float(np.log(variance)) if variance > 0 else -np.inf
    return variance


def log_density(r, rho, theta: Number) -> Union[float, np.ndarray]:
    """log P(r | rho, theta) = -theta d(r, rho) - log Z(theta); vectorized over rows of r"""
    arr = np.asarray(r)
    n = np.asarray(rho).reshape(-1).size
    values = -theta * spear_dist_to(arr, rho) - partition_function(theta, n, log=True)
    return float(values[0]) if arr.ndim == 1 else values
