"""
Random generation from MMS and MMS mixtures
"""
import logging
from math import exp
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from config import EXACT_SAMPLER_MAX_N, MH_BURN_IN_PER_ITEM, SEPARATION_MAX_ATTEMPTS
from spearmix.models.errors import IncompatibleOptionsError, RankingFormatError
from spearmix.models.params import MMSParams
from spearmix.models.ranking import as_complete_matrix
from spearmix.models.results import SampleResult
from spearmix.services.ranking_space import ranking_space
from spearmix.services.spearman import spear_dist_matrix
from spearmix.utils.helpers import sum_of_squares, max_spearman_distance

logger = logging.getLogger(__name__)


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def sample_mms_exact(N: int, params: MMSParams, rng=None) -> np.ndarray:
    """Categorical draw over all n! rankings, P(r) proportional to exp(-theta d(r, rho))"""
    n = params.n_items
    if n > EXACT_SAMPLER_MAX_N:
        raise IncompatibleOptionsError(
            f"exact sampling supports n <= {EXACT_SAMPLER_MAX_N}, got n={n}; use the MH sampler"
        )
    rng = _rng(rng)
    space = ranking_space(n)
    log_p = -params.theta * 2.0 * (sum_of_squares(n) - space @ params.rho)
    p = np.exp(log_p - logsumexp(log_p))
    index = rng.choice(space.shape[0], size=N, p=p / p.sum())
    return space[index].astype(np.int64)


def sample_mms_mh(N: int, params: MMSParams, burn_in: Optional[int] = None,
                  thin: Optional[int] = None, rng=None,
                  start: Optional[np.ndarray] = None) -> np.ndarray:
    """Metropolis-Hastings chain with a swap-two-positions proposal.

    The chain starts from a uniform ranking (or ``start``); after ``burn_in``
    proposals every ``thin``-th state is emitted.
    """
    n = params.n_items
    burn_in = MH_BURN_IN_PER_ITEM * n if burn_in is None else int(burn_in)
    thin = n if thin is None else int(thin)
    if burn_in <= 0 or thin <= 0:
        raise ValueError("burn_in and thin must be positive")
    rng = _rng(rng)

    steps = burn_in + N * thin
    a_draws = rng.integers(n, size=steps)
    b_draws = ((a_draws + rng.integers(1, n, size=steps)) % n).tolist()
    a_draws = a_draws.tolist()
    u_draws = rng.random(steps).tolist()

    x = (rng.permutation(n) + 1 if start is None else as_complete_matrix(start).reshape(-1)).tolist()
    rho = params.rho.tolist()
    theta = params.theta
    out = np.empty((N, n), dtype=np.int64)
    accepted = 0

    for step in range(steps):
        a, b = a_draws[step], b_draws[step]
        xa, xb, ra, rb = x[a], x[b], rho[a], rho[b]
        delta = (xb - ra) ** 2 + (xa - rb) ** 2 - (xa - ra) ** 2 - (xb - rb) ** 2
        if delta <= 0 or u_draws[step] < exp(-theta * delta):
            x[a], x[b] = xb, xa
            accepted += 1
        if step >= burn_in and (step - burn_in + 1) % thin == 0:
            out[(step - burn_in) // thin] = x

    logger.debug(f"MH sampler n={n}: acceptance rate {accepted / steps:.3f} over {steps} proposals")
    return out


def sample_mms(N: int, params: MMSParams, rng=None, mh: Optional[bool] = None) -> np.ndarray:
    """Exact sampling for small n, MH otherwise (or as requested)"""
    if N == 0:
        return np.empty((0, params.n_items), dtype=np.int64)
    if mh is None:
        mh = params.n_items > EXACT_SAMPLER_MAX_N
    if mh:
        return sample_mms_mh(N, params, rng=rng)
    return sample_mms_exact(N, params, rng=rng)


def random_theta(n: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Concentrations uniform on (1/n^2, 3/n^1.5)"""
    return rng.uniform(1.0 / n ** 2, 3.0 / n ** 1.5, size=size)


def separation_threshold(n: int, n_clust: int) -> float:
    """Minimum pairwise consensus distance (2/G) C(n+1, 3)"""
    return max_spearman_distance(n) / n_clust


def separated_consensus(n: int, n_clust: int, rng: np.random.Generator,
                        max_attempts: int = SEPARATION_MAX_ATTEMPTS) -> np.ndarray:
    """Rejection-sample G consensus rankings at pairwise distance >= threshold"""
    threshold = separation_threshold(n, n_clust)
    for attempt in range(1, max_attempts + 1):
        rho = np.argsort(rng.random((n_clust, n)), axis=1) + 1
        if n_clust == 1 or spear_dist_matrix(rho)[np.triu_indices(n_clust, 1)].min() >= threshold:
            logger.debug(f"Separated consensus found after {attempt} attempts")
            return rho
    raise ValueError(
        f"no {n_clust} consensus rankings at distance >= {threshold:g} found in {max_attempts} attempts"
    )


def rmsmix(sample_size: int, n_items: int, n_clust: int = 1, rho=None, theta=None,
           weights=None, uniform: bool = False, mh: bool = True, rng=None) -> SampleResult:
    """Simulate from an MMS mixture, generating unspecified parameters.

    ``uniform`` draws consensus rankings uniformly and weights from a flat
    Dirichlet; otherwise consensus rankings are separated by rejection and
    weights come from Dirichlet(2G, ..., 2G).
    """
    rng = _rng(rng)
    n, G = int(n_items), int(n_clust)
    if G < 1 or n < 2:
        raise ValueError("need n_clust >= 1 and n_items >= 2")
    if not mh and n > EXACT_SAMPLER_MAX_N:
        raise IncompatibleOptionsError(f"exact sampling (mh=False) supports n <= {EXACT_SAMPLER_MAX_N}")

    if rho is None:
        rho = (np.argsort(rng.random((G, n)), axis=1) + 1) if uniform else separated_consensus(n, G, rng)
    else:
        rho = as_complete_matrix(rho, "consensus rankings")
        if rho.shape != (G, n):
            raise RankingFormatError(f"expected {G} consensus rankings of {n} items, got shape {rho.shape}")

    theta = random_theta(n, G, rng) if theta is None else np.broadcast_to(
        np.asarray(theta, dtype=float), (G,)).copy()
    if (theta < 0).any():
        raise ValueError("concentrations must be nonnegative")

    if weights is None:
        weights = rng.dirichlet(np.full(G, 1.0 if uniform else 2.0 * G))
    else:
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if weights.shape != (G,) or (weights < 0).any() or weights.sum() <= 0:
            raise ValueError(f"weights must be {G} nonnegative values")
        weights = weights / weights.sum()

    classification = rng.choice(G, size=sample_size, p=weights) + 1
    samples = np.empty((sample_size, n), dtype=np.int64)
    for g in range(G):
        rows = np.flatnonzero(classification == g + 1)
        samples[rows] = sample_mms(rows.size, MMSParams(rho=rho[g], theta=theta[g]), rng=rng, mh=mh)

    logger.info(f"Simulated {sample_size} rankings of {n} items from {G} component(s)")
    return SampleResult(
        samples=samples, rho=rho, theta=theta, weights=weights,
        classification=classification, method="mh" if mh else "exact",
    )
