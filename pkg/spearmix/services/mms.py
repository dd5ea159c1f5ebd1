"""
Single-component Mallows model with Spearman distance (MMS)

The consensus MLE is the Borda ranking of the sample mean ranks; the
concentration MLE solves E_theta[D] = d_bar.
"""
import logging
from typing import Optional, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from config import BIC_DF, THETA_CAP_NUMERATOR, THETA_XTOL
from spearmix.models.errors import RankingFormatError
from spearmix.models.params import MMSParams, MixtureParams
from spearmix.models.ranking import RankingDataset, as_complete_matrix
from spearmix.models.results import FitResult, StartInfo
from spearmix.services.spearman import expected_dist, partition_function, spear_dist_to
from spearmix.utils.helpers import sum_of_squares, max_spearman_distance, uniform_mean

logger = logging.getLogger(__name__)


def borda_mle(mean_ranks, return_ties: bool = False) -> Union[np.ndarray, Tuple[np.ndarray, bool]]:
    """Ranks of the mean ranks in ascending order, ties broken by item index"""
    means = np.asarray(mean_ranks, dtype=float).reshape(-1)
    if not np.isfinite(means).all():
        raise ValueError("mean ranks must be finite")
    order = np.argsort(means, kind="stable")
    rho = np.empty(means.size, dtype=np.int64)
    rho[order] = np.arange(1, means.size + 1)
    if not return_ties:
        return rho
    sorted_means = means[order]
    ties = bool(np.any(np.isclose(np.diff(sorted_means), 0.0, rtol=0.0, atol=1e-12)))
    return rho, ties


def theta_cap(n: int) -> float:
    """Upper bound of the concentration search"""
    return THETA_CAP_NUMERATOR / n


def solve_theta(d_bar: float, n: int) -> Tuple[float, Optional[str]]:
    """Concentration MLE and the boundary it hit ('zero', 'cap' or None)"""
    upper = max_spearman_distance(n)
    if not -1e-9 <= d_bar <= upper + 1e-9:
        raise ValueError(f"d_bar must lie in [0, {upper}], got {d_bar}")

    if d_bar >= uniform_mean(n):
        return 0.0, "zero"

    cap = theta_cap(n)
    if expected_dist(cap, n) >= d_bar:
        logger.warning(f"theta estimate hit the cap {cap:.6g} (d_bar={d_bar:.6g}, n={n})")
        return cap, "cap"

    hi = 1.0
    while hi < cap and expected_dist(hi, n) > d_bar:
        hi *= 2
    hi = min(hi, cap)
    theta = brentq(lambda t: expected_dist(t, n) - d_bar, 0.0, hi, xtol=THETA_XTOL)
    return float(theta), None


def theta_mle(d_bar: float, n: int) -> float:
    """Root of E_theta[D] = d_bar, with 0 and 50/n as boundary values"""
    return solve_theta(d_bar, n)[0]


def loglik_mms(params: MMSParams, data) -> float:
    """Log-likelihood of complete rankings under one MMS component"""
    arr = as_complete_matrix(data)
    distances = spear_dist_to(arr, params.rho)
    log_z = partition_function(params.theta, arr.shape[1], log=True)
    return float(-params.theta * distances.sum() - arr.shape[0] * log_z)


def bic_penalty_df(n_clust: int, n: int, rule: Optional[str] = None) -> int:
    """Degrees of freedom of an MMS mixture under the configured convention"""
    rule = rule or BIC_DF
    if rule == "consensus":
        return n_clust * (n + 1) - 1
    if rule == "continuous":
        return 2 * n_clust - 1
    raise ValueError(f"unknown BIC df convention {rule!r}")


def bic(log_lik: float, n_clust: int, n: int, N: int, rule: Optional[str] = None) -> float:
    """-2 log_lik + df log N"""
    if not np.isfinite(log_lik):
        raise ValueError("BIC needs a finite log-likelihood")
    return float(-2.0 * log_lik + bic_penalty_df(n_clust, n, rule) * np.log(N))


def fit_mms(data, subset=None) -> FitResult:
    """Closed-form consensus and root-found concentration from complete rankings"""
    dataset = RankingDataset.from_any(data)
    if subset is not None:
        dataset = dataset.subset(subset)
    if not dataset.complete:
        raise RankingFormatError("fit_mms needs complete rankings; use fit_mixture_partial for partial data")

    distinct, freqs, inverse = dataset.aggregated
    distinct = distinct.astype(np.int64)
    N, n = int(freqs.sum()), dataset.n_items

    rank_sums = freqs @ distinct
    rho, ties = borda_mle(rank_sums / N, return_ties=True)
    # integer rank sums keep d_bar exact
    d_bar = 2 * (sum_of_squares(n) * N - int(rho @ rank_sums)) / N
    theta, boundary = solve_theta(d_bar, n)
    if ties:
        logger.info("Borda ranking not unique: tied mean ranks broken by item index")

    log_lik = float(-theta * N * d_bar - N * partition_function(theta, n, log=True))
    params = MixtureParams(rho=rho[np.newaxis, :], theta=[theta], weights=[1.0])
    logger.info(f"MMS fit: N={N}, n={n}, theta={theta:.6g}, log_lik={log_lik:.6f}")

    return FitResult(
        params=params,
        z_hat=np.ones((distinct.shape[0], 1)),
        map_classification=np.ones(dataset.n_rows, dtype=np.int64),
        log_lik=[log_lik],
        bic=bic(log_lik, 1, n, N),
        conv=True,
        n_iter=1,
        method="mms",
        n_items=n,
        freqs=freqs,
        inverse=inverse,
        seed_info=[None],
        best_start=0,
        starts=[StartInfo(index=0, seed=None, log_lik=log_lik, n_iter=1, converged=True)],
        ties=[ties],
        theta_boundary=[boundary],
    )

