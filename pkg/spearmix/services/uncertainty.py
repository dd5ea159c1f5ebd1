"""
Estimation uncertainty: asymptotic intervals, bootstrap and itemwise HPD sets
"""
import logging
from typing import Optional, List, Dict, Any, Tuple, Union

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.stats import norm

from config import DEFAULT_CONF_LEVEL, DEFAULT_KAPPA, DEFAULT_N_BOOT
from spearmix.models.errors import IncompatibleOptionsError, DegenerateComponentError
from spearmix.models.params import MMSParams
from spearmix.models.ranking import RankingDataset
from spearmix.models.results import BootstrapResult, CIResult, FitResult, WeightIntervals
from spearmix.services.mixture import resolve_seed, fit
from spearmix.services.mms import fit_mms
from spearmix.services.runner import get_runner
from spearmix.services.sampler import sample_mms
from spearmix.services.spearman import var_dist
from spearmix.utils.helpers import sum_of_squares

logger = logging.getLogger(__name__)

BOOT_TYPES = ("nonparametric", "parametric", "separated", "soft")


def _check_level(conf_level: float) -> float:
    if not 0 < conf_level < 1:
        raise ValueError(f"conf_level must lie in (0, 1), got {conf_level}")
    return float(conf_level)


def ci_theta_asymptotic(fit_result: FitResult, conf_level: float = DEFAULT_CONF_LEVEL) -> CIResult:
    """theta_g -/+ z_{1-alpha/2} / sqrt(N_g V_theta_g[D]), lower end clamped at 0"""
    conf_level = _check_level(conf_level)
    z = norm.ppf(0.5 + conf_level / 2)
    theta = fit_result.params.theta
    sizes = fit_result.cluster_sizes
    variances = np.array([var_dist(t, fit_result.n_items) for t in theta])

    with np.errstate(divide="ignore"):
        half_width = z / np.sqrt(sizes * variances)
    intervals = np.column_stack([np.maximum(theta - half_width, 0.0), theta + half_width])
    return CIResult(
        conf_level=conf_level, theta_ci=intervals, method="asymptotic", theta_point=theta.copy(),
    )


def ci_weights_hessian(fit_result: FitResult, conf_level: float = DEFAULT_CONF_LEVEL) -> WeightIntervals:
    """Wald intervals for the weights from the empirical observed information.

    Scores for (omega_1..omega_{G-1}) are s_lg = z_lg/omega_g - z_lG/omega_G;
    the information is the frequency-weighted sum of their outer products.
    """
    conf_level = _check_level(conf_level)
    G = fit_result.n_clust
    if G < 2:
        raise IncompatibleOptionsError("weight intervals need at least two components")

    weights = fit_result.params.weights
    z_hat = fit_result.z_hat
    scores = z_hat[:, :-1] / weights[:-1] - (z_hat[:, -1] / weights[-1])[:, np.newaxis]
    information = (scores * fit_result.freqs[:, np.newaxis]).T @ scores

    eigenvalues = np.linalg.eigvalsh(information)
    if eigenvalues.min() <= 1e-10 * max(eigenvalues.max(), 1.0):
        logger.warning("Observed information for the weights is singular; intervals omitted")
        return WeightIntervals(intervals=None, se=None, singular=True, information=information)

    covariance = np.linalg.inv(information)
    last = np.ones(G - 1)
    se = np.sqrt(np.append(np.diag(covariance), last @ covariance @ last))
    z = norm.ppf(0.5 + conf_level / 2)
    intervals = np.clip(np.column_stack([weights - z * se, weights + z * se]), 0.0, 1.0)
    return WeightIntervals(intervals=intervals, se=se, singular=False, information=information)


def confint(fit_result: FitResult, conf_level: float = DEFAULT_CONF_LEVEL) -> CIResult:
    """Asymptotic theta intervals, plus weight intervals for full-ranking mixtures"""
    result = ci_theta_asymptotic(fit_result, conf_level)
    if fit_result.n_clust >= 2 and fit_result.method == "em":
        weights = ci_weights_hessian(fit_result, conf_level)
        result.weights_point = fit_result.params.weights.copy()
        result.weights_ci = weights.intervals
        result.weights_se = weights.se
        result.weights_singular = weights.singular
    return result


def bootstrap_marginals(rho_samples: np.ndarray, n: Optional[int] = None) -> np.ndarray:
    """Share of replicates placing item i at rank j, as an [rank j, item i] matrix"""
    rho_samples = np.asarray(rho_samples, dtype=np.int64)
    B, n_items = rho_samples.shape
    n = n or n_items
    counts = np.zeros((n, n))
    np.add.at(counts, (rho_samples - 1, np.broadcast_to(np.arange(n_items), rho_samples.shape)), 1)
    return counts / B


def itemwise_hpd(rho_samples: np.ndarray, conf_level: float = DEFAULT_CONF_LEVEL,
                 point: Optional[np.ndarray] = None,
                 return_added: bool = False) -> Union[List[List[int]], Tuple[List[List[int]], List[bool]]]:
    """Smallest set of ranks per item reaching conf_level bootstrap probability.

    Ranks enter by descending frequency; equal frequencies prefer the rank
    closer to ``point`` and then the lower rank. The point rank is added
    when the prefix misses it.
    """
    conf_level = _check_level(conf_level)
    rho_samples = np.asarray(rho_samples, dtype=np.int64)
    B, n = rho_samples.shape
    counts = np.round(bootstrap_marginals(rho_samples, n) * B).astype(np.int64)
    target = conf_level * B - 1e-9
    ranks = np.arange(1, n + 1)

    sets, added = [], []
    for i in range(n):
        distance = np.abs(ranks - point[i]) if point is not None else np.zeros(n)
        order = np.lexsort((ranks, distance, -counts[:, i]))
        cumulative = np.cumsum(counts[order, i])
        size = int(np.searchsorted(cumulative, target, side="left")) + 1
        chosen = set(int(r) for r in ranks[order[:size]])
        missing_point = point is not None and int(point[i]) not in chosen
        if missing_point:
            chosen.add(int(point[i]))
        sets.append(sorted(chosen))
        added.append(bool(missing_point))
    return (sets, added) if return_added else sets


def align_components(rho_boot: np.ndarray, rho_ref: np.ndarray) -> np.ndarray:
    """Order of bootstrap components matching the reference labels.

    Minimizes the total Spearman distance between matched consensus rankings;
    component g of the aligned replicate is ``rho_boot[order[g]]``.
    """
    rho_boot = np.asarray(rho_boot, dtype=np.int64)
    rho_ref = np.asarray(rho_ref, dtype=np.int64)
    n = rho_ref.shape[1]
    cost = 2 * (sum_of_squares(n) - rho_ref @ rho_boot.T)
    _, order = linear_sum_assignment(cost)
    return order


def _draw_labels(z_rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(z_rows.shape[0])
    return np.minimum((u[:, np.newaxis] > np.cumsum(z_rows, axis=1)).sum(axis=1), z_rows.shape[1] - 1)


def _refit(sample: np.ndarray, n_clust: int, task: Dict[str, Any], seed: int) -> FitResult:
    return fit(
        sample, n_clust=n_clust, mc_em=task["method"] == "mcem", kappa=task["kappa"],
        n_start=task["n_start"], seed=seed,
    )


def _bootstrap_replicate(task: Dict[str, Any]) -> Dict[str, Any]:
    """One bootstrap replicate; module level so worker processes can run it"""
    rng = np.random.default_rng([task["seed"], task["b"]])
    fit_seed = int(rng.integers(2 ** 31))
    rows = task["rows"]
    N = rows.shape[0]
    G = task["n_clust"]
    kind = task["boot_type"]

    try:
        if kind == "nonparametric":
            refit = _refit(rows[rng.integers(N, size=N)], G, task, fit_seed)
            params = refit.params
            if G > 1:
                params = params.permuted(align_components(params.rho, task["rho_ref"]))
            return {"failed": False, "rho": params.rho, "theta": params.theta,
                    "weights": params.weights if G > 1 else None}

        if kind == "parametric":
            component = MMSParams(rho=task["rho_ref"][0], theta=task["theta_ref"][0])
            refit = fit_mms(sample_mms(N, component, rng=rng))
            return {"failed": False, "rho": refit.params.rho, "theta": refit.params.theta, "weights": None}

        labels = task["map"] - 1 if kind == "separated" else _draw_labels(task["z_rows"], rng)
        rho = np.empty((G, rows.shape[1]), dtype=np.int64)
        theta = np.empty(G)
        for g in range(G):
            members = np.flatnonzero(labels == g)
            if members.size == 0:
                raise DegenerateComponentError([g])
            refit = _refit(rows[rng.choice(members, size=members.size, replace=True)], 1, task, fit_seed)
            rho[g], theta[g] = refit.params.rho[0], refit.params.theta[0]
        weights = np.bincount(labels, minlength=G) / N if kind == "soft" else None
        return {"failed": False, "rho": rho, "theta": theta, "weights": weights}

    except ValueError as e:
        logger.debug(f"Bootstrap replicate {task['b']} failed: {e}")
        return {"failed": True, "reason": str(e)}


def default_boot_type(n_clust: int) -> str:
    """nonparametric for one component, soft for mixtures"""
    return "nonparametric" if n_clust == 1 else "soft"


def _check_boot_type(boot_type: str, n_clust: int, complete: bool) -> None:
    if boot_type not in BOOT_TYPES:
        raise ValueError(f"bootstrap type must be one of {BOOT_TYPES}, got {boot_type!r}")
    if boot_type == "parametric" and (n_clust != 1 or not complete):
        raise IncompatibleOptionsError("parametric bootstrap needs a single component fitted to full rankings")
    if boot_type in ("separated", "soft") and n_clust < 2:
        raise IncompatibleOptionsError(f"{boot_type} bootstrap needs at least two components")


def bootstrap(fit_result: FitResult, data, n_boot: int = DEFAULT_N_BOOT, type: Optional[str] = None,
              n_start: int = 1, conf_level: float = DEFAULT_CONF_LEVEL, all: bool = False,
              parallel: bool = False, seed: Optional[int] = None,
              kappa: Optional[float] = None) -> BootstrapResult:
    """Bootstrap intervals for theta, the weights and the consensus rankings.

    Replicate b draws from a generator seeded with (seed, b). Failed
    replicates (empty component) are counted and left out of the quantiles.
    """
    conf_level = _check_level(conf_level)
    if n_boot < 1:
        raise ValueError(f"n_boot must be at least 1, got {n_boot}")
    dataset = RankingDataset.from_any(data)
    if dataset.n_rows != fit_result.inverse.size or dataset.n_items != fit_result.n_items:
        raise ValueError("data do not match the fitted model")

    G = fit_result.n_clust
    boot_type = type or default_boot_type(G)
    _check_boot_type(boot_type, G, dataset.complete)
    base = resolve_seed(seed)

    common = {
        "seed": base, "boot_type": boot_type, "n_clust": G, "n_start": n_start,
        "method": fit_result.method,
        "kappa": kappa if kappa is not None else (fit_result.kappa or DEFAULT_KAPPA),
        "rows": dataset.rows, "rho_ref": fit_result.params.rho, "theta_ref": fit_result.params.theta,
        "map": fit_result.map_classification, "z_rows": fit_result.row_memberships(),
    }
    tasks = [dict(common, b=b) for b in range(n_boot)]
    logger.info(f"Bootstrap ({boot_type}): {n_boot} replicates, G={G}, seed={base}")
    outcomes = get_runner(parallel).map(_bootstrap_replicate, tasks, label="bootstrap replicates")

    kept = [o for o in outcomes if not o["failed"]]
    n_failed = n_boot - len(kept)
    if n_failed:
        logger.warning(f"{n_failed} of {n_boot} bootstrap replicates failed")
    if not kept:
        raise ValueError("every bootstrap replicate failed")

    rho_samples = np.stack([o["rho"] for o in kept])
    theta_samples = np.stack([o["theta"] for o in kept])
    has_weights = kept[0]["weights"] is not None
    weights_samples = np.stack([o["weights"] for o in kept]) if has_weights else None

    alpha = 1 - conf_level
    probs = [alpha / 2, 1 - alpha / 2]
    rho_sets, added = [], []
    for g in range(G):
        sets, flags = itemwise_hpd(rho_samples[:, g], conf_level, point=fit_result.params.rho[g], return_added=True)
        rho_sets.append(sets)
        added.append(flags)

    ci = CIResult(
        conf_level=conf_level,
        theta_ci=np.quantile(theta_samples, probs, axis=0, method="linear").T,
        method=f"bootstrap-{boot_type}",
        theta_point=fit_result.params.theta.copy(),
        weights_ci=np.quantile(weights_samples, probs, axis=0, method="linear").T if has_weights else None,
        weights_point=fit_result.params.weights.copy() if has_weights else None,
        rho_itemwise=rho_sets,
        rho_point=fit_result.params.rho.copy(),
        point_rank_added=added,
    )
    marginals = np.stack([bootstrap_marginals(rho_samples[:, g], fit_result.n_items) for g in range(G)])

    return BootstrapResult(
        n_boot=n_boot,
        boot_type=boot_type,
        ci=ci,
        marginals=marginals,
        n_failed=n_failed,
        rho_samples=rho_samples if all else None,
        theta_samples=theta_samples if all else None,
        weights_samples=weights_samples if all else None,
        seed=base,
    )
