"""
EM estimation of MMS mixtures

- full rankings: plain EM on the aggregated sample
- partial rankings: EM on the augmented sample of compatible completions,
  or Monte Carlo EM that re-completes every unit at each iteration
- multi-start orchestration, BIC and model selection
"""
import logging
from dataclasses import dataclass
from typing import Optional, List, Dict, Any, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from config import (
    AUGMENT_MAX_MISSING,
    DEFAULT_KAPPA,
    DEFAULT_MAX_ITER,
    DEFAULT_N_START,
    DEFAULT_TOL,
    DEGENERATE_WEIGHT,
    MCEM_STABLE_ITERS,
    MCEM_THETA_RTOL,
    MONOTONE_SLACK,
)
from spearmix.models.errors import DegenerateComponentError, RankingFormatError
from spearmix.models.params import MMSParams, MixtureParams, as_mixture_params
from spearmix.models.ranking import RankingDataset, as_complete_matrix
from spearmix.models.results import FitResult, StartInfo
from spearmix.services.mms import bic, borda_mle, fit_mms, solve_theta
from spearmix.services.ranking_ops import augment_rows, complete
from spearmix.services.runner import get_runner
from spearmix.services.sampler import random_theta, sample_mms
from spearmix.services.spearman import partition_function
from spearmix.utils.helpers import sum_of_squares, max_spearman_distance

logger = logging.getLogger(__name__)


@dataclass
class EStep:
    """E-step output: M-step weights on ``rows`` plus per-row memberships"""
    rows: np.ndarray
    weights: np.ndarray
    z_rows: np.ndarray
    log_lik: float


@dataclass
class AugmentedSample:
    """Compatible completions of the distinct partial rows, stacked.

    Completions of distinct row l occupy ``offsets[l]`` up to the next
    offset; ``owner`` maps each completion back to its row.
    """
    completions: np.ndarray
    owner: np.ndarray
    offsets: np.ndarray
    freqs: np.ndarray

    @classmethod
    def build(cls, distinct: np.ndarray, freqs: np.ndarray,
              limit: int = AUGMENT_MAX_MISSING) -> 'AugmentedSample':
        sets = augment_rows(distinct, limit)
        sizes = np.array([s.shape[0] for s in sets], dtype=np.int64)
        completions = np.vstack(sets).astype(np.int64)
        owner = np.repeat(np.arange(len(sets)), sizes)
        offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        logger.debug(f"Augmented {len(sets)} distinct rows into {completions.shape[0]} completions")
        return cls(completions=completions, owner=owner, offsets=offsets, freqs=np.asarray(freqs))


@dataclass
class AugmentedEStep:
    """E-step quantities of the augmentation EM"""
    p: np.ndarray
    n_hat: np.ndarray
    z_completions: np.ndarray
    z_rows: np.ndarray
    log_lik: float


def log_component_densities(params: MixtureParams, rows: np.ndarray) -> np.ndarray:
    """K x G matrix of log P(r_k | rho_g, theta_g)"""
    n = params.n_items
    distances = 2 * (sum_of_squares(n) - rows @ params.rho.T)
    log_z = np.array([partition_function(t, n, log=True) for t in params.theta])
    return -distances * params.theta[np.newaxis, :] - log_z[np.newaxis, :]


def _joint(params: MixtureParams, rows: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(params.weights)[np.newaxis, :] + log_component_densities(params, rows)


def _e_step_complete(params: MixtureParams, rows: np.ndarray, freqs: np.ndarray) -> EStep:
    joint = _joint(params, rows)
    row_lik = logsumexp(joint, axis=1)
    z = np.exp(joint - row_lik[:, np.newaxis])
    return EStep(rows=rows, weights=freqs[:, np.newaxis] * z, z_rows=z, log_lik=float(freqs @ row_lik))


def e_step_full(params: MixtureParams, rows, freqs=None) -> np.ndarray:
    """Posterior memberships of complete (distinct) rows"""
    rows = as_complete_matrix(rows)
    freqs = np.ones(rows.shape[0]) if freqs is None else np.asarray(freqs, dtype=float)
    return _e_step_complete(params, rows, freqs).z_rows


def observed_loglik(params: MixtureParams, data) -> float:
    """sum_l N_l log sum_g omega_g P(r_l | rho_g, theta_g) for complete rankings"""
    dataset = RankingDataset.from_any(data)
    distinct, freqs, _ = dataset.aggregated
    return _e_step_complete(params, as_complete_matrix(distinct), freqs.astype(float)).log_lik


def e_step_augmented(params: MixtureParams, sample: AugmentedSample) -> AugmentedEStep:
    """p_lm, latent frequencies N_m and memberships z_mg over completions"""
    joint = _joint(params, sample.completions)
    total = logsumexp(joint, axis=1)

    peak = np.maximum.reduceat(total, sample.offsets)
    row_lik = peak + np.log(np.add.reduceat(np.exp(total - peak[sample.owner]), sample.offsets))

    p = np.exp(total - row_lik[sample.owner])
    n_hat = sample.freqs[sample.owner] * p
    z_completions = np.exp(joint - total[:, np.newaxis])
    z_rows = np.add.reduceat(np.exp(joint - row_lik[sample.owner][:, np.newaxis]), sample.offsets, axis=0)
    return AugmentedEStep(
        p=p, n_hat=n_hat, z_completions=z_completions, z_rows=z_rows,
        log_lik=float(sample.freqs @ row_lik),
    )


def _e_step_augmented(params: MixtureParams, sample: AugmentedSample) -> EStep:
    step = e_step_augmented(params, sample)
    return EStep(
        rows=sample.completions,
        weights=step.n_hat[:, np.newaxis] * step.z_completions,
        z_rows=step.z_rows,
        log_lik=step.log_lik,
    )


def m_step_weighted(rows: np.ndarray, weights: np.ndarray
                    ) -> Tuple[MixtureParams, List[bool], List[Optional[str]]]:
    """Weighted Borda consensus and concentration MLE per component"""
    n = rows.shape[1]
    sizes = weights.sum(axis=0)
    total = sizes.sum()
    empty = np.flatnonzero(sizes < DEGENERATE_WEIGHT * total)
    if empty.size:
        raise DegenerateComponentError(empty)

    mean_ranks = (weights.T @ rows) / sizes[:, np.newaxis]
    cn, upper = sum_of_squares(n), max_spearman_distance(n)
    rho = np.empty((weights.shape[1], n), dtype=np.int64)
    theta = np.empty(weights.shape[1])
    ties, boundary = [], []
    for g in range(weights.shape[1]):
        rho[g], tied = borda_mle(mean_ranks[g], return_ties=True)
        d_bar = min(max(2.0 * (cn - rho[g] @ mean_ranks[g]), 0.0), upper)
        theta[g], hit = solve_theta(d_bar, n)
        ties.append(tied)
        boundary.append(hit)
    params = MixtureParams(rho=rho, theta=theta, weights=sizes / total)
    return params, ties, boundary


def m_step_full(z_hat: np.ndarray, rows, freqs=None) -> MixtureParams:
    """M-step from memberships of complete (distinct) rows with multiplicities"""
    rows = as_complete_matrix(rows)
    freqs = np.ones(rows.shape[0]) if freqs is None else np.asarray(freqs, dtype=float)
    return m_step_weighted(rows, freqs[:, np.newaxis] * np.asarray(z_hat, dtype=float))[0]


def random_params(n: int, n_clust: int, rng: np.random.Generator) -> MixtureParams:
    """Uniform consensus rankings, theta on (1/n^2, 3/n^1.5), flat Dirichlet weights"""
    rho = np.argsort(rng.random((n_clust, n)), axis=1) + 1
    return MixtureParams(
        rho=rho, theta=random_theta(n, n_clust, rng), weights=rng.dirichlet(np.ones(n_clust)),
    )


def _relative_change(new: float, old: float) -> float:
    return abs(new - old) / (abs(old) + 1.0)


def _run_em(e_fn, params: MixtureParams, tol: float, max_iter: int, label: str):
    """Alternate M and E steps from the E-step of ``params``"""
    estep = e_fn(params)
    trace = [estep.log_lik]
    ties, boundary = [False] * params.n_clust, [None] * params.n_clust
    converged, n_iter = False, 0

    for iteration in range(1, max_iter + 1):
        params, ties, boundary = m_step_weighted(estep.rows, estep.weights)
        estep = e_fn(params)
        trace.append(estep.log_lik)
        n_iter = iteration
        logger.debug(f"{label} iteration {iteration}: log_lik={estep.log_lik:.10f}")

        if trace[-1] < trace[-2] - MONOTONE_SLACK * (abs(trace[-2]) + 1):
            logger.warning(f"{label}: log-likelihood decreased at iteration {iteration}")
        if _relative_change(trace[-1], trace[-2]) < tol:
            converged = True
            break

    return params, estep, trace, converged, n_iter, ties, boundary


def _start_params(task: Dict[str, Any], rng: np.random.Generator) -> MixtureParams:
    if task["init"] is not None:
        return MixtureParams.from_dict(task["init"])
    return random_params(task["n"], task["n_clust"], rng)


def _run_em_start(task: Dict[str, Any]) -> Dict[str, Any]:
    """One EM start; module level so worker processes can run it"""
    rng = np.random.default_rng(task["seed"])
    label = f"start {task['index']}"
    params = _start_params(task, rng)

    if task["kind"] == "augmented":
        sample = task["sample"]
        e_fn = lambda p: _e_step_augmented(p, sample)
    else:
        rows, freqs = task["rows"], task["freqs"]
        e_fn = lambda p: _e_step_complete(p, rows, freqs)

    try:
        params, estep, trace, converged, n_iter, ties, boundary = _run_em(
            e_fn, params, task["tol"], task["max_iter"], label
        )
    except DegenerateComponentError as e:
        logger.info(f"{label} discarded: {e}")
        return {"index": task["index"], "seed": task["seed"], "discarded": True, "reason": str(e)}

    return {
        "index": task["index"], "seed": task["seed"], "discarded": False, "reason": "",
        "params": params, "z_rows": estep.z_rows, "trace": trace,
        "converged": converged, "n_iter": n_iter, "ties": ties, "boundary": boundary,
    }


def _mc_step(partial: np.ndarray, completed: np.ndarray, incomplete: np.ndarray,
             z: np.ndarray, params: MixtureParams, kappa: float,
             rng: np.random.Generator) -> np.ndarray:
    """Re-complete incomplete units from simulated memberships and rankings"""
    u = rng.random(incomplete.size)
    labels = np.minimum((u[:, np.newaxis] > np.cumsum(z[incomplete], axis=1)).sum(axis=1), params.n_clust - 1)
    completed = completed.copy()
    for g in range(params.n_clust):
        units = incomplete[labels == g]
        if units.size == 0:
            continue
        component = MMSParams(rho=params.rho[g], theta=kappa * params.theta[g])
        references = sample_mms(units.size, component, rng=rng)
        completed[units] = complete(partial[units], references)
    return completed


def _run_mcem_start(task: Dict[str, Any]) -> Dict[str, Any]:
    """One MCEM start on individual units"""
    rng = np.random.default_rng(task["seed"])
    label = f"MCEM start {task['index']}"
    partial = task["partial"]
    N, n = partial.shape
    ones = np.ones(N)
    incomplete = np.flatnonzero(np.isnan(partial).any(axis=1))
    kappa = task["kappa"]

    params = _start_params(task, rng)
    completed = complete(partial, np.argsort(rng.random((N, n)), axis=1) + 1)

    trace: List[float] = []
    stable, converged, n_iter = 0, False, 0
    try:
        for iteration in range(1, task["max_iter"] + 1):
            estep = _e_step_complete(params, completed, ones)
            trace.append(estep.log_lik)
            updated, ties, boundary = m_step_weighted(completed, estep.weights)

            same_rho = np.array_equal(updated.rho, params.rho)
            theta_change = np.max(np.abs(updated.theta - params.theta) / np.maximum(params.theta, 1e-12))
            stable = stable + 1 if same_rho and theta_change < MCEM_THETA_RTOL else 0
            params = updated
            n_iter = iteration
            logger.debug(f"{label} iteration {iteration}: log_lik={estep.log_lik:.8f}, stable={stable}")

            if stable >= MCEM_STABLE_ITERS:
                converged = True
                break
            completed = _mc_step(partial, completed, incomplete, estep.z_rows, params, kappa, rng)

        # estimates, memberships and log-likelihood all refer to the last completions
        estep = _e_step_complete(params, completed, ones)
        params, ties, boundary = m_step_weighted(completed, estep.weights)
        estep = _e_step_complete(params, completed, ones)
        trace.append(estep.log_lik)
    except DegenerateComponentError as e:
        logger.info(f"{label} discarded: {e}")
        return {"index": task["index"], "seed": task["seed"], "discarded": True, "reason": str(e)}

    return {
        "index": task["index"], "seed": task["seed"], "discarded": False, "reason": "",
        "params": params, "z_rows": estep.z_rows, "trace": trace,
        "converged": converged, "n_iter": n_iter, "ties": ties, "boundary": boundary,
    }


def resolve_seed(seed: Optional[int]) -> int:
    if seed is not None:
        return int(seed)
    base = int(np.random.SeedSequence().entropy % (2 ** 32))
    logger.info(f"No seed given, using {base}")
    return base


def _init_list(init, n_start: int, n_clust: int, n: int) -> List[Optional[Dict[str, Any]]]:
    if init is None:
        return [None] * n_start
    if not isinstance(init, (list, tuple)):
        init = [init]
    inits: List[Optional[Dict[str, Any]]] = []
    for value in list(init)[:n_start]:
        params = as_mixture_params(value)
        if params.n_clust != n_clust or params.n_items != n:
            raise ValueError(
                f"init has G={params.n_clust}, n={params.n_items}; expected G={n_clust}, n={n}"
            )
        inits.append(params.to_dict())
    return inits + [None] * (n_start - len(inits))


def _check_settings(n_clust: int, n_start: int, tol: float, max_iter: int) -> None:
    if n_clust < 1:
        raise ValueError(f"n_clust must be at least 1, got {n_clust}")
    if n_start < 1:
        raise ValueError(f"n_start must be at least 1, got {n_start}")
    if tol <= 0 or max_iter < 1:
        raise ValueError("tol must be positive and max_iter at least 1")


def _select_start(outcomes: List[Dict[str, Any]]) -> Dict[str, Any]:
    """Highest final log-likelihood among kept starts; lowest index on ties"""
    best = None
    for outcome in outcomes:
        if outcome["discarded"]:
            continue
        if best is None or outcome["trace"][-1] > best["trace"][-1]:
            best = outcome
    if best is None:
        raise DegenerateComponentError([], "every start ended with an empty component")
    return best


def _assemble(outcomes: List[Dict[str, Any]], method: str, n: int, freqs: np.ndarray,
              inverse: np.ndarray, kappa: Optional[float] = None) -> FitResult:
    best = _select_start(outcomes)
    params = best["params"]
    N = int(freqs.sum())
    starts = [
        StartInfo(
            index=o["index"], seed=o["seed"],
            log_lik=o["trace"][-1] if not o["discarded"] else float("-inf"),
            n_iter=o.get("n_iter", 0), converged=o.get("converged", False),
            discarded=o["discarded"], reason=o["reason"],
        )
        for o in outcomes
    ]
    n_discarded = sum(s.discarded for s in starts)
    if n_discarded:
        logger.warning(f"{n_discarded} of {len(starts)} starts discarded (empty component)")

    z_hat = best["z_rows"]
    log_lik = [float(v) for v in best["trace"]]
    logger.info(
        f"{method} fit: G={params.n_clust}, n={n}, N={N}, best start {best['index']}, "
        f"log_lik={log_lik[-1]:.6f}, iterations={best['n_iter']}, converged={best['converged']}"
    )
    return FitResult(
        params=params,
        z_hat=z_hat,
        map_classification=np.argmax(z_hat, axis=1)[inverse] + 1,
        log_lik=log_lik,
        bic=bic(log_lik[-1], params.n_clust, n, N),
        conv=bool(best["converged"]),
        n_iter=int(best["n_iter"]),
        method=method,
        n_items=n,
        freqs=np.asarray(freqs),
        inverse=np.asarray(inverse),
        seed_info=[o["seed"] for o in outcomes],
        best_start=int(best["index"]),
        starts=starts,
        ties=list(best["ties"]),
        theta_boundary=list(best["boundary"]),
        kappa=kappa,
    )


def fit_mixture(data, n_clust: int = 1, n_start: int = DEFAULT_N_START, init=None,
                tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                parallel: bool = False, seed: Optional[int] = None) -> FitResult:
    """EM for an MMS mixture on complete rankings.

    Each start owns a generator seeded with ``seed ^ start``; the start with
    the highest final observed-data log-likelihood is returned.
    """
    _check_settings(n_clust, n_start, tol, max_iter)
    dataset = RankingDataset.from_any(data)
    if not dataset.complete:
        raise RankingFormatError("fit_mixture needs complete rankings; use fit_mixture_partial or MCEM")
    if n_clust == 1:
        return fit_mms(dataset)

    distinct, freqs, inverse = dataset.aggregated
    rows = distinct.astype(np.int64)
    n = dataset.n_items
    base = resolve_seed(seed)
    inits = _init_list(init, n_start, n_clust, n)

    tasks = [
        {
            "kind": "full", "index": s, "seed": base ^ s, "init": inits[s],
            "n": n, "n_clust": n_clust, "tol": tol, "max_iter": max_iter,
            "rows": rows, "freqs": freqs.astype(float),
        }
        for s in range(n_start)
    ]
    outcomes = get_runner(parallel).map(_run_em_start, tasks, label="EM starts")
    return _assemble(outcomes, "em", n, freqs, inverse)


def fit_mixture_partial(data, n_clust: int = 1, n_start: int = DEFAULT_N_START, init=None,
                        tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                        parallel: bool = False, seed: Optional[int] = None) -> FitResult:
    """EM on the augmented sample of all completions of each partial row"""
    _check_settings(n_clust, n_start, tol, max_iter)
    dataset = RankingDataset.from_any(data)
    if dataset.complete:
        return fit_mixture(dataset, n_clust, n_start, init, tol, max_iter, parallel, seed)

    distinct, freqs, inverse = dataset.aggregated
    sample = AugmentedSample.build(distinct, freqs.astype(float))
    n = dataset.n_items
    base = resolve_seed(seed)
    inits = _init_list(init, n_start, n_clust, n)

    tasks = [
        {
            "kind": "augmented", "index": s, "seed": base ^ s, "init": inits[s],
            "n": n, "n_clust": n_clust, "tol": tol, "max_iter": max_iter, "sample": sample,
        }
        for s in range(n_start)
    ]
    outcomes = get_runner(parallel).map(_run_em_start, tasks, label="augmented EM starts")
    return _assemble(outcomes, "em-augmented", n, freqs, inverse)


def fit_mixture_mcem(data, n_clust: int = 1, kappa: float = DEFAULT_KAPPA,
                     n_start: int = DEFAULT_N_START, init=None,
                     max_iter: int = DEFAULT_MAX_ITER, parallel: bool = False,
                     seed: Optional[int] = None, tol: float = DEFAULT_TOL) -> FitResult:
    """Monte Carlo EM for partial rankings of any missingness pattern.

    Works on individual units. Parameters are stable when every consensus is
    unchanged and the relative theta changes stay below MCEM_THETA_RTOL for
    MCEM_STABLE_ITERS consecutive iterations.
    """
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    _check_settings(n_clust, n_start, tol, max_iter)
    dataset = RankingDataset.from_any(data)
    if dataset.complete:
        return fit_mixture(dataset, n_clust, n_start, init, tol, max_iter, parallel, seed)

    n = dataset.n_items
    base = resolve_seed(seed)
    inits = _init_list(init, n_start, n_clust, n)
    tasks = [
        {
            "index": s, "seed": base ^ s, "init": inits[s], "n": n, "n_clust": n_clust,
            "max_iter": max_iter, "kappa": float(kappa), "partial": dataset.rows,
        }
        for s in range(n_start)
    ]
    outcomes = get_runner(parallel).map(_run_mcem_start, tasks, label="MCEM starts")
    return _assemble(
        outcomes, "mcem", n, np.ones(dataset.n_rows), np.arange(dataset.n_rows), kappa=float(kappa),
    )


def fit(data, n_clust: int = 1, mc_em: bool = False, subset=None, **kwargs) -> FitResult:
    """Pick the estimator from the data: full EM, augmentation EM or MCEM"""
    dataset = RankingDataset.from_any(data)
    if subset is not None:
        dataset = dataset.subset(subset)
    kappa = kwargs.pop("kappa", DEFAULT_KAPPA)
    if dataset.complete:
        return fit_mixture(dataset, n_clust, **kwargs)
    if mc_em:
        return fit_mixture_mcem(dataset, n_clust, kappa=kappa, **kwargs)
    return fit_mixture_partial(dataset, n_clust, **kwargs)


def select_n_clust(data, candidates: Sequence[int], **kwargs) -> Tuple[int, Dict[int, FitResult]]:
    """Fit every candidate G and return the one with lowest BIC (smaller G on ties)"""
    if not candidates:
        raise ValueError("no candidate numbers of clusters")
    fits: Dict[int, FitResult] = {}
    for G in sorted(set(int(g) for g in candidates)):
        fits[G] = fit(data, n_clust=G, **kwargs)
        logger.info(f"G={G}: BIC={fits[G].bic:.4f}")
    best = min(fits, key=lambda G: (fits[G].bic, G))
    logger.info(f"BIC selects G={best}")
    return best, fits
