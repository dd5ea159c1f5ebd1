"""
Timing protocols on seeded synthetic data
"""
import logging
import time
from typing import Callable, Dict, List, Optional, Sequence, Any

import numpy as np
from sklearn.metrics import adjusted_rand_score

from spearmix.services.mixture import fit_mixture, fit_mixture_partial
from spearmix.services.mms import fit_mms
from spearmix.services.ranking_ops import censor
from spearmix.services.sampler import rmsmix

logger = logging.getLogger(__name__)

BENCH_SIZE = 100
# legacy protocol names
PROTOCOL_ALIASES = {"table2": "single-full"}
PROTOCOLS = ("single-full", "single-partial", "mixture-full") + tuple(PROTOCOL_ALIASES)


def _timed(func: Callable[[], Any]):
    start = time.perf_counter()
    result = func()
    return result, time.perf_counter() - start


class BenchRunner:
    """Runs the timing protocols; every protocol returns one record per setting"""

    def __init__(self, seed: int, sample_size: int = BENCH_SIZE, repeats: int = 1):
        self.seed = seed
        self.sample_size = sample_size
        self.repeats = repeats
        self.protocols: Dict[str, Callable[..., List[Dict[str, Any]]]] = {
            "single-full": self.full_single,
            "single-partial": self.partial_single,
            "mixture-full": self.full_mixture,
        }

    def _rng(self, tag: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, tag])

    def _best_time(self, func: Callable[[], Any]):
        result, best = None, float("inf")
        for _ in range(self.repeats):
            result, elapsed = _timed(func)
            best = min(best, elapsed)
        return result, best

    def full_single(self, n_values: Optional[Sequence[int]] = None) -> List[Dict[str, Any]]:
        """G=1 fits of full rankings for several numbers of items"""
        records = []
        for n in n_values or (5, 10, 20, 50, 100):
            data = rmsmix(self.sample_size, n, 1, rng=self._rng(n)).samples
            result, seconds = self._best_time(lambda: fit_mms(data))
            records.append({
                "protocol": "single-full", "n_items": n, "sample_size": self.sample_size,
                "n_clust": 1, "seconds": seconds, "theta": float(result.params.theta[0]),
            })
            logger.info(f"single-full n={n}: {seconds:.4f}s")
        return records

    def partial_single(self, n_values: Optional[Sequence[int]] = None) -> List[Dict[str, Any]]:
        """G=1 augmentation EM on top-k data with n=7 and k = 5..1"""
        n = (n_values or (7,))[0]
        full = rmsmix(self.sample_size, n, 1, rng=self._rng(n)).samples
        records = []
        for k in range(n - 2, 0, -1):
            partial, _ = censor(full, "topk", nranked=k)
            result, seconds = self._best_time(
                lambda: fit_mixture_partial(partial, 1, n_start=1, seed=self.seed)
            )
            records.append({
                "protocol": "single-partial", "n_items": n, "sample_size": self.sample_size,
                "n_clust": 1, "n_ranked": k, "seconds": seconds, "n_iter": result.n_iter,
            })
            logger.info(f"single-partial k={k}: {seconds:.4f}s")
        return records

    def full_mixture(self, n_values: Optional[Sequence[int]] = None) -> List[Dict[str, Any]]:
        """G=2 EM on full rankings for n = 5..9"""
        records = []
        for n in n_values or range(5, 10):
            truth = rmsmix(self.sample_size, n, 2, rng=self._rng(n))
            result, seconds = self._best_time(
                lambda: fit_mixture(truth.samples, 2, n_start=1, seed=self.seed)
            )
            records.append({
                "protocol": "mixture-full", "n_items": n, "sample_size": self.sample_size,
                "n_clust": 2, "seconds": seconds, "n_iter": result.n_iter,
                "adjusted_rand": float(adjusted_rand_score(truth.classification, result.map_classification)),
            })
            logger.info(f"mixture-full n={n}: {seconds:.4f}s")
        return records

    def run(self, protocol: str, n_values: Optional[Sequence[int]] = None) -> List[Dict[str, Any]]:
        """Run one protocol by name (aliases resolve to their protocol)"""
        protocol = PROTOCOL_ALIASES.get(protocol, protocol)
        if protocol not in self.protocols:
            raise ValueError(f"unknown protocol {protocol!r}; choose from {sorted(self.protocols)}")
        return self.protocols[protocol](n_values)
