"""
Estimation, uncertainty and benchmark commands
"""
import logging
from pathlib import Path
from typing import Dict, Any

import pandas as pd

from config import (
    DEFAULT_CONF_LEVEL,
    DEFAULT_KAPPA,
    DEFAULT_MAX_ITER,
    DEFAULT_N_BOOT,
    DEFAULT_N_START,
    DEFAULT_TOL,
)
from spearmix.handlers.commands import add_input, load_dataset
from spearmix.models.errors import IncompatibleOptionsError
from spearmix.services.bench import BENCH_SIZE, PROTOCOLS, BenchRunner
from spearmix.services.mixture import fit, select_n_clust
from spearmix.services.ranking_ops import convert
from spearmix.services.uncertainty import BOOT_TYPES, bootstrap, confint
from spearmix.utils.decorators import error_handler, log_action, requires_seed
from spearmix.utils.helpers import dump_json, emit, make_envelope, parse_int_list, parse_subset

logger = logging.getLogger(__name__)


def _fit_options(args) -> Dict[str, Any]:
    options = {
        "n_start": args.n_start, "tol": args.tol, "max_iter": args.max_iter,
        "parallel": args.parallel, "seed": args.seed,
    }
    if args.mc_em:
        options.update(mc_em=True, kappa=args.kappa)
    return options


def _is_stochastic(dataset, candidates) -> bool:
    return not dataset.complete or any(G > 1 for G in candidates)


def _fit_payload(result, dataset) -> Dict[str, Any]:
    payload = result.to_dict()
    payload["item_labels"] = dataset.item_labels
    # items from rank 1 down, one list per component
    payload["modal_orderings"] = [
        [dataset.item_labels[int(i) - 1] for i in ordering] for ordering in convert(result.params.rho)
    ]
    return payload


def add_fit_options(parser) -> None:
    parser.add_argument("--n-start", type=int, default=DEFAULT_N_START)
    parser.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    parser.add_argument("--tol", type=float, default=DEFAULT_TOL)
    parser.add_argument("--mc-em", action="store_true", help="Monte Carlo EM for partial rankings")
    parser.add_argument("--kappa", type=float, default=DEFAULT_KAPPA, help="MCEM tuning constant")
    parser.add_argument("--subset", help="1-based rows to fit, e.g. '1-100'")
    parser.add_argument("--conf-level", type=float, default=DEFAULT_CONF_LEVEL)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--parallel", action="store_true", help="run starts in worker processes")


@error_handler
@log_action("fit command")
def fit_command(args) -> int:
    """Fit an MMS mixture; a range of G selects the number of clusters by BIC"""
    dataset = load_dataset(args.input, args.header)
    subset = parse_subset(args.subset, dataset.n_rows)
    if subset is not None:
        dataset = dataset.subset(subset)

    candidates = parse_int_list(args.n_clust)
    if _is_stochastic(dataset, candidates) and args.seed is None:
        raise ValueError("this fit is stochastic (mixture or partial data): pass --seed")

    options = _fit_options(args)
    if len(candidates) == 1:
        selected, fits = candidates[0], {candidates[0]: fit(dataset, n_clust=candidates[0], **options)}
    else:
        selected, fits = select_n_clust(dataset, candidates, **options)

    chosen = fits[selected]
    for g, flag in enumerate(chosen.theta_boundary):
        if flag:
            logger.warning(f"Component {g + 1}: theta estimate at the {flag} boundary")

    result = _fit_payload(chosen, dataset)
    if chosen.method in ("mms", "em"):
        result["confint"] = confint(chosen, args.conf_level).to_dict()
    if len(candidates) > 1:
        result["selection"] = {
            "selected": selected,
            "bic_table": [
                {"n_clust": G, "bic": float(f.bic), "log_lik": f.final_log_lik, "conv": bool(f.conv)}
                for G, f in sorted(fits.items())
            ],
        }
    emit(dump_json(make_envelope("fit", args, result)), args.output)
    return 0


def configure_fit(parser):
    add_input(parser)
    parser.add_argument("--n-clust", default="1", help="number of clusters, or a range such as '1-4'")
    add_fit_options(parser)


@error_handler
@requires_seed
@log_action("bootstrap command")
def bootstrap_command(args) -> int:
    """Fit, then bootstrap intervals for theta, weights and consensus rankings"""
    dataset = load_dataset(args.input, args.header)
    subset = parse_subset(args.subset, dataset.n_rows)
    if subset is not None:
        dataset = dataset.subset(subset)
    if args.boot_type == "parametric" and args.n_clust != 1:
        raise IncompatibleOptionsError("parametric bootstrap needs --n-clust 1")

    fitted = fit(dataset, n_clust=args.n_clust, **_fit_options(args))
    boot = bootstrap(
        fitted, dataset, n_boot=args.n_boot, type=args.boot_type, n_start=args.boot_n_start,
        conf_level=args.conf_level, all=args.all, parallel=args.parallel, seed=args.seed,
        kappa=args.kappa if args.mc_em else None,
    )

    if args.marginals_dir:
        out = Path(args.marginals_dir)
        out.mkdir(parents=True, exist_ok=True)
        ranks = [f"Rank{j + 1}" for j in range(dataset.n_items)]
        for g, marginal in enumerate(boot.marginals):
            pd.DataFrame(marginal, index=ranks, columns=dataset.item_labels).to_csv(
                out / f"marginals_component{g + 1}.csv", index_label="rank", float_format="%.6g")
        logger.info(f"Bootstrap marginals written to {out}")

    result = {"fit": _fit_payload(fitted, dataset), "bootstrap": boot.to_dict()}
    emit(dump_json(make_envelope("bootstrap", args, result)), args.output)
    return 0


def configure_bootstrap(parser):
    add_input(parser)
    parser.add_argument("--n-clust", type=int, default=1)
    add_fit_options(parser)
    parser.add_argument("--n-boot", type=int, default=DEFAULT_N_BOOT)
    parser.add_argument("--boot-type", choices=BOOT_TYPES, help="default: nonparametric for G=1, soft otherwise")
    parser.add_argument("--boot-n-start", type=int, default=1, help="starts per bootstrap refit")
    parser.add_argument("--all", action="store_true", help="keep every replicate in the output")
    parser.add_argument("--marginals-dir", help="directory for item-by-rank marginal CSVs")


@error_handler
@requires_seed
@log_action("bench command")
def bench_command(args) -> int:
    """Timing table on seeded synthetic data"""
    runner = BenchRunner(seed=args.seed, sample_size=args.sample_size, repeats=args.repeats)
    records = runner.run(args.protocol, parse_int_list(args.n))
    emit(pd.DataFrame.from_records(records).to_csv(index=False, float_format="%.6g"), args.output)
    return 0


def configure_bench(parser):
    parser.add_argument("--protocol", choices=PROTOCOLS, default="single-full")
    parser.add_argument("--n", help="numbers of items, e.g. '20,50,100'")
    parser.add_argument("--sample-size", type=int, default=BENCH_SIZE)
    parser.add_argument("--repeats", type=int, default=1, help="best of this many runs per setting")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--output", "-o", help="CSV output (default: stdout)")


analysis_handlers = [
    ("fit", fit_command, configure_fit, "fit an MMS mixture (BIC selection over a range of G)"),
    ("bootstrap", bootstrap_command, configure_bootstrap, "bootstrap confidence intervals"),
    ("bench", bench_command, configure_bench, "timing protocols on synthetic data"),
]
