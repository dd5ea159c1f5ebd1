"""
Data and distribution commands
"""
import argparse
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from config import EXACT_MAX_N, TABLES_FILE
from spearmix.models.ranking import RankingDataset
from spearmix.services import ranking_ops
from spearmix.services.sampler import rmsmix
from spearmix.services.spearman import (
    distance_distribution,
    expected_dist,
    partition_function,
    spear_dist_matrix,
    spear_dist_to,
    var_dist,
)
from spearmix.services.tables import TABLE_METHODS, write_tables
from spearmix.utils.decorators import error_handler, log_action, requires_seed
from spearmix.utils.helpers import (
    dump_json,
    emit,
    frame_to_matrix,
    make_envelope,
    matrix_to_frame,
    parse_int_list,
    parse_subset,
    read_rankings_csv,
    write_rankings_csv,
)

logger = logging.getLogger(__name__)


def load_dataset(path: str, header: bool = True) -> RankingDataset:
    """Read a ranking CSV into a validated dataset"""
    frame = read_rankings_csv(path, header=header)
    return RankingDataset(rows=frame_to_matrix(frame), item_labels=[str(c) for c in frame.columns])


def _float_list(text):
    return None if text is None else [float(v) for v in text.split(",")]


def add_input(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", "-i", required=True, help="ranking CSV (header = item labels, NA = missing)")
    parser.add_argument("--no-header", dest="header", action="store_false", help="CSV has no header row")
    parser.add_argument("--output", "-o", help="output file (default: stdout)")


@error_handler
@log_action("convert command")
def convert_command(args) -> int:
    """Switch between ranking and ordering format"""
    dataset = load_dataset(args.input, args.header)
    labels = dataset.item_labels if args.header else None
    emit(write_rankings_csv(ranking_ops.convert(dataset.rows), labels=labels), args.output)
    return 0


def configure_convert(parser):
    add_input(parser)


@error_handler
@log_action("describe command")
def describe_command(args) -> int:
    """Descriptive summaries; matrices optionally written as CSV"""
    dataset = load_dataset(args.input, args.header)
    description = ranking_ops.describe(dataset, subset=parse_subset(args.subset, dataset.n_rows))

    if args.matrices_dir:
        out = Path(args.matrices_dir)
        out.mkdir(parents=True, exist_ok=True)
        labels = description.item_labels
        ranks = [f"Rank{j + 1}" for j in range(description.n_items)]
        pd.DataFrame(description.first_order_marginals, index=ranks, columns=labels).to_csv(
            out / "first_order_marginals.csv", index_label="rank")
        pd.DataFrame(description.pairwise_comparison, index=labels, columns=labels).to_csv(
            out / "pairwise_comparison.csv", index_label="item")
        logger.info(f"Matrices written to {out}")

    emit(dump_json(make_envelope("describe", args, description.to_dict())), args.output)
    return 0


def configure_describe(parser):
    add_input(parser)
    parser.add_argument("--subset", help="1-based rows, e.g. '1-50,60'")
    parser.add_argument("--matrices-dir", help="directory for first-order marginal and pairwise CSVs")


@error_handler
@log_action("censor command")
def censor_command(args) -> int:
    """Top-k or MAR censoring of complete rankings"""
    dataset = load_dataset(args.input, args.header)
    nranked = parse_int_list(args.nranked)
    if nranked is not None and len(nranked) == 1:
        nranked = nranked[0]
    probs = _float_list(args.probs)
    if (probs is not None or args.type == "mar") and args.seed is None:
        raise ValueError("random censoring needs --seed")

    partial, _ = ranking_ops.censor(
        dataset.rows, type=args.type, nranked=nranked, probs=probs,
        rng=np.random.default_rng(args.seed),
    )
    emit(write_rankings_csv(partial, labels=dataset.item_labels), args.output)
    return 0


def configure_censor(parser):
    add_input(parser)
    parser.add_argument("--type", choices=ranking_ops.CENSOR_TYPES, default="topk")
    parser.add_argument("--nranked", help="kept positions: one value or one per row")
    parser.add_argument("--probs", help="comma-separated weights of keeping 1..n-1 positions")
    parser.add_argument("--seed", type=int)


@error_handler
@log_action("augment command")
def augment_command(args) -> int:
    """All complete rankings compatible with each partial row"""
    dataset = load_dataset(args.input, args.header)
    rows = parse_subset(args.rows, dataset.n_rows)
    rows = np.arange(dataset.n_rows) if rows is None else rows

    frames = []
    for index in rows:
        completions = ranking_ops.augment(dataset.rows[index])
        frame = matrix_to_frame(completions, dataset.item_labels)
        frame.insert(0, "row", index + 1)
        frames.append(frame)
    emit(pd.concat(frames, ignore_index=True).to_csv(index=False, na_rep="NA"), args.output)
    return 0


def configure_augment(parser):
    add_input(parser)
    parser.add_argument("--rows", help="1-based rows to augment (default: all)")


@error_handler
@log_action("complete command")
def complete_command(args) -> int:
    """Fill partial rows following reference rankings"""
    dataset = load_dataset(args.input, args.header)
    reference = load_dataset(args.ref, args.header)
    completed = ranking_ops.complete(dataset.rows, reference.rows)
    emit(write_rankings_csv(completed, labels=dataset.item_labels), args.output)
    return 0


def configure_complete(parser):
    add_input(parser)
    parser.add_argument("--ref", required=True, help="CSV of reference rankings (one row, or one per input row)")


@error_handler
@log_action("dist command")
def dist_command(args) -> int:
    """Spearman distances to a ranking, or the pairwise matrix"""
    dataset = load_dataset(args.input, args.header)
    if args.rho:
        distances = spear_dist_to(dataset.rows, parse_int_list(args.rho))
        frame = pd.DataFrame({"row": np.arange(1, dataset.n_rows + 1), "distance": distances})
        emit(frame.to_csv(index=False), args.output)
    else:
        matrix = spear_dist_matrix(dataset.rows)
        labels = [str(i + 1) for i in range(dataset.n_rows)]
        emit(pd.DataFrame(matrix, index=labels, columns=labels).to_csv(index_label="row"), args.output)
    return 0


def configure_dist(parser):
    add_input(parser)
    parser.add_argument("--rho", help="reference ranking, e.g. '1,2,3,4'")


@error_handler
@log_action("distr command")
def distr_command(args) -> int:
    """Distance distribution and, for a given theta, Z, E[D] and V[D]"""
    dist = distance_distribution(args.n)
    if args.table:
        frame = pd.DataFrame({"distance": dist.distances, "log_card": dist.log_card})
        frame.to_csv(args.table, index=False, float_format="%.10g")
        logger.info(f"Distance table written to {args.table}")

    result = {"n_items": args.n, "exact": dist.exact, "method": dist.method, "support_size": dist.size}
    if args.theta is not None:
        for name, func in (("Z", partition_function), ("E", expected_dist), ("V", var_dist)):
            result[name] = func(args.theta, args.n)
            result[f"log_{name}"] = func(args.theta, args.n, log=True)
    emit(dump_json(make_envelope("distr", args, result)), args.output)
    return 0


def configure_distr(parser):
    parser.add_argument("--n", type=int, required=True, help="number of items")
    parser.add_argument("--theta", type=float, help="concentration for Z, E and V")
    parser.add_argument("--table", help="CSV file for (distance, log_card)")
    parser.add_argument("--output", "-o", help="JSON output (default: stdout)")


@error_handler
@requires_seed
@log_action("sample command")
def sample_command(args) -> int:
    """Simulate rankings from an MMS mixture"""
    rho = None
    if args.rho:
        rho = np.array([parse_int_list(part) for part in args.rho.split(";")])
    result = rmsmix(
        args.sample_size, args.n_items, args.n_clust, rho=rho,
        theta=_float_list(args.theta), weights=_float_list(args.weights),
        uniform=args.uniform, mh=not args.exact, rng=np.random.default_rng(args.seed),
    )
    emit(write_rankings_csv(result.samples), args.output)
    if args.json:
        emit(dump_json(make_envelope("sample", args, result.to_dict())), args.json)
    return 0


def configure_sample(parser):
    parser.add_argument("--n-items", type=int, required=True)
    parser.add_argument("--sample-size", type=int, required=True)
    parser.add_argument("--n-clust", type=int, default=1)
    parser.add_argument("--rho", help="consensus rankings, components separated by ';'")
    parser.add_argument("--theta", help="comma-separated concentrations")
    parser.add_argument("--weights", help="comma-separated weights")
    parser.add_argument("--uniform", action="store_true", help="uniform instead of separated parameters")
    parser.add_argument("--exact", action="store_true", help="exact sampling (n <= 10)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--output", "-o", help="CSV of simulated rankings (default: stdout)")
    parser.add_argument("--json", help="JSON file for the parameters used")


@error_handler
@log_action("tables command")
def tables_command(args) -> int:
    """Regenerate the exact distance table file"""
    digest = write_tables(args.output or TABLES_FILE, n_max=args.n_max, method=args.method)
    print(digest)
    return 0


def configure_tables(parser):
    parser.add_argument("--output", "-o", help=f"table file (default: {TABLES_FILE})")
    parser.add_argument("--n-max", type=int, default=EXACT_MAX_N)
    parser.add_argument("--method", choices=TABLE_METHODS, default="subset-dp")


command_handlers = [
    ("convert", convert_command, configure_convert, "switch ranking and ordering format"),
    ("describe", describe_command, configure_describe, "descriptive summaries"),
    ("censor", censor_command, configure_censor, "top-k or MAR censoring"),
    ("augment", augment_command, configure_augment, "compatible completions of partial rows"),
    ("complete", complete_command, configure_complete, "complete partial rows from references"),
    ("dist", dist_command, configure_dist, "Spearman distances"),
    ("distr", distr_command, configure_distr, "distance distribution and partition function"),
    ("sample", sample_command, configure_sample, "simulate from an MMS mixture"),
    ("tables", tables_command, configure_tables, "regenerate the exact distance tables"),
]
