"""
Helper utilities
"""
import json
import sys
from functools import lru_cache
from pathlib import Path
from typing import Optional, List, Dict, Any, Union
import logging

import numpy as np
import pandas as pd

from spearmix.models.errors import RankingFormatError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@lru_cache(maxsize=256)
def sum_of_squares(n: int) -> int:
    """c_n = sum_{i=1}^n i^2"""
    return n * (n + 1) * (2 * n + 1) // 6


@lru_cache(maxsize=256)
def max_spearman_distance(n: int) -> int:
    """Largest Spearman distance between rankings of n items, 2*C(n+1, 3)"""
    return (n + 1) * n * (n - 1) // 3


@lru_cache(maxsize=256)
def uniform_mean(n: int) -> float:
    """Mean distance under the uniform model, (n^3 - n)/6"""
    return (n ** 3 - n) / 6


@lru_cache(maxsize=256)
def uniform_variance(n: int) -> float:
    """Variance of the distance under the uniform model"""
    return n ** 2 * (n + 1) ** 2 * (n - 1) / 36


def read_rankings_csv(path: PathLike, header: bool = True) -> pd.DataFrame:
    """Read a ranking matrix from CSV; NA or empty cells are missing ranks"""
    frame = pd.read_csv(
        path,
        header=0 if header else None,
        na_values=["NA"],
        keep_default_na=True,
        skipinitialspace=True,
    )
    if frame.shape[1] == 0:
        raise RankingFormatError(f"no columns in {path}")
    if not header:
        frame.columns = [f"Item{i + 1}" for i in range(frame.shape[1])]
    numeric = frame.apply(pd.to_numeric, errors="coerce")
    bad = (numeric.isna() & frame.notna()).to_numpy()
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise RankingFormatError(
            f"non-numeric entry {frame.iat[row, col]!r} in {path}",
            row=int(row) + 1, column=str(frame.columns[col]),
        )
    frame = numeric.astype("Float64")
    logger.debug(f"Read {frame.shape[0]} rows x {frame.shape[1]} items from {path}")
    return frame


def frame_to_matrix(frame: pd.DataFrame) -> np.ndarray:
    """Float matrix with NaN for missing entries"""
    return frame.astype("Float64").to_numpy(dtype=float, na_value=np.nan)


def matrix_to_frame(rows: np.ndarray, labels: Optional[List[str]] = None) -> pd.DataFrame:
    """Integer frame (nullable) for a matrix with NaN as missing"""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    labels = labels or [f"Item{i + 1}" for i in range(rows.shape[1])]
    return pd.DataFrame(rows, columns=labels).round().astype("Int64")


def write_rankings_csv(rows: np.ndarray, path: Optional[PathLike] = None,
                       labels: Optional[List[str]] = None) -> str:
    """Write a ranking matrix as CSV with NA for missing; returns the text"""
    text = matrix_to_frame(rows, labels).to_csv(index=False, na_rep="NA")
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
        logger.debug(f"Wrote {len(rows)} rows to {path}")
    return text


def to_jsonable(value: Any) -> Any:
    """Recursively convert numpy/pandas values into JSON-native ones"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if np.isnan(value):
            return None
        if np.isinf(value):
            return "Infinity" if value > 0 else "-Infinity"
        return value
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, Path):
        return str(value)
    if value is pd.NA:
        return None
    return value


def dump_json(payload: Dict[str, Any], path: Optional[PathLike] = None) -> str:
    """Serialize with sorted keys and two-space indentation"""
    text = json.dumps(to_jsonable(payload), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def parse_int_list(text: Optional[str]) -> Optional[List[int]]:
    """Parse '1,3,5' or '2-4' (or a mix) into integers"""
    if text is None or str(text).strip() == "":
        return None
    values: List[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError(f"empty range: {part}")
            values.extend(range(lo, hi + 1))
        else:
            values.append(int(part))
    return values


def parse_subset(text: Optional[str], n_rows: int) -> Optional[np.ndarray]:
    """1-based row list from the command line -> 0-based index array"""
    values = parse_int_list(text)
    if values is None:
        return None
    index = np.asarray(values, dtype=np.int64) - 1
    if index.min() < 0 or index.max() >= n_rows:
        raise RankingFormatError(f"subset rows must lie in 1..{n_rows}")
    return index


def emit(text: str, path: Optional[PathLike] = None) -> None:
    """Write text to a file, or to stdout when no path is given"""
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")
        logger.info(f"Wrote {path}")


ECHO_EXCLUDED = {"func", "parallel", "output", "marginals_dir", "matrices_dir", "table", "json",
                 "log_file", "quiet", "log_level"}


@lru_cache(maxsize=1)
def load_schema() -> Dict[str, Any]:
    """Frozen field names of the JSON artifacts"""
    from config import SCHEMA_FILE

    return json.loads(Path(SCHEMA_FILE).read_text(encoding="utf-8"))


def check_envelope(envelope: Dict[str, Any]) -> None:
    """Raise ValueError when an artifact drifts from the frozen schema"""
    schema = load_schema()
    allowed = set(schema["envelope"])
    if set(envelope) != allowed:
        raise ValueError(f"envelope keys {sorted(envelope)} differ from schema {sorted(allowed)}")

    command = envelope["command"]
    required = set(schema["results"].get(command, []))
    optional = set(schema.get("optional", {}).get(command, []))
    keys = set(envelope["result"])
    if not required <= keys or not keys <= required | optional:
        raise ValueError(f"'{command}' result keys {sorted(keys)} differ from schema")


def make_envelope(command: str, args, result: Dict[str, Any]) -> Dict[str, Any]:
    """Wrap a command result with version, config echo, seed and conventions"""
    from config import VERSION, CONVENTION_NOTES

    config_echo = {
        key: value for key, value in sorted(vars(args).items()) if key not in ECHO_EXCLUDED
    }
    envelope = {
        "tool": "spearmix",
        "version": VERSION,
        "command": command,
        "seed": getattr(args, "seed", None),
        "config": config_echo,
        "conventions": dict(CONVENTION_NOTES),
        "result": result,
    }
    check_envelope(envelope)
    return envelope
