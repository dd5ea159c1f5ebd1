"""
Shared fixtures
"""
import numpy as np
import pytest

from spearmix.utils.state import clear_cache

NA = np.nan


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def ranks_af3():
    """First three Antifragility rankings (n = 7)"""
    return np.array([
        [4, 2, 1, 3, 5, 6, 7],
        [1, 4, 3, 2, 7, 6, 5],
        [3, 4, 1, 2, 7, 6, 5],
    ])


@pytest.fixture
def ranks_toy():
    """A top-3 row and a MAR row over five items"""
    return np.array([
        [2, NA, 1, NA, 3],
        [NA, 4, NA, 1, NA],
    ])


@pytest.fixture
def write_csv(tmp_path):
    """Write a ranking matrix as CSV (NA for missing) and return its path"""
    def _write(rows, labels=None, name="rankings.csv"):
        rows = np.asarray(rows, dtype=float)
        labels = labels or [f"Item{i + 1}" for i in range(rows.shape[1])]
        lines = [",".join(labels)]
        for row in rows:
            lines.append(",".join("NA" if np.isnan(v) else str(int(v)) for v in row))
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n")
        return str(path)

    return _write


@pytest.fixture(autouse=True)
def fresh_cache():
    yield
    clear_cache()
