from fractions import Fraction
from math import factorial

import numpy as np
import pytest

from config import TABLES_FILE
from spearmix.services.tables import (
    enumerate_counts,
    generate_exact_table,
    load_tables,
    write_tables,
)

N5_CARDINALITIES = [1, 4, 3, 6, 7, 6, 4, 10, 6, 10, 6, 10, 6, 10, 4, 6, 7, 6, 3, 4, 1]


@pytest.fixture(scope="module")
def tables():
    return load_tables(TABLES_FILE)


def test_embedded_tables_cover_2_to_20(tables):
    assert sorted(tables) == list(range(2, 21))


def test_n5_cardinalities(tables):
    table = tables[5]
    assert table.max_distance == 40
    assert [int(c) for c in table.counts] == N5_CARDINALITIES


@pytest.mark.parametrize("n", range(2, 9))
def test_tables_match_enumeration(tables, n):
    counts = {int(d): int(c) for d, c in zip(tables[n].distances, tables[n].counts) if c}
    assert counts == enumerate_counts(n)


@pytest.mark.parametrize("n", range(2, 21))
def test_uniform_moments_exact(tables, n):
    table = tables[n]
    counts = [int(c) for c in table.counts]
    distances = [int(d) for d in table.distances]
    total = factorial(n)

    assert sum(counts) == total
    assert counts == counts[::-1]
    mean = Fraction(sum(d * c for d, c in zip(distances, counts)), total)
    assert mean == Fraction(n ** 3 - n, 6)
    variance = Fraction(sum((d - mean) ** 2 * c for d, c in zip(distances, counts)), total)
    assert variance == Fraction(n ** 2 * (n + 1) ** 2 * (n - 1), 36)


@pytest.mark.parametrize("n", range(2, 8))
def test_ryser_matches_enumeration(n):
    table = generate_exact_table(n, method="ryser", verify=True)
    assert table.counts.sum() == factorial(n)


@pytest.mark.parametrize("n", [2, 5, 9, 12])
def test_subset_dp_matches_embedded(tables, n):
    generated = generate_exact_table(n, method="subset-dp")
    np.testing.assert_array_equal(generated.counts, tables[n].counts)


def test_ryser_and_subset_dp_agree():
    np.testing.assert_array_equal(
        generate_exact_table(10, method="ryser").counts,
        generate_exact_table(10, method="subset-dp").counts,
    )


def test_unsupported_sizes():
    with pytest.raises(ValueError):
        generate_exact_table(21)
    with pytest.raises(ValueError):
        generate_exact_table(5, method="brute")


def test_write_and_load_round_trip(tmp_path, tables):
    path = tmp_path / "tables.txt"
    digest = write_tables(path, n_max=7)
    assert path.read_text().rstrip().endswith(digest)
    loaded = load_tables(path)
    assert sorted(loaded) == list(range(2, 8))
    for n in loaded:
        np.testing.assert_array_equal(loaded[n].counts, tables[n].counts)


def test_checksum_mismatch_is_rejected(tmp_path):
    path = tmp_path / "tables.txt"
    write_tables(path, n_max=4)
    text = path.read_text().replace("\n2 1\n", "\n2 2\n", 1)
    path.write_text(text)
    with pytest.raises(ValueError, match="checksum"):
        load_tables(path)
