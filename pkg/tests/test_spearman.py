from math import factorial

import numpy as np
import pytest

from spearmix.models.errors import RankingFormatError
from spearmix.services.ranking_space import ranking_space
from spearmix.services.spearman import (
    approximate_distribution,
    distance_distribution,
    expected_dist,
    log_density,
    partition_function,
    spear_dist,
    spear_dist_matrix,
    spear_dist_to,
    var_dist,
)
from spearmix.utils.helpers import max_spearman_distance, uniform_mean, uniform_variance
from spearmix.utils.state import cache_info


class TestDistance:
    def test_reverse_is_maximal(self):
        assert spear_dist([1, 2, 3, 4, 5], [5, 4, 3, 2, 1]) == 40 == max_spearman_distance(5)

    def test_identity(self):
        assert spear_dist([3, 1, 2], [3, 1, 2]) == 0

    def test_vector_form_matches_pairwise(self, rng):
        data = np.argsort(rng.random((20, 6)), axis=1) + 1
        rho = data[3]
        expected = [spear_dist(row, rho) for row in data]
        np.testing.assert_array_equal(spear_dist_to(data, rho), expected)

    def test_matrix(self, rng):
        data = np.argsort(rng.random((8, 5)), axis=1) + 1
        matrix = spear_dist_matrix(data)
        np.testing.assert_array_equal(matrix, matrix.T)
        np.testing.assert_array_equal(np.diag(matrix), 0)
        assert matrix[1, 6] == spear_dist(data[1], data[6])
        assert (matrix % 2 == 0).all()

    def test_length_mismatch(self):
        with pytest.raises(RankingFormatError):
            spear_dist([1, 2, 3], [1, 2])

    def test_partial_rejected(self):
        with pytest.raises(RankingFormatError):
            spear_dist([1, np.nan, 3], [1, 2, 3])


class TestPartitionFunction:
    def test_golden_values_on_log_scale(self):
        assert partition_function(0.1, 5, log=True) == pytest.approx(3.253889, abs=1e-5)
        assert expected_dist(0.1, 5, log=True) == pytest.approx(2.421115, abs=1e-5)
        assert var_dist(0.1, 5, log=True) == pytest.approx(4.202741, abs=1e-5)

    def test_golden_values_natural_scale(self):
        assert partition_function(0.1, 5) == pytest.approx(25.8908412, rel=1e-6)
        assert expected_dist(0.1, 5) == pytest.approx(11.2584031, rel=1e-6)
        assert var_dist(0.1, 5) == pytest.approx(66.8694008, rel=1e-6)

    @pytest.mark.parametrize("n", [3, 6, 12, 20, 25])
    def test_uniform_model(self, n):
        assert partition_function(0.0, n) == pytest.approx(factorial(n), rel=1e-9)
        assert expected_dist(0.0, n) == pytest.approx(uniform_mean(n), rel=1e-9)
        assert var_dist(0.0, n) == pytest.approx(uniform_variance(n), rel=1e-9)

    def test_brute_force_sum(self):
        space = ranking_space(6).astype(np.int64)
        d = spear_dist_to(space, np.arange(1, 7))
        theta = 0.07
        assert partition_function(theta, 6) == pytest.approx(np.exp(-theta * d).sum(), rel=1e-10)

    def test_expected_distance_decreases_in_theta(self):
        values = [expected_dist(t, 9) for t in (0.0, 0.01, 0.05, 0.2, 1.0)]
        assert all(a > b for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("n, theta", [(5, 0.1), (9, 0.05), (25, 0.01)])
    def test_expectation_derivative_is_minus_variance(self, n, theta):
        h = theta * 1e-4
        slope = (expected_dist(theta + h, n) - expected_dist(theta - h, n)) / (2 * h)
        assert slope == pytest.approx(-var_dist(theta, n), rel=1e-5)

    def test_negative_theta(self):
        with pytest.raises(ValueError):
            partition_function(-0.1, 5)

    def test_log_density_at_consensus(self):
        rho = [2, 1, 3, 5, 4]
        assert log_density(rho, rho, 0.1) == pytest.approx(-3.253889, abs=1e-5)

    def test_log_density_normalizes(self):
        space = ranking_space(5).astype(np.int64)
        values = log_density(space, [1, 2, 3, 4, 5], 0.3)
        assert np.exp(values).sum() == pytest.approx(1.0, rel=1e-10)


class TestApproximation:
    @pytest.mark.parametrize("n", [15, 20])
    @pytest.mark.parametrize("theta", [5e-4, 1e-3, 5e-3])
    def test_audit_against_exact_tables(self, n, theta):
        exact = distance_distribution(n)
        approx = approximate_distribution(n)

        def mean(dist):
            w = dist.log_card - theta * dist.distances
            p = np.exp(w - w.max())
            return float(p @ dist.distances / p.sum())

        assert abs(mean(approx) / mean(exact) - 1) <= 0.05

    @pytest.mark.parametrize("n", [8, 20, 40])
    def test_moments_match_uniform(self, n):
        dist = approximate_distribution(n)
        p = np.exp(dist.log_card - dist.log_card.max())
        p /= p.sum()
        mean = p @ dist.distances
        assert mean == pytest.approx(uniform_mean(n), rel=1e-9)
        assert p @ (dist.distances - mean) ** 2 == pytest.approx(uniform_variance(n), rel=1e-7)

    def test_mass_is_n_factorial(self):
        dist = approximate_distribution(30)
        total = np.logaddexp.reduce(dist.log_card)
        assert total == pytest.approx(np.log(float(factorial(30))), rel=1e-12)

    def test_grid_support(self):
        dist = approximate_distribution(60, grid=501)
        assert dist.method == "gaussian-grid"
        assert dist.size <= 501
        assert dist.distances[0] == 0 and dist.max_distance == max_spearman_distance(60)

    def test_large_n_uses_grid(self):
        dist = distance_distribution(200)
        assert not dist.exact
        assert dist.method == "gaussian-grid"
        assert expected_dist(0.0, 200) == pytest.approx(uniform_mean(200), rel=1e-3)

    def test_selection_and_cache(self):
        assert distance_distribution(20).exact
        assert not distance_distribution(21).exact
        assert distance_distribution(21) is distance_distribution(21)
        assert any("approximate" in key for key in cache_info()["keys"])

    def test_small_n_rejected(self):
        with pytest.raises(ValueError):
            approximate_distribution(3)
