import numpy as np
import pytest
from scipy.stats import chisquare

from spearmix.models.errors import IncompatibleOptionsError
from spearmix.models.params import MMSParams
from spearmix.services.sampler import (
    rmsmix,
    sample_mms,
    sample_mms_exact,
    sample_mms_mh,
    separation_threshold,
)
from spearmix.services.spearman import distance_distribution, spear_dist_matrix, spear_dist_to


def distance_law(n, theta):
    dist = distance_distribution(n)
    w = dist.log_card - theta * dist.distances
    p = np.exp(w - w.max())
    return dist.distances, p / p.sum()


def observed_law(samples, rho, distances):
    d = spear_dist_to(samples, rho)
    return np.array([(d == v).sum() for v in distances])


@pytest.mark.parametrize("theta", [0.0, 0.3])
def test_exact_sampler_goodness_of_fit(theta):
    rho = np.array([2, 4, 1, 3])
    samples = sample_mms_exact(20000, MMSParams(rho=rho, theta=theta), rng=np.random.default_rng(3))
    distances, p = distance_law(4, theta)
    observed = observed_law(samples, rho, distances)
    keep = p > 0
    result = chisquare(observed[keep], 20000 * p[keep])
    assert result.pvalue > 0.001


def test_exact_sampler_mean_distance():
    rho = np.arange(1, 6)
    samples = sample_mms_exact(20000, MMSParams(rho=rho, theta=0.1), rng=np.random.default_rng(5))
    assert spear_dist_to(samples, rho).mean() == pytest.approx(11.2584, abs=0.3)


def test_mh_sampler_total_variation():
    rho = np.array([3, 6, 1, 2, 5, 4])
    samples = sample_mms_mh(50000, MMSParams(rho=rho, theta=0.2), rng=np.random.default_rng(9))
    distances, p = distance_law(6, 0.2)
    observed = observed_law(samples, rho, distances) / samples.shape[0]
    assert 0.5 * np.abs(observed - p).sum() <= 0.05


def test_samples_are_rankings():
    samples = sample_mms(200, MMSParams(rho=np.arange(1, 13), theta=0.05), rng=np.random.default_rng(1))
    assert samples.shape == (200, 12)
    np.testing.assert_array_equal(np.sort(samples, axis=1), np.tile(np.arange(1, 13), (200, 1)))


def test_automatic_sampler_choice_is_seeded():
    params = MMSParams(rho=np.arange(1, 7), theta=0.1)
    a = sample_mms(50, params, rng=np.random.default_rng(4))
    b = sample_mms(50, params, rng=np.random.default_rng(4))
    np.testing.assert_array_equal(a, b)


def test_exact_sampler_size_limit():
    with pytest.raises(IncompatibleOptionsError):
        sample_mms_exact(5, MMSParams(rho=np.arange(1, 12), theta=0.1))


def test_mh_rejects_bad_settings():
    with pytest.raises(ValueError):
        sample_mms_mh(5, MMSParams(rho=np.arange(1, 5), theta=0.1), thin=0)


class TestRmsmix:
    def test_separated_consensus(self):
        result = rmsmix(300, 8, 3, theta=0.15, rng=np.random.default_rng(2))
        distances = spear_dist_matrix(result.rho)[np.triu_indices(3, 1)]
        assert distances.min() >= separation_threshold(8, 3)
        assert result.samples.shape == (300, 8)
        assert result.weights.sum() == pytest.approx(1.0)
        assert set(np.unique(result.classification)) <= {1, 2, 3}
        np.testing.assert_allclose(result.theta, [0.15] * 3)

    def test_given_parameters(self):
        rho = [[1, 2, 3, 4], [4, 3, 2, 1]]
        result = rmsmix(100, 4, 2, rho=rho, theta=[1.0, 2.0], weights=[3, 1],
                        mh=False, rng=np.random.default_rng(0))
        np.testing.assert_allclose(result.weights, [0.75, 0.25])
        assert result.method == "exact"
        for g in (1, 2):
            rows = result.samples[result.classification == g]
            # large theta: most rows equal their consensus
            assert (spear_dist_to(rows, rho[g - 1]) == 0).mean() > 0.5

    def test_uniform_parameters_in_range(self):
        result = rmsmix(10, 9, 4, uniform=True, rng=np.random.default_rng(8))
        assert ((result.theta > 1 / 81) & (result.theta < 3 / 9 ** 1.5)).all()

    def test_reproducible(self):
        a = rmsmix(50, 7, 2, rng=np.random.default_rng(12))
        b = rmsmix(50, 7, 2, rng=np.random.default_rng(12))
        np.testing.assert_array_equal(a.samples, b.samples)
        np.testing.assert_array_equal(a.rho, b.rho)

    def test_exact_needs_small_n(self):
        with pytest.raises(IncompatibleOptionsError):
            rmsmix(10, 11, 1, mh=False)

    def test_wrong_consensus_shape(self):
        with pytest.raises(ValueError):
            rmsmix(10, 4, 2, rho=[[1, 2, 3, 4]])


@pytest.mark.slow
@pytest.mark.parametrize("theta", [0.0, 0.3])
def test_exact_sampler_goodness_of_fit_large(theta):
    rho = np.arange(1, 5)
    samples = sample_mms_exact(10 ** 6, MMSParams(rho=rho, theta=theta), rng=np.random.default_rng(13))
    distances, p = distance_law(4, theta)
    observed = observed_law(samples, rho, distances)
    keep = p > 0
    assert chisquare(observed[keep], 10 ** 6 * p[keep]).pvalue > 0.01
