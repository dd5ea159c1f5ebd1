import numpy as np
import pytest

from spearmix.models.errors import AugmentationCapacityError, RankingFormatError
from spearmix.models.ranking import RankingDataset, aggregate, as_partial_matrix
from spearmix.services.ranking_ops import (
    augment,
    augment_rows,
    censor,
    complete,
    convert,
    describe,
    first_order_marginals,
    mean_ranks,
    pairwise_comparison,
)
from spearmix.services.ranking_space import permutations_array, ranking_space

NA = np.nan


def as_set(rows):
    return {tuple(int(v) for v in row) for row in rows}


class TestConvert:
    def test_antifragility_rows_to_orderings(self, ranks_af3):
        expected = np.array([
            [3, 2, 4, 1, 5, 6, 7],
            [1, 4, 3, 2, 7, 6, 5],
            [3, 4, 1, 2, 7, 6, 5],
        ])
        np.testing.assert_array_equal(convert(ranks_af3), expected)

    def test_involution_on_partial_rows(self, ranks_toy):
        np.testing.assert_array_equal(convert(convert(ranks_toy)), ranks_toy)

    def test_partial_row_keeps_missing_positions(self, ranks_toy):
        # (2, NA, 1, NA, 3): items 3, 1, 5 hold ranks 1, 2, 3
        np.testing.assert_array_equal(convert(ranks_toy)[0], [3, 1, 5, NA, NA])


class TestCensor:
    def test_top3_antifragility(self, ranks_af3):
        partial, k = censor(ranks_af3, "topk", nranked=3)
        expected = np.array([
            [NA, 2, 1, 3, NA, NA, NA],
            [1, NA, 3, 2, NA, NA, NA],
            [3, NA, 1, 2, NA, NA, NA],
        ])
        np.testing.assert_array_equal(partial, expected)
        np.testing.assert_array_equal(k, [3, 3, 3])

    def test_per_row_nranked(self, ranks_af3):
        partial, _ = censor(ranks_af3, "topk", nranked=[1, 2, 6])
        np.testing.assert_array_equal((~np.isnan(partial)).sum(axis=1), [1, 2, 6])

    def test_probs_with_zero_last_entry_never_keep_full_rows(self, rng):
        data = np.argsort(rng.random((500, 7)), axis=1) + 1
        partial, k = censor(data, "topk", probs=[1, 2, 3, 4, 5, 0], rng=rng)
        assert k.min() >= 1
        assert k.max() <= 5
        assert np.isnan(partial).any(axis=1).all()

    def test_mar_keeps_observed_values(self, rng):
        data = np.argsort(rng.random((50, 6)), axis=1) + 1
        partial, k = censor(data, "mar", nranked=2, rng=rng)
        observed = ~np.isnan(partial)
        np.testing.assert_array_equal(observed.sum(axis=1), k)
        np.testing.assert_array_equal(partial[observed], data[observed])

    @pytest.mark.parametrize("kwargs", [
        {"nranked": 0},
        {"nranked": 7},
        {},
        {"nranked": 2, "probs": [1, 1, 1, 1, 1, 1]},
        {"probs": [1, -1, 1, 1, 1, 1]},
        {"probs": [1, 1]},
    ])
    def test_invalid_censoring_settings(self, ranks_af3, kwargs):
        with pytest.raises(ValueError):
            censor(ranks_af3, "topk", **kwargs)

    def test_unknown_type(self, ranks_af3):
        with pytest.raises(ValueError, match="censoring type"):
            censor(ranks_af3, "bottom", nranked=2)


class TestComplete:
    def test_toy_with_identity_and_reverse(self, ranks_toy):
        ref = np.array([[1, 2, 3, 4, 5], [5, 4, 3, 2, 1]])
        np.testing.assert_array_equal(complete(ranks_toy, ref), [[2, 4, 1, 5, 3], [5, 4, 3, 1, 2]])

    def test_single_reference_is_broadcast(self, ranks_toy):
        completed = complete(ranks_toy, [1, 2, 3, 4, 5])
        np.testing.assert_array_equal(completed[0], [2, 4, 1, 5, 3])

    def test_complete_rows_unchanged(self, ranks_af3):
        np.testing.assert_array_equal(complete(ranks_af3, ranks_af3[::-1]), ranks_af3)

    def test_result_lies_in_the_compatible_set(self, ranks_toy, rng):
        for _ in range(10):
            ref = np.argsort(rng.random((2, 5)), axis=1) + 1
            completed = complete(ranks_toy, ref)
            for row, filled in zip(ranks_toy, completed):
                assert tuple(filled) in as_set(augment(row))

    def test_dimension_mismatch(self, ranks_toy):
        with pytest.raises(RankingFormatError):
            complete(ranks_toy, [[1, 2, 3, 4, 5]] * 3)


class TestAugment:
    def test_top3_row(self, ranks_toy):
        assert as_set(augment(ranks_toy[0])) == {(2, 4, 1, 5, 3), (2, 5, 1, 4, 3)}

    def test_mar_row(self, ranks_toy):
        expected = {
            (2, 4, 3, 1, 5), (3, 4, 2, 1, 5), (3, 4, 5, 1, 2),
            (2, 4, 5, 1, 3), (5, 4, 2, 1, 3), (5, 4, 3, 1, 2),
        }
        completions = augment(ranks_toy[1])
        assert completions.shape == (6, 5)
        assert as_set(completions) == expected

    def test_complete_row_is_a_singleton(self, ranks_af3):
        np.testing.assert_array_equal(augment(ranks_af3[0]), ranks_af3[:1])

    def test_capacity(self):
        row = np.full(12, NA)
        row[0] = 1
        with pytest.raises(AugmentationCapacityError, match="mc_em"):
            augment(row)

    def test_capacity_reports_row(self):
        rows = np.array([[1, 2] + [NA] * 10, [1] + [NA] * 11])
        with pytest.raises(AugmentationCapacityError, match="row 2"):
            augment_rows(rows)


class TestDescribe:
    def test_toy_summaries(self, ranks_toy):
        description = describe(ranks_toy)
        np.testing.assert_array_equal(description.n_ranked_distribution, [0, 0, 1, 1, 0, 0])
        np.testing.assert_array_equal(description.missing_per_item, [1, 1, 1, 1, 1])
        np.testing.assert_allclose(description.mean_ranks, [2, 4, 1, 1, 3])
        np.testing.assert_array_equal(description.borda_ordering, [3, 4, 1, 5, 2])
        assert description.metadata["n_topk_rows"] == 1
        assert description.metadata["complete"] is False

    def test_first_order_marginals(self, ranks_toy):
        fm = first_order_marginals(ranks_toy)
        assert fm.sum() == 5
        assert fm[0, 2] == 1 and fm[0, 3] == 1
        assert fm[1, 0] == 1 and fm[2, 4] == 1 and fm[3, 1] == 1

    def test_pairwise_with_topk_inference(self, ranks_toy):
        pc = pairwise_comparison(ranks_toy)
        # the top-3 row ranks items 1, 3, 5 above the censored items 2 and 4
        assert pc[0, 1] == 1 and pc[4, 3] == 1
        # the MAR row only compares its two observed items
        assert pc[3, 1] == 1
        assert pc[1, 3] == 0
        plain = pairwise_comparison(ranks_toy, topk_inference=False)
        assert plain[0, 1] == 0

    def test_pairwise_complete_rows_sum(self, ranks_af3):
        pc = pairwise_comparison(ranks_af3)
        np.testing.assert_array_equal(pc + pc.T, 3 * (1 - np.eye(7, dtype=int)))

    def test_subset(self, ranks_af3):
        description = describe(ranks_af3, subset=[0, 2])
        assert description.n_rows == 2
        np.testing.assert_allclose(description.mean_ranks, mean_ranks(ranks_af3[[0, 2]]))

    def test_empty_subset(self, ranks_af3):
        with pytest.raises(RankingFormatError):
            describe(ranks_af3, subset=np.zeros(3, dtype=bool))

    def test_to_dict_uses_labels(self, ranks_af3):
        labels = ["Abs", "Red", "Sma", "Non", "Req", "Eme", "Unc"]
        payload = describe(RankingDataset(ranks_af3, labels)).to_dict()
        assert payload["borda_ordering"][0] == "Sma"
        assert set(payload["mean_ranks"]) == set(labels)


class TestValidation:
    def test_duplicate_reports_position(self):
        with pytest.raises(RankingFormatError, match=r"row 2, column 3"):
            as_partial_matrix([[1, 2, 3], [2, 1, 2]])

    def test_out_of_range(self):
        with pytest.raises(RankingFormatError, match=r"column 3"):
            as_partial_matrix([[1, 2, 4]])

    def test_non_integer(self):
        with pytest.raises(RankingFormatError):
            as_partial_matrix([[1, 2.5, 3]])

    def test_aggregate_is_lossless(self, ranks_toy):
        rows = np.vstack([ranks_toy, ranks_toy[:1], ranks_toy[1:]])
        distinct, freqs, inverse = aggregate(rows)
        assert freqs.sum() == 4
        np.testing.assert_array_equal(distinct[inverse], rows)

    def test_expand_reproduces_the_multiset(self, ranks_af3):
        dataset = RankingDataset(rows=np.vstack([ranks_af3, ranks_af3[:2]]))
        expanded = dataset.expand()
        assert expanded.shape == (5, 7)
        assert sorted(map(tuple, expanded.tolist())) == sorted(map(tuple, dataset.rows.tolist()))


class TestRankingSpace:
    def test_lexicographic_and_complete(self):
        space = ranking_space(4)
        assert space.shape == (24, 4)
        np.testing.assert_array_equal(space[0], [1, 2, 3, 4])
        np.testing.assert_array_equal(space[-1], [4, 3, 2, 1])
        assert len({tuple(r) for r in space}) == 24
        keys = [tuple(r) for r in space]
        assert keys == sorted(keys)

    def test_read_only(self):
        with pytest.raises(ValueError):
            permutations_array(3)[0, 0] = 2

    def test_size_limit(self):
        with pytest.raises(ValueError):
            permutations_array(12)
