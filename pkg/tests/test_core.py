from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from _oracles import column, permutations
from rankchoice.core import (
    Assortment,
    DataVector,
    DimensionError,
    ObservationScheme,
    PriceVector,
    ProductUniverse,
    RankList,
    SchemeKind,
    SparseChoiceModel,
    a_column,
    a_matrix,
    all_rankings,
    choice_prob,
    exact_marginals,
    revenue,
)


def uniform3() -> SparseChoiceModel:
    return SparseChoiceModel.uniform(3)


def det(order) -> SparseChoiceModel:
    return SparseChoiceModel.deterministic(RankList.from_order(order))


class TestTypes:
    def test_universe_needs_two_products(self):
        with pytest.raises(ValueError):
            ProductUniverse(1)
        assert list(ProductUniverse(3).products) == [0, 1, 2]

    def test_rank_list_must_be_permutation(self):
        with pytest.raises(ValueError):
            RankList((1, 1, 2))
        with pytest.raises(ValueError):
            RankList((0, 1, 2))

    def test_from_order_and_back(self):
        rl = RankList.from_order((2, 0, 1))
        assert rl.ranks == (2, 3, 1)
        assert rl.order() == (2, 0, 1)
        assert rl.prefers(2, 0) and not rl.prefers(1, 0)
        assert str(rl) == "2>0>1"

    def test_assortment_always_holds_no_purchase(self):
        assert Assortment((3, 1)).members == (0, 1, 3)
        assert Assortment.parse("0,3,7").members == (0, 3, 7)
        assert Assortment.parse("7,3").members == (0, 3, 7)
        assert Assortment.parse("").members == (0,)
        assert Assortment.of([2, 2, 1]).products == (1, 2)

    def test_assortment_bounds(self):
        with pytest.raises(DimensionError):
            Assortment((4,)).check(4)
        with pytest.raises(ValueError):
            Assortment((-1,))

    def test_price_of_no_purchase_is_zero(self):
        with pytest.raises(ValueError):
            PriceVector((1.0, 2.0))
        with pytest.raises(ValueError):
            PriceVector((0.0, -1.0))
        assert PriceVector.unit(3).prices == (0.0, 1.0, 1.0)

    def test_model_invariants(self):
        a, b = RankList((1, 2, 3)), RankList((2, 1, 3))
        with pytest.raises(ValueError):
            SparseChoiceModel(((a, 0.5), (b, 0.4)))
        with pytest.raises(ValueError):
            SparseChoiceModel(((a, 0.5), (a, 0.5)))
        with pytest.raises(ValueError):
            SparseChoiceModel(((a, 1.0), (b, 0.0)))

    def test_from_weights_merges_duplicates_and_normalizes(self):
        m = SparseChoiceModel.from_weights([(1, 2, 3), (2, 1, 3), (1, 2, 3)], [1.0, 2.0, 1.0])
        assert m.k == 2
        probs = dict((rl.ranks, p) for rl, p in m.support)
        assert probs[(1, 2, 3)] == pytest.approx(0.5)
        assert math.fsum(m.probs_array()) == pytest.approx(1.0, abs=1e-15)

    def test_data_vector_validation(self):
        s = ObservationScheme.comparison(2)
        with pytest.raises(DimensionError):
            DataVector(s, (0.5,))
        with pytest.raises(ValueError):
            DataVector(s, (0.5, 1.5))
        DataVector(s, (0.5, 1.5), intervals=((-0.2, 0.7), (0.1, 1.5)))
        with pytest.raises(ValueError):
            DataVector(s, (0.5, 0.5), intervals=((0.7, 0.2), (0.1, 0.5)))


class TestSchemes:
    @pytest.mark.parametrize("n", [2, 3, 5])
    def test_row_counts(self, n):
        assert ObservationScheme.comparison(n).m == n * (n - 1)
        assert ObservationScheme.ranking(n).m == n * n
        assert ObservationScheme.topset(n).m == n * (n - 1) + n
        assert ObservationScheme.censored(n).m == n * (n - 1)
        t = ObservationScheme.transaction(n, [Assortment((1,)), Assortment(tuple(range(n)))])
        assert t.m == 2 + n

    def test_labels(self):
        assert ObservationScheme.comparison(3).labels()[:2] == ["pref(0,1)", "pref(0,2)"]
        assert ObservationScheme.ranking(2).labels() == ["rank(1,0)", "rank(1,1)", "rank(2,0)", "rank(2,1)"]
        assert ObservationScheme.topset(2).labels()[-1] == "top(1)"
        t = ObservationScheme.transaction(3, [Assortment((2,))])
        assert t.labels() == ["sale(0,{0,2})", "sale(2,{0,2})"]

    def test_transaction_needs_assortments(self):
        with pytest.raises(ValueError):
            ObservationScheme.transaction(3, [])
        with pytest.raises(ValueError):
            ObservationScheme(SchemeKind.RANKING, 3, (Assortment((1,)),))


class TestAColumn:
    sigma = RankList((3, 1, 2))

    def test_comparison_example(self):
        assert_array_equal(a_column(self.sigma, ObservationScheme.comparison(3)), [0, 0, 1, 1, 1, 0])

    def test_ranking_example(self):
        assert_array_equal(a_column(RankList((1, 2)), ObservationScheme.ranking(2)), [1, 0, 0, 1])

    def test_censored_example(self):
        s = ObservationScheme.censored(3)
        col = a_column(self.sigma, s)
        assert col[s.row_of(("cpref", 2, 1))] == 0
        assert col[s.row_of(("cpref", 1, 2))] == 1

    @pytest.mark.parametrize("kind", ["comparison", "ranking", "topset", "censored", "transaction"])
    @pytest.mark.parametrize("n", [3, 4])
    def test_matches_definition_for_every_permutation(self, kind, n):
        assortments = [(1,), (1, 2), tuple(range(1, n))] if kind == "transaction" else ()
        scheme = (ObservationScheme.transaction(n, [Assortment(a) for a in assortments]) if assortments
                  else ObservationScheme(SchemeKind(kind), n))
        A = a_matrix(all_rankings(n), scheme)
        ref = np.array([column(s, kind, n, assortments) for s in permutations(n)]).T
        assert_array_equal(A, ref)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            a_column(RankList((1, 2)), ObservationScheme.comparison(3))


class TestChoice:
    def test_deterministic_customer(self):
        assert choice_prob(det((1, 2, 0)), 1, Assortment((1, 2))) == 1.0

    def test_uniform_symmetry(self):
        assert choice_prob(uniform3(), 0, Assortment((1, 2))) == pytest.approx(1 / 3, abs=1e-15)
        assert choice_prob(uniform3(), 1, Assortment((1,))) == pytest.approx(0.5, abs=1e-15)

    def test_non_member(self):
        with pytest.raises(ValueError):
            choice_prob(uniform3(), 2, Assortment((1,)))

    def test_revenue_examples(self):
        p = PriceVector((0, 10, 5))
        assert revenue(uniform3(), Assortment((1,)), p) == pytest.approx(5.0)
        assert revenue(det((1, 2, 0)), Assortment((2,)), p) == pytest.approx(5.0)
        assert revenue(uniform3(), Assortment((1, 2)), PriceVector.unit(3)) == pytest.approx(2 / 3)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_choice_probs_sum_to_one(self, seed):
        rng = np.random.default_rng(seed)
        n = 5
        ranks = np.array([rng.permutation(n) + 1 for _ in range(4)])
        model = SparseChoiceModel.from_weights(ranks, rng.uniform(0.1, 1, size=4))
        m = Assortment.of(rng.choice(np.arange(1, n), size=int(rng.integers(0, n)), replace=False))
        probs = model.choice_probs(m)
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(probs >= 0)


class TestExactMarginals:
    @pytest.mark.parametrize("kind", ["comparison", "ranking", "topset", "censored"])
    def test_deterministic_model_gives_its_column(self, kind):
        sigma = RankList((2, 4, 1, 3))
        scheme = ObservationScheme(SchemeKind(kind), 4)
        y = exact_marginals(SparseChoiceModel.deterministic(sigma), scheme)
        assert_array_equal(y.y, a_column(sigma, scheme))

    def test_uniform_comparison_is_one_half(self):
        y = exact_marginals(uniform3(), ObservationScheme.comparison(3))
        assert_allclose(y.y, 0.5, atol=1e-15)

    def test_two_atom_ranking_row(self):
        model = SparseChoiceModel((
            (RankList.from_order((1, 2, 0)), 0.3),
            (RankList.from_order((0, 1, 2)), 0.7),
        ))
        s = ObservationScheme.ranking(3)
        assert exact_marginals(model, s).y[s.row_of(("rank", 1, 1))] == pytest.approx(0.3)

    def test_all_rankings_is_lexicographic(self):
        perms = all_rankings(3)
        assert perms.shape == (6, 3)
        assert [tuple(p) for p in perms] == sorted(itertools.permutations((1, 2, 3)))
        with pytest.raises(ValueError):
            all_rankings(11)
