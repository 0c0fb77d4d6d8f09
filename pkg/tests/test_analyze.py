import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parmatch.analyze import (
    RankOrder,
    brute_force_rank,
    corr_score,
    correlation_rank,
    haar_orthogonal,
    match_precision,
    partial_order,
    partial_rank,
    rotation_test,
    selection_score,
)
from parmatch.cost import cosine_cost, squared_euclidean_cost
from parmatch.errors import DimensionMismatch, EmptyMatchError, MassOutOfRange
from parmatch.matrixio import TuningMatrix, center_and_normalize
from parmatch.partial import solve_partial
from parmatch.solver import solve_balanced

from conftest import random_normalized


def normalized(a):
    return center_and_normalize(TuningMatrix(a))


def with_column(x, j, col):
    a = np.array(x.data)
    a[:, j] = col
    return normalized(a)


class TestCorrScore:
    def test_identical(self, rng):
        x = random_normalized(rng, 20, 6)
        rep = corr_score(x, x, 1.0)
        assert rep.corr_score_mean == pytest.approx(1, abs=1e-9)
        assert rep.kept_source == tuple(range(6))

    def test_orthogonal(self):
        # columns of x live on stimuli 0-2, those of y on 3-5, all centered
        a = np.zeros((6, 2))
        a[:3] = [[1, 1], [-1, 0], [0, -1]]
        b = np.zeros((6, 2))
        b[3:] = [[1, 1], [-1, 0], [0, -1]]
        x, y = normalized(a), normalized(b)
        assert np.abs(x.data.T @ y.data).max() < 1e-15
        for s in (0.3, 1.0):
            assert corr_score(x, y, s).corr_score_total == pytest.approx(0, abs=1e-12)

    def test_total_is_mass_minus_objective(self, rng):
        x, y = random_normalized(rng, 15, 5), random_normalized(rng, 15, 7)
        rep = corr_score(x, y, 0.4)
        assert rep.corr_score_total == pytest.approx(0.4 - rep.objective, abs=1e-12)
        assert rep.s_used == 0.4

    def test_zero_mass(self, rng):
        x = random_normalized(rng, 10, 3)
        rep = corr_score(x, x, 0.0)
        assert rep.corr_score_total == 0 and rep.corr_score_mean is None

    def test_bad_mass(self, rng):
        x = random_normalized(rng, 10, 3)
        with pytest.raises(MassOutOfRange):
            corr_score(x, x, 2.0)


class TestBruteForce:
    def test_planted_noise_deleted_first(self, rng):
        x = random_normalized(rng, 30, 6)
        y = with_column(x, 2, rng.standard_normal(30))
        rank = brute_force_rank(x, y)
        assert rank.order[0] == 2
        # with the noise unit gone the populations coincide
        assert rank.scores_along_deletion[1] == pytest.approx(1, abs=1e-9)
        assert rank.scores_along_deletion[0] < 1

    def test_two_units(self, rng):
        x, y = random_normalized(rng, 8, 2), random_normalized(rng, 8, 2)
        rank = brute_force_rank(x, y)
        assert len(rank.order) == 2 and len(rank.scores_along_deletion) == 2

    def test_identical_populations_stay_at_zero(self, rng):
        x = random_normalized(rng, 12, 5)
        rank = brute_force_rank(x, x, kind="sqeuclidean")
        np.testing.assert_allclose(rank.scores_along_deletion, 0, atol=1e-12)
        # every deletion ties, so the smallest index goes each time
        assert rank.order == (0, 1, 2, 3, 4)

    def test_trajectory_matches_direct_resolve(self, rng):
        x, y = random_normalized(rng, 10, 5), random_normalized(rng, 10, 5)
        rank = brute_force_rank(x, y)
        remaining = list(range(5))
        for t, unit in enumerate(rank.order):
            direct = 1 - solve_balanced(
                cosine_cost(x.columns(remaining), y.columns(remaining))).objective
            assert rank.scores_along_deletion[t] == pytest.approx(direct, abs=1e-12)
            remaining.remove(unit)

    def test_needs_equal_sizes(self, rng):
        with pytest.raises(DimensionMismatch):
            brute_force_rank(random_normalized(rng, 8, 3), random_normalized(rng, 8, 4))

    def test_large_n_warns(self, rng, monkeypatch):
        # stub the inner solve so only the guard is exercised
        monkeypatch.setattr("parmatch.analyze._objective_score", lambda a, b, kind: 0.0)
        x = random_normalized(rng, 4, 65)
        with pytest.warns(RuntimeWarning, match="N=65"):
            brute_force_rank(x, x)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            rank = brute_force_rank(x, x, force=True)
        assert rank.warnings and len(rank.order) == 65


def test_rank_order_must_be_permutation():
    with pytest.raises(ValueError):
        RankOrder((0, 0, 1), "x")


class TestCorrelationRank:
    def test_identical_keeps_all(self, rng):
        x = random_normalized(rng, 20, 5)
        src, tgt, sc, tc = correlation_rank(x, x, 5)
        assert src == tgt == tuple(range(5))
        np.testing.assert_allclose(sc, 1, atol=1e-12)

    def test_single_planted_pair(self, rng):
        x = random_normalized(rng, 40, 6)
        y = with_column(random_normalized(rng, 40, 6), 3, x.data[:, 3])
        src, tgt, sc, tc = correlation_rank(x, y, 1)
        assert (src, tgt) == ((3,), (3,))
        assert sc[3] == pytest.approx(1) and tc[3] == pytest.approx(1)

    def test_pearson_by_hand(self, rng):
        x, y = random_normalized(rng, 15, 4), random_normalized(rng, 15, 3)
        t = solve_balanced(cosine_cost(x, y)).plan.entries
        _, _, sc, tc = correlation_rank(x, y, 2)
        for j in range(3):
            assert tc[j] == pytest.approx(np.corrcoef((x.data @ t)[:, j], y.data[:, j])[0, 1])
        for i in range(4):
            assert sc[i] == pytest.approx(np.corrcoef(x.data[:, i], (y.data @ t.T)[:, i])[0, 1])

    def test_k_range(self, rng):
        x = random_normalized(rng, 10, 3)
        with pytest.raises(ValueError):
            correlation_rank(x, x, 4)


class TestPartialRank:
    def test_endpoints(self, rng):
        x, y = random_normalized(rng, 12, 5), random_normalized(rng, 12, 4)
        family = partial_rank(x, y, [0.0, 1.0])
        assert family[0][1].kept_source == () and family[0][1].kept_target == ()
        assert family[1][1].kept_source == tuple(range(5))
        assert family[1][1].kept_target == tuple(range(4))

    def test_order_puts_noise_first(self, rng):
        x = random_normalized(rng, 30, 6)
        y = with_column(x, 4, rng.standard_normal(30))
        order = partial_order(x, y, np.linspace(0.1, 1.0, 10))
        assert order.order[0] == 4 and order.order_target[0] == 4

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**31))
    def test_cost_kind_does_not_change_kept_sets(self, seed):
        rng = np.random.default_rng(seed)
        x, y = random_normalized(rng, 12, 5), random_normalized(rng, 12, 6)
        grid = [0.2, 0.5, 0.8]
        cos = partial_rank(x, y, grid, kind="cosine")
        euc = partial_rank(x, y, grid, kind="sqeuclidean")
        for (_, a), (_, b) in zip(cos, euc):
            assert a.kept_source == b.kept_source and a.kept_target == b.kept_target
        for s in grid:
            zc = solve_partial(cosine_cost(x, y), s).objective
            ze = solve_partial(squared_euclidean_cost(x, y), s).objective
            assert ze == pytest.approx(2 * zc, abs=1e-8)


class TestRotation:
    def test_identity_sampler(self, rng):
        x, y = random_normalized(rng, 10, 4), random_normalized(rng, 10, 4)
        base, rot = rotation_test(x, y, 0.7, 3, seed=0,
                                  rotation_sampler=lambda d, r: np.eye(d))
        np.testing.assert_allclose(rot, base, atol=1e-9)

    def test_haar_is_orthogonal(self, rng):
        for dim in (1, 3, 17):
            q = haar_orthogonal(dim, rng)
            np.testing.assert_allclose(q.T @ q, np.eye(dim), atol=1e-10)

    def test_deterministic(self, rng):
        x, y = random_normalized(rng, 10, 4), random_normalized(rng, 10, 4)
        a = rotation_test(x, y, 1.0, 4, seed=3)
        b = rotation_test(x, y, 1.0, 4, seed=3)
        assert a[0] == b[0] and np.array_equal(a[1], b[1])

    def test_trials_positive(self, rng):
        x = random_normalized(rng, 5, 2)
        with pytest.raises(ValueError):
            rotation_test(x, x, 1.0, 0, seed=0)


class TestMatchPrecision:
    def test_all_correct(self):
        assert match_precision([0, 1], [2], "aab", "ccv", ("a", "v")) == 1.0

    def test_half(self):
        assert match_precision([0, 2], [0, 1], "aba", "vvw", ("a", "w")) == 0.5

    def test_empty(self):
        with pytest.raises(EmptyMatchError):
            match_precision([], [], "a", "b", ("a", "b"))

    def test_two_region_populations(self, rng):
        # units 0-3 of each side share responses ("V"), units 4-7 are unrelated ("O")
        shared = rng.standard_normal((40, 4))
        x = normalized(np.hstack([shared, rng.standard_normal((40, 4))]))
        y = normalized(np.hstack([shared + 0.05 * rng.standard_normal((40, 4)),
                                  rng.standard_normal((40, 4))]))
        rep = corr_score(x, y, 0.5)
        labels = ["V"] * 4 + ["O"] * 4
        assert match_precision(rep.kept_source, rep.kept_target, labels, labels,
                               ("V", "V")) == 1.0


def test_selection_score_identity(rng):
    x = random_normalized(rng, 10, 5)
    assert selection_score(x, x, [1, 3], [1, 3]) == pytest.approx(1)


def test_brute_force_correct_when_indices_correspond(rng):
    # with a shared index structure the greedy order recovers the planted pairs
    base = rng.standard_normal((40, 8))
    x = normalized(np.hstack([base, rng.standard_normal((40, 4))]))
    y = normalized(np.hstack([base + 0.1 * rng.standard_normal((40, 8)),
                              rng.standard_normal((40, 4))]))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rank = brute_force_rank(x, y)
    assert set(rank.order[:4]) == {8, 9, 10, 11}
