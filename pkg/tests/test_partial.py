import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parmatch.cost import CostMatrix
from parmatch.errors import MassOutOfRange
from parmatch.partial import augment, extract_matches, solve_partial
from parmatch.solver import check_certificate, solve_balanced

from conftest import lp_partial, vertex_enumeration


def cm(a):
    return CostMatrix(np.asarray(a, dtype=float))


def test_zero_mass():
    res = solve_partial(cm([[1, 2], [3, 4]]), 0.0)
    assert res.objective == 0
    assert not res.plan.entries.any()


def test_half_mass_uses_free_cell():
    c = [[0, 10], [10, 10]]
    res = solve_partial(cm(c), 0.5)
    np.testing.assert_array_equal(res.plan.entries, [[0.5, 0], [0, 0]])
    assert res.objective == 0
    assert vertex_enumeration(np.array(c, float), 0.5) == 0


def test_full_mass_is_balanced(rng):
    c = cm(rng.uniform(size=(7, 5)))
    assert solve_partial(c, 1.0).objective == pytest.approx(solve_balanced(c).objective, abs=1e-12)


@pytest.mark.parametrize("s", [-0.1, 1.5, float("nan")])
def test_mass_out_of_range(s):
    with pytest.raises(MassOutOfRange):
        solve_partial(cm([[1.0]]), s)


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.sampled_from([0.25, 0.5, 0.75, 1.0]),
       st.integers(0, 2**31))
def test_against_lp(nx, ny, s, seed):
    c = np.random.default_rng(seed).uniform(size=(nx, ny))
    res = solve_partial(cm(c), s)
    assert res.objective == pytest.approx(lp_partial(c, s), abs=1e-8)
    t = res.plan.entries
    assert abs(t.sum() - s) <= 1e-9
    assert np.all(t.sum(axis=1) <= 1 / nx + 1e-9)
    assert np.all(t.sum(axis=0) <= 1 / ny + 1e-9)
    assert res.stats["dummy_dummy_mass"] == 0


def test_vertex_oracle_small(rng):
    for _ in range(5):
        c = rng.uniform(size=(2, 3))
        for s in (0.3, 0.6):
            assert solve_partial(cm(c), s).objective == pytest.approx(
                vertex_enumeration(c, s), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**31))
def test_monotone_in_mass(nx, ny, seed):
    c = cm(np.random.default_rng(seed).uniform(size=(nx, ny)))
    zeta = [solve_partial(c, s).objective for s in np.linspace(0, 1, 11)]
    assert zeta[0] == 0
    assert np.all(np.diff(zeta) >= -1e-9)


def test_augmented_certificate(rng):
    c = cm(rng.uniform(size=(5, 4)))
    prob = augment(c, 0.6)
    res = solve_partial(c, 0.6)
    full = np.zeros_like(prob.cost_aug)
    full[:5, :4] = res.plan.entries
    full[:5, 4] = prob.source_masses[:5] - res.plan.row_sums
    full[5, :4] = prob.target_masses[:4] - res.plan.col_sums
    violation, gap = check_certificate(prob.cost_aug, full, res.u, res.v)
    assert violation < 1e-9 and gap < 1e-9


def test_augmentation_layout():
    prob = augment(cm([[1, 3], [2, 0]]), 0.5)
    assert prob.cost_aug[2, 2] == 2 * 3 + 1
    assert prob.cost_aug[0, 2] == prob.cost_aug[2, 1] == 0
    np.testing.assert_allclose(prob.source_masses, [0.5, 0.5, 0.5])


def test_irrational_mass_is_snapped():
    res = solve_partial(cm(np.ones((3, 3))), 1 / np.pi)
    assert res.stats["s_used"] == pytest.approx(1 / np.pi, abs=1e-11)
    assert res.plan.total_mass == res.stats["s_used"]


def test_restriction_of_optimum_is_optimal_on_support(rng):
    # the plan restricted to its kept rows and columns is optimal for that
    # subproblem with the same marginals
    c = rng.uniform(size=(6, 6))
    res = solve_partial(cm(c), 0.5)
    m = extract_matches(res.plan)
    sub = c[np.ix_(m.kept_source, m.kept_target)]
    block = res.plan.entries[np.ix_(m.kept_source, m.kept_target)]
    assert block.sum() == pytest.approx(0.5, abs=1e-12)
    assert (sub * block).sum() == pytest.approx(res.objective, abs=1e-12)


class TestExtractMatches:
    def test_empty(self):
        m = extract_matches(solve_partial(cm([[1, 2], [3, 4]]), 0).plan)
        assert m.kept_source == () and m.kept_target == ()

    def test_balanced_keeps_everything(self, rng):
        m = extract_matches(solve_balanced(cm(rng.uniform(size=(4, 3)))).plan)
        assert m.kept_source == (0, 1, 2, 3) and m.kept_target == (0, 1, 2)

    def test_half_mass_case(self):
        m = extract_matches(solve_partial(cm([[0, 10], [10, 10]]), 0.5).plan)
        assert (m.kept_source, m.kept_target) == ((0,), (0,))

    def test_tau_must_be_positive(self):
        with pytest.raises(ValueError):
            extract_matches(solve_balanced(cm([[1.0]])).plan, 0)
