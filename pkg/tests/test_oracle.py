import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergomoment.core import ModelError, norm_profile
from ergomoment.oracle import (CapExceededError, MomentOracle, direct_fourth_moment, exact_covariance,
                               exact_cross_moment, exact_fourth_moment, exact_fourth_moments,
                               green_kubo_sigma2, multiplicity, path_enumeration_fourth_moment)
from ergomoment.systems import doeblin_chain

from conftest import SYMMETRIC, centred


def test_rademacher_cross_moment_vanishes(rademacher):
    m, phi = rademacher
    assert exact_cross_moment(m, phi, 1, 1, 1) == 0.0


def test_collapsed_gaps_give_fourth_power_mean(zoo):
    for m, phi in zoo.values():
        assert exact_cross_moment(m, phi, 0, 0, 0) == pytest.approx(norm_profile(phi, m).phi4_l1, rel=1e-14)


def test_symmetric_cross_moment_by_path_enumeration(symmetric):
    m, phi = symmetric
    v = phi.values
    total = 0.0
    for path in itertools.product(range(2), repeat=4):
        # gaps (1, 1, 1): consecutive times 0..3
        pr = m.nu[path[0]] * np.prod([m.P[a, b] for a, b in zip(path, path[1:])])
        total += pr * np.prod(v[list(path)])
    assert exact_cross_moment(m, phi, 1, 1, 1) == pytest.approx(total, abs=1e-15)
    assert total == pytest.approx(0.25, abs=1e-15)


@pytest.mark.parametrize("i,j,k", [(0, 2, 0), (2, 3, 1), (1, 0, 4), (3, 5, 3)])
def test_symmetric_cross_moment_depends_on_outer_gaps(symmetric, i, j, k):
    m, phi = symmetric
    assert exact_cross_moment(m, phi, i, j, k) == pytest.approx(0.5 ** (i + k), abs=1e-15)
    assert exact_cross_moment(m, phi, k, j, i) == pytest.approx(exact_cross_moment(m, phi, i, j, k), abs=1e-15)


def test_negative_gap_is_rejected(symmetric):
    with pytest.raises(ModelError, match="nonnegative"):
        exact_cross_moment(*symmetric, -1, 0, 0)


def test_rademacher_fourth_moment_small_cases(rademacher):
    m, phi = rademacher
    assert exact_fourth_moment(m, phi, 2) == 8.0
    assert exact_fourth_moment(m, phi, 10) == 280.0


def test_rademacher_closed_form_up_to_64(rademacher):
    m, phi = rademacher
    got = exact_fourth_moments(m, phi, range(1, 65))
    for n, v in got.items():
        assert abs(v - (3 * n * n - 2 * n)) <= 1e-9 * (3 * n * n - 2 * n)


def test_gap_expansion_matches_path_enumeration(zoo):
    for name, (m, phi) in zoo.items():
        for n in range(1, 9):
            if m.size ** n > 2 ** 16:
                continue
            a = exact_fourth_moment(m, phi, n)
            b = path_enumeration_fourth_moment(m, phi, n)
            assert abs(a - b) <= 1e-12 * max(abs(b), 1e-300), (name, n)


def test_symmetric_n3_matches_enumeration_exactly(symmetric):
    m, phi = symmetric
    assert exact_fourth_moment(m, phi, 3) == path_enumeration_fourth_moment(m, phi, 3)


def test_multiplicities_match_direct_summation(zoo):
    for m, phi in zoo.values():
        for n in range(1, 7):
            assert exact_fourth_moment(m, phi, n) == pytest.approx(direct_fourth_moment(m, phi, n), rel=1e-13)


def test_multiplicity_table():
    assert multiplicity(0, 0, 0) == 1
    assert multiplicity(1, 2, 3) == 24
    assert multiplicity(0, 1, 0) == 6
    assert multiplicity(0, 0, 2) == 4 and multiplicity(2, 0, 0) == 4
    assert multiplicity(1, 0, 1) == 12
    # every ordered 4-tuple over n times is counted exactly once
    n = 5
    total = sum(multiplicity(i, j, k) * (n - i - j - k)
                for i in range(n) for j in range(n) for k in range(n) if i + j + k <= n - 1)
    assert total == n ** 4


def test_fourth_moment_is_nonnegative_and_scales(zoo):
    for m, phi in zoo.values():
        base = exact_fourth_moments(m, phi, [1, 7, 33])
        scaled = exact_fourth_moments(m, phi.scaled(2.0), [1, 7, 33])
        for n in base:
            assert base[n] >= 0
            assert scaled[n] == pytest.approx(16.0 * base[n], rel=1e-14)


def test_cap_and_bad_inputs(symmetric):
    m, phi = symmetric
    with pytest.raises(CapExceededError, match="Monte Carlo"):
        exact_fourth_moment(m, phi, 513)
    assert MomentOracle(m, phi, cap=1024).fourth_moment(600) > 0
    with pytest.raises(ModelError):
        exact_fourth_moment(m, phi, 0)
    with pytest.raises(ModelError, match="not centred"):
        exact_fourth_moment(m, np.array([2.0, 0.0]), 4)


def test_covariances(symmetric, rademacher):
    assert exact_covariance(*symmetric, 3) == pytest.approx(0.125, abs=1e-15)
    assert exact_covariance(*rademacher, 2) == 0.0
    with pytest.raises(ModelError):
        exact_covariance(*symmetric, -1)


def test_green_kubo(symmetric, rademacher):
    gk = green_kubo_sigma2(*symmetric, tol=1e-12)
    assert gk.sigma2 == pytest.approx(3.0, abs=1e-10)
    assert gk.error_bound < 1e-10
    assert green_kubo_sigma2(*rademacher).sigma2 == pytest.approx(1.0, abs=1e-12)


def test_green_kubo_is_the_variance_growth_rate(walk):
    m, phi = walk
    gk = green_kubo_sigma2(m, phi)
    o = MomentOracle(m, phi)
    n = 400
    var = n * o.covariance(0) + 2 * sum((n - k) * o.covariance(k) for k in range(1, n))
    assert var / n == pytest.approx(gk.sigma2, rel=0.02)


def test_overcount_sum_dominates_exact_value_for_nonnegative_correlations(symmetric):
    o = MomentOracle(*symmetric)
    for n in (2, 5, 9):
        assert o.overcount_sum(n) >= o.fourth_moment(n)


@settings(max_examples=25, deadline=None)
@given(vals=st.lists(st.floats(-4, 4), min_size=3, max_size=3), c=st.sampled_from([-2.0, 0.5, 3.0]))
def test_scaling_is_exact_on_random_observables(vals, c):
    m = doeblin_chain([[0.2, 0.5, 0.3], [0.6, 0.1, 0.3], [0.3, 0.3, 0.4]])
    phi = centred(m, vals)
    a = exact_fourth_moment(m, phi, 6)
    b = exact_fourth_moment(m, phi.scaled(c), 6)
    assert b == pytest.approx(c ** 4 * a, rel=1e-12, abs=1e-200)
