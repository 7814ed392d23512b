import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergomoment.core import (ErgodicityCertificate, FiniteMarkovModel, ModelError, NoMeasureError,
                             NormKind, NormProfile, NotStochasticError, Observable, center, function_norm,
                             midpoint_quadrature, norm_profile)
from ergomoment.spectral import ulam
from ergomoment.systems import doeblin_chain, doubling_map

from conftest import SYMMETRIC


def test_row_sum_off_by_a_hundredth_is_rejected_with_row_index():
    with pytest.raises(NotStochasticError, match=r"P not stochastic: row 0"):
        FiniteMarkovModel.from_matrix([[0.5, 0.49], [0.5, 0.5]])


def test_negative_entry_is_rejected():
    with pytest.raises(NotStochasticError, match="row 1"):
        FiniteMarkovModel.from_matrix([[0.5, 0.5], [1.1, -0.1]])


def test_non_stationary_nu_is_rejected():
    with pytest.raises(ModelError, match="not stationary"):
        FiniteMarkovModel.from_matrix([[0.9, 0.1], [0.5, 0.5]], nu=[0.5, 0.5])


def test_model_round_trips_through_dict():
    m = doeblin_chain(SYMMETRIC)
    back = FiniteMarkovModel.from_dict(m.to_dict())
    assert np.array_equal(back.P, m.P) and np.allclose(back.nu, m.nu)


def test_matrix_is_read_only():
    m = doeblin_chain(SYMMETRIC)
    with pytest.raises(ValueError):
        m.P[0, 0] = 1.0


def test_center_subtracts_stationary_mean():
    m = doeblin_chain(SYMMETRIC)
    c = center(Observable.from_values([2.0, 0.0]), m)
    assert np.array_equal(c.values, [1.0, -1.0])
    assert c.banach_norm == 1.0


def test_center_of_centred_observable_is_unchanged():
    m = doeblin_chain(SYMMETRIC)
    once = center(Observable.from_values([2.0, 0.0]), m)
    twice = center(once, m)
    assert np.array_equal(once.values, twice.values)
    assert twice.banach_norm == once.banach_norm


def test_center_on_ulam_chain_removes_midpoint_mean():
    U = ulam(doubling_map(), 8)
    x = Observable(func=lambda s: np.asarray(s, dtype=float), sup_bound=1.0, banach_norm=1.0)
    c = center(x, U)
    mids = (np.arange(8) + 0.5) / 8
    assert np.allclose(c.values, mids - 0.5, atol=1e-15)


def test_center_without_a_measure_is_an_explicit_error():
    with pytest.raises(NoMeasureError, match="no measure"):
        center(Observable.hat(0.2, 0.5, 0.01))


def test_center_with_quadrature_records_its_error():
    quad = midpoint_quadrature(lambda x: np.ones_like(x), 4096)
    h = center(Observable.hat(0.2, 0.5, 0.01), quad)
    mean, _ = quad.expect(h.func)
    assert abs(mean) < 1e-12
    assert h.mean_tol is not None


def test_declared_mean_needs_a_note():
    with pytest.raises(ModelError, match="note"):
        center(Observable.hat(0.2, 0.5, 0.01), mean=0.29)


def test_profile_of_unit_sign_function():
    m = doeblin_chain(SYMMETRIC)
    p = norm_profile(Observable.from_values([1.0, -1.0]), m)
    assert (p.phi_lq, p.phi4_l1, p.phi2_l1, p.m) == (1.0, 1.0, 1.0, 1.0)


def test_profile_of_two_zero():
    m = doeblin_chain(SYMMETRIC)
    p = norm_profile(Observable.from_values([2.0, 0.0]), m, q=2)
    assert p.phi_lq == pytest.approx(math.sqrt(2), rel=1e-15)
    assert p.phi4_l1 == 8.0 and p.m == 2.0


def test_hat_norm_is_one_plus_inverse_ramp():
    h = Observable.hat(0.2, 0.5, 0.01)
    assert h.norm_kind is NormKind.LIPSCHITZ
    assert h.banach_norm == pytest.approx(101.0)


def test_q_below_one_is_rejected():
    with pytest.raises(ModelError):
        Observable.from_values([1.0, -1.0], q=0.5)
    with pytest.raises(ModelError):
        Observable.from_values([1.0, -1.0], q=math.inf)


def test_declared_norm_must_dominate_sup():
    with pytest.raises(ModelError, match="below sup"):
        Observable.from_values([3.0, -1.0], norm_kind="LIPSCHITZ", banach_norm=2.0)
    with pytest.raises(ModelError, match="declared"):
        Observable.from_values([3.0, -1.0], norm_kind="BV")


def test_function_norms_on_labels():
    f = np.array([0.0, 1.0, 0.0])
    assert function_norm(f, NormKind.SUP) == 1.0
    assert function_norm(f, NormKind.BV, [0, 1, 2]) == 3.0
    assert function_norm(f, NormKind.LIPSCHITZ, [0.0, 0.5, 1.0]) == 3.0


def test_norm_kind_accepts_lowercase():
    assert NormKind("sup") is NormKind.SUP


def test_certificate_rejects_theta_outside_unit_interval():
    with pytest.raises(ModelError):
        ErgodicityCertificate(kappa=1.0, theta=1.0, p=2.0)
    with pytest.raises(ModelError):
        ErgodicityCertificate(kappa=0.0, theta=0.5, p=2.0)


def test_profile_invariants_are_enforced():
    with pytest.raises(ModelError):
        NormProfile.declared("bad", phi4_l1=1, phi3_lq=1, phi2_lq=0.25, phi2_l1=1, phi_lq=1,
                             banach=1, m=1, q=2)


weights = st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6)


@settings(max_examples=60, deadline=None)
@given(w=weights, data=st.data())
def test_lq_norm_is_nondecreasing_in_q(w, data):
    nu = np.array(w) / sum(w)
    vals = data.draw(st.lists(st.floats(-5, 5), min_size=len(w), max_size=len(w)))
    model = FiniteMarkovModel.from_matrix(np.tile(nu, (len(nu), 1)), nu=nu)
    norms = [norm_profile(Observable.from_values(vals, q=q), model).phi_lq for q in (1, 2, 4)]
    assert norms[0] <= norms[1] * (1 + 1e-12) + 1e-300
    assert norms[1] <= norms[2] * (1 + 1e-12) + 1e-300


@settings(max_examples=40, deadline=None)
@given(vals=st.lists(st.floats(-3, 3), min_size=2, max_size=2))
def test_profile_scales_with_the_observable(vals):
    m = doeblin_chain(SYMMETRIC)
    base = norm_profile(Observable.from_values(vals), m)
    for c in (2.0, -1.0):
        p = norm_profile(Observable.from_values(np.array(vals) * c), m)
        assert p.phi_lq == pytest.approx(abs(c) * base.phi_lq, rel=1e-14, abs=1e-300)
        assert p.phi4_l1 == pytest.approx(c ** 4 * base.phi4_l1, rel=1e-14, abs=1e-300)
