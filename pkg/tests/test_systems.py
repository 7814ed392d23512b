import math

import numpy as np
import pytest

from ergomoment.core import ModelError, center
from ergomoment.montecarlo import estimate_s4
from ergomoment.spectral import NotStronglyErgodicError, ulam
from ergomoment.systems import (ChainSampler, DoublingSampler, LinearProcessSpec, Noise, NotContractingError,
                                ar_model, beta_map, build_system, burn_in_for, doeblin_chain, expanding_map,
                                doubling_map, gauss_map, linear_contraction, linear_process, lipschitz_constant,
                                random_lipschitz, shift_observable, subshift)

from conftest import WALK


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    return x.mean(), x.std(ddof=1) / math.sqrt(len(x))


def test_doeblin_symmetric_has_uniform_stationary_law():
    m = doeblin_chain([[0.75, 0.25], [0.25, 0.75]])
    assert np.allclose(m.nu, [0.5, 0.5], atol=1e-15)
    assert m.meta["C"] == 1.0 and m.meta["M"] == 1.0


def test_doeblin_two_state_balance():
    m = doeblin_chain([[0.9, 0.1], [0.5, 0.5]])
    assert np.allclose(m.nu, [5 / 6, 1 / 6], atol=1e-14)


def test_periodic_chain_is_not_strongly_ergodic():
    with pytest.raises(NotStronglyErgodicError, match="periodic"):
        doeblin_chain([[0, 1], [1, 0]])


def test_reducible_chain_is_not_strongly_ergodic():
    with pytest.raises(NotStronglyErgodicError, match="reducible"):
        doeblin_chain([[1, 0], [0.5, 0.5]])


def test_doubling_step():
    assert doubling_map()(0.3) == pytest.approx(0.6, abs=1e-15)


def test_gauss_step():
    assert gauss_map()(0.4) == pytest.approx(0.5, abs=1e-14)


@pytest.mark.parametrize("beta", [1.0, 0.5, -2.0])
def test_beta_at_most_one_is_rejected(beta):
    with pytest.raises(ModelError, match="beta > 1"):
        beta_map(beta)
    with pytest.raises(ModelError):
        expanding_map("beta", beta=beta)


def test_beta_orbit_mean_matches_ulam_mean():
    s = expanding_map("beta", beta=1.5, seed=3)
    assert s.burn_in == burn_in_for(1 / 1.5)
    n, reps = 64, 4000
    avg = s.partial_sums(lambda x: x, n, reps) / n
    mean, se = _mean_se(avg)
    U = ulam(beta_map(1.5), 1024)
    mids = (np.arange(1024) + 0.5) / 1024
    target = float(U.nu @ mids)
    assert abs(mean - target) < 3 * se


def test_gauss_start_follows_invariant_law():
    s = expanding_map("gauss", seed=11)
    x0 = np.concatenate([b[:, 0] for b in s.paths(1, 20000)])
    for t in (0.1, 0.3, 0.5, 0.8):
        p = s.cdf(t)
        assert abs(np.mean(x0 <= t) - p) < 4 * math.sqrt(p * (1 - p) / len(x0))


def test_doubling_sampler_never_collapses_to_zero():
    traj = DoublingSampler(seed=5).trajectory(500)
    assert np.count_nonzero(traj[-50:]) >= 45
    assert np.allclose(np.mod(2 * traj[:-1], 1.0)[:, None] - traj[1:, None], 0, atol=2 ** -52)


def test_golden_mean_shift_never_emits_forbidden_word():
    s = subshift([[1, 1], [1, 0]], seed=2, depth=8)
    for block in s.paths(400, 50):
        w = block[..., 0]
        assert not np.any((w[:, :-1] == 1) & (w[:, 1:] == 1))
        assert not np.any((block[..., :-1] == 1) & (block[..., 1:] == 1))


def test_mass_on_forbidden_pair_is_rejected():
    with pytest.raises(ModelError, match=r"forbidden pair \(1, 1\)"):
        subshift([[1, 1], [1, 0]], Q=[[0.5, 0.5], [0.5, 0.5]])


def test_geometric_functional_has_lipschitz_constant_at_most_two():
    f = shift_observable(2.0 ** -np.arange(48))
    assert lipschitz_constant(f) <= 2.0 + 1e-12
    rng = np.random.default_rng(0)
    for _ in range(200):
        x = rng.integers(0, 2, 48)
        y = x.copy()
        k = int(rng.integers(0, 48))
        y[k:] = rng.integers(0, 2, 48 - k)
        first = np.flatnonzero(x != y)
        if len(first):
            assert abs(f(x) - f(y)) <= lipschitz_constant(f) * 2.0 ** -first[0] + 1e-15


def test_bernoulli_shift_sign_observable_matches_rademacher_moment():
    s = subshift([[1, 1], [1, 1]], seed=9, depth=4)
    f = shift_observable([2.0], offset=-1.0)
    f = center(f, mean=0.0, note="symmetric fair coin")
    est = estimate_s4(s, f, 10, 20000, seed=9)
    assert abs(est.mean - 280.0) < 3 * est.stderr


def test_truncation_depth_moves_lipschitz_values_by_at_most_the_bound():
    f = shift_observable(2.0 ** -np.arange(64))
    s = subshift([[1, 1], [1, 0]], seed=4, depth=64)
    w = s.trajectory(300)
    full, cut = f(w), f(w[:, :32])
    assert np.max(np.abs(full - cut)) < lipschitz_constant(f) * 2.0 ** -32


def test_linear_truncation_length():
    spec = LinearProcessSpec(coefficients=lambda i: 0.5 ** i, C=1.0, rho=0.5, tol=1e-10)
    # smallest L with 0.5^(L+1) / 0.5 = 0.5^L < 1e-10
    assert spec.truncation == 34
    assert spec.tail_bound() < 1e-10
    assert 0.5 ** 33 >= 1e-10


def test_linear_envelope_violation_is_rejected():
    spec = LinearProcessSpec(coefficients=[1.0, 0.9], C=1.0, rho=0.5)
    with pytest.raises(ModelError, match="envelope"):
        spec.coefficient_array()


def test_linear_process_contracts_in_the_sequence_metric():
    spec = LinearProcessSpec(coefficients=lambda i: 0.5 ** i, C=1.0, rho=0.5)
    for k in (1, 5, 20):
        assert linear_contraction(spec, k) <= 1.0 + 1e-12
    x = linear_process(spec, seed=1).trajectory(200)
    assert np.abs(x).max() <= 2 * 0.5 + 1e-12


def test_ar_support_stays_inside_unit_interval():
    s = ar_model(0.5, {"kind": "uniform", "low": -0.5, "high": 0.5}, seed=42)
    traj = np.concatenate([b.ravel() for b in s.paths(500, 20)])
    assert np.abs(traj).max() <= 1.0


def test_ar_choice_noise_support():
    s = ar_model(0.5, {"kind": "choice", "values": [-0.5, 0.5]}, seed=42)
    assert np.abs(s.trajectory(2000)).max() <= 1.0


def test_non_contracting_ar_reports_estimate():
    with pytest.raises(NotContractingError, match="1.2"):
        ar_model([[1.2]])


def test_cantor_random_iteration_has_mean_one_half():
    s = random_lipschitz([(1 / 3, 0.0), (1 / 3, 2 / 3)], seed=17)
    assert s.rate == pytest.approx(1 / 3)
    assert s.burn_in == burn_in_for(1 / 3)
    n, reps = 50, 4000
    mean, se = _mean_se(s.partial_sums(lambda x: x, n, reps) / n)
    assert abs(mean - 0.5) < 3 * se


def test_non_contracting_random_maps_are_rejected():
    with pytest.raises(NotContractingError):
        random_lipschitz([(2.0, 0.0), (0.5, 0.0)])


def test_callable_maps_record_estimated_rate():
    s = random_lipschitz([np.sin, lambda x: 0.2 * x], seed=1, domain=(0.0, 1.0))
    assert 0.5 < s.rate < 0.61
    assert s.affine is None


def test_same_seed_gives_bit_identical_trajectories():
    for s in (ChainSampler(doeblin_chain(WALK), seed=3), expanding_map("gauss", seed=3),
              ar_model(0.5, None, seed=3), subshift([[1, 1], [1, 0]], seed=3)):
        a, b = s.trajectory(257), s.trajectory(257)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, s.trajectory(257, seed=4))


def test_replicate_streams_do_not_depend_on_batching():
    s = expanding_map("beta", beta=1.7, seed=8)
    whole = s.partial_sums(lambda x: x, 30, 10)
    split = np.concatenate([s.partial_sums(lambda x: x, 30, 4), s.partial_sums(lambda x: x, 30, 6, first=4)])
    assert np.array_equal(whole, split)
    assert np.sum(s.trajectory(30, replicate=7)) == pytest.approx(whole[7], rel=1e-12)


def test_finite_occupation_matches_stationary_law():
    m = doeblin_chain(WALK)
    n = 100_000
    traj = ChainSampler(m, seed=1).trajectory(n)
    freq = np.bincount(traj, minlength=3) / n
    assert np.all(np.abs(freq - m.nu) < 4 / math.sqrt(n))


def test_noise_round_trip_and_bounds():
    nz = Noise.from_dict({"kind": "choice", "values": [-1, 2], "probs": [0.5, 0.5]})
    assert nz.bound == 2.0 and nz.mean == 0.5
    assert Noise.from_dict(nz.to_dict()) == nz
    with pytest.raises(ModelError):
        Noise(kind="cauchy")


@pytest.mark.parametrize("cfg,typ", [
    ({"P": [[0.75, 0.25], [0.25, 0.75]]}, "FiniteMarkovModel"),
    ({"kind": "iid", "probs": [0.5, 0.5], "states": [1, -1]}, "FiniteMarkovModel"),
    ({"kind": "ulam", "map": "doubling", "cells": 8}, "FiniteMarkovModel"),
    ({"kind": "iid_uniform"}, "IIDUniformSampler"),
    ({"kind": "doubling"}, "DoublingSampler"),
    ({"kind": "beta", "beta": 1.5}, "MapSampler"),
    ({"kind": "gauss"}, "GaussSampler"),
    ({"kind": "subshift", "A": [[1, 1], [1, 0]]}, "SubshiftSampler"),
    ({"kind": "linear", "rho": 0.5}, "LinearProcessSampler"),
    ({"kind": "ar", "A": 0.5, "noise": {"kind": "uniform"}, "seed": 42, "burn_in": "auto"}, "ARSampler"),
    ({"kind": "random_lipschitz", "maps": [[0.3, 0], [0.3, 0.7]]}, "LipschitzIFSSampler"),
])
def test_build_system_reaches_every_kind(cfg, typ):
    assert type(build_system(cfg)).__name__ == typ


def test_build_system_rejects_unknown_kind_and_bad_nu():
    with pytest.raises(ModelError, match="unknown system kind"):
        build_system({"kind": "lorenz"})
    with pytest.raises(ModelError):
        build_system({"P": [[0.9, 0.1], [0.5, 0.5]], "nu": [0.5, 0.5]})
