from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binom

from wptransport.circuit.backends import sample
from wptransport.mitigation import (
    ESTIMATORS,
    BitFlipModel,
    MitigationError,
    _e_step,
    bootstrap,
    corrupt,
    hamming_distance,
    ipr_from_distribution,
    mixture_loglik,
    mle_fit,
    mle_ipr,
    postselect,
    ps_distribution,
    ps_ipr,
    weight_preserving_rate,
)
from wptransport.shots import ShotSet, one_hot_string


def synthetic(p: np.ndarray, eps: float, n_shots: int, seed: int) -> ShotSet:
    clean = sample(np.sqrt(np.asarray(p, dtype=float)), n_shots, seed)
    return corrupt(clean, BitFlipModel(eps), seed)


def tv(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(a) - np.asarray(b)).sum())


def table_em_step(shots: ShotSet, p: np.ndarray, eps: float) -> tuple[np.ndarray, float]:
    """One EM step from the explicit (M, N) responsibility table."""
    bits, counts = shots.bits()
    N = shots.num_qubits
    d = np.array([[hamming_distance(b, one_hot_string(i, N)) for i in range(N)] for b in shots.records])
    comp = p * eps**d * (1 - eps) ** (N - d)
    r = comp / comp.sum(axis=1, keepdims=True)
    p_new = counts @ r
    eps_new = float(counts @ (r * d).sum(axis=1)) / (N * counts.sum())
    return p_new / p_new.sum(), eps_new


# ---------------------------------------------------------------- channel


@pytest.mark.parametrize("a,b,d", [("0000", "0000", 0), ("0001", "1000", 2), ("10110", "01101", 4)])
def test_hamming_distance(a, b, d):
    assert hamming_distance(a, b) == d


def test_hamming_length_mismatch():
    with pytest.raises(ValueError):
        hamming_distance("01", "011")


def test_bit_flip_model_bounds():
    BitFlipModel(0.0)
    with pytest.raises(ValueError):
        BitFlipModel(0.5)
    with pytest.raises(ValueError):
        BitFlipModel(-0.01)


def test_zero_noise_is_identity():
    shots = ShotSet(3, {"001": 4, "100": 6})
    assert corrupt(shots, BitFlipModel(0.0), 1) == shots


def test_corrupt_is_seeded():
    shots = ShotSet(6, {"000001": 500})
    a = corrupt(shots, BitFlipModel(0.1), 3)
    assert a == corrupt(shots, BitFlipModel(0.1), 3)
    assert a != corrupt(shots, BitFlipModel(0.1), 4)
    assert a.total == 500


def enumerated_weight_one_rate(N: int, eps: float) -> float:
    """Sum over every flip pattern applied to e_0."""
    total = 0.0
    for flips in itertools.product((0, 1), repeat=N):
        out = [1 - flips[0], *flips[1:]]
        if sum(out) == 1:
            k = sum(flips)
            total += eps**k * (1 - eps) ** (N - k)
    return total


def test_one_hot_survival_matches_enumeration():
    oracle = enumerated_weight_one_rate(8, 0.05)
    assert weight_preserving_rate(8, 0.05) == pytest.approx(oracle, rel=1e-12)
    noisy = corrupt(ShotSet(8, {one_hot_string(3, 8): 1_000_000}), BitFlipModel(0.05), 11)
    assert abs(postselect(noisy, 1)[1] - oracle) < 0.002


def test_flip_rate_per_bit():
    noisy = corrupt(ShotSet(10, {"0" * 10: 100_000}), BitFlipModel(0.07), 5)
    bits, counts = noisy.bits()
    assert np.allclose(counts @ bits / 100_000, 0.07, atol=0.003)


def test_postselect_rate_large_register():
    N, eps = 56, 0.02
    # Weight stays 1 iff (excited bit kept and no other flips) or (excited bit flipped and one other flips).
    oracle = (1 - eps) * binom.pmf(0, N - 1, eps) + eps * binom.pmf(1, N - 1, eps)
    assert weight_preserving_rate(N, eps) == pytest.approx(oracle, rel=1e-12)
    noisy = corrupt(ShotSet(N, {one_hot_string(20, N): 100_000}), BitFlipModel(eps), 2)
    assert abs(postselect(noisy, 1)[1] - oracle) < 0.005


def test_postselect_cases():
    clean = ShotSet(4, {"0001": 3, "0100": 7})
    kept, rate = postselect(clean, 1)
    assert kept == clean and rate == 1.0
    kept, rate = postselect(ShotSet(3, {"011": 5, "000": 5}), 1)
    assert kept.total == 0 and rate == 0.0
    kept, rate = postselect(ShotSet(3, {"011": 5, "001": 15}), 2)
    assert kept.records == {"011": 5} and rate == 0.25
    with pytest.raises(MitigationError):
        ps_distribution(ShotSet(3, {"011": 5}))


# ---------------------------------------------------------------- estimators


def test_ipr_from_distribution():
    assert ipr_from_distribution(np.full(8, 1 / 8)) == pytest.approx(1 / 8)
    assert ipr_from_distribution([0, 1.0, 0]) == 1.0
    assert ipr_from_distribution([0.5, 0.3, 0.2]) == pytest.approx(0.38)


def test_ps_distribution():
    shots = ShotSet(3, {"001": 2, "010": 6, "110": 100})
    assert np.allclose(ps_distribution(shots), [0.25, 0.75, 0.0])
    assert ps_ipr(shots) == pytest.approx(0.625)
    assert set(ESTIMATORS) == {"ps", "mle"}


# ---------------------------------------------------------------- EM


@settings(max_examples=30)
@given(st.integers(2, 12), st.floats(0.01, 0.3), st.integers(0, 2**31))
def test_closed_form_likelihood_matches_table(N, eps, seed):
    rng = np.random.default_rng(seed)
    shots = synthetic(rng.dirichlet(np.ones(N)), eps, 300, seed)
    p = rng.dirichlet(np.ones(N))
    bits, counts = shots.bits()
    bitsf = bits.astype(float)
    closed = _e_step(bitsf, bitsf.sum(axis=1), counts.astype(float), p, eps).loglik
    assert closed == pytest.approx(mixture_loglik(shots, p, eps), rel=1e-10, abs=1e-9)


@pytest.mark.parametrize("seed", range(4))
def test_em_step_matches_table_oracle(seed):
    rng = np.random.default_rng(seed)
    N = 7
    shots = synthetic(rng.dirichlet(np.ones(N)), 0.08, 400, seed)
    p0, e0 = rng.dirichlet(np.ones(N)), 0.12
    one = mle_fit(shots, init=(p0, e0), tol=-np.inf, max_iter=1)
    p_ref, e_ref = table_em_step(shots, p0, e0)
    assert one.iterations == 1
    assert np.allclose(one.p_hat, p_ref, atol=1e-12)
    assert one.epsilon_hat == pytest.approx(e_ref, rel=1e-12)


@settings(max_examples=20)
@given(st.integers(2, 16), st.floats(0.0, 0.2), st.integers(0, 2**31))
def test_em_monotone_and_simplex(N, eps, seed):
    rng = np.random.default_rng(seed)
    fit = mle_fit(synthetic(rng.dirichlet(np.ones(N)), eps, 500, seed))
    assert np.all(np.diff(fit.trace) >= -1e-9 * np.maximum(1.0, np.abs(fit.trace[:-1])))
    assert np.all(fit.p_hat >= 0)
    assert abs(fit.p_hat.sum() - 1) < 1e-12
    assert 0 <= fit.epsilon_hat < 0.5
    assert fit.log_likelihood == fit.trace[-1]


def test_noise_free_fit_is_empirical():
    p = np.array([0.1, 0.2, 0.3, 0.4])
    shots = sample(np.sqrt(p), 100_000, seed=5)
    fit = mle_fit(shots)
    assert np.allclose(fit.p_hat, ps_distribution(shots), atol=1e-9)
    assert fit.epsilon_hat < 1e-3
    assert fit.converged


def test_uniform_recovery_n8():
    p = np.full(8, 1 / 8)
    fit = mle_fit(synthetic(p, 0.05, 100_000, 21))
    assert abs(fit.epsilon_hat - 0.05) <= 0.005
    assert tv(fit.p_hat, p) < 0.01


def test_concentrated_recovery_n12():
    p = np.full(12, 0.1 / 11)
    p[4] = 0.9
    fit = mle_fit(synthetic(p, 0.1, 10_000, 3))
    assert abs(fit.epsilon_hat - 0.1) <= 0.02
    assert int(np.argmax(fit.p_hat)) == 4


def test_tv_shrinks_with_shots():
    rng = np.random.default_rng(17)
    p = rng.dirichlet(np.ones(8))
    medians = []
    for n_shots in (1_000, 10_000, 100_000):
        tvs = [tv(mle_fit(synthetic(p, 0.05, n_shots, 1000 + s)).p_hat, p) for s in range(20)]
        medians.append(float(np.median(tvs)))
    assert medians[0] > medians[1] > medians[2]


def test_fit_rejects_empty():
    with pytest.raises(MitigationError):
        mle_fit(ShotSet(3, {}))


def test_fit_with_no_one_hot_strings():
    fit = mle_fit(ShotSet(4, {"0000": 30, "0011": 10}))
    assert abs(fit.p_hat.sum() - 1) < 1e-12


# ---------------------------------------------------------------- bootstrap


def test_constant_estimator_has_zero_spread():
    shots = synthetic(np.full(6, 1 / 6), 0.05, 300, 1)
    mean, std, redraws = bootstrap(shots, lambda s: 3.0, 100, seed=0)
    assert (mean, std, redraws) == (3.0, 0.0, 0)


def test_bootstrap_std_shrinks_with_shots():
    rng = np.random.default_rng(2)
    p = rng.dirichlet(np.ones(8))
    small = bootstrap(synthetic(p, 0.02, 2_000, 1), ps_ipr, 400, seed=3).std
    large = bootstrap(synthetic(p, 0.02, 4_000, 1), ps_ipr, 400, seed=3).std
    assert small / large == pytest.approx(math.sqrt(2), rel=0.25)


def test_bootstrap_is_seeded():
    shots = synthetic(np.full(6, 1 / 6), 0.05, 300, 1)
    a = bootstrap(shots, mle_ipr, 20, seed=4)
    assert a == bootstrap(shots, mle_ipr, 20, seed=4)
    assert a != bootstrap(shots, mle_ipr, 20, seed=5)


def test_bootstrap_redraws_failed_resamples():
    # Only 2 of 40 shots survive post-selection, so many resamples contain none.
    shots = ShotSet(3, {"001": 2, "011": 38})
    res = bootstrap(shots, ps_ipr, 50, seed=1)
    assert res.redraws > 0
    assert res.mean == 1.0
    with pytest.raises(MitigationError, match="too many"):
        bootstrap(ShotSet(3, {"001": 1, "011": 999}), ps_ipr, 50, seed=1, max_redraws=5)


def test_bootstrap_validation():
    with pytest.raises(ValueError):
        bootstrap(ShotSet(2, {"01": 3}), ps_ipr, 1, seed=0)
    with pytest.raises(MitigationError):
        bootstrap(ShotSet(2, {}), ps_ipr, 10, seed=0)


def test_mle_tighter_than_ps_under_heavy_noise():
    N = 24
    p = np.exp(-0.5 * ((np.arange(N) - 12) / 2.0) ** 2)
    p /= p.sum()
    shots = synthetic(p, 0.05, 400, 9)
    ps = bootstrap(shots, ps_ipr, 100, seed=9).std
    mle = bootstrap(shots, mle_ipr, 100, seed=9).std
    assert mle < ps
