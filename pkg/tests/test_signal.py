import numpy as np
import pytest

from ldamig.signal import (ClutterModel, CutModel, InterferenceModel, amplitude_for_scr,
                           build_hpd, circular_normal, clutter_covariance, cut_covariance,
                           empirical_scr_db, interference_covariance, lag_correlations,
                           sample_gaussian, scm, steering_vector)
from oracles import lag_sums, random_complex


def test_steering_zero_doppler():
    np.testing.assert_allclose(steering_vector(4, 0.0), [0.5] * 4)


def test_steering_entries_and_norm():
    s = steering_vector(8, 0.2)
    k = np.arange(8)
    np.testing.assert_allclose(s, np.exp(-0.4j * np.pi * k) / np.sqrt(8), atol=1e-15)
    for N, f in [(1, 0.3), (5, -0.1), (16, 0.49)]:
        assert np.linalg.norm(steering_vector(N, f)) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ValueError):
        steering_vector(0, 0.1)


def test_lag_correlations_match_loops(rng):
    y = random_complex(rng, 7)
    np.testing.assert_allclose(lag_correlations(y), lag_sums(y), atol=1e-14)


def test_build_hpd_unit_vector():
    R = build_hpd(np.array([1, 0, 0, 0], dtype=complex))
    E = np.zeros((4, 4))
    E[0, 0] = 1
    np.testing.assert_allclose(R, (E + np.eye(4)) / 16, atol=1e-15)


def test_build_hpd_two_ones():
    R = build_hpd(np.array([1.0, 1.0]))
    np.testing.assert_allclose(R, [[2.25, 0.5], [0.5, 1.5]], atol=1e-15)


def test_build_hpd_ridge_bound(rng):
    ys = random_complex(rng, 50, 6)
    R = build_hpd(ys)
    r = lag_correlations(ys)
    w = np.linalg.eigvalsh(R)
    ridge = np.sum(np.abs(r) ** 2, axis=-1)
    assert np.all(w[:, 0] > 0)
    np.testing.assert_allclose(w[:, 0], ridge, rtol=1e-10)


def test_build_hpd_rejects_zero():
    with pytest.raises(ValueError):
        build_hpd(np.zeros(3))


def test_scm_examples(rng):
    y = random_complex(rng, 4)
    np.testing.assert_allclose(scm(y[None]), np.outer(y, y.conj()))
    np.testing.assert_allclose(scm(np.eye(5)), np.eye(5) / 5)
    np.testing.assert_array_equal(scm(np.zeros((3, 4))), 0)
    ys = random_complex(rng, 6, 4)
    ref = sum(np.outer(v, v.conj()) for v in ys) / 6
    np.testing.assert_allclose(scm(ys), ref, atol=1e-14)


def test_clutter_covariance_structure():
    cm = ClutterModel()
    C = clutter_covariance(cm)
    assert cm.clutter_power == pytest.approx(10 ** 2.5)
    assert 10 ** 2.5 == pytest.approx(316.228, abs=1e-3)
    C0 = (C - np.eye(8)) / cm.clutter_power
    np.testing.assert_allclose(np.diag(C0), 1.0)
    for i in range(8):
        for j in range(8):
            assert abs(C0[i, j]) == pytest.approx(0.95 ** abs(i - j))
            if i > 0 and j > 0:
                assert C[i, j] == pytest.approx(C[i - 1, j - 1])
    np.testing.assert_allclose(C, C.conj().T)
    assert np.min(np.linalg.eigvalsh(C)) > 0


def test_model_validation():
    with pytest.raises(ValueError):
        ClutterModel(rho=1.0)
    with pytest.raises(ValueError):
        ClutterModel(sigma_n2=0)
    with pytest.raises(ValueError):
        InterferenceModel(count=-1)
    with pytest.raises(ValueError):
        CutModel(tau=0)


def test_defaults():
    assert CutModel().tau == 1.2
    assert InterferenceModel().f_I == 0.22


def test_interference_and_cut_degenerate_cases(rng):
    C = clutter_covariance(ClutterModel())
    np.testing.assert_array_equal(interference_covariance(C, InterferenceModel(power_db=-np.inf)), C)
    s = steering_vector(8, 0.22)
    np.testing.assert_allclose(interference_covariance(C, InterferenceModel()),
                               C + 1000 * np.outer(s, s.conj()))
    np.testing.assert_allclose(cut_covariance(C, CutModel(tau=1.0, q_power=0.0), rng), C)


def test_cut_covariance_rank_one_power(rng):
    C = clutter_covariance(ClutterModel())
    Ct = cut_covariance(C, CutModel(tau=1.2, q_power=5.0), rng)
    Q = Ct - 1.2 * C
    w = np.linalg.eigvalsh(Q)
    assert w[-1] == pytest.approx(5.0)
    np.testing.assert_allclose(w[:-1], 0, atol=1e-10)
    Ct = cut_covariance(C, CutModel(), rng, clutter_power=100.0)
    assert np.trace(Ct - 1.2 * C).real == pytest.approx(10.0)


def test_sample_gaussian_identity():
    rng = np.random.default_rng(5)
    y = sample_gaussian(np.eye(4), 10_000, rng)
    S = scm(y)
    assert np.linalg.norm(S - np.eye(4)) / 2 < 0.1


def test_sample_gaussian_marginals_and_determinism():
    C = np.diag([4.0, 1.0]).astype(complex)
    y = sample_gaussian(C, 20_000, np.random.default_rng(1))
    np.testing.assert_allclose(np.mean(np.abs(y) ** 2, axis=0), [4, 1], rtol=0.05)
    again = sample_gaussian(C, 20_000, np.random.default_rng(1))
    np.testing.assert_array_equal(y, again)


def test_circular_normal_unit_variance():
    z = circular_normal(np.random.default_rng(2), 100_000)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, rel=0.02)
    assert abs(np.mean(z ** 2)) < 0.02


def test_amplitude_reaches_requested_scr(rng):
    C = clutter_covariance(ClutterModel())
    s = steering_vector(8, 0.2)
    for scr in (-5.0, 10.0, 30.0):
        a = amplitude_for_scr(scr, s, C)
        assert a >= 0
        assert empirical_scr_db(a, s, C) == pytest.approx(scr, abs=1e-10)
    Ms = np.stack([C, 2 * C])
    a = amplitude_for_scr(10.0, s, Ms)
    assert a.shape == (2,)
    assert a[1] == pytest.approx(np.sqrt(2) * a[0])


def test_injected_target_scr_from_data():
    # matched-filter power E|s^H C^-1 y|^2 = |alpha|^2 q^2 + q with q = s^H C^-1 s
    C = clutter_covariance(ClutterModel())
    s = steering_vector(8, 0.2)
    rng = np.random.default_rng(11)
    n = 10_000
    q = np.real(s.conj() @ np.linalg.solve(C, s))
    for scr in (0.0, 10.0, 20.0):
        alpha = amplitude_for_scr(scr, s, C)
        y = alpha * s + sample_gaussian(C, n, rng)
        mf = y @ np.linalg.solve(C, s).conj()
        est = (np.mean(np.abs(mf) ** 2) - q) / q ** 2 * q
        assert 10 * np.log10(est) == pytest.approx(scr, abs=0.5)
