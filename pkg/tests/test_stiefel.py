import numpy as np
import pytest

from ldamig.stiefel import (NotTangentError, RgdOptions, check_stiefel, geodesic_step,
                            orthonormality_error, qr_orthonormalize, random_stiefel,
                            rgd_minimize, riemannian_gradient, tangent_defect)
from oracles import random_complex, random_hermitian, random_stiefel as oracle_stiefel


def _tangent(rng, W):
    return riemannian_gradient(W, random_complex(rng, *W.shape))


def test_gradient_of_w_times_hermitian_vanishes(rng):
    W = oracle_stiefel(rng, 6, 3)
    S = random_hermitian(rng, 3)
    np.testing.assert_allclose(riemannian_gradient(W, W @ S), 0, atol=1e-13)
    np.testing.assert_allclose(riemannian_gradient(W, np.zeros_like(W)), 0)


def test_gradient_is_tangent(rng):
    for _ in range(20):
        W = oracle_stiefel(rng, 7, 3)
        Z = riemannian_gradient(W, 10 * random_complex(rng, 7, 3))
        assert tangent_defect(W, Z) < 1e-10


def test_gradient_shape_mismatch(rng):
    with pytest.raises(ValueError):
        riemannian_gradient(oracle_stiefel(rng, 4, 2), np.zeros((4, 3)))


def test_geodesic_zero_velocity(rng):
    W = oracle_stiefel(rng, 5, 2)
    for t in (0.3, 4.0):
        np.testing.assert_allclose(geodesic_step(W, np.zeros_like(W), t), W, atol=1e-14)


def test_geodesic_scalar_rotation():
    out = geodesic_step(np.array([[1.0 + 0j]]), np.array([[1j]]), np.pi / 2)
    assert out[0, 0] == pytest.approx(1j, abs=1e-12)


def test_geodesic_stays_on_manifold(rng):
    for _ in range(10):
        W = oracle_stiefel(rng, 8, 3)
        Z = _tangent(rng, W)
        for t in (0.1, 1.0):
            assert orthonormality_error(geodesic_step(W, Z, t)) < 1e-9


def test_geodesic_velocity(rng):
    W = oracle_stiefel(rng, 6, 2)
    Z = _tangent(rng, W)
    h = 1e-6
    v = (geodesic_step(W, Z, h) - geodesic_step(W, Z, -h)) / (2 * h)
    np.testing.assert_allclose(v, Z, atol=1e-7)


def test_geodesic_rejects_non_tangent(rng):
    W = oracle_stiefel(rng, 5, 2)
    with pytest.raises(NotTangentError):
        geodesic_step(W, W, 1.0)


def test_directional_derivative_convention(rng):
    A = random_hermitian(rng, 6)
    B = random_complex(rng, 6, 2)
    cost = lambda W: float(np.real(np.trace(W.conj().T @ A @ W)) + np.real(np.vdot(B, W)))
    grad = lambda W: 2 * A @ W + B
    W = oracle_stiefel(rng, 6, 2)
    Z = _tangent(rng, W)
    eps = 1e-6
    fd = (cost(geodesic_step(W, Z, eps)) - cost(geodesic_step(W, Z, -eps))) / (2 * eps)
    ref = np.real(np.vdot(grad(W), Z))
    assert fd == pytest.approx(ref, rel=1e-4)


def test_qr_orthonormalize_positive_diagonal(rng):
    A = random_complex(rng, 6, 3)
    Q = qr_orthonormalize(A)
    assert orthonormality_error(Q) < 1e-12
    R = Q.conj().T @ A
    np.testing.assert_allclose(np.imag(np.diag(R)), 0, atol=1e-12)
    assert np.all(np.real(np.diag(R)) > 0)


def test_random_stiefel_seeded():
    a = random_stiefel(5, 2, np.random.default_rng(3))
    b = random_stiefel(5, 2, np.random.default_rng(3))
    np.testing.assert_array_equal(a, b)
    check_stiefel(a)
    with pytest.raises(ValueError):
        random_stiefel(2, 3, np.random.default_rng(0))
    with pytest.raises(ValueError):
        check_stiefel(np.ones((3, 2)))


def test_rgd_zero_gradient(rng):
    W0 = oracle_stiefel(rng, 4, 2)
    res = rgd_minimize(lambda W: 1.0, lambda W: np.zeros_like(W), W0)
    np.testing.assert_array_equal(res.W, W0)
    assert res.costs == [1.0] and res.converged and res.iterations == 0


def test_rgd_zero_iterations(rng):
    W0 = oracle_stiefel(rng, 4, 2)
    res = rgd_minimize(lambda W: 0.0, lambda W: W, W0, RgdOptions(max_iter=0))
    np.testing.assert_array_equal(res.W, W0)


def test_rgd_rayleigh(rng):
    X = random_complex(rng, 6, 6)
    A = X @ X.conj().T
    lam = np.linalg.eigvalsh(A)
    cost = lambda W: -float(np.real(np.trace(W.conj().T @ A @ W)))
    grad = lambda W: -2 * A @ W
    res = rgd_minimize(cost, grad, oracle_stiefel(rng, 6, 1), RgdOptions(max_iter=2000))
    assert res.converged
    assert res.costs[-1] == pytest.approx(-lam[-1], abs=1e-6)
    assert np.all(np.diff(res.costs) <= 0)


def test_rgd_monotone_on_random_cost(rng):
    A = random_hermitian(rng, 7)
    B = random_hermitian(rng, 3)
    cost = lambda W: float(np.real(np.trace(A @ W @ B @ W.conj().T)))
    grad = lambda W: 2 * A @ W @ B
    res = rgd_minimize(cost, grad, oracle_stiefel(rng, 7, 3), RgdOptions(max_iter=100))
    assert np.all(np.diff(res.costs) <= 0)
    assert orthonormality_error(res.W) < 1e-9


def test_rgd_stall_is_flagged(rng):
    # gradient pointing the wrong way: no step can satisfy Armijo
    A = random_hermitian(rng, 5)
    cost = lambda W: float(np.real(np.trace(W.conj().T @ A @ W)))
    res = rgd_minimize(cost, lambda W: -2 * A @ W, oracle_stiefel(rng, 5, 2),
                       RgdOptions(max_backtracks=10))
    assert res.stalled and not res.converged


def test_options_validation():
    with pytest.raises(ValueError):
        RgdOptions(backtrack=1.0)
    with pytest.raises(ValueError):
        RgdOptions(max_iter=-1)
