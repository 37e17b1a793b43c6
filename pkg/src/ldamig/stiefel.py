"""Riemannian gradient descent on the complex Stiefel manifold St(M, C^N).

The manifold carries the metric inherited from the embedding,
``g(Z1, Z2) = Re tr(Z1^H Z2)``. Euclidean gradients of real costs are taken
with respect to that real inner product.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .hermitian import ctranspose, symmetrize

log = logging.getLogger(__name__)

ORTHO_TOL = 1e-9
ITERATE_TOL = 1e-13
TANGENT_TOL = 1e-8


class NotTangentError(ValueError):
    pass


def orthonormality_error(W):
    M = W.shape[-1]
    return float(np.linalg.norm(ctranspose(W) @ W - np.eye(M)))


def qr_orthonormalize(A):
    """Thin QR with the diagonal of R made real positive; returns Q."""
    Q, R = np.linalg.qr(A)
    d = np.diagonal(R)
    phase = np.where(np.abs(d) > 0, d / np.abs(d), 1.0)
    return Q * phase[None, :]


def random_stiefel(N, M, rng):
    """Seeded starting point: QR of a complex Gaussian N x M matrix."""
    if M > N:
        raise ValueError("need N >= M")
    A = rng.standard_normal((N, M)) + 1j * rng.standard_normal((N, M))
    return qr_orthonormalize(A)


def check_stiefel(W, tol=1e-10):
    W = np.asarray(W)
    if W.ndim != 2 or W.shape[0] < W.shape[1]:
        raise ValueError(f"expected an N x M matrix with N >= M, got {W.shape}")
    err = orthonormality_error(W)
    if err > tol:
        raise ValueError(f"W^H W deviates from I by {err:.3e}")
    return W


def tangent_defect(W, Z):
    return float(np.linalg.norm(ctranspose(W) @ Z + ctranspose(Z) @ W))


def riemannian_gradient(W, euclid_grad):
    """Project a Euclidean gradient onto the tangent space at ``W``.

    ``grad = G - W sym(W^H G)``.
    """
    W = np.asarray(W)
    G = np.asarray(euclid_grad)
    if W.shape != G.shape:
        raise ValueError(f"shape mismatch: {W.shape} vs {G.shape}")
    return G - W @ symmetrize(ctranspose(W) @ G)


def geodesic_step(W, Z, t=1.0, check=True):
    """Point ``gamma(t)`` on the geodesic with ``gamma(0) = W``, ``gamma'(0) = Z``.

    Uses the closed form for the embedded metric,
    ``[W Z] expm(t [[A, -B], [I, A]]) [I; 0] expm(-t A)`` with
    ``A = W^H Z`` and ``B = Z^H Z``. Drift off the manifold above 1e-9 is
    repaired by a sign-fixed thin QR. ``check=False`` skips the tangency
    test for directions that are tangent by construction.
    """
    W = np.asarray(W)
    Z = np.asarray(Z)
    if W.shape != Z.shape:
        raise ValueError(f"shape mismatch: {W.shape} vs {Z.shape}")
    defect = tangent_defect(W, Z) if check else 0.0
    if defect > TANGENT_TOL * max(1.0, float(np.linalg.norm(Z))):
        raise NotTangentError(f"Z is not tangent at W (defect {defect:.3e})")
    M = W.shape[1]
    A = ctranspose(W) @ Z
    B = ctranspose(Z) @ Z
    I = np.eye(M)
    block = np.block([[A, -B], [I, A]])
    E = scipy.linalg.expm(t * block)[:, :M]
    out = np.hstack([W, Z]) @ E @ scipy.linalg.expm(-t * A)
    if orthonormality_error(out) > ORTHO_TOL:
        out = qr_orthonormalize(out)
    return out


@dataclass
class RgdOptions:
    max_iter: int = 300
    grad_tol: float = 1e-6
    init_step: float = 1.0
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    seed: int = 0
    max_backtracks: int = 40

    def __post_init__(self):
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")
        if self.max_iter < 0:
            raise ValueError("max_iter must be >= 0")


@dataclass
class RgdResult:
    W: np.ndarray
    costs: list = field(default_factory=list)
    iterations: int = 0
    grad_norm: float = np.nan
    stalled: bool = False
    converged: bool = False


def rgd_minimize(cost, euclid_grad, W0, opts=None):
    """Minimize ``cost`` over St(M, C^N) by geodesic gradient descent.

    Steps follow ``W <- exp_W(-eta grad)`` with ``eta`` chosen by Armijo
    backtracking; a trial step starts at twice the last accepted one.

    Parameters
    ----------
    cost : callable
        ``W -> float``.
    euclid_grad : callable
        ``W -> ndarray`` of the same shape as ``W``.
    W0 : ndarray, shape (N, M)
        Orthonormal starting point.
    opts : RgdOptions, optional

    Returns
    -------
    RgdResult
        ``costs`` holds the cost at W0 followed by every accepted iterate,
        so it is non-increasing. ``stalled`` is set when the line search
        runs out of backtracks.
    """
    opts = opts or RgdOptions()
    W = check_stiefel(np.array(W0, dtype=complex), tol=ORTHO_TOL)
    f = float(cost(W))
    if not np.isfinite(f):
        raise ValueError("cost is not finite at the starting point")
    res = RgdResult(W=W, costs=[f])
    step = opts.init_step
    for it in range(opts.max_iter):
        g = riemannian_gradient(W, euclid_grad(W))
        gnorm2 = float(np.real(np.vdot(g, g)))
        res.grad_norm = np.sqrt(gnorm2)
        if res.grad_norm < opts.grad_tol:
            res.converged = True
            break
        eta = step
        for _ in range(opts.max_backtracks):
            W_new = geodesic_step(W, -g, eta, check=False)
            # tighter than ORTHO_TOL: an off-norm iterate biases the cost
            # by about drift * |f| and stalls the gradient near the minimum
            if orthonormality_error(W_new) > ITERATE_TOL:
                W_new = qr_orthonormalize(W_new)
            f_new = float(cost(W_new))
            if np.isfinite(f_new) and f_new <= f - opts.armijo_c * eta * gnorm2:
                break
            eta *= opts.backtrack
        else:
            log.warning("line search failed after %d backtracks at iteration %d",
                        opts.max_backtracks, it)
            res.stalled = True
            break
        W, f = W_new, f_new
        res.costs.append(f)
        res.iterations = it + 1
        step = 2 * eta
    else:
        res.grad_norm = float(np.linalg.norm(riemannian_gradient(W, euclid_grad(W))))
        res.converged = res.grad_norm < opts.grad_tol
    res.W = W
    return res
