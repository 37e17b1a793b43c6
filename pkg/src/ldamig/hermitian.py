"""Hermitian linear algebra on stacks of complex matrices.

Every matrix function here goes through a Hermitian eigendecomposition,
so inputs may carry arbitrary leading batch dimensions ``(..., n, n)``.
"""
from typing import NamedTuple

import numpy as np

HERMITIAN_RTOL = 1e-12
# Loewner divided differences fall back to the derivative below this gap.
LOEWNER_GAP = 1e-8


class NotHermitianError(ValueError):
    """Raised when a matrix is not Hermitian within tolerance."""

    def __init__(self, defect):
        self.defect = float(defect)
        super().__init__(
            f"matrix is not Hermitian: relative defect {self.defect:.3e} "
            f"exceeds {HERMITIAN_RTOL:.0e}")


class NotPositiveDefiniteError(ValueError):
    """Raised when a matrix function needs a positive spectrum."""

    def __init__(self, min_eigenvalue):
        self.min_eigenvalue = float(min_eigenvalue)
        super().__init__(
            f"matrix is not positive definite: min eigenvalue "
            f"{self.min_eigenvalue:.3e}")


class HermitianEig(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def ctranspose(X):
    """Conjugate transpose over the last two axes."""
    return np.swapaxes(np.conj(X), -1, -2)


def symmetrize(A):
    """Hermitian part ``(A + A^H) / 2``."""
    return (A + ctranspose(A)) / 2


def hermitian_defect(A):
    """Largest relative Frobenius asymmetry ``||A - A^H|| / ||A||`` of a stack."""
    A = np.asarray(A)
    num = np.linalg.norm(A - ctranspose(A), axis=(-2, -1))
    den = np.linalg.norm(A, axis=(-2, -1))
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(den > 0, num / np.where(den > 0, den, 1.0), num)
    return float(np.max(rel)) if rel.size else 0.0


def as_hermitian(A, tol=HERMITIAN_RTOL):
    """Validate and symmetrize a (stack of) square matrices.

    Raises
    ------
    NotHermitianError
        If the relative asymmetry exceeds ``tol``.
    """
    A = np.asarray(A)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    defect = hermitian_defect(A)
    if defect > tol:
        raise NotHermitianError(defect)
    return symmetrize(A)


def hermitian_eig(A, check=True):
    """Eigendecomposition ``A = U diag(w) U^H`` with ascending ``w``.

    Parameters
    ----------
    A : ndarray, shape (..., n, n)
        Hermitian matrices.
    check : bool
        Validate Hermiticity first. Internal callers that already hold a
        symmetrized matrix pass ``False``.

    Returns
    -------
    HermitianEig
        ``eigenvalues`` of shape (..., n) and unitary ``eigenvectors``.
    """
    if check:
        A = as_hermitian(A)
    w, U = np.linalg.eigh(A)
    return HermitianEig(w, U)


def _rebuild(U, fw):
    return (U * fw[..., None, :]) @ ctranspose(U)


_FUNCS = {
    "log": (np.log, True),
    "exp": (np.exp, False),
    "sqrt": (np.sqrt, True),
    "inv_sqrt": (lambda w: 1.0 / np.sqrt(w), True),
    "inverse": (lambda w: 1.0 / w, True),
}


def hpd_fun(A, f, check=True):
    """Apply a scalar function to a Hermitian matrix through its spectrum.

    Parameters
    ----------
    A : ndarray, shape (..., n, n)
        Hermitian matrices; positive definite for every ``f`` but ``exp``.
    f : {'log', 'exp', 'sqrt', 'inv_sqrt', 'inverse'}
        Function to apply.

    Returns
    -------
    ndarray, shape (..., n, n)
        ``U f(diag(w)) U^H``.
    """
    try:
        func, needs_pd = _FUNCS[f]
    except KeyError:
        raise ValueError(f"unknown matrix function {f!r}") from None
    w, U = hermitian_eig(A, check=check)
    if needs_pd and np.any(w <= 0):
        raise NotPositiveDefiniteError(np.min(w))
    return _rebuild(U, func(w))


def logm(A, check=True):
    return hpd_fun(A, "log", check)


def expm(A, check=True):
    return hpd_fun(A, "exp", check)


def sqrtm(A, check=True):
    return hpd_fun(A, "sqrt", check)


def invsqrtm(A, check=True):
    return hpd_fun(A, "inv_sqrt", check)


def invm(A, check=True):
    return hpd_fun(A, "inverse", check)


def sqrt_pair(A, check=True):
    """Return ``(A^{1/2}, A^{-1/2})`` from one eigendecomposition."""
    w, U = hermitian_eig(A, check=check)
    if np.any(w <= 0):
        raise NotPositiveDefiniteError(np.min(w))
    s = np.sqrt(w)
    return _rebuild(U, s), _rebuild(U, 1.0 / s)


def log_divided_differences(w):
    """Loewner matrix of first divided differences of ``ln`` at ``w``.

    ``M[i, j] = (ln w_i - ln w_j) / (w_i - w_j)`` with ``1 / w_i`` on
    (near-)coincident eigenvalues.
    """
    wi = w[..., :, None]
    wj = w[..., None, :]
    diff = wi - wj
    scale = np.max(np.abs(w), axis=-1)[..., None, None]
    close = np.abs(diff) < LOEWNER_GAP * scale
    lw = np.log(w)
    safe = np.where(close, 1.0, diff)
    return np.where(close, 1.0 / wi, (lw[..., :, None] - lw[..., None, :]) / safe)


def dlog_frechet(A, H, check=True):
    """Frechet derivative of the principal logarithm at ``A`` along ``H``.

    Evaluated in closed form as ``U [M o (U^H H U)] U^H`` where ``M`` is the
    Loewner matrix of divided differences of ``ln`` on the spectrum of ``A``.
    This equals ``int_0^1 [(A - I)s + I]^{-1} H [(A - I)s + I]^{-1} ds``.

    Parameters
    ----------
    A : ndarray, shape (..., n, n)
        HPD base points.
    H : ndarray, shape (..., n, n)
        Hermitian directions, broadcastable against ``A``.
    """
    w, U = hermitian_eig(A, check=check)
    if np.any(w <= 0):
        raise NotPositiveDefiniteError(np.min(w))
    Uh = ctranspose(U)
    return U @ (log_divided_differences(w) * (Uh @ H @ U)) @ Uh


def frob_inner(A, B):
    """Frobenius inner product ``tr(A^H B)``, conjugate-linear in ``A``."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch: {A.shape} vs {B.shape}")
    return complex(np.vdot(A, B))


def min_eigenvalue(A):
    """Smallest eigenvalue of a Hermitian matrix (or of every matrix in a stack)."""
    return np.linalg.eigvalsh(symmetrize(np.asarray(A)))[..., 0]
