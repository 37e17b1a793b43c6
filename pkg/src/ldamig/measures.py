"""Squared geometric measures between HPD matrices.

All four measures accept stacks of matrices with matching (or broadcastable)
leading dimensions and return an array of squared distances; a pair of plain
2-D matrices returns a Python float.
"""
import enum

import numpy as np

from .hermitian import (NotPositiveDefiniteError, as_hermitian, ctranspose,
                        logm, symmetrize)


class ConditioningError(ValueError):
    """Raised when an intermediate matrix is numerically singular."""


class Measure(str, enum.Enum):
    AIRM = "airm"
    LEM = "lem"
    JBLD = "jbld"
    SKLD = "skld"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            names = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown measure {value!r}; expected one of {names}") from None

    def __str__(self):
        return self.value


MEASURES = tuple(Measure)


def _spectrum(A):
    w = np.linalg.eigvalsh(A)
    if np.any(w <= 0):
        raise NotPositiveDefiniteError(np.min(w))
    return w


def _out(d, scalar):
    d = np.maximum(d, 0.0)
    return float(d) if scalar else d


def airm_sq(X, Y):
    # Hermitian congruence form X^{-1/2} Y X^{-1/2}.
    wx, Ux = np.linalg.eigh(X)
    if np.any(wx <= 0):
        raise NotPositiveDefiniteError(np.min(wx))
    Xis = (Ux * (1.0 / np.sqrt(wx))[..., None, :]) @ ctranspose(Ux)
    C = symmetrize(Xis @ Y @ Xis)
    w = _spectrum(C)
    return np.sum(np.log(w) ** 2, axis=-1)


def lem_sq(X, Y):
    D = logm(X, check=False) - logm(Y, check=False)
    return np.sum(np.abs(D) ** 2, axis=(-2, -1))


def jbld_sq(X, Y):
    mid = (X + Y) / 2
    wm = np.linalg.eigvalsh(mid)
    trace = np.real(np.trace(mid, axis1=-2, axis2=-1))
    if np.any(wm < 1e-14 * trace[..., None]):
        raise ConditioningError(
            f"(X+Y)/2 is numerically singular: min eigenvalue {np.min(wm):.3e}")
    wx = _spectrum(X)
    wy = _spectrum(Y)
    return (np.sum(np.log(wm), axis=-1)
            - 0.5 * (np.sum(np.log(wx), axis=-1) + np.sum(np.log(wy), axis=-1)))


def _trace_prod(A, B):
    # tr(A B) without forming the product.
    return np.sum(A * np.swapaxes(B, -1, -2), axis=(-2, -1))


def skld_sq(X, Y):
    _spectrum(X)
    _spectrum(Y)
    n = X.shape[-1]
    t = _trace_prod(np.linalg.inv(Y), X) + _trace_prod(np.linalg.inv(X), Y)
    return np.real(t) - 2 * n


_SQ = {
    Measure.AIRM: airm_sq,
    Measure.LEM: lem_sq,
    Measure.JBLD: jbld_sq,
    Measure.SKLD: skld_sq,
}


def sq_distance(measure, X, Y, check=True):
    """Squared distance/divergence ``d^2(X, Y)`` under ``measure``.

    Parameters
    ----------
    measure : Measure or str
        One of ``airm``, ``lem``, ``jbld``, ``skld``.
    X, Y : ndarray, shape (..., n, n)
        HPD matrices.
    check : bool
        Validate Hermiticity. Positivity is always enforced.

    Returns
    -------
    float or ndarray, shape (...)
        Nonnegative squared measure.
    """
    m = Measure.parse(measure)
    X = np.asarray(X)
    Y = np.asarray(Y)
    if X.shape[-2:] != Y.shape[-2:]:
        raise ValueError(f"dimension mismatch: {X.shape[-2:]} vs {Y.shape[-2:]}")
    if check:
        X = as_hermitian(X)
        Y = as_hermitian(Y)
    scalar = X.ndim == 2 and Y.ndim == 2
    return _out(_SQ[m](X, Y), scalar)
