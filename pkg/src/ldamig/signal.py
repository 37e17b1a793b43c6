"""Radar sample synthesis and the HPD featurization of sample vectors."""
from dataclasses import dataclass

import numpy as np

from .hermitian import sqrtm


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def steering_vector(N, f_d):
    """Unit-norm Doppler steering vector ``exp(-i 2 pi f_d k) / sqrt(N)``.

    Examples
    --------
    >>> steering_vector(4, 0.0).real
    array([0.5, 0.5, 0.5, 0.5])
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    k = np.arange(N)
    return np.exp(-2j * np.pi * f_d * k) / np.sqrt(N)


def lag_correlations(y):
    """Sample correlation coefficients ``r_l = (1/N) sum_i y_i conj(y_{i+l})``.

    Works on a single vector or on a stack of shape (..., N).
    """
    y = np.asarray(y, dtype=complex)
    N = y.shape[-1]
    r = np.empty_like(y)
    for lag in range(N):
        r[..., lag] = np.sum(y[..., :N - lag] * np.conj(y[..., lag:]), axis=-1)
    return r / N


def build_hpd(y):
    """Diagonally loaded correlation matrix ``r r^H + tr(r r^H) I``.

    Parameters
    ----------
    y : array_like, shape (..., N)
        Sample vectors, not all zero.

    Returns
    -------
    ndarray, shape (..., N, N)
        HPD matrices whose smallest eigenvalue is ``||r||^2``.
    """
    y = np.asarray(y, dtype=complex)
    if y.ndim == 0 or y.shape[-1] == 0:
        raise ValueError("need sample vectors of length N >= 1")
    if np.any(np.all(y == 0, axis=-1)):
        raise ValueError("zero sample vector gives a degenerate (non-HPD) matrix")
    r = lag_correlations(y)
    ridge = np.sum(np.abs(r) ** 2, axis=-1)
    N = y.shape[-1]
    return r[..., :, None] * np.conj(r[..., None, :]) + ridge[..., None, None] * np.eye(N)


def scm(ys):
    """Sample covariance ``(1/K) sum_k y_k y_k^H`` of rows ``ys`` (shape (..., K, N))."""
    ys = np.asarray(ys, dtype=complex)
    if ys.ndim < 2 or ys.shape[-2] < 1:
        raise ValueError("need K >= 1 sample vectors")
    return np.swapaxes(ys, -1, -2) @ np.conj(ys) / ys.shape[-2]


@dataclass
class ClutterModel:
    N: int = 8
    sigma_n2: float = 1.0
    cnr_db: float = 25.0
    rho: float = 0.95
    f_c: float = 0.1

    def __post_init__(self):
        if not 0 <= self.rho < 1:
            raise ValueError("rho must lie in [0, 1)")
        if self.sigma_n2 <= 0:
            raise ValueError("sigma_n2 must be positive")

    @property
    def clutter_power(self):
        return self.sigma_n2 * float(db_to_linear(self.cnr_db))


@dataclass
class InterferenceModel:
    count: int = 2
    f_I: float = 0.22
    power_db: float = 30.0

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("interference count must be >= 0")

    @property
    def power(self):
        return float(db_to_linear(self.power_db))


@dataclass
class CutModel:
    """Nonhomogeneous cell under test: ``tau C + q q^H``.

    ``q_power`` is the squared norm of the random rank-one term; ``None``
    means a tenth of the clutter power.
    """
    tau: float = 1.2
    q_power: float | None = None

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")


@dataclass
class TargetModel:
    f_d: float = 0.2


def clutter_covariance(cm):
    """``sigma_c^2 C0 + sigma_n^2 I`` with ``[C0]_ij = rho^|i-j| exp(i 2 pi f_c (i-j))``."""
    idx = np.arange(cm.N)
    lag = idx[:, None] - idx[None, :]
    C0 = cm.rho ** np.abs(lag) * np.exp(2j * np.pi * cm.f_c * lag)
    return cm.clutter_power * C0 + cm.sigma_n2 * np.eye(cm.N)


def interference_covariance(C, im):
    """``C + sigma_I^2 s s^H`` with ``s`` steered to the interference Doppler."""
    s = steering_vector(C.shape[-1], im.f_I)
    return C + im.power * np.outer(s, np.conj(s))


def circular_normal(rng, shape):
    """I.i.d. zero-mean circular complex normals with unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def rank_one_term(q_white, q_power):
    """Rescale a circular normal draw to squared norm ``q_power``."""
    nrm = np.linalg.norm(q_white, axis=-1, keepdims=True)
    return q_white * np.sqrt(q_power) / nrm


def cut_covariance(C, cut, rng, clutter_power=None):
    """``tau C + q q^H`` with ``q`` a fresh random vector of power ``q_power``.

    When ``cut.q_power`` is None the power is ``clutter_power / 10``; without
    a clutter power the mean diagonal of ``C`` stands in for it.
    """
    N = C.shape[-1]
    power = resolve_q_power(cut, C, clutter_power)
    q = rank_one_term(circular_normal(rng, N), power)
    return cut.tau * C + np.outer(q, np.conj(q))


def resolve_q_power(cut, C, clutter_power=None):
    if cut.q_power is not None:
        return float(cut.q_power)
    if clutter_power is None:
        clutter_power = float(np.real(np.trace(C))) / C.shape[-1]
    return clutter_power / 10.0


def sample_gaussian(C, count, rng):
    """Draw ``count`` vectors from CN(0, C) as rows ``C^{1/2} z``."""
    z = circular_normal(rng, (count, C.shape[-1]))
    return z @ sqrtm(C).T


def amplitude_for_scr(scr_db, s, M_hat):
    """Real amplitude ``alpha`` with ``|alpha|^2 s^H M^-1 s`` equal to the SCR.

    ``M_hat`` may be a stack; the result then has its leading shape.
    """
    quad = np.real(np.einsum("...i,...i->...", np.conj(s),
                             np.linalg.solve(M_hat, np.broadcast_to(s, np.shape(M_hat)[:-1])[..., None])[..., 0]))
    return np.sqrt(db_to_linear(scr_db) / quad)


def empirical_scr_db(alpha, s, M_hat):
    quad = np.real(np.conj(s) @ np.linalg.solve(M_hat, s))
    return 10 * np.log10(np.abs(alpha) ** 2 * quad)
