"""Detector statistics, threshold calibration and Pd estimation.

The adaptive statistics accept stacks: ``y`` of shape (..., N) and
covariance estimates of shape (..., N, N) evaluate one statistic per trial.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from .lda import Projection, project
from .measures import Measure, sq_distance

log = logging.getLogger(__name__)

DETECTOR_KINDS = ("lda_mig", "mig", "amf", "ace", "mtd")


class SingularCovarianceError(ValueError):
    def __init__(self, rank, n):
        self.rank = rank
        super().__init__(f"covariance estimate is rank deficient: rank {rank} < {n}")


@dataclass
class DetectorSpec:
    kind: str
    measure: Measure | None = None
    projection: Projection | None = None

    def __post_init__(self):
        self.kind = self.kind.strip().lower().replace("-", "_")
        if self.kind not in DETECTOR_KINDS:
            raise ValueError(f"unknown detector kind {self.kind!r}")
        if self.measure is not None:
            self.measure = Measure.parse(self.measure)
        if self.kind in ("mig", "lda_mig") and self.measure is None:
            if self.projection is None:
                raise ValueError(f"{self.kind} detector needs a measure")
            self.measure = self.projection.measure
        if self.kind == "lda_mig":
            if self.projection is None:
                raise ValueError("lda_mig detector needs a projection")
            if self.projection.measure is not self.measure:
                raise ValueError("projection was trained for a different measure")

    @property
    def name(self):
        if self.kind == "mig":
            return f"mig-{self.measure.value}"
        if self.kind == "lda_mig":
            return f"lda-mig-{self.measure.value}-m{self.projection.M}"
        return self.kind


@dataclass
class CalibratedThreshold:
    gamma: float
    pfa_target: float
    trials_used: int


@dataclass
class PdEstimate:
    pd: float
    se: float
    trials: int


def mig_statistic(measure, R_D, R_G):
    """``d^2(R_D, R_G)`` between the CUT matrix and the clutter estimate."""
    return sq_distance(measure, R_D, R_G, check=False)


def lda_mig_statistic(proj, R_D, R_G):
    """MIG statistic evaluated after the projection ``W^H R W``."""
    return sq_distance(proj.measure, project(proj.W, R_D), project(proj.W, R_G), check=False)


def _check_rank(M_hat):
    w = np.linalg.eigvalsh(M_hat)
    n = M_hat.shape[-1]
    tol = n * np.finfo(float).eps * np.max(np.abs(w), axis=-1, keepdims=True)
    rank = np.sum(w > tol, axis=-1)
    if np.any(rank < n):
        raise SingularCovarianceError(int(np.min(rank)), n)


def _whiten(y, s, M_hat):
    M_hat = np.asarray(M_hat)
    _check_rank(M_hat)
    y = np.asarray(y, dtype=complex)
    s = np.broadcast_to(np.asarray(s, dtype=complex), y.shape)
    rhs = np.stack([s, y], axis=-1)
    sol = np.linalg.solve(M_hat, rhs)
    Mi_s, Mi_y = sol[..., 0], sol[..., 1]
    y_Mi_s = np.einsum("...i,...i->...", np.conj(y), Mi_s)
    s_Mi_s = np.real(np.einsum("...i,...i->...", np.conj(s), Mi_s))
    y_Mi_y = np.real(np.einsum("...i,...i->...", np.conj(y), Mi_y))
    return y_Mi_s, s_Mi_s, y_Mi_y


def amf_statistic(y_D, s, M_hat):
    """Adaptive matched filter ``|y^H M^-1 s|^2 / (s^H M^-1 s)``."""
    ys, ss, _ = _whiten(y_D, s, M_hat)
    return np.abs(ys) ** 2 / ss


def ace_statistic(y_D, s, M_hat):
    """Adaptive coherence estimator; the AMF statistic over ``y^H M^-1 y``."""
    ys, ss, yy = _whiten(y_D, s, M_hat)
    return np.abs(ys) ** 2 / (ss * yy)


def mtd_statistic(y_D, s):
    """Doppler filter-bank output ``|s^H y|^2`` at the target bin."""
    return np.abs(np.einsum("...i,...i->...", np.conj(s), np.asarray(y_D))) ** 2


def normalized_scm(ys):
    """SCM of rows ``ys`` after scaling every snapshot to squared norm N."""
    ys = np.asarray(ys, dtype=complex)
    N = ys.shape[-1]
    power = np.sum(np.abs(ys) ** 2, axis=-1, keepdims=True)
    yn = ys * np.sqrt(N / power)
    return np.swapaxes(yn, -1, -2) @ np.conj(yn) / ys.shape[-2]


def calibrate_threshold(statistics_h0, pfa):
    """Empirical threshold for a target false-alarm rate.

    ``gamma`` is the smallest observed value whose exceedance fraction
    (strictly greater) is at most ``pfa``. ``pfa >= 1`` returns ``-inf``.
    """
    x = np.asarray(statistics_h0, dtype=float).ravel()
    n = x.size
    if n == 0:
        raise ValueError("no H0 statistics to calibrate on")
    if not pfa > 0:
        raise ValueError("pfa must be positive")
    if pfa >= 1:
        return CalibratedThreshold(-math.inf, pfa, n)
    if n < 1 / pfa:
        raise ValueError(f"need at least {math.ceil(1 / pfa)} H0 trials for pfa={pfa}, got {n}")
    if n < 100 / pfa:
        log.warning("calibrating pfa=%g on %d trials (fewer than 100/pfa)", pfa, n)
    xs = np.sort(x)
    # exceed[i] = number of values strictly greater than xs[i]
    exceed = n - np.searchsorted(xs, xs, side="right")
    ok = np.nonzero(exceed <= pfa * n * (1 + 1e-12))[0]
    return CalibratedThreshold(float(xs[ok[0]]), pfa, n)


def estimate_pd(statistics_h1, gamma):
    """Fraction of statistics strictly above ``gamma`` with its binomial SE."""
    x = np.asarray(statistics_h1, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("no H1 statistics")
    if isinstance(gamma, CalibratedThreshold):
        gamma = gamma.gamma
    p = float(np.mean(x > gamma))
    return PdEstimate(p, math.sqrt(p * (1 - p) / x.size), x.size)
