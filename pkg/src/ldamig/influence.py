"""Influence functions of the geometric means and of the SCM.

The closed forms give the first-order displacement ``H`` of a mean when
``J`` outliers are mixed into ``K`` matrices with a small weight ``eps``;
``perturbation_oracle`` recomputes that displacement numerically from the
contaminated weighted mean.
"""
from dataclasses import dataclass, field

import numpy as np

from .hermitian import as_hermitian, invm, logm, sqrt_pair, sqrtm, symmetrize
from .means import MeanOptions, arithmetic_mean, geometric_mean, weighted_mean_batch
from .measures import ConditioningError, Measure

SCM = "scm"
ESTIMATORS = (SCM,) + tuple(m.value for m in Measure)


def parse_estimator(value):
    """Return ``SCM`` or a :class:`Measure`."""
    if isinstance(value, str) and value.strip().lower() == SCM:
        return SCM
    return Measure.parse(value)


@dataclass
class OutlierScenario:
    base: np.ndarray
    outliers: np.ndarray
    epsilon: float = 1e-4
    base_mean: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.base = as_hermitian(np.asarray(self.base, dtype=complex))
        self.outliers = as_hermitian(np.asarray(self.outliers, dtype=complex))
        if self.base.ndim != 3 or len(self.base) < 1:
            raise ValueError("need K >= 1 base matrices")
        if self.outliers.ndim != 3 or len(self.outliers) < 1:
            raise ValueError("need J >= 1 outliers")
        if self.base.shape[1:] != self.outliers.shape[1:]:
            raise ValueError("base and outlier dimensions differ")
        if not 0 < self.epsilon < 0.1:
            raise ValueError("epsilon must lie in (0, 0.1)")

    @property
    def K(self):
        return len(self.base)

    @property
    def J(self):
        return len(self.outliers)

    def mean(self, estimator, opts=None):
        """Mean of the base matrices (cached per estimator)."""
        est = parse_estimator(estimator)
        if est not in self.base_mean:
            if est == SCM:
                self.base_mean[est] = arithmetic_mean(self.base)
            else:
                self.base_mean[est] = geometric_mean(est, self.base, opts).mean
        return self.base_mean[est]


def _airm_H(Rbar, Ps):
    Ph, Pih = sqrt_pair(Ps, check=False)
    # Log(P^{-1} R) = P^{-1/2} Log(P^{-1/2} R P^{-1/2}) P^{1/2}, likewise for R P^{-1}
    inner = logm(symmetrize(Pih @ Rbar @ Pih), check=False)
    log_pr = Pih @ inner @ Ph
    log_rp = Ph @ inner @ Pih
    return -np.mean(Rbar @ log_pr + log_rp @ Rbar, axis=0) / 2


def _lem_H(Rbar, Ps):
    Rh = sqrtm(Rbar, check=False)
    D = logm(Ps, check=False).mean(axis=0) - logm(Rbar, check=False)
    return Rh @ D @ Rh


def _jbld_H(Rbar, Rs, Ps):
    K, J = len(Rs), len(Ps)
    Ri = invm(Rbar, check=False)
    left = (Ri - np.linalg.inv((Rbar + Ps) / 2)).sum(axis=0)
    mid_inv = np.linalg.inv((Rbar + Rs) / 2)
    bracket = (Ri @ Ri - 0.5 * mid_inv @ mid_inv).sum(axis=0)
    cond = np.linalg.cond(bracket)
    if not np.isfinite(cond) or cond > 1e13:
        raise ConditioningError(f"JBLD influence bracket is singular (cond {cond:.3e})")
    return (K / J) * left @ np.linalg.inv(bracket)


def _skld_H(Rbar, Rs, Ps):
    K, J = len(Rs), len(Ps)
    A = np.linalg.inv(Rs).sum(axis=0)
    Pi = np.linalg.inv(Ps)
    right = (Ps - Rbar @ Pi @ Rbar).sum(axis=0)
    return (K / J) * np.linalg.solve(A @ Rbar + Rbar @ A, right)


def influence_matrix(estimator, sc, opts=None):
    """Closed-form influence matrix ``H`` of an estimator.

    Parameters
    ----------
    estimator : {'scm'} or Measure
        ``'scm'`` uses the arithmetic mean; otherwise the geometric mean of
        the given measure.
    sc : OutlierScenario
    opts : MeanOptions, optional
        Used for the iterative base means.

    Returns
    -------
    ndarray, shape (n, n)
        Hermitian influence matrix (symmetrized after evaluation).
    """
    est = parse_estimator(estimator)
    Rbar = sc.mean(est, opts)
    Ps = sc.outliers
    if est == SCM:
        H = Ps.mean(axis=0) - Rbar
    elif est is Measure.AIRM:
        H = _airm_H(Rbar, Ps)
    elif est is Measure.LEM:
        H = _lem_H(Rbar, Ps)
    elif est is Measure.JBLD:
        H = _jbld_H(Rbar, sc.base, Ps)
    else:
        H = _skld_H(Rbar, sc.base, Ps)
    return symmetrize(H)


def influence_value(estimator, sc, opts=None):
    """Influence function value ``||H||_F``."""
    return float(np.linalg.norm(influence_matrix(estimator, sc, opts)))


def _contaminated_mean(est, sc, eps, opts):
    K, J = sc.K, sc.J
    if est == SCM:
        return (1 - eps) * sc.base.mean(axis=0) + eps * sc.outliers.mean(axis=0)
    Rs = np.concatenate([sc.base, sc.outliers])[None]
    w = np.concatenate([np.full(K, (1 - eps) / K), np.full(J, eps / J)])
    R, _, conv = weighted_mean_batch(est, Rs, w, opts)
    if not conv[0]:
        raise RuntimeError(f"contaminated {est} mean did not converge")
    return R[0]


def perturbation_oracle(estimator, sc, opts=None, richardson=False):
    """Finite-difference influence ``(R_hat - R_bar) / eps``.

    ``R_hat`` minimizes ``(1-eps) mean_k d^2(R, R_k) + eps mean_j d^2(R, P_j)``
    and is computed with the weighted versions of the mean algorithms.
    With ``richardson=True`` the quotients at ``eps`` and ``eps/2`` are
    combined to cancel the O(eps) term.
    """
    est = parse_estimator(estimator)
    opts = opts or MeanOptions(max_iter=2000, rel_tol=1e-12)
    Rbar = sc.mean(est, opts) if est == SCM else _contaminated_mean(est, sc, 0.0, opts)
    eps = sc.epsilon
    D = (_contaminated_mean(est, sc, eps, opts) - Rbar) / eps
    if richardson:
        D2 = (_contaminated_mean(est, sc, eps / 2, opts) - Rbar) / (eps / 2)
        D = 2 * D2 - D
    return symmetrize(D)


def influence_table(sc, estimators=ESTIMATORS, opts=None):
    """Influence values for several estimators on one scenario."""
    return {str(e): influence_value(e, sc, opts) for e in estimators}

