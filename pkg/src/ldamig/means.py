"""Geometric means of HPD matrices under the four measures.

LEM and SKLD means have closed forms. AIRM and JBLD means are computed by
fixed-point iterations started from the arithmetic mean. Both iterations run
on stacks of independent matrix sets at once: an input of shape
``(B, K, n, n)`` yields ``B`` means, and every set stops on its own
convergence test so a result never depends on the rest of its batch.
"""
from dataclasses import dataclass

import numpy as np

from .hermitian import (NotPositiveDefiniteError, as_hermitian, ctranspose,
                        dlog_frechet, expm, invm, logm, sqrt_pair, sqrtm,
                        symmetrize)
from .measures import Measure, sq_distance


AIRM_DECREASE = 0.45


@dataclass
class MeanOptions:
    """Controls for the iterative means.

    ``step_eta`` is the AIRM step applied to the *unnormalized* sum of the
    K logarithms; it should lie in ((K-1)/K, 1) and defaults to the
    midpoint (2K-1)/(2K). A step that fails a sufficient-decrease test on
    the Karcher cost is halved toward 1/K, which always passes.
    """
    max_iter: int = 200
    rel_tol: float = 1e-10
    step_eta: float | None = None
    init: str = "arithmetic"

    def __post_init__(self):
        if not 0 < self.rel_tol < 1:
            raise ValueError("rel_tol must lie in (0, 1)")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.init not in ("arithmetic", "lem"):
            raise ValueError(f"unknown init {self.init!r}")


@dataclass
class MeanResult:
    mean: np.ndarray
    iterations: int | np.ndarray
    residual: float | np.ndarray
    converged: bool | np.ndarray


def arithmetic_mean(Rs):
    """Entrywise average of K Hermitian matrices.

    Examples
    --------
    >>> arithmetic_mean([np.eye(2), 3 * np.eye(2)])
    array([[2., 0.],
           [0., 2.]])
    """
    Rs = np.asarray(Rs)
    if Rs.ndim != 3 or Rs.shape[0] == 0:
        raise ValueError("need a non-empty list of square matrices")
    return Rs.mean(axis=0)


def _check_sets(Rs):
    Rs = np.asarray(Rs)
    if Rs.ndim < 3 or Rs.shape[-3] == 0:
        raise ValueError("need at least one matrix (K >= 1)")
    Rs = as_hermitian(Rs)
    w = np.linalg.eigvalsh(Rs)
    if np.any(w[..., 0] <= 0):
        raise NotPositiveDefiniteError(np.min(w[..., 0]))
    return Rs.astype(complex)


def _weighted_sum(w, A):
    # w: (B, K), A: (B, K, n, n)
    return np.einsum("bk,bkij->bij", w, A)


def _lem(Rs, w):
    return expm(_weighted_sum(w, logm(Rs, check=False)), check=False)


def _skld(Rs, w):
    A = _weighted_sum(w, invm(Rs, check=False))
    Bm = _weighted_sum(w, Rs)
    Ah, Aih = sqrt_pair(symmetrize(A), check=False)
    inner = sqrtm(symmetrize(Ah @ Bm @ Ah), check=False)
    return symmetrize(Aih @ inner @ Aih)


def _rel_change(new, old):
    return (np.linalg.norm(new - old, axis=(-2, -1))
            / np.linalg.norm(old, axis=(-2, -1)))


def _airm_state(Rih, Rs, w):
    """Weighted log sum and Karcher cost at the point with inverse root Rih."""
    C = symmetrize(Rih[:, None] @ Rs @ Rih[:, None])
    lam, U = np.linalg.eigh(C)
    if np.any(lam <= 0):
        raise NotPositiveDefiniteError(np.min(lam))
    ll = np.log(lam)
    L = (U * ll[..., None, :]) @ ctranspose(U)
    cost = np.einsum("bk,bk->b", w, np.sum(ll ** 2, axis=-1))
    return _weighted_sum(w, L), cost


def _airm(Rs, w, R0, opts):
    B, K = Rs.shape[:2]
    eta = opts.step_eta if opts.step_eta is not None else (2 * K - 1) / (2 * K)
    # step on the normalized weighted sum: t = eta * K, halving toward t = 1
    t = np.full(B, eta * K)
    R = R0.copy()
    Rh, Rih = sqrt_pair(R, check=False)
    S, cost = _airm_state(Rih, Rs, w)
    iters = np.zeros(B, dtype=int)
    conv = np.zeros(B, dtype=bool)
    active = np.arange(B)
    for _ in range(opts.max_iter):
        if active.size == 0:
            break
        a = active
        Rh_a, S_a, cost_a, R_a = Rh[a], S[a], cost[a], R[a]
        Rs_a, w_a = Rs[a], w[a]
        gnorm2 = np.sum(np.abs(S_a) ** 2, axis=(-2, -1))
        tt = t[a].copy()
        newR = np.empty_like(R_a)
        newRh = np.empty_like(R_a)
        newRih = np.empty_like(R_a)
        newS = np.empty_like(R_a)
        newcost = np.empty_like(cost_a)
        pending = np.arange(a.size)
        for _bt in range(64):
            p = pending
            cand = symmetrize(
                Rh_a[p] @ expm(tt[p, None, None] * S_a[p], check=False) @ Rh_a[p])
            ch, cih = sqrt_pair(cand, check=False)
            cS, cc = _airm_state(cih, Rs_a[p], w_a[p])
            # sufficient decrease against the slope -2 ||S||^2; along the
            # geodesic F(t) ~ F(0) - (2t - t^2) ||S||^2, so steps above
            # 2 (1 - AIRM_DECREASE) are refused
            need = AIRM_DECREASE * 2 * tt[p] * gnorm2[p]
            ok = (cc <= cost_a[p] - need + 1e-12 * cost_a[p]) | (tt[p] <= 1 + 1e-12)
            q = p[ok]
            newR[q], newRh[q], newRih[q] = cand[ok], ch[ok], cih[ok]
            newS[q], newcost[q] = cS[ok], cc[ok]
            pending = p[~ok]
            if pending.size == 0:
                break
            tt[pending] = (tt[pending] + 1) / 2
        t[a] = tt
        change = _rel_change(newR, R_a)
        R[a], Rh[a], Rih[a], S[a], cost[a] = newR, newRh, newRih, newS, newcost
        iters[a] += 1
        done = change < opts.rel_tol
        conv[a[done]] = True
        active = a[~done]
    return R, iters, conv


def jbld_cost(R, Rs, w=None):
    """Weighted JBLD cost ``sum_k w_k d_J^2(R, R_k)``; uniform weights by default."""
    Rs = np.asarray(Rs)
    if w is None:
        w = np.full(Rs.shape[0], 1.0 / Rs.shape[0])
    return float(np.dot(w, sq_distance(Measure.JBLD, np.broadcast_to(R, Rs.shape), Rs,
                                       check=False)))


def _jbld_step(R, Rs, w):
    mid_inv = np.linalg.inv((R[:, None] + Rs) / 2)
    return symmetrize(np.linalg.inv(_weighted_sum(w, mid_inv)))


def _jbld(Rs, w, R0, opts):
    B = Rs.shape[0]
    R = R0.copy()
    iters = np.zeros(B, dtype=int)
    conv = np.zeros(B, dtype=bool)
    active = np.arange(B)
    for _ in range(opts.max_iter):
        if active.size == 0:
            break
        a = active
        newR = _jbld_step(R[a], Rs[a], w[a])
        change = _rel_change(newR, R[a])
        R[a] = newR
        iters[a] += 1
        done = change < opts.rel_tol
        conv[a[done]] = True
        active = a[~done]
    return R, iters, conv


def _residual(m, R, Rs):
    """Norm of the whitened unnormalized gradient ``R^{1/2} (sum_k grad d^2(R, R_k)) R^{1/2}``."""
    Rh, Rih = sqrt_pair(R, check=False)
    n = R.shape[-1]
    if m is Measure.AIRM:
        G = 2 * logm(symmetrize(Rih[:, None] @ Rs @ Rih[:, None]), check=False).sum(axis=1)
    elif m is Measure.LEM:
        D = (logm(R, check=False)[:, None] - logm(Rs, check=False)).sum(axis=1)
        G = 2 * Rh @ dlog_frechet(R, symmetrize(D), check=False) @ Rh
    elif m is Measure.JBLD:
        mid_inv = np.linalg.inv((R[:, None] + Rs) / 2)
        G = 0.5 * (Rh[:, None] @ mid_inv @ Rh[:, None] - np.eye(n)).sum(axis=1)
    else:
        G = (Rh[:, None] @ np.linalg.inv(Rs) @ Rh[:, None]
             - Rih[:, None] @ Rs @ Rih[:, None]).sum(axis=1)
    return np.linalg.norm(G, axis=(-2, -1))


def weighted_mean_batch(measure, Rs, weights, opts=None):
    """Weighted geometric means of a stack of matrix sets.

    Parameters
    ----------
    measure : Measure or str
    Rs : ndarray, shape (B, K, n, n)
        HPD matrices, assumed validated.
    weights : ndarray, shape (B, K) or (K,)
        Nonnegative weights; normalized to sum to one per set.
    opts : MeanOptions, optional

    Returns
    -------
    means : ndarray, shape (B, n, n)
    iterations : ndarray of int, shape (B,)
    converged : ndarray of bool, shape (B,)
    """
    m = Measure.parse(measure)
    opts = opts or MeanOptions()
    Rs = np.asarray(Rs, dtype=complex)
    B, K = Rs.shape[:2]
    w = np.broadcast_to(np.asarray(weights, dtype=float), (B, K))
    w = w / w.sum(axis=1, keepdims=True)
    if m is Measure.LEM:
        return _lem(Rs, w), np.ones(B, dtype=int), np.ones(B, dtype=bool)
    if m is Measure.SKLD:
        return _skld(Rs, w), np.ones(B, dtype=int), np.ones(B, dtype=bool)
    if opts.init == "lem":
        R0 = _lem(Rs, w)
    else:
        R0 = _weighted_sum(w, Rs)
    R0 = symmetrize(R0)
    if m is Measure.AIRM:
        return _airm(Rs, w, R0, opts)
    return _jbld(Rs, w, R0, opts)


def geometric_mean_batch(measure, Rs, opts=None):
    """Unweighted geometric means of ``B`` sets, shape ``(B, K, n, n)``.

    Returns a :class:`MeanResult` whose fields are arrays over the batch.
    """
    m = Measure.parse(measure)
    Rs = _check_sets(Rs)
    if Rs.ndim != 4:
        raise ValueError("expected a stack of sets with shape (B, K, n, n)")
    K = Rs.shape[1]
    R, iters, conv = weighted_mean_batch(m, Rs, np.full(K, 1.0 / K), opts)
    return MeanResult(R, iters, _residual(m, R, Rs), conv)


def geometric_mean(measure, Rs, opts=None):
    """Geometric mean of K HPD matrices under ``measure``.

    Parameters
    ----------
    measure : Measure or str
    Rs : array_like, shape (K, n, n)
        HPD matrices.
    opts : MeanOptions, optional

    Returns
    -------
    MeanResult
        ``residual`` is the Frobenius norm of the whitened stationarity
        condition; ``converged`` is False if ``max_iter`` ran out first.
    """
    Rs = np.asarray(Rs)
    if Rs.ndim != 3:
        raise ValueError("expected K matrices with shape (K, n, n)")
    res = geometric_mean_batch(measure, Rs[None], opts)
    return MeanResult(res.mean[0], int(res.iterations[0]), float(res.residual[0]),
                      bool(res.converged[0]))


def stationarity_residual(measure, R, Rs):
    """Whitened gradient norm of the mean cost at ``R`` (zero at the mean)."""
    return float(_residual(Measure.parse(measure), np.asarray(R)[None],
                           np.asarray(Rs)[None])[0])
