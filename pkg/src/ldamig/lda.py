"""Discriminative projection of HPD matrices onto a lower-dimensional manifold.

A projection ``f_W(R) = W^H R W`` with ``W`` on St(M, C^N) is learned by
minimizing

    psi(W) = sum_within d^2(f_W(R_a), f_W(R_b)) - sum_between d^2(f_W(R_a), f_W(R_b))

over fixed neighbor pairs chosen in the original manifold.
"""
from dataclasses import dataclass, field

import numpy as np

from .hermitian import (NotPositiveDefiniteError, as_hermitian, ctranspose,
                        dlog_frechet, logm, sqrt_pair, symmetrize)
from .measures import Measure, sq_distance
from .stiefel import RgdOptions, check_stiefel, random_stiefel, rgd_minimize


@dataclass
class LabeledHpdSet:
    """Training matrices: label 1 (clutter plus target) and label 0 (clutter)."""
    signal_class: np.ndarray
    clutter_class: np.ndarray

    def __post_init__(self):
        self.signal_class = as_hermitian(np.asarray(self.signal_class, dtype=complex))
        self.clutter_class = as_hermitian(np.asarray(self.clutter_class, dtype=complex))
        for name, arr in (("signal", self.signal_class), ("clutter", self.clutter_class)):
            if arr.ndim != 3 or len(arr) < 1:
                raise ValueError(f"{name} class must hold at least one N x N matrix")
        if self.signal_class.shape[1:] != self.clutter_class.shape[1:]:
            raise ValueError("class dimensions differ")
        w = np.linalg.eigvalsh(self.pooled)[:, 0]
        if np.any(w <= 0):
            raise NotPositiveDefiniteError(np.min(w))

    @property
    def pooled(self):
        return np.concatenate([self.signal_class, self.clutter_class])

    @property
    def labels(self):
        return np.concatenate([np.ones(len(self.signal_class), dtype=int),
                               np.zeros(len(self.clutter_class), dtype=int)])

    @property
    def N(self):
        return self.signal_class.shape[-1]


@dataclass
class NeighborSpec:
    nu_w: int = 15
    nu_b: int = 20
    measure: Measure = Measure.AIRM

    def __post_init__(self):
        self.measure = Measure.parse(self.measure)
        if self.nu_w < 1 or self.nu_b < 1:
            raise ValueError("neighbor counts must be >= 1")


@dataclass
class Neighbors:
    """Per-anchor neighbor index lists into the pooled (signal, clutter) stack."""
    within: list
    between: list

    def pairs(self):
        def flat(lists):
            if not lists:
                return np.empty((0, 2), dtype=int)
            rows = [np.column_stack([np.full(len(js), a), js]) for a, js in enumerate(lists)]
            return np.concatenate(rows).astype(int)
        return flat(self.within), flat(self.between)


@dataclass
class Projection:
    W: np.ndarray
    measure: Measure
    train_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.measure = Measure.parse(self.measure)
        self.W = check_stiefel(np.asarray(self.W, dtype=complex), tol=1e-9)

    @property
    def N(self):
        return self.W.shape[0]

    @property
    def M(self):
        return self.W.shape[1]

    def apply(self, R):
        """``W^H R W`` for a matrix or a stack of matrices."""
        return project(self.W, R)


def project(W, R):
    return symmetrize(ctranspose(W) @ R @ W)


def pairwise_sq_distances(measure, A, B):
    """Matrix of ``d^2(A_i, B_j)``, row by row."""
    out = np.empty((len(A), len(B)))
    for i, Ai in enumerate(A):
        out[i] = sq_distance(measure, np.broadcast_to(Ai, B.shape), B, check=False)
    return out


def select_neighbors(data, spec):
    """Nearest same-class and other-class neighbors of every training matrix.

    Distances use ``spec.measure`` in the original manifold. Counts are
    clamped to the available population; ties go to the smaller index and
    an anchor never counts as its own neighbor.
    """
    P = data.pooled
    labels = data.labels
    D = pairwise_sq_distances(spec.measure, P, P)
    within, between = [], []
    idx = np.arange(len(P))
    for a in range(len(P)):
        same = idx[(labels == labels[a]) & (idx != a)]
        other = idx[labels != labels[a]]
        within.append(same[np.argsort(D[a, same], kind="stable")][:spec.nu_w])
        between.append(other[np.argsort(D[a, other], kind="stable")][:spec.nu_b])
    return Neighbors(within, between)


def _projected(W, P):
    Pw = project(W, P)
    w = np.linalg.eigvalsh(Pw)[:, 0]
    if np.any(w <= 0):
        raise NotPositiveDefiniteError(np.min(w))
    return Pw


def cost_psi(W, data, neighbors, measure):
    """Within-class minus between-class sum of projected squared distances."""
    m = Measure.parse(measure)
    Pw = _projected(W, data.pooled)
    wp, bp = neighbors.pairs()
    phi_w = np.sum(sq_distance(m, Pw[wp[:, 0]], Pw[wp[:, 1]], check=False)) if len(wp) else 0.0
    phi_b = np.sum(sq_distance(m, Pw[bp[:, 0]], Pw[bp[:, 1]], check=False)) if len(bp) else 0.0
    return float(phi_w - phi_b)


def _log_of_pencil(P, Q):
    """``Log(P^{-1} Q)`` computed through the congruence ``P^{-1/2} Q P^{-1/2}``."""
    Ph, Pih = sqrt_pair(P, check=False)
    inner = logm(symmetrize(Pih @ Q @ Pih), check=False)
    return Pih @ inner @ Ph


def pair_coefficients(measure, P, Q):
    """M x M factors with ``grad_W d^2(W^H X W, W^H Y W) = X W S_X + Y W S_Y``.

    ``P = W^H X W`` and ``Q = W^H Y W``, stacked over leading dimensions.
    """
    m = Measure.parse(measure)
    if m is Measure.AIRM:
        L = _log_of_pencil(P, Q)
        return -4 * L @ np.linalg.inv(P), 4 * L @ np.linalg.inv(Q)
    if m is Measure.LEM:
        D = logm(P, check=False) - logm(Q, check=False)
        return 4 * dlog_frechet(P, D, check=False), -4 * dlog_frechet(Q, D, check=False)
    if m is Measure.JBLD:
        S = 2 * np.linalg.inv(P + Q)
        return S - np.linalg.inv(P), S - np.linalg.inv(Q)
    Pi = np.linalg.inv(P)
    Qi = np.linalg.inv(Q)
    return 2 * (Qi - Pi @ Q @ Pi), 2 * (Pi - Qi @ P @ Qi)


def grad_sq_distance(measure, W, X, Y):
    """Euclidean gradient in ``W`` of ``d^2(W^H X W, W^H Y W)``.

    The gradient is taken for the real inner product ``Re tr(G^H Z)``, so
    ``d/dt d^2(.., W + t Z) = Re tr(G^H Z)``. Stacks of ``(X, Y)`` pairs
    give a stack of gradients.
    """
    W = np.asarray(W)
    X = np.asarray(X)
    Y = np.asarray(Y)
    P = project(W, X)
    Q = project(W, Y)
    SX, SY = pair_coefficients(measure, P, Q)
    return X @ W @ SX + Y @ W @ SY


def grad_psi(W, data, neighbors, measure):
    """Euclidean gradient of :func:`cost_psi`, accumulated per training matrix."""
    P = data.pooled
    Pw = _projected(W, P)
    wp, bp = neighbors.pairs()
    M = W.shape[1]
    T = np.zeros((len(P), M, M), dtype=complex)
    for pairs, sign in ((wp, 1.0), (bp, -1.0)):
        if len(pairs) == 0:
            continue
        SX, SY = pair_coefficients(measure, Pw[pairs[:, 0]], Pw[pairs[:, 1]])
        np.add.at(T, pairs[:, 0], sign * SX)
        np.add.at(T, pairs[:, 1], sign * SY)
    return (P @ W @ T).sum(axis=0)


def learn_projection(data, spec, M, opts=None, W0=None, neighbors=None):
    """Learn ``W`` on St(M, C^N) by minimizing ``psi``.

    Parameters
    ----------
    data : LabeledHpdSet
    spec : NeighborSpec
    M : int
        Target dimension, ``M < N``.
    opts : RgdOptions, optional
        ``opts.seed`` drives the starting point when ``W0`` is not given.
    W0 : ndarray, optional
    neighbors : Neighbors, optional
        Precomputed neighbor lists; selected from ``data`` otherwise.

    Returns
    -------
    Projection
        ``train_meta`` records the seed, iteration count, cost trace, final
        cost, final gradient norm and whether the line search stalled.
    """
    opts = opts or RgdOptions()
    N = data.N
    if not 1 <= M < N:
        raise ValueError(f"need 1 <= M < N, got M={M}, N={N}")
    if neighbors is None:
        neighbors = select_neighbors(data, spec)
    if W0 is None:
        W0 = random_stiefel(N, M, np.random.default_rng(opts.seed))
    m = spec.measure
    res = rgd_minimize(lambda W: cost_psi(W, data, neighbors, m),
                       lambda W: grad_psi(W, data, neighbors, m), W0, opts)
    meta = {
        "seed": int(opts.seed),
        "iterations": res.iterations,
        "costs": res.costs,
        "final_cost": res.costs[-1],
        "grad_norm": res.grad_norm,
        "stalled": res.stalled,
        "converged": res.converged,
    }
    return Projection(res.W, m, meta)


def class_distance_ratio(measure, data, W=None):
    """Mean between-class over mean within-class squared distance.

    With ``W`` given the distances are taken between projected matrices.
    """
    X, Y = data.signal_class, data.clutter_class
    if W is not None:
        X, Y = project(W, X), project(W, Y)
    dxy = pairwise_sq_distances(measure, X, Y)
    dxx = pairwise_sq_distances(measure, X, X)
    dyy = pairwise_sq_distances(measure, Y, Y)
    nx, ny = len(X), len(Y)
    within = (dxx.sum() + dyy.sum()) / max(nx * (nx - 1) + ny * (ny - 1), 1)
    return float(dxy.mean() / within)
