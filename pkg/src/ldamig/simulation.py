"""Seeded Monte Carlo trials for the simulated detection scenario.

Every trial draws from its own generator ``default_rng([seed, stream,
*tags, trial])``, so a trial's samples depend only on its index and never on
how trials are grouped into chunks or spread over threads.

A trial consists of ``K`` secondary sample vectors, of which the first
``L`` come from the interference-plus-clutter covariance, and the clutter
part ``c`` of the cell under test, drawn from ``tau C + q q^H`` with a fresh
``q``. Under H1 the CUT is ``alpha s + c`` with ``alpha`` set from the SCR
and the secondary SCM.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .detect import (DetectorSpec, ace_statistic, amf_statistic, mtd_statistic,
                     normalized_scm)
from .hermitian import sqrtm
from .lda import project
from .means import MeanOptions, geometric_mean_batch
from .measures import Measure, sq_distance
from .signal import (ClutterModel, CutModel, InterferenceModel, TargetModel,
                     amplitude_for_scr, build_hpd, circular_normal,
                     clutter_covariance, interference_covariance,
                     rank_one_term, resolve_q_power, scm, steering_vector)

log = logging.getLogger(__name__)

STREAM_H0 = 1
STREAM_H1 = 2
STREAM_ROBUSTNESS = 3
STREAM_TRAIN_SIGNAL = 4
STREAM_TRAIN_CLUTTER = 5
STREAM_DISCRIMINATE = 6
STREAM_H0_CHECK = 7

CHUNK = 256


def trial_rng(seed, stream, trial, *tags):
    return np.random.default_rng([int(seed), int(stream), *map(int, tags), int(trial)])


@dataclass
class Scene:
    """Clutter, interference, CUT and target models plus the secondary count K."""
    clutter: ClutterModel = field(default_factory=ClutterModel)
    interference: InterferenceModel = field(default_factory=InterferenceModel)
    cut: CutModel = field(default_factory=CutModel)
    target: TargetModel = field(default_factory=TargetModel)
    K: int = 8

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.interference.count > self.K:
            raise ValueError(f"cannot inject {self.interference.count} interferences into "
                             f"{self.K} secondary cells")

    @property
    def N(self):
        return self.clutter.N

    @property
    def L(self):
        return self.interference.count

    @cached_property
    def C(self):
        return clutter_covariance(self.clutter)

    @cached_property
    def C_I(self):
        return interference_covariance(self.C, self.interference)

    @cached_property
    def sqrt_C(self):
        return sqrtm(self.C)

    @cached_property
    def sqrt_C_I(self):
        return sqrtm(self.C_I)

    @cached_property
    def s(self):
        return steering_vector(self.N, self.target.f_d)

    @cached_property
    def q_power(self):
        return resolve_q_power(self.cut, self.C, self.clutter.clutter_power)


@dataclass
class TrialBatch:
    secondary: np.ndarray  # (B, K, N)
    cut_clutter: np.ndarray  # (B, N)

    def __len__(self):
        return len(self.cut_clutter)


def draw_trials(scene, seed, stream, indices, *tags):
    """Secondary data and CUT clutter for the given trial indices."""
    N, K, L = scene.N, scene.K, scene.L
    B = len(indices)
    z_sec = np.empty((B, K, N), dtype=complex)
    q = np.empty((B, N), dtype=complex)
    z_cut = np.empty((B, N), dtype=complex)
    for b, i in enumerate(indices):
        rng = trial_rng(seed, stream, i, *tags)
        z_sec[b] = circular_normal(rng, (K, N))
        q[b] = circular_normal(rng, N)
        z_cut[b] = circular_normal(rng, N)
    sec = np.empty_like(z_sec)
    sec[:, :L] = z_sec[:, :L] @ scene.sqrt_C_I.T
    sec[:, L:] = z_sec[:, L:] @ scene.sqrt_C.T
    q = rank_one_term(q, scene.q_power)
    Ct = scene.cut.tau * scene.C + q[:, :, None] * np.conj(q[:, None, :])
    c = np.einsum("bij,bj->bi", sqrtm(Ct, check=False), z_cut)
    return TrialBatch(sec, c)


def inject_target(batch, scene, scr_db):
    """CUT vectors ``alpha s + c`` with a real ``alpha`` per trial."""
    alpha = amplitude_for_scr(scr_db, scene.s, scm(batch.secondary))
    return alpha[:, None] * scene.s + batch.cut_clutter


def _chunks(n, size=CHUNK):
    return [range(a, min(a + size, n)) for a in range(0, n, size)]


def run_chunked(func, n, threads=1, size=CHUNK):
    """Apply ``func`` to fixed index chunks; results come back in chunk order."""
    chunks = _chunks(n, size)
    if threads <= 1 or len(chunks) <= 1:
        return [func(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(func, chunks))


@dataclass
class MeanStats:
    computed: int = 0
    failed: int = 0

    @property
    def failure_rate(self):
        return self.failed / self.computed if self.computed else 0.0

    def merge(self, other):
        return MeanStats(self.computed + other.computed, self.failed + other.failed)


class DetectorBank:
    """Evaluates a list of detectors on trial batches.

    Geometric means are computed once per measure and batch and shared by
    the MIG and LDA-MIG detectors of that measure.
    """

    def __init__(self, detectors, scene, mean_opts=None):
        self.detectors = list(detectors)
        self.scene = scene
        self.mean_opts = mean_opts or MeanOptions()
        names = [d.name for d in self.detectors]
        if len(set(names)) != len(names):
            raise ValueError("duplicate detectors")
        for d in self.detectors:
            if d.projection is not None and d.projection.N != scene.N:
                raise ValueError(f"{d.name}: projection is {d.projection.N}-dimensional, "
                                 f"scene has N={scene.N}")

    @property
    def names(self):
        return [d.name for d in self.detectors]

    @property
    def measures(self):
        out = []
        for d in self.detectors:
            if d.measure is not None and d.measure not in out:
                out.append(d.measure)
        return out

    def prepare(self, batch):
        """Per-batch quantities that do not depend on the CUT."""
        ctx = {"stats": MeanStats()}
        kinds = {d.kind for d in self.detectors}
        if self.measures:
            Rk = build_hpd(batch.secondary)
            for m in self.measures:
                res = geometric_mean_batch(m, Rk, self.mean_opts)
                ctx[m] = res.mean
                ctx["stats"].computed += len(batch)
                ctx["stats"].failed += int(np.sum(~res.converged))
        if "amf" in kinds:
            ctx["scm"] = scm(batch.secondary)
        if "ace" in kinds:
            ctx["nscm"] = normalized_scm(batch.secondary)
        return ctx

    def evaluate(self, ctx, y):
        """Statistics of every detector for CUT vectors ``y`` (shape (B, N))."""
        s = self.scene.s
        out = {}
        R_D = build_hpd(y) if self.measures else None
        for d in self.detectors:
            if d.kind == "amf":
                out[d.name] = amf_statistic(y, s, ctx["scm"])
            elif d.kind == "ace":
                out[d.name] = ace_statistic(y, s, ctx["nscm"])
            elif d.kind == "mtd":
                out[d.name] = mtd_statistic(y, s)
            elif d.kind == "mig":
                out[d.name] = sq_distance(d.measure, R_D, ctx[d.measure], check=False)
            else:
                W = d.projection.W
                out[d.name] = sq_distance(d.measure, project(W, R_D),
                                          project(W, ctx[d.measure]), check=False)
        return out


def h0_statistics(bank, seed, n_trials, threads=1, stream=STREAM_H0):
    """Statistics under H0 (CUT = clutter only) for ``n_trials`` trials."""
    def work(idx):
        batch = draw_trials(bank.scene, seed, stream, idx)
        ctx = bank.prepare(batch)
        return bank.evaluate(ctx, batch.cut_clutter), ctx["stats"]

    parts = run_chunked(work, n_trials, threads)
    stats = MeanStats()
    for _, st in parts:
        stats = stats.merge(st)
    return {n: np.concatenate([p[0][n] for p in parts]) for n in bank.names}, stats


def h1_statistics(bank, seed, n_trials, scr_grid_db, threads=1, stream=STREAM_H1):
    """Statistics under H1, shape ``(len(scr_grid_db), n_trials)`` per detector.

    All SCR points reuse the same clutter draws and secondary means.
    """
    scr_grid_db = list(scr_grid_db)

    def work(idx):
        batch = draw_trials(bank.scene, seed, stream, idx)
        ctx = bank.prepare(batch)
        per_scr = [bank.evaluate(ctx, inject_target(batch, bank.scene, scr))
                   for scr in scr_grid_db]
        return {n: np.stack([p[n] for p in per_scr]) for n in bank.names}, ctx["stats"]

    parts = run_chunked(work, n_trials, threads)
    stats = MeanStats()
    for _, st in parts:
        stats = stats.merge(st)
    return {n: np.concatenate([p[0][n] for p in parts], axis=1) for n in bank.names}, stats


def default_calibration_trials(pfa):
    return int(math.ceil(100 / pfa - 1e-9))


def training_set(scene, measure, m, n, train_scr_db, seed, mean_opts=None, threads=1,
                 streams=(STREAM_TRAIN_SIGNAL, STREAM_TRAIN_CLUTTER), tags=()):
    """Labeled HPD matrices for learning a projection.

    The signal class holds CUT matrices with a target at ``train_scr_db``;
    the clutter class holds geometric means (under ``measure``) of secondary
    sets. Both are drawn exactly as in a detection trial.

    Returns
    -------
    signal : ndarray, shape (m, N, N)
    clutter : ndarray, shape (n, N, N)
    """
    measure = Measure.parse(measure)
    mean_opts = mean_opts or MeanOptions()

    def sig(idx):
        batch = draw_trials(scene, seed, streams[0], idx, *tags)
        return build_hpd(inject_target(batch, scene, train_scr_db))

    def clu(idx):
        batch = draw_trials(scene, seed, streams[1], idx, *tags)
        res = geometric_mean_batch(measure, build_hpd(batch.secondary), mean_opts)
        if not np.all(res.converged):
            log.warning("%d training means did not converge", int(np.sum(~res.converged)))
        return res.mean

    X = np.concatenate(run_chunked(sig, m, threads))
    Y = np.concatenate(run_chunked(clu, n, threads))
    return X, Y


def make_detectors(specs, projections=None):
    """Build :class:`DetectorSpec` objects from short strings.

    ``"amf"``, ``"ace"``, ``"mtd"``, ``"mig:<measure>"`` and
    ``"lda_mig:<measure>:<M>"``; ``projections`` maps ``(measure, M)`` to a
    :class:`~ldamig.lda.Projection`.
    """
    out = []
    for text in specs:
        parts = text.strip().lower().replace("-", "_").split(":")
        kind = parts[0]
        if kind in ("amf", "ace", "mtd"):
            out.append(DetectorSpec(kind))
        elif kind == "mig":
            out.append(DetectorSpec("mig", Measure.parse(parts[1])))
        elif kind == "lda_mig":
            m, M = Measure.parse(parts[1]), int(parts[2])
            proj = (projections or {}).get((m, M))
            if proj is None:
                raise KeyError(f"no projection for {m.value} with M={M}")
            out.append(DetectorSpec("lda_mig", m, proj))
        else:
            raise ValueError(f"unknown detector {text!r}")
    return out
