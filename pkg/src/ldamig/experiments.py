"""Experiment runners behind the command line: robustness curves, Pd-vs-SCR
curves, projection training and discrimination scatter data.

Every runner takes an :class:`~ldamig.config.ExperimentConfig` and returns
plain Python structures; the ``*_csv`` helpers turn them into text.
"""
import io
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import describe
from .detect import calibrate_threshold, estimate_pd
from .formats import load_projection, save_projection
from .hermitian import logm
from .influence import ESTIMATORS, SCM, OutlierScenario, influence_value
from .lda import LabeledHpdSet, NeighborSpec, learn_projection, project, select_neighbors
from .means import geometric_mean_batch
from .measures import ConditioningError, Measure
from .signal import build_hpd, circular_normal
from .simulation import (STREAM_DISCRIMINATE, STREAM_ROBUSTNESS, DetectorBank, Scene,
                         default_calibration_trials, h0_statistics, h1_statistics,
                         make_detectors, run_chunked, training_set, trial_rng)

log = logging.getLogger(__name__)

STREAM_DISCRIMINATE_CLUTTER = 8
MAX_FAILURE_RATE = 0.01

ROBUSTNESS_COLUMNS = ("L", "estimator", "influence", "se")
PD_COLUMNS = ("scr_db", "detector", "threshold", "pd", "se")
SCATTER_COLUMNS = ("stage", "scr_db", "label", "pc1", "pc2")


class ConvergenceAbort(RuntimeError):
    pass


def scene_from_config(cfg, K=None):
    return Scene(cfg.clutter, cfg.interference, cfg.cut, cfg.target,
                 cfg.K if K is None else K)


def _fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return f"{x:.12g}"


def to_csv(columns, rows, header=()):
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _metadata(cfg, extra=()):
    # thread count is excluded so output bytes never depend on it
    return [line for line in describe(cfg) if not line.startswith("threads ")] + list(extra)


# -- robustness ---------------------------------------------------------------

def _robustness_draw(scene, seed, idx, n_out):
    N, K = scene.N, scene.K
    z_b = np.empty((len(idx), K, N), dtype=complex)
    z_o = np.empty((len(idx), n_out, N), dtype=complex)
    for b, i in enumerate(idx):
        rng = trial_rng(seed, STREAM_ROBUSTNESS, i)
        z_b[b] = circular_normal(rng, (K, N))
        z_o[b] = circular_normal(rng, (n_out, N))
    base = build_hpd(z_b @ scene.sqrt_C.T)
    out = build_hpd(z_o @ scene.sqrt_C_I.T) if n_out else np.empty((len(idx), 0, N, N))
    return base, out


def run_robustness(cfg):
    """Average influence values per outlier count and estimator.

    Each trial draws ``K`` clutter HPD matrices and ``max(L)`` interference
    HPD matrices; the scenario with ``L`` outliers uses the first ``L`` of
    them, so curves over ``L`` are nested within a trial.

    Returns
    -------
    rows : list of (L, estimator, mean influence, standard error)
    info : dict
        Mean failure counts.
    """
    rc = cfg.robustness
    scene = scene_from_config(cfg, K=rc.K)
    L_values = sorted(set(int(x) for x in rc.L_values))
    if L_values and L_values[0] < 0:
        raise ValueError("outlier counts must be >= 0")
    n_out = max(L_values, default=0)
    opts = cfg.means.options()
    measures = [Measure.parse(e) for e in ESTIMATORS if e != SCM]

    def work(idx):
        base, out = _robustness_draw(scene, cfg.master_seed, idx, n_out)
        means = {SCM: base.mean(axis=1)}
        failed = 0
        for m in measures:
            res = geometric_mean_batch(m, base, opts)
            means[m] = res.mean
            failed += int(np.sum(~res.converged))
        vals = np.zeros((len(idx), len(L_values), len(ESTIMATORS)))
        for b in range(len(idx)):
            cache = {e: means[e][b] for e in means}
            for li, L in enumerate(L_values):
                if L == 0:
                    continue
                sc = OutlierScenario(base[b], out[b, :L], rc.epsilon, base_mean=cache)
                for ei, e in enumerate(ESTIMATORS):
                    try:
                        vals[b, li, ei] = influence_value(e, sc, opts)
                    except ConditioningError:
                        vals[b, li, ei] = np.nan
        return vals, failed

    parts = run_chunked(work, rc.trials, cfg.threads)
    vals = np.concatenate([p[0] for p in parts])
    failed = sum(p[1] for p in parts)
    computed = rc.trials * len(measures)
    n_bad = int(np.sum(np.isnan(vals)))
    rate = (failed + n_bad) / (computed + vals.size)
    if rate > MAX_FAILURE_RATE:
        raise ConvergenceAbort(
            f"{failed} of {computed} geometric means did not converge and {n_bad} influence "
            f"evaluations were ill-conditioned ({100 * rate:.2f}% > "
            f"{100 * MAX_FAILURE_RATE:.0f}%); raise means.max_iter or check the scenario")
    rows = []
    for li, L in enumerate(L_values):
        for ei, e in enumerate(ESTIMATORS):
            v = vals[:, li, ei]
            v = v[np.isfinite(v)]
            se = v.std(ddof=1) / math.sqrt(len(v)) if len(v) > 1 else 0.0
            rows.append((L, e, float(v.mean()), float(se)))
    return rows, {"mean_failures": failed, "ill_conditioned": n_bad}


def robustness_csv(cfg, rows, info):
    extra = [f"{k} = {v}" for k, v in info.items()]
    return to_csv(ROBUSTNESS_COLUMNS, rows, _metadata(cfg, extra))


# -- projections ----------------------------------------------------------------

def projection_filename(measure, M):
    return f"W_{Measure.parse(measure).value}_M{int(M)}.migw"


def load_projections(cfg, directory=None):
    """Projection files needed by the configured LDA-MIG detectors."""
    directory = Path(directory or cfg.projection_dir)
    needed = set()
    for text in cfg.detectors:
        parts = text.strip().lower().replace("-", "_").split(":")
        if parts[0] == "lda_mig":
            needed.add((Measure.parse(parts[1]), int(parts[2])))
    out = {}
    for m, M in sorted(needed):
        path = directory / projection_filename(m, M)
        if not path.exists():
            raise FileNotFoundError(f"projection file {path} for lda_mig:{m.value}:{M} is "
                                    f"missing; run the learn subcommand first")
        proj = load_projection(path)
        if proj.measure is not m or proj.M != M or proj.N != cfg.N:
            raise ValueError(f"{path} holds a {proj.measure.value} {proj.N}x{proj.M} "
                             f"projection, expected {m.value} {cfg.N}x{M}")
        out[(m, M)] = proj
    return out


@dataclass
class LearnOutcome:
    measure: Measure
    M: int
    path: Path
    psi: float
    iterations: int
    stalled: bool


def run_learn(cfg, out_dir=None, echo=print):
    """Train one projection per (measure, M) and save it as a MIGW1 file."""
    tc = cfg.training
    out_dir = Path(out_dir or cfg.projection_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    need = max(tc.nu_w, tc.nu_b) + 1
    if min(tc.m, tc.n) < need:
        raise ValueError(f"training sizes m={tc.m}, n={tc.n} must be >= {need} "
                         f"(neighbor counts + 1)")
    scene = scene_from_config(cfg)
    opts = tc.rgd_options(cfg.master_seed)
    outcomes = []
    for name in tc.measures:
        m = Measure.parse(name)
        X, Y = training_set(scene, m, tc.m, tc.n, tc.train_scr_db, cfg.master_seed,
                            cfg.means.options(), cfg.threads)
        data = LabeledHpdSet(X, Y)
        spec = NeighborSpec(tc.nu_w, tc.nu_b, m)
        nb = select_neighbors(data, spec)
        for M in cfg.M:
            proj = learn_projection(data, spec, M, opts, neighbors=nb)
            path = out_dir / projection_filename(m, M)
            save_projection(proj, path)
            meta = proj.train_meta
            o = LearnOutcome(m, M, path, meta["final_cost"], meta["iterations"], meta["stalled"])
            outcomes.append(o)
            echo(f"{m.value} M={M}: psi={o.psi:.6g} iterations={o.iterations}"
                 f"{' STALLED' if o.stalled else ''} -> {path}")
    return outcomes


# -- detection ------------------------------------------------------------------

def run_pd_sim(cfg, projections=None):
    """Calibrated thresholds and Pd per SCR point and detector.

    Returns
    -------
    rows : list of (scr_db, detector, threshold, pd, se)
    info : dict
        Calibration size and mean failure counts.
    """
    if projections is None:
        projections = load_projections(cfg)
    scene = scene_from_config(cfg)
    bank = DetectorBank(make_detectors(cfg.detectors, projections), scene,
                        cfg.means.options())
    n_cal = cfg.calibration_trials or default_calibration_trials(cfg.pfa)
    h0, st0 = h0_statistics(bank, cfg.master_seed, n_cal, cfg.threads)
    h1, st1 = h1_statistics(bank, cfg.master_seed, cfg.trials, cfg.scr_grid_db, cfg.threads)
    thresholds = {n: calibrate_threshold(h0[n], cfg.pfa) for n in bank.names}
    rows = []
    for j, scr in enumerate(cfg.scr_grid_db):
        for n in bank.names:
            est = estimate_pd(h1[n][j], thresholds[n])
            rows.append((float(scr), n, thresholds[n].gamma, est.pd, est.se))
    stats = st0.merge(st1)
    info = {
        "calibration_trials": n_cal,
        "ace_covariance": "normalized SCM, each snapshot scaled to squared norm N",
        "mtd": "Doppler filter-bank bin |s^H y|^2",
        "mean_failures": f"{stats.failed} of {stats.computed}",
    }
    return rows, info


def pd_csv(cfg, rows, info):
    extra = [f"{k} = {v}" for k, v in info.items()]
    return to_csv(PD_COLUMNS, rows, _metadata(cfg, extra))


# -- discrimination ------------------------------------------------------------------

def log_features(R):
    """Matrix log flattened to the real and imaginary parts of its upper triangle."""
    L = logm(R, check=False)
    iu = np.triu_indices(R.shape[-1])
    U = L[..., iu[0], iu[1]]
    return np.concatenate([U.real, U.imag], axis=-1)


def pca2(F):
    """Scores on the top two principal axes, signs fixed by the largest loading."""
    F = np.asarray(F, dtype=float)
    Fc = F - F.mean(axis=0)
    _, _, Vt = np.linalg.svd(Fc, full_matrices=False)
    V = Vt[:2].T
    if V.shape[1] < 2:
        V = np.hstack([V, np.zeros((V.shape[0], 2 - V.shape[1]))])
    for k in range(V.shape[1]):
        j = np.argmax(np.abs(V[:, k]))
        if V[j, k] < 0:
            V[:, k] = -V[:, k]
    return Fc @ V


def discriminate_scatter(proj, signal, clutter):
    """PCA scatter of a labeled set before and after the projection.

    Returns a dict ``stage -> (scores (n, 2), labels)`` for ``original``
    and ``projected``.
    """
    X = np.concatenate([signal, clutter])
    if len(X) < 3:
        raise ValueError("need at least 3 samples for a 2-D PCA scatter")
    labels = np.concatenate([np.ones(len(signal), int), np.zeros(len(clutter), int)])
    return {
        "original": (pca2(log_features(X)), labels),
        "projected": (pca2(log_features(project(proj.W, X))), labels),
    }


def run_discriminate(cfg, proj=None):
    """Scatter rows (stage, scr_db, label, pc1, pc2) for each configured SCR."""
    dc = cfg.discriminate
    if proj is None:
        if not dc.projection:
            raise ValueError("discriminate needs a projection file ([discriminate] projection)")
        proj = load_projection(dc.projection)
    if proj.N != cfg.N:
        raise ValueError(f"projection is {proj.N}-dimensional, config has N={cfg.N}")
    if 2 * dc.samples < 3:
        raise ValueError("need at least 3 samples for a 2-D PCA scatter")
    scene = scene_from_config(cfg)
    rows = []
    for k, scr in enumerate(dc.scr_db):
        X, Y = training_set(scene, proj.measure, dc.samples, dc.samples, scr, cfg.master_seed,
                            cfg.means.options(), cfg.threads,
                            streams=(STREAM_DISCRIMINATE, STREAM_DISCRIMINATE_CLUTTER),
                            tags=(k,))
        for stage, (P, lab) in discriminate_scatter(proj, X, Y).items():
            rows.extend((stage, float(scr), int(l), p[0], p[1]) for p, l in zip(P, lab))
    return rows


def scatter_csv(cfg, rows, proj_measure):
    return to_csv(SCATTER_COLUMNS, rows, _metadata(cfg, [f"projection_measure = {proj_measure}"]))


def centroid_separation(scores, labels):
    """Distance between class centroids divided by the pooled spread."""
    a, b = scores[labels == 1], scores[labels == 0]
    gap = np.linalg.norm(a.mean(axis=0) - b.mean(axis=0))
    spread = math.sqrt((a.var(axis=0).sum() + b.var(axis=0).sum()) / 2)
    return gap / spread if spread > 0 else (0.0 if gap == 0 else math.inf)
