"""Acceptance checks for the package as a whole.

Every check prints one ``PASS <label>: ...`` or ``FAIL <label>: ...`` line
past pytest's output capture, then asserts. Run with
``pytest tests/test_acceptance.py -v`` or directly as a script.
"""
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from ldamig import experiments as ex
from ldamig.cli import main as cli_main
from ldamig.config import load_config
from ldamig.detect import calibrate_threshold
from ldamig.influence import OutlierScenario, influence_matrix, perturbation_oracle
from ldamig.lda import LabeledHpdSet, NeighborSpec, grad_sq_distance, learn_projection, select_neighbors
from ldamig.means import geometric_mean
from ldamig.measures import MEASURES, Measure, sq_distance
from ldamig.signal import ClutterModel
from ldamig.simulation import (STREAM_H0_CHECK, DetectorBank, Scene, h0_statistics,
                               make_detectors, training_set)
from ldamig.stiefel import RgdOptions, orthonormality_error, riemannian_gradient, tangent_defect

sys.path.insert(0, str(Path(__file__).parent))
from oracles import (SQ, binomial_interval, fd_directional, random_complex,  # noqa: E402
                     random_hpd, random_stiefel)

SEED = 20240611


@pytest.fixture
def report(capsys):
    """``report(label, ok, detail, elapsed)`` prints the verdict line, then asserts."""
    def _report(label, ok, detail, elapsed=None):
        timing = f" [{elapsed:.1f} s]" if elapsed is not None else ""
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {label}: {detail}{timing}", flush=True)
        assert ok, f"{label}: {detail}"
    return _report


def test_scalar_geometric_means(report):
    t0 = time.perf_counter()
    Rs = np.array([[[1.0]], [[4.0]]], dtype=complex)
    got = {m.value: float(geometric_mean(m, Rs).mean[0, 0].real) for m in MEASURES}
    elapsed = time.perf_counter() - t0
    err = max(abs(v - 2.0) for v in got.values())
    ok = err <= 1e-9 and elapsed < 1.0
    report("scalar-means", ok, f"means of {{1, 4}} = {got}, max |err| = {err:.1e} (tol 1e-9, < 1 s)",
           elapsed)


def test_gradient_suite(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst = {m.value: 0.0 for m in MEASURES}
    worst_tangent = 0.0
    for _ in range(20):
        W = random_stiefel(rng, 5, 3)
        X, Y = random_hpd(rng, 5), random_hpd(rng, 5)
        Z = random_complex(rng, 5, 3)
        for m in MEASURES:
            G = grad_sq_distance(m, W, X, Y)

            def f(V, m=m):
                P, Q = V.conj().T @ X @ V, V.conj().T @ Y @ V
                return SQ[m.value]((P + P.conj().T) / 2, (Q + Q.conj().T) / 2)
            fd = fd_directional(f, W, Z, eps=1e-6)
            rel = abs(np.real(np.vdot(G, Z)) - fd) / max(abs(fd), 1e-12)
            worst[m.value] = max(worst[m.value], rel)
            worst_tangent = max(worst_tangent, tangent_defect(W, riemannian_gradient(W, G)))
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) < 1e-4 and worst_tangent < 1e-10 and elapsed < 30
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    report("gradient-suite", ok, f"max rel. FD error {detail} (tol 1e-4); "
           f"tangent defect {worst_tangent:.1e} (tol 1e-10)", elapsed)


def test_influence_oracle(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst = {m.value: 0.0 for m in MEASURES}
    for _ in range(20):
        base = np.stack([random_hpd(rng, 4) for _ in range(10)])
        out = np.stack([random_hpd(rng, 4, scale=4) for _ in range(3)])
        sc = OutlierScenario(base, out, epsilon=1e-4)
        for m in MEASURES:
            H = influence_matrix(m, sc)
            D = perturbation_oracle(m, sc)
            worst[m.value] = max(worst[m.value], np.linalg.norm(D - H) / np.linalg.norm(D))
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) < 0.01 and elapsed < 60
    detail = ", ".join(f"{k} {100 * v:.2f}%" for k, v in worst.items())
    report("influence-oracle", ok, f"max rel. Frobenius gap to the eps = 1e-4 perturbation: "
           f"{detail} (tol 1%)", elapsed)


def test_robustness_ordering(report):
    t0 = time.perf_counter()
    cfg = load_config(None, "desk", {"experiment": "robustness", "master_seed": SEED,
                                     "robustness": {"K": 50, "L_values": [5, 20, 40],
                                                    "trials": 200}})
    assert cfg.N == 8
    rows, _ = ex.run_robustness(cfg)
    elapsed = time.perf_counter() - t0
    val = {(r[0], r[1]): r[2] for r in rows}
    problems = []
    for L in (5, 20, 40):
        v = {e: val[(L, e)] for e in ("scm", "airm", "lem", "jbld", "skld")}
        geo = ("airm", "lem", "jbld", "skld")
        if not all(v["scm"] > v[e] for e in geo):
            problems.append(f"L={L}: SCM not largest")
        if not all(v["jbld"] < v[e] for e in geo if e != "jbld"):
            problems.append(f"L={L}: JBLD not smallest")
        if abs(v["airm"] - v["lem"]) > 0.2 * min(v["airm"], v["lem"]):
            problems.append(f"L={L}: AIRM/LEM differ by more than 20%")
        if not (v["airm"] < v["skld"] and v["lem"] < v["skld"]):
            problems.append(f"L={L}: AIRM or LEM not below SKLD")
    table = "; ".join(f"L={L} " + " ".join(f"{e}={val[(L, e)]:.3g}"
                                           for e in ("scm", "airm", "lem", "jbld", "skld"))
                      for L in (5, 20, 40))
    ok = not problems and elapsed < 600
    report("robustness-ordering", ok,
           (", ".join(problems) + " | " if problems else "") + table, elapsed)


def test_descent_and_manifold_integrity(report):
    t0 = time.perf_counter()
    scene = Scene(clutter=ClutterModel(N=6))
    problems = []
    worst_ortho = 0.0
    runs = 0
    for seed in range(3):
        for m in MEASURES:
            X, Y = training_set(scene, m, 30, 30, 25.0, seed)
            data = LabeledHpdSet(X, Y)
            spec = NeighborSpec(measure=m)
            nb = select_neighbors(data, spec)
            for M in (4, 2):
                p = learn_projection(data, spec, M, RgdOptions(max_iter=100, seed=seed),
                                     neighbors=nb)
                c = p.train_meta["costs"]
                runs += 1
                if any(b > a for a, b in zip(c, c[1:])):
                    problems.append(f"{m.value} M={M} seed={seed}: cost increased")
                e = orthonormality_error(p.W)
                worst_ortho = max(worst_ortho, e)
                if not e < 1e-9:
                    problems.append(f"{m.value} M={M} seed={seed}: ||W^H W - I|| = {e:.1e}")
    elapsed = time.perf_counter() - t0
    ok = not problems and elapsed < 300
    report("descent-integrity", ok, (", ".join(problems) + " | " if problems else "")
           + f"{runs} runs on 60-matrix sets, monotone traces, max ||W^H W - I|| = "
             f"{worst_ortho:.1e} (tol 1e-9)", elapsed)


def test_detection_ordering(report):
    t0 = time.perf_counter()
    measures = [m.value for m in MEASURES]
    dets = ["amf", "ace", "mtd"] + [f"mig:{m}" for m in measures] \
        + [f"lda_mig:{m}:4" for m in measures]
    with tempfile.TemporaryDirectory() as tmp:
        cfg = load_config(None, "desk", {"experiment": "pd_sim", "master_seed": SEED,
                                         "M": [4], "detectors": dets, "projection_dir": tmp})
        assert (cfg.N, cfg.K, cfg.L, cfg.pfa, cfg.trials) == (8, 8, 2, 1e-3, 500)
        assert len(cfg.scr_grid_db) == 5
        ex.run_learn(cfg, tmp, echo=lambda s: None)
        rows, info = ex.run_pd_sim(cfg)
    elapsed = time.perf_counter() - t0
    pd = {(r[0], r[1]): (r[3], r[4]) for r in rows}
    problems = []
    for scr in cfg.scr_grid_db:
        for d in ("amf", "ace"):
            if not pd[(scr, d)][0] < 0.1:
                problems.append(f"{d} Pd={pd[(scr, d)][0]:.3f} at {scr:g} dB")
    compared = 0
    for m in measures:
        for scr in cfg.scr_grid_db:
            mig, se = pd[(scr, f"mig-{m}")]
            lda = pd[(scr, f"lda-mig-{m}-m4")][0]
            if 0.2 <= mig <= 0.8:
                compared += 1
                if lda < mig - 2 * se:
                    problems.append(f"{m} at {scr:g} dB: LDA-MIG {lda:.3f} < MIG {mig:.3f} - 2 SE")
    curves = "; ".join(f"{d}: " + " ".join(f"{pd[(s, d)][0]:.3f}" for s in cfg.scr_grid_db)
                       for d in ["amf", "ace"] + [f"mig-{m}" for m in measures]
                       + [f"lda-mig-{m}-m4" for m in measures])
    ok = not problems and compared > 0 and elapsed < 1800
    report("detection-ordering", ok, (", ".join(problems) + " | " if problems else "")
           + f"{compared} mid-range comparisons; Pd over {cfg.scr_grid_db} dB: {curves}", elapsed)


def test_pfa_calibration(report):
    t0 = time.perf_counter()
    pfa, n_test, n_cal = 1e-2, 10_000, 30_000
    names = ["amf", "ace", "mtd"] + [f"mig:{m.value}" for m in MEASURES]
    bank = DetectorBank(make_detectors(names), Scene())
    h0, _ = h0_statistics(bank, SEED, n_cal)
    fresh, _ = h0_statistics(bank, SEED, n_test, stream=STREAM_H0_CHECK)
    lo, hi = binomial_interval(n_test, pfa, 0.99)
    rates = {}
    for name in bank.names:
        gamma = calibrate_threshold(h0[name], pfa).gamma
        rates[name] = float(np.mean(fresh[name] > gamma))
    elapsed = time.perf_counter() - t0
    bad = [n for n, r in rates.items() if not lo <= r <= hi]
    ok = not bad and elapsed < 300
    detail = ", ".join(f"{n} {r:.4f}" for n, r in rates.items())
    report("pfa-calibration", ok, f"fresh-trial Pfa {detail}; 99% interval [{lo:.4f}, {hi:.4f}]"
           + (f"; outside: {bad}" if bad else ""), elapsed)


def test_pd_sim_determinism_across_threads(report):
    t0 = time.perf_counter()
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        cfg = tmp / "pd.toml"
        cfg.write_text('pfa = 0.01\ntrials = 200\ncalibration_trials = 1000\n'
                       'scr_grid_db = [20.0, 40.0]\n'
                       'detectors = ["amf", "ace", "mtd", "mig:airm", "mig:lem", '
                       '"mig:jbld", "mig:skld"]\n')
        outs = []
        for threads in ("1", "4"):
            out = tmp / f"pd_{threads}.csv"
            code = cli_main(["pd-sim", "--config", str(cfg), "--seed", str(SEED),
                             "--threads", threads, "--out", str(out)])
            assert code == 0
            outs.append(out.read_bytes())
    elapsed = time.perf_counter() - t0
    ok = outs[0] == outs[1]
    report("determinism", ok, f"pd-sim CSV with --threads 1 and 4: {len(outs[0])} bytes, "
           + ("byte-identical" if ok else "different"), elapsed)


def test_metric_axioms(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst = {}
    for m in MEASURES:
        sym = ident = cong = inv = 0.0
        min_pos = np.inf
        for _ in range(100):
            X, Y = random_hpd(rng, 5), random_hpd(rng, 5)
            d = sq_distance(m, X, Y)
            sym = max(sym, abs(d - sq_distance(m, Y, X)) / d)
            ident = max(ident, abs(sq_distance(m, X, X)))
            min_pos = min(min_pos, d)
            if m is Measure.LEM:
                A = random_stiefel(rng, 5, 5)
            else:
                A = random_complex(rng, 5, 5)
            cong = max(cong, abs(sq_distance(m, A @ X @ A.conj().T, A @ Y @ A.conj().T) - d) / d)
            inv = max(inv, abs(sq_distance(m, np.linalg.inv(X), np.linalg.inv(Y)) - d) / d)
        worst[m.value] = (sym, ident, cong, inv, min_pos)
    elapsed = time.perf_counter() - t0
    ok = all(s < 1e-9 and i < 1e-9 and c < 1e-8 and v < 1e-8 and p > 0
             for s, i, c, v, p in worst.values())
    detail = "; ".join(f"{k} sym {s:.0e} d(X,X) {i:.0e} congruence {c:.0e} inversion {v:.0e}"
                       for k, (s, i, c, v, _) in worst.items())
    report("metric-axioms", ok, f"100 pairs per measure: {detail}", elapsed)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-p", "no:cacheprovider"]))
