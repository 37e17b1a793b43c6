"""A short Pd-versus-SCR sweep with two interferences among K = N secondary cells.

The SCM is barely invertible here, so AMF and ACE collapse while the
geometric-mean detectors still see the target.
"""
from ldamig.detect import calibrate_threshold, estimate_pd
from ldamig.simulation import DetectorBank, Scene, h0_statistics, h1_statistics, make_detectors

scene = Scene(K=8)
bank = DetectorBank(make_detectors(["amf", "ace", "mtd", "mig:lem", "mig:skld"]), scene)

pfa = 1e-2
h0, _ = h0_statistics(bank, seed=7, n_trials=10_000)
gammas = {n: calibrate_threshold(h0[n], pfa) for n in bank.names}

grid = [20.0, 30.0, 40.0, 50.0]
h1, _ = h1_statistics(bank, seed=7, n_trials=300, scr_grid_db=grid)

print("SCR dB " + "".join(f"{n:>10}" for n in bank.names))
for j, scr in enumerate(grid):
    row = "".join(f"{estimate_pd(h1[n][j], gammas[n]).pd:10.3f}" for n in bank.names)
    print(f"{scr:6.0f} {row}")
