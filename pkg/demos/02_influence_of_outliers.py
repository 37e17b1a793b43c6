"""How far do a few interference cells drag each covariance estimate?

K clutter matrices are contaminated by L interference matrices; the
influence value is the norm of the first-order shift of the mean.
"""
from ldamig.influence import ESTIMATORS, OutlierScenario, influence_value
from ldamig.signal import build_hpd
from ldamig.simulation import Scene
import numpy as np

scene = Scene(K=50)
rng = np.random.default_rng(3)

z = rng.standard_normal((50, 8)) + 1j * rng.standard_normal((50, 8))
base = build_hpd(z / np.sqrt(2) @ scene.sqrt_C.T)

print("L   " + "  ".join(f"{e:>9}" for e in ESTIMATORS))
for L in (1, 5, 20):
    w = rng.standard_normal((L, 8)) + 1j * rng.standard_normal((L, 8))
    out = build_hpd(w / np.sqrt(2) @ scene.sqrt_C_I.T)
    sc = OutlierScenario(base, out)
    print(f"{L:<3} " + "  ".join(f"{influence_value(e, sc):9.3g}" for e in ESTIMATORS))
