"""Learn a projection that pulls same-class matrices together.

Signal-class matrices carry a target; clutter-class matrices are geometric
means of secondary cells. Descent on the Stiefel manifold shrinks
within-class distances and grows between-class ones.
"""
from ldamig import NeighborSpec, RgdOptions, learn_projection
from ldamig.lda import LabeledHpdSet, class_distance_ratio
from ldamig.simulation import Scene, training_set

scene = Scene()
X, Y = training_set(scene, "airm", m=60, n=60, train_scr_db=25.0, seed=5)
data = LabeledHpdSet(X, Y)

proj = learn_projection(data, NeighborSpec(nu_w=10, nu_b=10, measure="airm"), M=4,
                        opts=RgdOptions(max_iter=80, seed=5))
costs = proj.train_meta["costs"]
print(f"psi: {costs[0]:.1f} -> {costs[-1]:.1f} in {proj.train_meta['iterations']} steps")

before = class_distance_ratio("airm", data)
after = class_distance_ratio("airm", data, proj.W)
print(f"between/within distance ratio: {before:.2f} before, {after:.2f} after")
