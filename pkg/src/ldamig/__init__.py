"""Target detection on manifolds of Hermitian positive-definite matrices.

The package covers the four measures (AIRM, LEM, JBLD, SKLD), their
geometric means and influence functions, discriminative projections learned
on the complex Stiefel manifold, and Monte Carlo simulation of the
resulting detectors.
"""
from .detect import (CalibratedThreshold, DetectorSpec, ace_statistic, amf_statistic,
                     calibrate_threshold, estimate_pd, lda_mig_statistic, mig_statistic,
                     mtd_statistic)
from .hermitian import dlog_frechet, expm, frob_inner, hpd_fun, logm, sqrtm
from .influence import OutlierScenario, influence_matrix, influence_value, perturbation_oracle
from .lda import (LabeledHpdSet, NeighborSpec, Projection, cost_psi, grad_sq_distance,
                  learn_projection, select_neighbors)
from .means import MeanOptions, MeanResult, arithmetic_mean, geometric_mean
from .measures import Measure, sq_distance
from .signal import (ClutterModel, CutModel, InterferenceModel, TargetModel, build_hpd,
                     clutter_covariance, cut_covariance, interference_covariance,
                     sample_gaussian, scm, steering_vector)
from .stiefel import RgdOptions, geodesic_step, rgd_minimize, riemannian_gradient

__version__ = "0.1.0"
