"""Certifiable category-level shape and pose estimation from 3D keypoints.

Estimates an object's rotation, position, and active-shape-model
coefficients from sparse keypoint measurements by iterating on the
4x4 eigenvalue structure of the problem's first-order conditions,
then certifies global optimality through a dual linear system and a
positive-semidefiniteness check.  Gauss-Newton / Levenberg-Marquardt
baselines, a graduated non-convexity wrapper for outlier rejection,
and a reproducible synthetic benchmark are included.
"""

from .certificate import Certificate, build_constraints, build_objective, certify
from .gauss_newton import GnConfig, gn_solve, jacobians, residuals
from .gnc import GncConfig, NoInliersError, gnc_solve
from .metrics import position_error, rotation_error, shape_error, within_5deg5cm
from .model import (
    Estimate,
    IllConditionedProblem,
    Precomputed,
    ShapeProblem,
    a_matrix,
    objective_full,
    objective_quartic,
    objective_rot,
    optimal_position,
    optimal_shape,
    precompute,
    s_vector,
)
from .scf import ScfConfig, ScfTrace, min_eigenpair_4x4, recover, scf_solve
from .synthetic import SynthConfig, TrialResult, generate, run_benchmark

__version__ = "0.1.0"

__all__ = [
    "Certificate",
    "Estimate",
    "GnConfig",
    "GncConfig",
    "IllConditionedProblem",
    "NoInliersError",
    "Precomputed",
    "ScfConfig",
    "ScfTrace",
    "ShapeProblem",
    "SynthConfig",
    "TrialResult",
    "a_matrix",
    "build_constraints",
    "build_objective",
    "certify",
    "generate",
    "gn_solve",
    "gnc_solve",
    "jacobians",
    "min_eigenpair_4x4",
    "objective_full",
    "objective_quartic",
    "objective_rot",
    "optimal_position",
    "optimal_shape",
    "position_error",
    "precompute",
    "recover",
    "residuals",
    "rotation_error",
    "run_benchmark",
    "s_vector",
    "scf_solve",
    "shape_error",
    "within_5deg5cm",
    "__version__",
]
