"""Outlier-robust planar pose-graph optimization.

Loop closures are classified with graduated non-convexity on two linear
problems (unwrapped headings, then positions with rotations held fixed),
and the kept edges are refined with damped Gauss-Newton.
"""

from .g2o import G2oParseError, parse_g2o, read_g2o, read_trajectory, write_g2o, write_trajectory
from .geometry import canonicalize_angle, rotation_from_angle, wrap_angles
from .gnc import GncConfig, GncResult, gnc_solve, initialize_mu, weight_update
from .graph import EdgeKind, GraphValidationError, PoseGraph, RelativeMeasurement, TrajectoryEstimate
from .linear import (
    SingularSystemError,
    angle_system,
    dense_oracle_solve,
    solve_angles,
    solve_translations,
    translation_system,
)
from .metrics import compute_are, compute_ate, precision_recall
from .pipeline import (
    C1_SQUARED,
    C2_SQUARED,
    CHI2_99_1DOF,
    CHI2_99_2DOF,
    PipelineReport,
    degnc_laf,
    solve_with_known_inliers,
)
from .refine import evaluate_tls_pgo_cost, pgo_cost, refine_gauss_newton
from .regularization import compute_regularization, regularized_residuals
from .synthetic import Grid, InjectionSpec, RandomWalk, SyntheticSpec, generate_synthetic, inject_outliers

__version__ = "0.1.0"

__all__ = [
    "C1_SQUARED", "C2_SQUARED", "CHI2_99_1DOF", "CHI2_99_2DOF",
    "EdgeKind", "G2oParseError", "GncConfig", "GncResult", "GraphValidationError", "Grid",
    "InjectionSpec", "PipelineReport", "PoseGraph", "RandomWalk", "RelativeMeasurement",
    "SingularSystemError", "SyntheticSpec", "TrajectoryEstimate",
    "angle_system", "canonicalize_angle", "compute_are", "compute_ate", "compute_regularization",
    "degnc_laf", "dense_oracle_solve", "evaluate_tls_pgo_cost", "generate_synthetic", "gnc_solve",
    "initialize_mu", "inject_outliers", "parse_g2o", "pgo_cost", "precision_recall", "read_g2o",
    "read_trajectory", "refine_gauss_newton", "regularized_residuals", "rotation_from_angle",
    "solve_angles", "solve_translations", "solve_with_known_inliers", "translation_system",
    "weight_update", "wrap_angles", "write_g2o", "write_trajectory",
]
