"""Qubit state tomography: exact statistics, seeded Monte Carlo, and
likelihood estimation on the Bloch ball.

Four measurement protocols are covered: projective spin measurements
along three orthogonal axes, the six-outcome POVM refining them, the
four-outcome tetrahedral POVM, and the rotation-covariant continuous
POVM supported on the whole sphere.
"""

from .analysis import (
    AnalyticUnsupportedError,
    ProtocolRow,
    TrialStats,
    analytic_mean,
    analytic_variance,
    f_n,
    f_n_recursion,
    f_n_series,
    run_trials,
    sample_record,
    summary_table,
)
from .backend import ACTIVE_BACKEND
from .bloch import (
    AxisAngle,
    as_bloch,
    bloch_from_density,
    conjugate_pure,
    density_from_bloch,
    hs_distance_sq,
    rotate,
)
from .errors import InvalidStateError, MlConvergenceError, TomolabError
from .estimators import (
    BallPolicy,
    MlConfig,
    MlResult,
    apply_policy,
    estimate_ml_continuous,
    estimate_moment,
    estimate_projective,
    estimate_six,
    estimate_tetrahedron,
    ml_maximize,
)
from .povm import (
    DiscretePovm,
    ProjectiveTriplet,
    SphericalCap,
    WeightedProjectorElement,
    alpha_density,
    cap_operator,
    cap_operator_alpha,
    continuous_density,
    equivariance_residual,
    outcome_probabilities,
    projective_triplet,
    six_outcome_povm,
    tetrahedron_povm,
)
from .sampling import (
    MeasurementRecord,
    ProtocolTag,
    SeedSpec,
    sample_continuous,
    sample_discrete,
)

__version__ = "0.1.0"

__all__ = [
    "ACTIVE_BACKEND",
    "AnalyticUnsupportedError",
    "AxisAngle",
    "BallPolicy",
    "DiscretePovm",
    "InvalidStateError",
    "MeasurementRecord",
    "MlConfig",
    "MlConvergenceError",
    "MlResult",
    "ProjectiveTriplet",
    "ProtocolRow",
    "ProtocolTag",
    "SeedSpec",
    "SphericalCap",
    "TomolabError",
    "TrialStats",
    "WeightedProjectorElement",
    "alpha_density",
    "analytic_mean",
    "analytic_variance",
    "apply_policy",
    "as_bloch",
    "bloch_from_density",
    "cap_operator",
    "cap_operator_alpha",
    "conjugate_pure",
    "continuous_density",
    "density_from_bloch",
    "equivariance_residual",
    "estimate_ml_continuous",
    "estimate_moment",
    "estimate_projective",
    "estimate_six",
    "estimate_tetrahedron",
    "f_n",
    "f_n_recursion",
    "f_n_series",
    "hs_distance_sq",
    "ml_maximize",
    "outcome_probabilities",
    "projective_triplet",
    "rotate",
    "run_trials",
    "sample_continuous",
    "sample_discrete",
    "sample_record",
    "six_outcome_povm",
    "summary_table",
    "tetrahedron_povm",
]
