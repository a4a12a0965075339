"""Trajectory gluing and quantitative shadowing for simple chaotic maps.

The package splices backward and forward orbit segments of expanding
interval maps, hyperbolic plane/torus maps, and neutral-fixed-point maps,
measures how fast the splice errors decay, and verifies uniform/average
shadowing bounds for randomly perturbed orbits.
"""

from .core import State, TrajectoryWindow, distance, verify_trajectory
from .gluing import (
    FitResult,
    GluingError,
    GluingReport,
    NonSummableRateError,
    RateFunction,
    SumResult,
    default_rate,
    fit_decay,
    fit_rate,
    glue,
    monotone_envelope,
    sparse_rate_example,
    summate,
    verify_gluing,
)
from .lemmas import (
    NeutralBranch,
    fit_exponent,
    neutral_inverse_iterates,
    neutral_map_backward_bound,
    neutral_one_step_bounds,
    product_bounds,
)
from .maps import (
    BranchDomainError,
    HyperbolicAffine2D,
    NeutralMap,
    PiecewiseLinearMap,
    RootFindError,
    TorusLinearMap,
    backward_window,
    forward_window,
)
from .perturbation import (
    PerturbationSpec,
    PseudoTrajectory,
    classify_average,
    classify_uniform,
    compute_gaps,
    generate_pseudo,
    upper_density,
)
from .shadowing import (
    ShadowingReport,
    ShadowingVerdict,
    average_error,
    check_shadowing,
    consecutive_glue,
    extract_segments,
    gap_recursion_bound,
    limit_error,
    parallel_glue,
    uniform_error,
)

__version__ = "0.1.0"

__all__ = [
    "BranchDomainError",
    "FitResult",
    "GluingError",
    "GluingReport",
    "HyperbolicAffine2D",
    "NeutralBranch",
    "NeutralMap",
    "NonSummableRateError",
    "PerturbationSpec",
    "PiecewiseLinearMap",
    "PseudoTrajectory",
    "RateFunction",
    "RootFindError",
    "ShadowingReport",
    "ShadowingVerdict",
    "State",
    "SumResult",
    "TorusLinearMap",
    "TrajectoryWindow",
    "average_error",
    "backward_window",
    "check_shadowing",
    "classify_average",
    "classify_uniform",
    "compute_gaps",
    "consecutive_glue",
    "default_rate",
    "distance",
    "extract_segments",
    "fit_decay",
    "fit_exponent",
    "fit_rate",
    "forward_window",
    "gap_recursion_bound",
    "generate_pseudo",
    "glue",
    "limit_error",
    "monotone_envelope",
    "neutral_inverse_iterates",
    "neutral_map_backward_bound",
    "neutral_one_step_bounds",
    "parallel_glue",
    "product_bounds",
    "sparse_rate_example",
    "summate",
    "upper_density",
    "uniform_error",
    "verify_gluing",
    "verify_trajectory",
]
