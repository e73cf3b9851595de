"""Error bounds for structured linear inverse problems under Gaussian measurements.

The subpackage ``geometry`` holds cone projections and width estimates,
``solvers`` the estimators, ``bounds`` the closed-form bounds and
``experiments`` the sweep and validation harness.
"""

__version__ = "0.1.0"

from .bounds import (
    BoundParams,
    BoundReport,
    adversarial_bounds,
    bound_report,
    comparison_ratios,
    eta,
    eta_remark1,
    gordon_lower_bound,
    kappa_hat_check,
    restricted_correlation_check,
    success_probability,
)
from .exceptions import (
    ConeBoundsError,
    DegenerateAnchorError,
    DomainError,
    InfeasibleError,
    NumericalError,
    UnsupportedModelError,
)
from .geometry import (
    ConeHandle,
    SignalDescriptor,
    StructureModel,
    WidthEstimate,
    gamma_d,
    width_closed_form,
    width_monte_carlo,
)
from .solvers import (
    ProblemInstance,
    SolverResult,
    compute_tau_star,
    lambda_best,
    solve_constrained_lasso,
    solve_least_squares,
    solve_penalized_lasso,
    solve_socp,
)
