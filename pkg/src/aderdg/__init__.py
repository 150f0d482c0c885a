"""ADER-DG one-step solver for ODE initial value problems.

A local discontinuous Galerkin predictor produces a degree-``N`` polynomial
on every element; a Gauss-Legendre corrector advances the node solution.
Node values converge with order ``2N + 1``, the local polynomial with
order ``N + 1``.

>>> from aderdg import get_problem, solve_ivp, TimeMesh
>>> spec = get_problem("harm_osc")
>>> mesh = TimeMesh.uniform(spec.problem.t0, spec.problem.t_end, 10)
>>> traj = solve_ivp(spec.problem, mesh, degree=3)
"""

__version__ = "0.1.0"

from .analysis import (
    ConvergenceReport,
    ErrorReport,
    InsufficientDataError,
    convergence_study,
    fit_order,
    global_errors,
    pointwise_error,
)
from .estimator import AderDGSolver
from .integrator import (
    OutOfRangeError,
    TimeMesh,
    Trajectory,
    advance_node,
    dense_eval,
    solve_ivp,
    tabulate_subgrid,
)
from .linalg import SingularMatrixError
from .predictor import (
    DivergenceError,
    ElementCoefficients,
    EvaluationError,
    OdeProblem,
    PredictorOptions,
    SolveStats,
    initial_guess,
    newton_solve,
    picard_solve,
    predictor_residual,
)
from .problems import PROBLEMS, ProblemSpec, flame_exact, get_problem, lambert_w_principal
from .stability import PoleError, raster_region, ray_profile, stability_R, stability_R_det
from .tables import SchemeTables, basis_eval_all, build_tables, gauss_legendre_01

__all__ = [
    "AderDGSolver",
    "ConvergenceReport",
    "DivergenceError",
    "ElementCoefficients",
    "ErrorReport",
    "EvaluationError",
    "InsufficientDataError",
    "OdeProblem",
    "OutOfRangeError",
    "PROBLEMS",
    "PoleError",
    "PredictorOptions",
    "ProblemSpec",
    "SchemeTables",
    "SingularMatrixError",
    "SolveStats",
    "TimeMesh",
    "Trajectory",
    "advance_node",
    "basis_eval_all",
    "build_tables",
    "convergence_study",
    "dense_eval",
    "fit_order",
    "flame_exact",
    "gauss_legendre_01",
    "get_problem",
    "global_errors",
    "initial_guess",
    "lambert_w_principal",
    "newton_solve",
    "picard_solve",
    "pointwise_error",
    "predictor_residual",
    "raster_region",
    "ray_profile",
    "solve_ivp",
    "stability_R",
    "stability_R_det",
    "tabulate_subgrid",
]
