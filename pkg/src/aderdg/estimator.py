"""Estimator-style front end over :func:`~aderdg.integrator.solve_ivp`."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_degree
from .analysis import global_errors
from .integrator import TimeMesh, dense_eval, solve_ivp

__all__ = ["AderDGSolver"]

_SOLVERS = ("picard", "newton", "auto")


class AderDGSolver(BaseEstimator):
    """Fit an ODE initial value problem on a mesh; predict the local solution.

    Parameters
    ----------
    degree : int
        Polynomial degree ``N`` per element.
    solver : {"picard", "newton", "auto"}
        Predictor iteration; ``"auto"`` falls back to Newton when Picard
        diverges.
    tol, max_iter : optional
        Predictor stopping controls (library defaults when ``None``).
    dps : int, optional
        Decimal digits for extended-precision arithmetic.

    Attributes
    ----------
    trajectory_ : Trajectory
    stats_ : SolveStats
    n_elements_ : int

    Examples
    --------
    >>> from aderdg import AderDGSolver, get_problem
    >>> spec = get_problem("harm_osc")
    >>> est = AderDGSolver(degree=3).fit(spec.problem, 21)
    >>> est.predict(1.0).round(6)
    array([ 0.540304, -0.841475])
    """

    def __init__(self, degree=2, solver="auto", tol=None, max_iter=None, dps=None):
        self.degree = degree
        self.solver = solver
        self.tol = tol
        self.max_iter = max_iter
        self.dps = dps

    def _validate_params(self):
        check_degree(self.degree)
        if self.solver not in _SOLVERS:
            raise ValueError(f"solver must be one of {_SOLVERS}, got {self.solver!r}")
        if self.tol is not None and not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")

    def fit(self, problem, mesh=None):
        """Integrate ``problem`` over ``mesh``.

        ``mesh`` is a :class:`TimeMesh`, a mesh spec string, a node count
        (uniform over the problem domain) or ``None`` for 11 nodes.
        """
        self._validate_params()
        problem = getattr(problem, "problem", problem)
        if mesh is None:
            mesh = 11
        if isinstance(mesh, str):
            mesh = TimeMesh.parse(mesh)
        elif not isinstance(mesh, TimeMesh):
            mesh = TimeMesh.uniform(problem.t0, problem.t_end, int(mesh) - 1)
        self.trajectory_ = solve_ivp(
            problem,
            mesh,
            self.degree,
            solver=self.solver,
            tol=self.tol,
            max_iter=self.max_iter,
            dps=self.dps,
        )
        self.stats_ = self.trajectory_.stats
        self.n_elements_ = mesh.n_elements
        return self

    def predict(self, t):
        """Local solution at ``t`` (scalar -> ``(K,)``, array -> ``(n, K)``)."""
        check_is_fitted(self, "trajectory_")
        return dense_eval(self.trajectory_, t)

    @property
    def node_values_(self) -> np.ndarray:
        check_is_fitted(self, "trajectory_")
        return self.trajectory_.node_values

    def errors(self, M: int = 1000):
        """``(node, local)`` error reports against the problem's exact solution."""
        check_is_fitted(self, "trajectory_")
        return global_errors(self.trajectory_, M=M)
