"""Local DG predictor: per-element nonlinear solve for the coefficients.

On an element ``[t_left, t_left + dt]`` the predictor looks for nodal
coefficients ``Q`` (shape ``(N + 1, K)``) with

    Q[p] - dt * sum_q B[p, q] F(Q[q], t_left + dt * tau_q) = u_n

for every node ``p``. Two solvers are provided: fixed-point (Picard)
iteration and Newton's method on the stacked ``(N + 1) * K`` system.
Divergence is reported through :class:`DivergenceError`, never silently.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import precision
from ._validation import check_state
from .linalg import lu_solve, norm_max
from .tables import SchemeTables

__all__ = [
    "DivergenceError",
    "ElementCoefficients",
    "EvaluationError",
    "OdeProblem",
    "PredictorOptions",
    "SolveStats",
    "initial_guess",
    "newton_solve",
    "picard_solve",
    "predictor_residual",
    "solve_element",
]


@dataclass(frozen=True)
class OdeProblem:
    """First-order system ``u' = rhs(u, t)`` on ``[t0, t_end]``.

    ``rhs(u, t)`` takes a length-``dim`` array and returns one;
    ``jacobian(u, t)``, when given, returns the ``dim x dim`` matrix
    ``dF/du``; ``exact(t)`` returns the exact solution if one is known.
    """

    rhs: Callable
    u0: np.ndarray
    t0: float
    t_end: float
    jacobian: Callable | None = None
    exact: Callable | None = None
    name: str = "custom"

    def __post_init__(self):
        u0 = np.atleast_1d(np.asarray(self.u0))
        if u0.dtype.kind in "biu":
            u0 = u0.astype(float)
        object.__setattr__(self, "u0", u0)
        if not self.t_end > self.t0:
            raise ValueError(f"t_end ({self.t_end}) must exceed t0 ({self.t0})")

    @property
    def dim(self) -> int:
        return self.u0.shape[0]


@dataclass
class SolveStats:
    """Work counters and convergence record of one or more predictor solves."""

    iterations: int = 0
    residual_norm: float = 0.0
    rhs_evals: int = 0
    jac_evals: int = 0
    converged: bool = False
    method: str = ""
    tolerance: float = 0.0

    def absorb(self, other: "SolveStats") -> None:
        """Accumulate counters of ``other`` (used across elements and fallbacks)."""
        self.iterations += other.iterations
        self.rhs_evals += other.rhs_evals
        self.jac_evals += other.jac_evals
        self.residual_norm = max(self.residual_norm, other.residual_norm)
        self.tolerance = max(self.tolerance, other.tolerance)


@dataclass(frozen=True)
class ElementCoefficients:
    """Predictor coefficients of one element.

    ``rhs_values`` caches ``F(coeffs[p], t_p)`` from the final iteration so
    the node corrector does not re-evaluate the right-hand side.
    """

    coeffs: np.ndarray
    t_left: float
    dt: float
    element_index: int = 0
    rhs_values: np.ndarray | None = field(default=None, repr=False)

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1


@dataclass(frozen=True)
class PredictorOptions:
    """Iteration controls.

    ``tol`` defaults to 1e-13 in binary64 (roundoff floor of the working
    precision otherwise) and is applied relative to ``max(1, |Q|)``.
    ``max_iter`` defaults to 100 for Picard and 50 for Newton.
    """

    method: str = "auto"
    tol: float | None = None
    max_iter: int | None = None
    fd_jacobian: bool = True
    divergence_bound: float = 1e12

    def __post_init__(self):
        if self.method not in ("picard", "newton", "auto"):
            raise ValueError(f"unknown predictor method {self.method!r}")
        if self.tol is not None and not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")

    def tolerance(self, dtype) -> float:
        return precision.default_tol(dtype) if self.tol is None else self.tol


class DivergenceError(RuntimeError):
    """The predictor iteration failed to converge; carries its :class:`SolveStats`."""

    def __init__(self, message: str, stats: SolveStats, element_index=None, interval=None):
        super().__init__(message)
        self.stats = stats
        self.element_index = element_index
        self.interval = interval


class EvaluationError(FloatingPointError):
    """The right-hand side returned a non-finite value."""

    def __init__(self, message: str, node_index=None, t=None):
        super().__init__(message)
        self.node_index = node_index
        self.t = t


class _Evaluator:
    """Counts every right-hand side and Jacobian call."""

    def __init__(self, problem: OdeProblem, dtype, stats: SolveStats):
        self.problem = problem
        self.dtype = dtype
        self.stats = stats

    def rhs(self, u, t) -> np.ndarray:
        self.stats.rhs_evals += 1
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            out = self.problem.rhs(u, t)
        return precision.as_array(out, self.dtype).reshape(u.shape)

    def at_nodes(self, Q, times) -> np.ndarray:
        F = np.empty_like(Q)
        for p in range(Q.shape[0]):
            F[p] = self.rhs(Q[p], times[p])
        return F

    def jacobian(self, u, t, f_u) -> np.ndarray:
        K = u.shape[0]
        self.stats.jac_evals += 1
        if self.problem.jacobian is not None:
            J = self.problem.jacobian(u, t)
            return precision.as_array(J, self.dtype).reshape(K, K)
        # forward differences, step sqrt(eps) * max(1, |u_k|)
        root_eps = precision.machine_eps(self.dtype) ** 0.5
        J = np.empty((K, K), dtype=self.dtype)
        for k in range(K):
            h = root_eps * max(1, abs(u[k]))
            v = u.copy()
            v[k] = v[k] + h
            J[:, k] = (self.rhs(v, t) - f_u) / h
        return J


def _node_times(tables: SchemeTables, t_left, dt):
    return t_left + dt * tables.nodes


def _prepare(tables, problem, u_n, guess):
    u_n = check_state(u_n, problem.dim, tables.dtype, "u_n")
    if guess is None:
        Q = initial_guess(u_n, tables.degree)
    else:
        Q = precision.as_array(guess, tables.dtype).reshape(tables.size, problem.dim).copy()
    return u_n, Q


def _nonfinite(ev: _Evaluator, F, times, stats, first: bool, element_index):
    bad = [p for p in range(F.shape[0]) if not precision.all_finite(F[p])]
    if not bad:
        return
    p = bad[0]
    if first:
        raise EvaluationError(
            f"right-hand side is non-finite at predictor node {p} (t={times[p]})",
            node_index=p,
            t=times[p],
        )
    stats.residual_norm = float("inf")
    raise DivergenceError(
        f"iterates left the finite range (non-finite F at node {p})",
        stats,
        element_index=element_index,
    )


def initial_guess(u_n, N: int) -> np.ndarray:
    """Constant guess ``Q[p] = u_n`` for every node, shape ``(N + 1, K)``."""
    u_n = np.atleast_1d(np.asarray(u_n))
    return np.tile(u_n, (N + 1, 1))


def predictor_residual(tables: SchemeTables, problem: OdeProblem, element: ElementCoefficients, u_n) -> float:
    """Max-norm of ``Q - dt B F(Q) - u_n`` (not counted in any statistics)."""
    with precision.working_precision(tables.dps):
        u_n = check_state(u_n, problem.dim, tables.dtype, "u_n")
        Q = precision.as_array(element.coeffs, tables.dtype)
        times = _node_times(tables, element.t_left, element.dt)
        F = np.array([precision.as_array(problem.rhs(Q[p], times[p]), tables.dtype) for p in range(tables.size)])
        F = F.reshape(Q.shape)
        return norm_max(Q - element.dt * (tables.B @ F) - u_n)


def picard_solve(
    tables: SchemeTables,
    problem: OdeProblem,
    u_n,
    t_left,
    dt,
    opts: PredictorOptions | None = None,
    *,
    guess=None,
    element_index: int = 0,
):
    """Fixed-point iteration ``Q <- u_n + dt B F(Q)``.

    Each sweep evaluates ``F`` once per node (``N + 1`` calls). The sweep
    that finds an update below tolerance returns the iterate it evaluated,
    so the reported residual is exactly that update and the cached ``F``
    matches the returned coefficients.

    Raises
    ------
    DivergenceError
        No convergence in ``max_iter`` sweeps, or the iterates blow up.
    EvaluationError
        ``F`` is non-finite at the initial guess.
    """
    opts = opts or PredictorOptions(method="picard")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    stats = SolveStats(method="picard")
    with precision.working_precision(tables.dps):
        u_n, Q = _prepare(tables, problem, u_n, guess)
        ev = _Evaluator(problem, tables.dtype, stats)
        tol = opts.tolerance(tables.dtype)
        stats.tolerance = tol
        max_iter = opts.max_iter or 100
        bound = opts.divergence_bound * max(1, norm_max(u_n))
        times = _node_times(tables, t_left, dt)
        B = tables.B
        for m in range(1, max_iter + 1):
            F = ev.at_nodes(Q, times)
            stats.iterations = m
            _nonfinite(ev, F, times, stats, m == 1, element_index)
            Q_next = u_n + dt * (B @ F)
            delta = norm_max(Q_next - Q)
            stats.residual_norm = delta
            if not precision.all_finite(delta) or delta > bound:
                raise DivergenceError(
                    f"Picard iteration diverged on element {element_index} after {m} sweeps "
                    f"(update {float(delta):.3e})",
                    stats,
                    element_index=element_index,
                )
            scale = max(1, norm_max(Q))
            if delta <= tol * scale:
                stats.converged = True
                stats.tolerance = tol * scale
                return ElementCoefficients(Q, t_left, dt, element_index, rhs_values=F), stats
            Q = Q_next
    raise DivergenceError(
        f"Picard iteration did not converge on element {element_index} in {max_iter} sweeps "
        f"(last update {float(stats.residual_norm):.3e})",
        stats,
        element_index=element_index,
    )


def newton_solve(
    tables: SchemeTables,
    problem: OdeProblem,
    u_n,
    t_left,
    dt,
    opts: PredictorOptions | None = None,
    *,
    guess=None,
    element_index: int = 0,
):
    """Newton's method on ``G(Q) = Q - dt (B x I_K) F(Q) - 1 x u_n``.

    The Newton matrix ``I - dt * B x blockdiag(J(Q_q, t_q))`` is assembled
    densely and factorised by :func:`aderdg.linalg.lu_solve`. Every iteration
    costs ``N + 1`` right-hand side calls and ``N + 1`` Jacobian calls;
    ``iterations`` counts Newton steps (linear solves). Without an analytic
    Jacobian forward differences are used (``opts.fd_jacobian``).
    """
    opts = opts or PredictorOptions(method="newton")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if problem.jacobian is None and not opts.fd_jacobian:
        raise ValueError("Newton solve needs a Jacobian or fd_jacobian=True")
    stats = SolveStats(method="newton")
    with precision.working_precision(tables.dps):
        u_n, Q = _prepare(tables, problem, u_n, guess)
        ev = _Evaluator(problem, tables.dtype, stats)
        tol = opts.tolerance(tables.dtype)
        stats.tolerance = tol
        max_iter = opts.max_iter or 50
        times = _node_times(tables, t_left, dt)
        n1, K = Q.shape
        B = tables.B
        eye = precision.as_array(np.eye(n1 * K), tables.dtype)
        for it in range(max_iter + 1):
            F = ev.at_nodes(Q, times)
            _nonfinite(ev, F, times, stats, it == 0, element_index)
            G = Q - dt * (B @ F) - u_n
            res = norm_max(G)
            stats.residual_norm = res
            if not precision.all_finite(res):
                break
            scale = max(1, norm_max(Q))
            if res <= tol * scale:
                stats.converged = True
                stats.tolerance = tol * scale
                return ElementCoefficients(Q, t_left, dt, element_index, rhs_values=F), stats
            if it == max_iter:
                break
            J = np.stack([ev.jacobian(Q[q], times[q], F[q]) for q in range(n1)])
            blocks = (dt * B)[:, None, :, None] * J.transpose(1, 0, 2)[None, :, :, :]
            A = eye - blocks.reshape(n1 * K, n1 * K)
            Q = Q - lu_solve(A, G.reshape(-1)).reshape(n1, K)
            stats.iterations = it + 1
    raise DivergenceError(
        f"Newton iteration did not converge on element {element_index} in {max_iter} steps "
        f"(residual {float(stats.residual_norm):.3e})",
        stats,
        element_index=element_index,
    )


def solve_element(
    tables: SchemeTables,
    problem: OdeProblem,
    u_n,
    t_left,
    dt,
    opts: PredictorOptions | None = None,
    *,
    element_index: int = 0,
):
    """Dispatch on ``opts.method``; ``"auto"`` escalates Picard -> Newton.

    In auto mode the returned stats include the work spent in the failed
    Picard attempt.
    """
    opts = opts or PredictorOptions()
    if opts.method == "picard":
        return picard_solve(tables, problem, u_n, t_left, dt, opts, element_index=element_index)
    if opts.method == "newton":
        return newton_solve(tables, problem, u_n, t_left, dt, opts, element_index=element_index)
    try:
        return picard_solve(tables, problem, u_n, t_left, dt, opts, element_index=element_index)
    except DivergenceError as exc:
        spent = exc.stats
    newton_opts = dataclasses.replace(opts, method="newton")
    element, stats = newton_solve(tables, problem, u_n, t_left, dt, newton_opts, element_index=element_index)
    stats.rhs_evals += spent.rhs_evals
    stats.jac_evals += spent.jac_evals
    stats.iterations += spent.iterations
    stats.method = "picard+newton"
    return element, stats
