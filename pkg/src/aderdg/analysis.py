"""Error norms, order fitting and the mesh-ladder convergence harness.

Pointwise error is the max over components. Global norms replace integrals
by sums: node errors are weighted by the step preceding each node, local
errors by ``dt_n / M`` over ``M`` sub-nodes per element; ``Linf`` is the
plain max in both cases.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import precision
from .integrator import TimeMesh, Trajectory, solve_ivp, tabulate_subgrid
from .predictor import OdeProblem, SolveStats

__all__ = [
    "ConvergenceReport",
    "ErrorReport",
    "FitError",
    "InsufficientDataError",
    "MissingExactSolutionError",
    "convergence_study",
    "errors_from_samples",
    "fit_order",
    "global_errors",
    "norms",
    "pointwise_error",
]

NORMS = ("L1", "L2", "Linf")


class MissingExactSolutionError(ValueError):
    """Errors were requested for a problem without an exact solution."""


class FitError(ValueError):
    """Order fit on degenerate data (fewer than two distinct steps)."""


class InsufficientDataError(ValueError):
    """Too few rows above the noise floor to fit an order."""


@dataclass(frozen=True)
class ErrorReport:
    e_L1: float
    e_L2: float
    e_Linf: float
    pointwise: tuple | None = field(default=None, repr=False, compare=False)

    def __getitem__(self, norm: str) -> float:
        return getattr(self, f"e_{norm}")

    def as_dict(self) -> dict:
        return {n: self[n] for n in NORMS}


def pointwise_error(u, u_exact) -> float:
    """``max_k |u_k - u_exact_k|``."""
    u, u_exact = np.atleast_1d(u), np.atleast_1d(u_exact)
    if u.shape != u_exact.shape:
        raise ValueError(f"shape mismatch {u.shape} vs {u_exact.shape}")
    return float(np.max(np.abs(u - u_exact)))


def norms(eps, weights, t=None) -> ErrorReport:
    """Discrete ``L1``, ``L2`` and ``Linf`` of pointwise errors ``eps``."""
    eps = np.asarray(eps, dtype=float)
    weights = np.asarray(weights, dtype=float)
    return ErrorReport(
        e_L1=float(np.sum(weights * eps)),
        e_L2=float(np.sqrt(np.sum(weights * eps * eps))),
        e_Linf=float(eps.max()) if eps.size else 0.0,
        pointwise=None if t is None else (np.asarray(t), eps),
    )


def _exact_table(exact, t, K):
    """Evaluate ``exact`` at every time, as an ``(n, K)`` array."""
    vals = np.asarray(exact(t))
    if vals.shape == (len(t), K):
        return vals
    return np.stack([np.asarray(exact(v)).reshape(K) for v in t])


def _pointwise(values, exact_vals):
    diff = np.abs(values - exact_vals)
    return np.array(diff.max(axis=1), dtype=float)


def errors_from_samples(node_t, node_values, sub_t, sub_values, exact):
    """Node and local :class:`ErrorReport` from tabulated samples.

    ``sub_t`` must hold the same number ``M`` of sub-nodes for every element
    of the mesh ``node_t``, element by element; this is what
    :func:`~aderdg.integrator.tabulate_subgrid` returns and what the
    ``solve`` command writes.
    """
    node_t = np.asarray(node_t)
    node_values = np.asarray(node_values)
    sub_values = np.asarray(sub_values)
    K = node_values.shape[1]
    steps = np.diff(node_t)
    L = steps.shape[0]
    if L < 1 or len(sub_t) % L:
        raise ValueError(f"{len(sub_t)} sub-nodes do not split evenly over {L} elements")
    M = len(sub_t) // L
    eps_node = _pointwise(node_values, _exact_table(exact, node_t, K))
    eps_sub = _pointwise(sub_values, _exact_table(exact, sub_t, K))
    node_w = np.array(steps, dtype=float)
    sub_w = np.repeat(node_w / M, M)
    node = norms(eps_node[1:], node_w, node_t[1:])
    local = norms(eps_sub, sub_w, sub_t)
    return node, local


def global_errors(trajectory: Trajectory, exact=None, M: int = 1000):
    """``(node, local)`` error reports of a trajectory.

    ``exact`` defaults to the exact solution attached to the trajectory's
    problem. Nodes ``t_1..t_L`` carry the weight of the step ending there
    (``t_0`` holds the exact initial value and contributes nothing).
    """
    if exact is None and trajectory.problem is not None:
        exact = trajectory.problem.exact
    if exact is None:
        raise MissingExactSolutionError("problem has no exact solution; pass exact=")
    with precision.working_precision(trajectory.tables.dps):
        sub_t, sub_values = tabulate_subgrid(trajectory, M)
        node_t = precision.as_array(trajectory.mesh.nodes, trajectory.tables.dtype)
        return errors_from_samples(node_t, trajectory.node_values, sub_t, sub_values, exact)


def fit_order(points) -> float:
    """Least-squares slope of ``log e`` against ``log dt``.

    ``points`` is a sequence of ``(dt, e)`` pairs with positive entries.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise FitError("fit_order needs at least two (dt, e) pairs")
    if np.any(pts <= 0) or not np.all(np.isfinite(pts)):
        raise ValueError("dt and e must be positive and finite")
    x, y = np.log(pts[:, 0]), np.log(pts[:, 1])
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx <= 1e-24 * max(1.0, float(x @ x)):
        raise FitError("all dt are equal; the order is undefined")
    return float(xc @ (y - y.mean()) / sxx)


@dataclass(frozen=True)
class ConvergenceReport:
    """Errors on a mesh ladder plus fitted and theoretical orders.

    ``orders[kind][norm]`` is the fitted slope for ``kind`` in
    ``("node", "local")``; ``used[kind][norm]`` marks the rows above the
    noise floor that entered the fit.
    """

    degree: int
    dts: np.ndarray
    node: tuple
    local: tuple
    orders: dict
    used: dict
    noise_floor: float
    stats: SolveStats = field(default_factory=SolveStats, compare=False)

    @property
    def theoretical(self) -> dict:
        return {"node": 2 * self.degree + 1, "local": self.degree + 1}

    @property
    def rows(self):
        return list(zip(self.dts, self.node, self.local))

    def to_dict(self) -> dict:
        return {
            "degree": self.degree,
            "rows": [
                {"dt": float(dt), "eG": g.as_dict(), "eL": loc.as_dict()}
                for dt, g, loc in self.rows
            ],
            "orders": {k: dict(v) for k, v in self.orders.items()},
            "theoretical": self.theoretical,
            "noise_floor": self.noise_floor,
        }


def _as_mesh(problem: OdeProblem, m) -> TimeMesh:
    if isinstance(m, TimeMesh):
        return m
    nodes = int(m)
    if nodes < 2:
        raise ValueError(f"a mesh needs at least 2 nodes, got {nodes}")
    return TimeMesh.uniform(problem.t0, problem.t_end, nodes - 1)


def _fit_kind(dts, reports, floor, kind):
    orders, used = {}, {}
    for norm in NORMS:
        e = np.array([r[norm] for r in reports])
        keep = e >= floor
        if keep.sum() < 2:
            raise InsufficientDataError(
                f"{kind} {norm}: only {int(keep.sum())} row(s) above the noise floor {floor:g}"
            )
        orders[norm] = fit_order(np.column_stack([dts[keep], e[keep]]))
        used[norm] = keep
    return orders, used


def convergence_study(
    problem,
    degree: int,
    meshes,
    M: int = 1000,
    noise_floor: float = 1e-12,
    *,
    solver: str = "auto",
    jobs: int = 1,
    dps: int | None = None,
    tol: float | None = None,
) -> ConvergenceReport:
    """Solve on every mesh, measure errors and fit convergence orders.

    ``problem`` is an :class:`OdeProblem` (or anything with a ``.problem``
    attribute, such as a registry entry). ``meshes`` holds uniform
    :class:`TimeMesh` objects or node counts ``L``; a count becomes the
    uniform mesh of ``L - 1`` cells over the problem domain, so that
    ``dt = (t_end - t0) / (L - 1)``. Solves run on up to ``jobs`` threads.

    Raises
    ------
    InsufficientDataError
        Fewer than two rows above ``noise_floor`` for some fitted norm.
    """
    problem = getattr(problem, "problem", problem)
    if problem.exact is None:
        raise MissingExactSolutionError("convergence study needs an exact solution")
    mesh_list = [_as_mesh(problem, m) for m in meshes]
    if len(mesh_list) < 2:
        raise InsufficientDataError("convergence study needs at least two meshes")
    ends = {(float(m.nodes[0]), float(m.nodes[-1])) for m in mesh_list}
    if len(ends) != 1 or not all(m.is_uniform for m in mesh_list):
        raise ValueError("all meshes must be uniform over the same domain")

    def run(mesh):
        traj = solve_ivp(problem, mesh, degree, solver=solver, dps=dps, tol=tol)
        node, local = global_errors(traj, M=M)
        return traj.stats, node, local

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, mesh_list))
    else:
        results = [run(m) for m in mesh_list]

    total = SolveStats(method=solver, converged=True)
    for stats, _, _ in results:
        total.absorb(stats)
    (t0, t1), = ends
    dts = np.array([(t1 - t0) / m.n_elements for m in mesh_list])
    node = tuple(r[1] for r in results)
    local = tuple(r[2] for r in results)
    o_node, u_node = _fit_kind(dts, node, noise_floor, "node")
    o_loc, u_loc = _fit_kind(dts, local, noise_floor, "local")
    return ConvergenceReport(
        degree=degree,
        dts=dts,
        node=node,
        local=local,
        orders={"node": o_node, "local": o_loc},
        used={"node": u_node, "local": u_loc},
        noise_floor=noise_floor,
        stats=total,
    )
