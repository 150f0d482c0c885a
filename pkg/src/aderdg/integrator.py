"""Marching the predictor/corrector pair across a time mesh."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from . import precision
from ._validation import check_increasing, check_positive_int, check_state
from .predictor import (
    DivergenceError,
    ElementCoefficients,
    EvaluationError,
    OdeProblem,
    PredictorOptions,
    SolveStats,
    _Evaluator,
    solve_element,
)
from .tables import SchemeTables, basis_matrix, build_tables

__all__ = [
    "OutOfRangeError",
    "TimeMesh",
    "Trajectory",
    "advance_node",
    "dense_eval",
    "interface_jumps",
    "solve_ivp",
    "tabulate_subgrid",
]


class OutOfRangeError(ValueError):
    """Dense evaluation requested outside the integrated interval."""


@dataclass(frozen=True, eq=False)
class TimeMesh:
    """Strictly increasing grid nodes ``t_0 < ... < t_L``."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes)
        if nodes.dtype.kind in "biu":
            nodes = nodes.astype(float)
        object.__setattr__(self, "nodes", check_increasing(nodes))

    @classmethod
    def uniform(cls, a, b, cells: int) -> "TimeMesh":
        cells = check_positive_int(cells, "cells")
        i = np.arange(cells + 1)
        if precision.is_extended(a) or precision.is_extended(b):
            nodes = np.array([a + (b - a) * k / cells for k in range(cells + 1)], dtype=object)
        else:
            nodes = a + (b - a) * i / cells
        nodes[-1] = b
        return cls(nodes)

    @classmethod
    def graded(cls, segments) -> "TimeMesh":
        """Concatenate uniform pieces given as ``(cells, a, b)`` triples.

        Consecutive pieces must share their endpoint.
        """
        parts = []
        for k, (cells, a, b) in enumerate(segments):
            if parts and parts[-1][-1] != a:
                raise ValueError(f"segment {k} starts at {a}, previous ends at {parts[-1][-1]}")
            piece = cls.uniform(a, b, cells).nodes
            parts.append(piece if not parts else piece[1:])
        if not parts:
            raise ValueError("graded mesh needs at least one segment")
        return cls(np.concatenate(parts))

    @classmethod
    def parse(cls, spec: str) -> "TimeMesh":
        """Build a mesh from ``uniform:CELLS:a:b`` or ``graded:C1:a:b,C2:b:c,...``."""
        kind, _, body = spec.partition(":")
        try:
            if kind == "uniform":
                cells, a, b = body.split(":")
                return cls.uniform(float(a), float(b), int(cells))
            if kind == "graded":
                segs = []
                for chunk in re.split(r"[,;]", body):
                    cells, a, b = chunk.split(":")
                    segs.append((int(cells), float(a), float(b)))
                return cls.graded(segs)
        except ValueError as exc:
            raise ValueError(f"bad mesh spec {spec!r}: {exc}") from None
        raise ValueError(f"bad mesh spec {spec!r}: expected 'uniform:...' or 'graded:...'")

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def n_elements(self) -> int:
        return self.nodes.shape[0] - 1

    @property
    def is_uniform(self) -> bool:
        h = np.array([float(v) for v in self.steps])
        return bool(np.allclose(h, h[0], rtol=1e-9, atol=0))

    def locate(self, t) -> np.ndarray:
        """Element index with ``t_n <= t < t_{n+1}``; the last element is closed."""
        t = np.atleast_1d(t)
        idx = np.searchsorted(self.nodes, t, side="right") - 1
        return np.clip(idx, 0, self.n_elements - 1)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Node solution plus the local polynomial of every element."""

    mesh: TimeMesh
    node_values: np.ndarray
    elements: tuple
    tables: SchemeTables
    stats: SolveStats = field(default_factory=SolveStats)
    problem: OdeProblem | None = None

    @property
    def degree(self) -> int:
        return self.tables.degree

    @property
    def coefficients(self) -> np.ndarray:
        """Stacked coefficients, shape ``(L, N + 1, K)``."""
        return np.stack([e.coeffs for e in self.elements])


def advance_node(tables: SchemeTables, problem: OdeProblem, u_n, element: ElementCoefficients, stats=None):
    """Corrector: ``u_{n+1} = u_n + dt * sum_p w_p F(Q_p, t_p)``.

    Uses ``element.rhs_values`` when cached; otherwise ``F`` is evaluated
    again (and counted in ``stats`` when given).
    """
    with precision.working_precision(tables.dps):
        u_n = check_state(u_n, problem.dim, tables.dtype, "u_n")
        F = element.rhs_values
        if F is None:
            ev = _Evaluator(problem, tables.dtype, stats if stats is not None else SolveStats())
            times = element.t_left + element.dt * tables.nodes
            F = ev.at_nodes(precision.as_array(element.coeffs, tables.dtype), times)
        u_next = u_n + element.dt * (tables.weights @ F)
        if not precision.all_finite(u_next):
            raise EvaluationError(f"non-finite node value after element {element.element_index}")
        return u_next


def _check_mesh(problem: OdeProblem, mesh: TimeMesh):
    t0, t_end = float(problem.t0), float(problem.t_end)
    scale = max(1.0, abs(t0), abs(t_end))
    if abs(float(mesh.nodes[0]) - t0) > 1e-12 * scale:
        raise ValueError(f"mesh starts at {mesh.nodes[0]}, problem initial time is {problem.t0}")
    if float(mesh.nodes[-1]) > t_end + 1e-12 * scale:
        raise ValueError(f"mesh ends at {mesh.nodes[-1]}, beyond problem end {problem.t_end}")


def solve_ivp(
    problem: OdeProblem,
    mesh: TimeMesh,
    degree: int = 2,
    *,
    solver: str = "auto",
    tol: float | None = None,
    max_iter: int | None = None,
    cache_rhs: bool = True,
    dps: int | None = None,
    tables: SchemeTables | None = None,
) -> Trajectory:
    """Integrate ``problem`` over ``mesh`` with degree-``degree`` elements.

    Elements are processed left to right; each runs the predictor
    (``solver`` = ``"picard"``, ``"newton"`` or ``"auto"``), then the
    corrector produces the next node value.

    Raises
    ------
    DivergenceError
        Predictor failure, annotated with the element index and interval.
    """
    if tables is None:
        tables = build_tables(degree, dps)
    opts = PredictorOptions(method=solver, tol=tol, max_iter=max_iter)
    _check_mesh(problem, mesh)
    total = SolveStats(method=solver, converged=True)
    with precision.working_precision(tables.dps):
        t = precision.as_array(mesh.nodes, tables.dtype)
        u = check_state(problem.u0, problem.dim, tables.dtype, "u0")
        values = [u]
        elements = []
        for n in range(mesh.n_elements):
            dt = t[n + 1] - t[n]
            try:
                element, stats = solve_element(tables, problem, u, t[n], dt, opts, element_index=n)
            except DivergenceError as exc:
                exc.element_index = n
                exc.interval = (t[n], t[n + 1])
                exc.args = (f"{exc.args[0]} [element {n}, t in [{float(t[n]):.6g}, {float(t[n + 1]):.6g}]]",)
                raise
            total.absorb(stats)
            if not cache_rhs:
                element = ElementCoefficients(element.coeffs, element.t_left, element.dt, n)
            u = advance_node(tables, problem, u, element, stats=total)
            values.append(u)
            elements.append(element)
    return Trajectory(
        mesh=mesh,
        node_values=np.stack(values),
        elements=tuple(elements),
        tables=tables,
        stats=total,
        problem=problem,
    )


def dense_eval(trajectory: Trajectory, t) -> np.ndarray:
    """Local solution ``u_L(t) = sum_p Q[n, p] phi_p((t - t_n) / dt_n)``.

    Accepts a scalar (returns shape ``(K,)``) or an array of times (returns
    ``(len(t), K)``).
    """
    mesh = trajectory.mesh
    scalar_input = np.ndim(t) == 0
    tt = np.atleast_1d(np.asarray(t, dtype=mesh.nodes.dtype if mesh.nodes.dtype == object else float))
    lo, hi = mesh.nodes[0], mesh.nodes[-1]
    if np.any(tt < lo) or np.any(tt > hi):
        raise OutOfRangeError(f"t outside [{lo}, {hi}]")
    idx = mesh.locate(tt)
    tables = trajectory.tables
    coeffs = trajectory.coefficients
    out = np.empty((tt.shape[0], coeffs.shape[2]), dtype=coeffs.dtype)
    with precision.working_precision(tables.dps):
        for n in np.unique(idx):
            sel = idx == n
            e = trajectory.elements[n]
            phi = basis_matrix(tables, (tt[sel] - e.t_left) / e.dt)
            out[sel] = phi @ e.coeffs
    return out[0] if scalar_input else out


def subnode_positions(M: int, include_endpoints: bool = False) -> np.ndarray:
    """Local coordinates of tabulation points: cell centred by default."""
    M = check_positive_int(M, "M")
    if include_endpoints:
        if M == 1:
            return np.array([0.5])
        return np.linspace(0.0, 1.0, M)
    return (np.arange(M) + 0.5) / M


def tabulate_subgrid(trajectory: Trajectory, M: int, include_endpoints: bool = False):
    """Tabulate the local solution at ``M`` sub-nodes of every element.

    One basis matrix of shape ``(M, N + 1)`` is precomputed and multiplied
    with each element's coefficients.

    Returns
    -------
    t : ndarray, shape (L * M,)
    values : ndarray, shape (L * M, K)
    """
    tables = trajectory.tables
    with precision.working_precision(tables.dps):
        xi = precision.as_array(subnode_positions(M, include_endpoints), tables.dtype)
        phi = basis_matrix(tables, xi)
        coeffs = trajectory.coefficients
        values = np.einsum("mp,lpk->lmk", phi, coeffs) if coeffs.dtype != object else np.stack(
            [phi @ c for c in coeffs]
        )
        starts = np.array([e.t_left for e in trajectory.elements], dtype=coeffs.dtype)
        steps = np.array([e.dt for e in trajectory.elements], dtype=coeffs.dtype)
        t = starts[:, None] + steps[:, None] * xi[None, :]
    L, _, K = coeffs.shape
    return t.reshape(L * M), values.reshape(L * M, K)


def interface_jumps(trajectory: Trajectory) -> np.ndarray:
    """``max_k |q_n(1) - q_{n+1}(0)|`` at each interior node (a diagnostic).

    Testing the predictor with the sum of all basis functions reproduces the
    corrector, so ``q_n(1)`` equals ``u_{n+1}`` up to the predictor
    tolerance; the local solution jumps at the left end of each element.
    """
    tables = trajectory.tables
    with precision.working_precision(tables.dps):
        right = np.stack([tables.phi_at_1 @ e.coeffs for e in trajectory.elements[:-1]])
        left = np.stack([tables.phi_at_0 @ e.coeffs for e in trajectory.elements[1:]])
        return np.abs(right - left).max(axis=1)
