"""Degree-dependent constants of the scheme.

Everything the predictor and corrector need for a polynomial degree ``N``
lives in an immutable :class:`SchemeTables`: the ``N + 1`` Gauss-Legendre
nodes and weights on ``[0, 1]``, the Lagrange basis through those nodes (in
barycentric form), and the predictor matrices ``K``, ``M`` and
``B = K^-1 diag(M)``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import mpmath
import numpy as np

from . import precision
from ._validation import check_degree
from .linalg import mat_inverse

__all__ = [
    "SchemeTables",
    "basis_eval_all",
    "basis_matrix",
    "build_tables",
    "gauss_legendre_01",
]

_NEWTON_MAXITER = 100

_cos = precision.elementwise("cos")


def _legendre(n: int, x):
    """Return ``(P_n(x), P_n'(x))`` by the three-term recurrence."""
    p_prev = x * 0 + 1
    p = x * 1
    if n == 0:
        return p_prev, x * 0
    for k in range(1, n):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
    dp = n * (x * p - p_prev) / (x * x - 1)
    return p, dp


def gauss_legendre_01(N: int, dps: int | None = None):
    """Gauss-Legendre rule with ``N + 1`` points mapped to ``[0, 1]``.

    Roots of the Legendre polynomial of degree ``N + 1`` are found by Newton
    iteration from Chebyshev points, then symmetrised so that
    ``nodes[p] + nodes[N - p] == 1`` and ``weights[p] == weights[N - p]``.

    Parameters
    ----------
    N : int
        Polynomial degree of the nodal basis; the rule is exact up to degree
        ``2N + 1``.
    dps : int, optional
        Decimal digits for an extended precision (mpmath) rule.

    Returns
    -------
    nodes, weights : ndarray
        Increasing nodes in ``(0, 1)`` and positive weights summing to one.
    """
    N = check_degree(N)
    n = N + 1
    dtype = precision.dtype_for(dps)
    with precision.working_precision(dps):
        pi = +mpmath.pi if dps is not None else np.pi
        k = precision.as_array(np.arange(1, n + 1), dtype)
        x = _cos(pi * (2 * k - 1) / (2 * n))
        eps = precision.machine_eps(dtype)
        for _ in range(_NEWTON_MAXITER):
            p, dp = _legendre(n, x)
            dx = p / dp
            x = x - dx
            if np.abs(dx).max() <= 4 * eps:
                break
        _, dp = _legendre(n, x)
        w = 2 / ((1 - x * x) * dp * dp)

        order = np.argsort(np.array([float(v) for v in x]))
        x, w = x[order], w[order]
        nodes = (1 + x) / 2
        weights = w / 2
        nodes = (nodes + (1 - nodes[::-1])) / 2
        weights = (weights + weights[::-1]) / 2
    return nodes, weights


@dataclass(frozen=True, eq=False)
class SchemeTables:
    """Immutable discretisation constants for one degree.

    ``K`` and ``M`` are the stiffness-like and (diagonal) mass matrices of the
    local weak problem, ``B = K^-1 diag(M)`` maps right-hand side values at
    the nodes to predictor coefficients, ``diff_matrix[l, q]`` is
    ``phi_q'(nodes[l])``.
    """

    degree: int
    nodes: np.ndarray
    weights: np.ndarray
    K: np.ndarray
    M: np.ndarray
    B: np.ndarray
    K_inv: np.ndarray
    phi_at_0: np.ndarray
    phi_at_1: np.ndarray
    bary_weights: np.ndarray
    diff_matrix: np.ndarray
    dps: int | None = None

    @property
    def dtype(self) -> np.dtype:
        return self.nodes.dtype

    @property
    def size(self) -> int:
        return self.degree + 1


def _barycentric_weights(nodes) -> np.ndarray:
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, nodes[0] * 0 + 1)
    lam = 1 / np.prod(diff, axis=1)
    return lam / np.abs(lam).max()


def _differentiation_matrix(nodes, lam) -> np.ndarray:
    n = len(nodes)
    diff = nodes[:, None] - nodes[None, :]
    off = ~np.eye(n, dtype=bool)
    D = np.zeros_like(diff)
    D[off] = (lam[None, :] / lam[:, None])[off] / diff[off]
    D[~off] = -np.sum(np.where(off, D, 0 * D), axis=1)
    return D


def _bary_eval(nodes, lam, taus) -> np.ndarray:
    taus = np.asarray(taus)
    diff = taus[:, None] - nodes[None, :]
    hit = diff == 0
    safe = np.where(hit, nodes[0] * 0 + 1, diff)
    terms = lam[None, :] / safe
    out = terms / terms.sum(axis=1, keepdims=True)
    rows = hit.any(axis=1)
    if np.any(rows):
        out[rows] = np.where(hit[rows], nodes[0] * 0 + 1, nodes[0] * 0)
    return out


@functools.lru_cache(maxsize=64)
def build_tables(N: int, dps: int | None = None) -> SchemeTables:
    """Assemble all constants for degree ``N`` (cached per ``(N, dps)``).

    ``K[p, q] = phi_p(1) phi_q(1) - int_0^1 phi_p' phi_q`` is integrated
    exactly by the ``N + 1`` point rule, which also makes ``M`` equal to the
    quadrature weights.
    """
    N = check_degree(N)
    nodes, weights = gauss_legendre_01(N, dps)
    with precision.working_precision(dps):
        lam = _barycentric_weights(nodes)
        D = _differentiation_matrix(nodes, lam)
        ends = precision.as_array([0, 1], nodes.dtype)
        phi0, phi1 = _bary_eval(nodes, lam, ends)
        K = np.outer(phi1, phi1) - D.T * weights[None, :]
        K_inv = mat_inverse(K)
        B = K_inv * weights[None, :]
    arrays = dict(
        nodes=nodes,
        weights=weights,
        K=K,
        M=weights.copy(),
        B=B,
        K_inv=K_inv,
        phi_at_0=phi0,
        phi_at_1=phi1,
        bary_weights=lam,
        diff_matrix=D,
    )
    for a in arrays.values():
        a.flags.writeable = False
    return SchemeTables(degree=N, dps=dps, **arrays)


def basis_matrix(tables: SchemeTables, taus) -> np.ndarray:
    """Values ``phi_p(tau_m)`` as an ``(len(taus), N + 1)`` matrix."""
    with precision.working_precision(tables.dps):
        taus = precision.as_array(np.atleast_1d(taus), tables.dtype)
        return _bary_eval(tables.nodes, tables.bary_weights, taus)


def basis_eval_all(tables: SchemeTables, tau) -> np.ndarray:
    """Return ``[phi_0(tau), ..., phi_N(tau)]`` for a scalar ``tau``.

    Points outside ``[0, 1]`` are allowed; the basis is then extrapolated.
    """
    return basis_matrix(tables, [tau])[0]
