"""Dense LU factorisation with partial pivoting.

Works on real, complex and extended precision (object) arrays and on stacks
of matrices: every routine accepts ``A`` of shape ``(..., n, n)`` and loops
over the last two axes only, so a batch of small systems costs ``O(n)``
vectorised numpy operations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .precision import EXTENDED, as_array, machine_eps

__all__ = [
    "LUFactors",
    "SingularMatrixError",
    "det",
    "lu_factor",
    "lu_solve",
    "mat_inverse",
    "norm_inf",
    "norm_max",
]

PIVOT_FACTOR = 64


class SingularMatrixError(ArithmeticError):
    """Raised when a pivot is negligible relative to its column."""

    def __init__(self, message: str, batch_index=None):
        super().__init__(message)
        self.batch_index = batch_index


@dataclass(frozen=True)
class LUFactors:
    """Packed ``P A = L U`` factors; ``L`` has an implicit unit diagonal."""

    lu: np.ndarray
    perm: np.ndarray
    sign: np.ndarray
    singular: np.ndarray

    @property
    def n(self) -> int:
        return self.lu.shape[-1]

    def solve(self, b) -> np.ndarray:
        """Solve ``A x = b`` for ``b`` of shape ``(..., n)`` or ``(..., n, m)``."""
        n = self.n
        batch = self.lu.shape[:-2]
        b = np.asarray(b)
        vector = b.ndim == len(batch) + 1 or b.ndim == 1
        if vector:
            b = b[..., None]
        b = np.broadcast_to(b, batch + b.shape[-2:])
        if b.shape[-2] != n:
            raise ValueError(f"right-hand side has {b.shape[-2]} rows, expected {n}")
        lu = self.lu.reshape(-1, n, n)
        dtype = np.result_type(lu.dtype, b.dtype)
        y = np.take_along_axis(
            b.reshape(-1, n, b.shape[-1]).astype(dtype, copy=False),
            self.perm.reshape(-1, n)[:, :, None],
            axis=1,
        ).copy()
        for i in range(1, n):
            y[:, i] -= (lu[:, i, :i, None] * y[:, :i]).sum(axis=1)
        for i in range(n - 1, -1, -1):
            if i < n - 1:
                y[:, i] -= (lu[:, i, i + 1 :, None] * y[:, i + 1 :]).sum(axis=1)
            y[:, i] /= lu[:, i, i, None]
        x = y.reshape(batch + (n, b.shape[-1]))
        return x[..., 0] if vector else x

    def det(self) -> np.ndarray:
        diag = np.diagonal(self.lu, axis1=-2, axis2=-1)
        out = self.sign * diag[..., 0]
        for k in range(1, self.n):
            out = out * diag[..., k]
        return out


def lu_factor(A, check: bool = True) -> LUFactors:
    """Factor ``A`` (shape ``(..., n, n)``) with row partial pivoting.

    A pivot counts as singular when its magnitude is at most
    ``64 * eps * max|column|`` of the input column. With ``check=True`` any
    singular pivot raises :class:`SingularMatrixError`; otherwise the
    ``singular`` mask marks the affected batch entries and factorisation
    continues with a unit stand-in pivot for the elimination step.
    """
    A = np.asarray(A)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {A.shape}")
    n = A.shape[-1]
    batch = A.shape[:-2]
    lu = np.array(A.reshape(-1, n, n), copy=True)
    if lu.dtype.kind in "biu":
        lu = lu.astype(np.float64)
    nb = lu.shape[0]
    rows = np.arange(nb)
    perm = np.tile(np.arange(n), (nb, 1))
    sign = np.ones(nb, dtype=lu.dtype)
    singular = np.zeros(nb, dtype=bool)
    eps = machine_eps(lu.dtype)
    col_scale = np.abs(lu).max(axis=1) * (PIVOT_FACTOR * eps)

    for k in range(n):
        piv = k + np.argmax(np.abs(lu[:, k:, k]), axis=1).astype(int)
        swap = piv != k
        if np.any(swap):
            r, p = rows[swap], piv[swap]
            lu[r, k], lu[r, p] = lu[r, p].copy(), lu[r, k].copy()
            perm[r, k], perm[r, p] = perm[r, p].copy(), perm[r, k].copy()
            sign[swap] = -sign[swap]
        pivot = lu[:, k, k]
        small = np.asarray(np.abs(pivot) <= col_scale[:, k], dtype=bool)
        if np.any(small):
            singular |= small
            pivot = np.where(small, np.ones_like(pivot), pivot)
        if k + 1 < n:
            lu[:, k + 1 :, k] /= pivot[:, None]
            lu[:, k + 1 :, k + 1 :] -= lu[:, k + 1 :, k, None] * lu[:, k, None, k + 1 :]

    factors = LUFactors(
        lu=lu.reshape(batch + (n, n)),
        perm=perm.reshape(batch + (n,)),
        sign=sign.reshape(batch),
        singular=singular.reshape(batch),
    )
    if check and np.any(factors.singular):
        where = np.argwhere(factors.singular)
        msg = "matrix is singular to working precision"
        if batch:
            msg += f" (batch entries {where.tolist()})"
        raise SingularMatrixError(msg, batch_index=where)
    return factors


def lu_solve(A, b) -> np.ndarray:
    """Solve ``A x = b``; raises :class:`SingularMatrixError` on a zero pivot."""
    return lu_factor(A).solve(b)


def mat_inverse(A) -> np.ndarray:
    A = np.asarray(A)
    eye = as_array(np.eye(A.shape[-1]), A.dtype if A.dtype == EXTENDED else np.float64)
    return lu_factor(A).solve(eye)


def det(A) -> np.ndarray:
    """Determinant via LU; never raises on singular input."""
    return lu_factor(A, check=False).det()


def norm_max(x):
    """Largest entry magnitude (the vector max-norm used throughout)."""
    x = np.asarray(x)
    if x.size == 0:
        return 0.0
    return np.abs(x).max()


def norm_inf(A):
    """Induced infinity norm: maximum absolute row sum."""
    return np.abs(np.asarray(A)).sum(axis=-1).max(axis=-1)
