"""Linear stability function of the scheme.

For ``u' = lambda u`` and ``z = lambda * dt`` the predictor gives
``(E - z B) q = 1 * u_n`` and the corrector ``u_{n+1} = u_n + z w.q``, hence

    R(z) = 1 + z w^T (E - z B)^{-1} 1
         = det(E - z B + z 1 w^T) / det(E - z B).

Note the factor ``z`` in the resolvent form: without it the two expressions
disagree; the determinant form follows from the matrix determinant lemma.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import precision
from ._validation import check_positive_int
from .linalg import lu_factor
from .tables import SchemeTables

__all__ = [
    "PoleError",
    "StabilityEvaluation",
    "StabilityRaster",
    "evaluate",
    "raster_region",
    "ray_profile",
    "stability_R",
    "stability_R_det",
]


class PoleError(ZeroDivisionError):
    """``E - z B`` is singular: ``z`` is the reciprocal of an eigenvalue of ``B``."""


@dataclass(frozen=True)
class StabilityEvaluation:
    z: complex
    R: complex

    @property
    def abs_R(self) -> float:
        return abs(self.R)


@dataclass(frozen=True)
class StabilityRaster:
    """``abs_R[i, j]`` is ``|R(re[j] + 1j * im[i])|``; poles hold ``inf``."""

    re: np.ndarray
    im: np.ndarray
    abs_R: np.ndarray

    @property
    def stable(self) -> np.ndarray:
        return self.abs_R < 1


def _complex_array(tables: SchemeTables, z):
    if tables.dtype == precision.EXTENDED:
        return precision.as_array(np.asarray(z, dtype=object), precision.EXTENDED)
    return np.asarray(z, dtype=np.complex128)


def _shifted(tables: SchemeTables, zz):
    n = tables.size
    eye = precision.as_array(np.eye(n), tables.dtype)
    return eye[None] - zz.reshape(-1)[:, None, None] * tables.B[None]


def _resolvent(tables: SchemeTables, z, check: bool):
    with precision.working_precision(tables.dps):
        zz = _complex_array(tables, z)
        A = _shifted(tables, zz)
        factors = lu_factor(A, check=False)
        ones = precision.as_array(np.ones(tables.size), tables.dtype)
        with np.errstate(divide="ignore", invalid="ignore"):
            x = factors.solve(np.broadcast_to(ones, (A.shape[0], tables.size)))
            R = 1 + zz.reshape(-1) * (x * tables.weights[None]).sum(axis=1)
        if np.any(factors.singular):
            if check:
                raise PoleError(f"R(z) has a pole at z = {zz.reshape(-1)[factors.singular][0]}")
            R = np.where(factors.singular, complex("inf"), R)
        return R.reshape(zz.shape)


def stability_R(tables: SchemeTables, z):
    """``R(z) = 1 + z w^T (E - z B)^{-1} 1`` for a scalar or array ``z``.

    Raises :class:`PoleError` if ``E - z B`` is singular for any ``z``.
    """
    R = _resolvent(tables, z, check=True)
    return R[()] if np.ndim(z) == 0 else R


def stability_R_det(tables: SchemeTables, z):
    """Determinant form ``det(E - z B + z 1 w^T) / det(E - z B)``."""
    with precision.working_precision(tables.dps):
        zz = _complex_array(tables, z)
        den_f = lu_factor(_shifted(tables, zz), check=False)
        if np.any(den_f.singular):
            raise PoleError(f"R(z) has a pole at z = {zz.reshape(-1)[den_f.singular][0]}")
        rank_one = np.ones((tables.size, 1), dtype=tables.dtype) * tables.weights[None, :]
        num = _shifted(tables, zz) + zz.reshape(-1)[:, None, None] * rank_one[None]
        R = lu_factor(num, check=False).det() / den_f.det()
        R = R.reshape(zz.shape)
    return R[()] if np.ndim(z) == 0 else R


def evaluate(tables: SchemeTables, z) -> StabilityEvaluation:
    return StabilityEvaluation(z=z, R=stability_R(tables, z))


def raster_region(tables: SchemeTables, re_range, im_range, resolution) -> StabilityRaster:
    """Sample ``|R|`` on a ``W x H`` grid spanning the given window.

    ``resolution`` is ``(W, H)`` or a single integer for a square grid.
    Grid points are the ``W`` (``H``) equispaced values including both ends
    of ``re_range`` (``im_range``).
    """
    if np.ndim(resolution) == 0:
        resolution = (resolution, resolution)
    W = check_positive_int(resolution[0], "resolution width")
    H = check_positive_int(resolution[1], "resolution height")
    re = np.linspace(re_range[0], re_range[1], W)
    im = np.linspace(im_range[0], im_range[1], H)
    Z = re[None, :] + 1j * im[:, None]
    R = _resolvent(tables, Z, check=False)
    absR = np.array(np.abs(R), dtype=float)
    return StabilityRaster(re=re, im=im, abs_R=absR)


def ray_profile(tables: SchemeTables, arg: float, radii) -> np.ndarray:
    """``|R(r exp(i arg))|`` for each radius; poles give ``inf``."""
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be positive and increasing")
    if tables.dtype == precision.EXTENDED:
        import mpmath

        with precision.working_precision(tables.dps):
            z = np.array([mpmath.mpf(r) * mpmath.expj(arg) for r in radii], dtype=object)
    else:
        z = radii * np.exp(1j * arg)
    R = _resolvent(tables, z, check=False)
    return np.array(np.abs(R), dtype=float)
