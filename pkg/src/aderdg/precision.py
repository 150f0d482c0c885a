"""Scalar abstraction shared by every numerical module.

Arrays are plain numpy arrays. Binary64 data use ``float64``/``complex128``;
extended precision data use ``dtype=object`` arrays holding ``mpmath.mpf`` /
``mpmath.mpc`` values. The working precision of an extended run is a decimal
digit count (``dps``) that travels with the scheme tables.
"""

from __future__ import annotations

import contextlib
import math
from typing import Callable, Iterator

import mpmath
import numpy as np

__all__ = [
    "EXTENDED",
    "all_finite",
    "as_array",
    "default_tol",
    "elementwise",
    "is_extended",
    "machine_eps",
    "scalar",
    "working_precision",
]

EXTENDED = np.dtype(object)

_MP_TYPES = (mpmath.mpf, mpmath.mpc)


def is_extended(x) -> bool:
    """True for mpmath scalars and object arrays."""
    if isinstance(x, _MP_TYPES):
        return True
    return isinstance(x, np.ndarray) and x.dtype == EXTENDED


def dtype_for(dps: int | None) -> np.dtype:
    return np.dtype(np.float64) if dps is None else EXTENDED


@contextlib.contextmanager
def working_precision(dps: int | None) -> Iterator[None]:
    """Run the body at ``dps`` decimal digits; no-op for binary64."""
    if dps is None:
        yield
    else:
        with mpmath.workdps(dps):
            yield


def machine_eps(dtype) -> float:
    dtype = np.dtype(dtype)
    if dtype == EXTENDED:
        return mpmath.mp.eps
    if dtype.kind == "c":
        return float(np.finfo(np.float64).eps)
    return float(np.finfo(dtype).eps)


def default_tol(dtype) -> float:
    """Iteration tolerance at the roundoff floor of the working precision."""
    if np.dtype(dtype) == EXTENDED:
        return mpmath.mpf(10) ** (-(mpmath.mp.dps - 3))
    return 1e-13


def scalar(x, dtype):
    """Convert ``x`` (number or decimal string) to a scalar of ``dtype``."""
    if np.dtype(dtype) == EXTENDED:
        if isinstance(x, _MP_TYPES):
            return x
        if isinstance(x, complex):
            return mpmath.mpc(x)
        return mpmath.mpf(x)
    return np.dtype(dtype).type(x)


def as_array(x, dtype) -> np.ndarray:
    """``np.asarray`` that promotes plain numbers to mpmath for object dtype."""
    dtype = np.dtype(dtype)
    if dtype != EXTENDED:
        return np.asarray(x, dtype=dtype)
    arr = np.array(x, dtype=object)
    flat = arr.reshape(-1)
    for i, v in enumerate(flat):
        if not isinstance(v, _MP_TYPES):
            flat[i] = scalar(v, EXTENDED)
    return arr


def all_finite(x) -> bool:
    if is_extended(x):
        if isinstance(x, _MP_TYPES):
            return bool(mpmath.isfinite(x))
        return all(mpmath.isfinite(v) for v in x.reshape(-1))
    return bool(np.all(np.isfinite(x)))


def elementwise(name: str) -> Callable:
    """Return a math function that works on floats, arrays and mpmath values.

    ``elementwise("exp")(x)`` calls ``numpy.exp`` for binary64 input and
    ``mpmath.exp`` (element by element) for extended input.
    """
    np_fn = getattr(np, name)
    mp_fn = getattr(mpmath, name)
    mp_vec = np.frompyfunc(mp_fn, 1, 1)

    def fn(x):
        if isinstance(x, _MP_TYPES):
            return mp_fn(x)
        if isinstance(x, np.ndarray) and x.dtype == EXTENDED:
            return mp_vec(x)
        return np_fn(x)

    fn.__name__ = name
    return fn


def log_abs(x) -> float:
    """Natural log of |x| that survives magnitudes below the binary64 range."""
    if isinstance(x, _MP_TYPES):
        return float(mpmath.log(abs(x)))
    return math.log(abs(float(x)))
