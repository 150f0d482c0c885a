"""Argument checks shared by the public entry points."""

from __future__ import annotations

import numbers

import numpy as np

from . import precision


def check_degree(N) -> int:
    if isinstance(N, bool) or not isinstance(N, numbers.Integral):
        raise TypeError(f"degree must be an integer, got {N!r}")
    if N < 0:
        raise ValueError(f"degree must be non-negative, got {N}")
    return int(N)


def check_positive_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_state(u, dim: int, dtype, name: str = "state") -> np.ndarray:
    """Coerce a state vector to a 1-D array of length ``dim``."""
    arr = precision.as_array(u, dtype)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.shape != (dim,):
        raise ValueError(f"{name} must have shape ({dim},), got {arr.shape}")
    if not precision.all_finite(arr):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_increasing(nodes, name: str = "mesh") -> np.ndarray:
    arr = np.asarray(nodes)
    if arr.ndim != 1 or arr.size < 2:
        raise ValueError(f"{name} needs at least two nodes, got shape {arr.shape}")
    if not precision.all_finite(arr):
        raise ValueError(f"{name} contains non-finite nodes")
    if not np.all(arr[1:] > arr[:-1]):
        raise ValueError(f"{name} nodes must be strictly increasing")
    return arr
