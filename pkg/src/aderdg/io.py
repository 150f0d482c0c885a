"""CSV/JSON emitters with reproducible number formatting."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import mpmath
import numpy as np

from .integrator import Trajectory, tabulate_subgrid

__all__ = [
    "SolutionTable",
    "fmt",
    "read_solution_csv",
    "solution_rows",
    "write_csv",
    "write_json",
]


def fmt(x, dps: int | None = None) -> str:
    """Shortest round-trip text for binary64; ``dps`` digits for mpmath values."""
    if isinstance(x, (mpmath.mpf, mpmath.mpc)):
        return mpmath.nstr(x, dps or mpmath.mp.dps, strip_zeros=False)
    if isinstance(x, (complex, np.complexfloating)):
        raise TypeError("complex values must be split into real and imaginary columns")
    return repr(float(x))


def write_csv(stream, header, rows, dps: int | None = None) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt(v, dps) for v in row])


def write_json(stream, obj) -> None:
    """Floats go through ``json`` (``repr``), so they round-trip exactly."""
    json.dump(obj, stream, indent=2, sort_keys=False, allow_nan=True)
    stream.write("\n")


def solution_rows(trajectory: Trajectory, M: int = 0, include_endpoints: bool = False):
    """Header and rows ``(t, u_1..u_K, kind)``: all nodes, then ``M`` sub-nodes per element."""
    K = trajectory.node_values.shape[1]
    header = ["t", *(f"u_{k + 1}" for k in range(K)), "kind"]
    rows = [(t, *u, "node") for t, u in zip(trajectory.mesh.nodes, trajectory.node_values)]
    if M:
        sub_t, sub_u = tabulate_subgrid(trajectory, M, include_endpoints)
        rows += [(t, *u, "sub") for t, u in zip(sub_t, sub_u)]
    return header, rows


@dataclass(frozen=True)
class SolutionTable:
    node_t: np.ndarray
    node_values: np.ndarray
    sub_t: np.ndarray
    sub_values: np.ndarray


def read_solution_csv(path) -> SolutionTable:
    """Parse a file written by ``solve`` back into float arrays."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[0] != "t" or header[-1] != "kind":
            raise ValueError(f"{path}: not a solution table (header {header})")
        K = len(header) - 2
        buckets = {"node": [], "sub": []}
        for lineno, row in enumerate(reader, start=2):
            if len(row) != K + 2 or row[-1] not in buckets:
                raise ValueError(f"{path}:{lineno}: malformed row")
            buckets[row[-1]].append([float(v) for v in row[:-1]])
    node = np.array(buckets["node"], dtype=float).reshape(-1, K + 1)
    loc = np.array(buckets["sub"], dtype=float).reshape(-1, K + 1)
    return SolutionTable(node[:, 0], node[:, 1:], loc[:, 0], loc[:, 1:])
