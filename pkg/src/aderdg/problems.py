"""Registry of test problems with exact solutions.

``get_problem(name, **params)`` returns a :class:`ProblemSpec`; pass
``dps=<digits>`` to obtain a problem whose right-hand side, Jacobian and
exact solution work on mpmath values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import mpmath
import numpy as np

from . import precision
from .predictor import OdeProblem

__all__ = [
    "PROBLEMS",
    "ProblemSpec",
    "UnknownProblemError",
    "flame_exact",
    "get_problem",
    "lambert_w_principal",
    "list_problems",
]

_exp = precision.elementwise("exp")
_log = precision.elementwise("log")
_cos = precision.elementwise("cos")
_sin = precision.elementwise("sin")
_tan = precision.elementwise("tan")
_sinh = precision.elementwise("sinh")
_cosh = precision.elementwise("cosh")


class UnknownProblemError(KeyError):
    pass


@dataclass(frozen=True)
class ProblemSpec:
    """A registered problem plus its default mesh ladder (node counts)."""

    name: str
    problem: OdeProblem
    default_meshes: tuple = ()
    params: dict = field(default_factory=dict)
    notes: str = ""

    @property
    def dim(self) -> int:
        return self.problem.dim


def _vec(*items):
    """Stack components; array-valued components give shape ``(n, K)``."""
    if any(np.ndim(v) > 0 for v in items):
        return np.stack(np.broadcast_arrays(*items), axis=-1)
    if any(precision.is_extended(v) for v in items):
        return np.array(items, dtype=object)
    return np.array(items, dtype=float)


def _pi(dps):
    return +mpmath.pi if dps is not None else math.pi


def _harm_osc(dps, **_):
    def rhs(u, t):
        return _vec(u[1], -u[0])

    def jac(u, t):
        return np.array([[0.0, 1.0], [-1.0, 0.0]])

    def exact(t):
        return _vec(_cos(t), -_sin(t))

    prob = OdeProblem(rhs, _vec(1, 0), 0.0, 2 * _pi(dps), jac, exact, "harm_osc")
    return prob, (6, 11, 16, 21, 26, 31), "x'' + x = 0, x(0) = 1, x'(0) = 0 on [0, 2 pi]"


def _exp_diss(dps, **_):
    def rhs(u, t):
        return _vec(u[1], u[0])

    def jac(u, t):
        return np.array([[0.0, 1.0], [1.0, 0.0]])

    def exact(t):
        return _vec(_sinh(t), _cosh(t))

    prob = OdeProblem(rhs, _vec(0, 1), 0.0, 2 * _pi(dps), jac, exact, "exp_diss")
    return prob, (6, 11, 16, 21, 26, 31), "x'' - x = 0, x(0) = 0, x'(0) = 1 on [0, 2 pi]"


def _bratu(dps, **_):
    def rhs(u, t):
        return _vec(u[1], 2 * _exp(u[0]))

    def jac(u, t):
        return _vec(0, 1, 2 * _exp(u[0]), 0).reshape(2, 2)

    def exact(t):
        return _vec(-2 * _log(_cos(t)), 2 * _tan(t))

    prob = OdeProblem(rhs, _vec(0, 0), 0.0, 1.0, jac, exact, "bratu")
    return prob, (31, 41, 51, 61, 71, 81), "x'' = 2 exp(x), x(0) = x'(0) = 0 on [0, 1]"


def _third1(dps, **_):
    def rhs(u, t):
        forcing = (34 * t - 16) * _exp(-2 * t) - 10 * t * t + 6 * t + 34
        return _vec(u[1], u[2], 2 * u[2] + 3 * u[1] - 10 * u[0] + forcing)

    def jac(u, t):
        return np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-10.0, 3.0, 2.0]])

    def exact(t):
        e = _exp(-2 * t)
        return _vec(
            t * t * e - t * t + 3,
            2 * t * ((1 - t) * e - 1),
            2 * ((1 - 4 * t + 2 * t * t) * e - 1),
        )

    notes = (
        "x''' = 2x'' + 3x' - 10x + (34t - 16)exp(-2t) - 10t^2 + 6t + 34 on [0, 1]. "
        "Initial value u1(0) = 3 matches the exact solution x = t^2 exp(-2t) - t^2 + 3. "
        "The velocity component is x' = 2t((1 - t) exp(-2t) - 1), differentiated from x."
    )
    prob = OdeProblem(rhs, _vec(3, 0, 0), 0.0, 1.0, jac, exact, "third1")
    return prob, (16, 21, 26, 31, 36, 41), notes


def _third2(dps, **_):
    def rhs(u, t):
        return _vec(u[1], u[2], 4 / (1 + t) ** 3 - 2 * _exp(-3 * u[0]))

    def jac(u, t):
        return _vec(0, 1, 0, 0, 0, 1, 6 * _exp(-3 * u[0]), 0, 0).reshape(3, 3)

    def exact(t):
        return _vec(_log(1 + t), 1 / (1 + t), -1 / (1 + t) ** 2)

    prob = OdeProblem(rhs, _vec(0, 1, -1), 0.0, 1.0, jac, exact, "third2")
    return prob, (16, 21, 26, 31, 36, 41), "x''' = 4/(1+t)^3 - 2 exp(-3x) on [0, 1]; x = ln(1+t)"


def _third3(dps, **_):
    pi = _pi(dps)
    w = 4 * pi

    def rhs(u, t):
        force = (8 * pi / t - 64 * pi**3) * _cos(w * t)
        return _vec(u[1], u[2], u[0] * u[2] - 2 / t * u[1] + 16 * pi**2 * u[0] ** 2 + force)

    def jac(u, t):
        return _vec(0, 1, 0, 0, 0, 1, u[2] + 32 * pi**2 * u[0], -2 / t, u[0]).reshape(3, 3)

    def exact(t):
        return _vec(_sin(w * t), w * _cos(w * t), -(w**2) * _sin(w * t))

    one = mpmath.mpf(1) if dps is not None else 1.0
    prob = OdeProblem(rhs, exact(one), one, 2 * one, jac, exact, "third3")
    notes = (
        "x''' = x x'' - (2/t) x' + 16 pi^2 x^2 + (8 pi/t - 64 pi^3) cos(4 pi t) on [1, 2]; "
        "x = sin(4 pi t). Initial data are imposed at t = 1, the left end of the domain."
    )
    return prob, (16, 21, 26, 31, 36, 41), notes


def lambert_w_principal(y, maxiter: int = 50):
    """Principal-branch Lambert W of ``x = exp(y)``, given ``y`` only.

    Solves ``w + ln(w) = y`` for ``w > 0`` by Newton's method, so ``exp(y)``
    is never formed and very large arguments do not overflow. For
    ``y < -36`` the series ``W(x) = x - x^2 + ...`` is already exact to
    binary64 and ``exp(y)`` is returned directly.
    """
    if precision.is_extended(y):
        return mpmath.lambertw(mpmath.exp(y)).real
    y = float(y)
    if y < -36.0:
        return math.exp(y)
    if y > 2.0:
        w = y - math.log(max(y, 2.0))
    else:
        ey = math.exp(y)
        w = ey / (1.0 + ey)
    for _ in range(maxiter):
        g = w + math.log(w) - y
        step = g / (1.0 + 1.0 / w)
        w_new = w - step
        if w_new <= 0.0:
            w_new = w / 10.0
        if abs(w_new - w) <= 4 * np.finfo(float).eps * w_new:
            return w_new
        w = w_new
    return w


def flame_exact(t, delta):
    """Exact flame solution ``1 / (W(a exp(a - t)) + 1)``, ``a = 1/delta - 1``."""
    if precision.is_extended(t) or precision.is_extended(delta):
        a = 1 / mpmath.mpf(delta) - 1
        return 1 / (mpmath.lambertw(a * mpmath.exp(a - t)).real + 1)
    a = 1.0 / delta - 1.0
    return 1.0 / (lambert_w_principal(math.log(a) + a - t) + 1.0)


def _flame(dps, delta=1e-4, **_):
    delta = float(delta) if dps is None else mpmath.mpf(delta)
    if not 0 < delta < 1:
        raise ValueError(f"flame needs 0 < delta < 1, got {delta}")

    def rhs(u, t):
        return u * u * (1 - u)

    def jac(u, t):
        return (2 * u - 3 * u * u).reshape(1, 1)

    def exact(t):
        if np.ndim(t) == 0:
            return _vec(flame_exact(t, delta))
        return np.array([flame_exact(v, delta) for v in t]).reshape(-1, 1)

    prob = OdeProblem(rhs, _vec(delta), 0.0, 2 / delta, jac, exact, "flame")
    inv = 1 / delta
    # Refined block centred on the front at t ~ 1/delta; the block
    # [0.4/delta, 0.6/delta] ends before the front and leaves it on 20 coarse cells.
    meshes = ((20, 0.0, 0.8 * inv), (2000, 0.8 * inv, 1.2 * inv), (20, 1.2 * inv, 2 * inv))
    notes = (
        "u' = u^2 - u^3, u(0) = delta on [0, 2/delta]; stiff front near t = 1/delta. "
        "Default mesh: 20 cells on [0, 0.8/delta], 2000 on [0.8/delta, 1.2/delta], "
        "20 on [1.2/delta, 2/delta]."
    )
    return prob, meshes, notes


_BUILDERS: dict[str, Callable] = {
    "harm_osc": _harm_osc,
    "exp_diss": _exp_diss,
    "bratu": _bratu,
    "third1": _third1,
    "third2": _third2,
    "third3": _third3,
    "flame": _flame,
}

PROBLEMS = tuple(_BUILDERS)

_PARAMS = {"flame": {"delta": 1e-4}}


def get_problem(name: str, dps: int | None = None, **params) -> ProblemSpec:
    """Look up a registered problem.

    ``flame`` accepts ``delta`` (default ``1e-4``); its ``default_meshes`` is
    a graded mesh given as ``(cells, a, b)`` segments. Every other problem's
    ``default_meshes`` lists node counts of a uniform mesh ladder.
    """
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise UnknownProblemError(f"unknown problem {name!r}; known: {', '.join(PROBLEMS)}") from None
    allowed = _PARAMS.get(name, {})
    unknown = set(params) - set(allowed)
    if unknown:
        raise ValueError(f"problem {name!r} takes no parameter(s) {sorted(unknown)}")
    merged = {**allowed, **params}
    with precision.working_precision(dps):
        prob, meshes, notes = builder(dps, **merged)
    return ProblemSpec(name, prob, tuple(meshes), merged, notes)


def list_problems():
    """``(name, dim, t0, t_end, params)`` for every registered problem."""
    rows = []
    for name in PROBLEMS:
        spec = get_problem(name)
        p = spec.problem
        rows.append((name, p.dim, float(p.t0), float(p.t_end), spec.params))
    return rows
