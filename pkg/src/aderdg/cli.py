"""Command-line front end.

Subcommands: ``tables``, ``solve``, ``stability``, ``converge`` and
``problems list``. Options may also come from a JSON or YAML file given with
``--config``; explicit command-line flags win over file values.

Exit status: 0 success, 2 configuration error, 3 solver divergence,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .analysis import convergence_study
from .integrator import TimeMesh, solve_ivp
from .linalg import SingularMatrixError
from .io import fmt, solution_rows, write_csv, write_json
from .predictor import DivergenceError, EvaluationError
from .problems import PROBLEMS, UnknownProblemError, get_problem, list_problems
from .stability import raster_region, ray_profile
from .tables import build_tables

__all__ = ["ConfigError", "RunConfig", "build_parser", "main", "run"]

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGENCE, EXIT_IO = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """A validated command plus its options."""

    command: str
    options: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.options[name]
        except KeyError:
            raise AttributeError(name) from None


# -- argument parsing ---------------------------------------------------------


def _add_common(p):
    p.add_argument("--config", help="JSON or YAML file with option defaults")
    p.add_argument("--dps", type=int, help="decimal digits for extended precision")
    p.add_argument("--out", default="-", help="output file ('-' for stdout)")


def _add_problem(p):
    p.add_argument("--problem", choices=PROBLEMS, help="registered problem name (required)")
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                   help="problem parameter, e.g. delta=1e-4 (repeatable)")
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--solver", choices=("picard", "newton", "auto"), default="auto")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aderdg", description="ADER-DG solver for ODE initial value problems")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    parser.subcommands = sub.choices

    p = sub.add_parser("tables", help="print the degree-N scheme constants")
    _add_common(p)
    p.add_argument("--degree", type=int, help="polynomial degree N (required)")
    p.add_argument("--format", choices=("csv", "json"), default="json")

    p = sub.add_parser("solve", help="integrate a registered problem")
    _add_common(p)
    _add_problem(p)
    p.add_argument("--mesh", help="uniform:CELLS:a:b or graded:C1:a:b,C2:b:c,... (default: problem's)")
    p.add_argument("--subnodes", type=int, default=0, help="local-solution samples per element")
    p.add_argument("--endpoints", action="store_true", help="include element ends among sub-nodes")

    p = sub.add_parser("stability", help="tabulate |R(z)| on a window or along a ray")
    _add_common(p)
    p.add_argument("--degree", type=int, help="polynomial degree N (required)")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--window", help="reMin:reMax:imMin:imMax")
    mode.add_argument("--ray", type=float, help="ray angle as a multiple of pi")
    p.add_argument("--res", default="200:200", help="W:H grid size for --window")
    p.add_argument("--radii", default="log:1e-2:1e8:100", help="log:a:b:n, lin:a:b:n or r1,r2,...")

    p = sub.add_parser("converge", help="convergence study on a mesh ladder")
    _add_common(p)
    _add_problem(p)
    p.add_argument("--meshes", help="comma-separated node counts (default: problem's ladder)")
    p.add_argument("--subnodes", type=int, default=1000)
    p.add_argument("--noise-floor", type=float, default=1e-12)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("problems", help="registry queries")
    _add_common(p)
    p.add_argument("action", choices=("list",))
    return parser


def _load_config(path) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if str(path).endswith((".yaml", ".yml")):
        import yaml

        data = yaml.safe_load(text)
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a mapping of option names to values")
    return {k.replace("-", "_"): v for k, v in data.items()}


def _attach_negative_values(argv):
    """Turn ``--window -5:1:...`` into ``--window=-5:1:...`` for argparse."""
    out, it = [], iter(argv)
    for tok in it:
        if tok in ("--window", "--radii", "--ray"):
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def parse_config(argv=None) -> RunConfig:
    """Parse ``argv``; a ``--config`` file supplies defaults for unset flags."""
    argv = _attach_negative_values(sys.argv[1:] if argv is None else list(argv))
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        values = _load_config(args.config)
        values.pop("command", None)
        sub = parser.subcommands[args.command]
        known = {a.dest for a in sub._actions} - {"help", "config"}
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"unknown config option(s) for {args.command}: {sorted(unknown)}")
        sub.set_defaults(**values)
        args = parser.parse_args(argv)
    opts = {k: v for k, v in vars(args).items() if k != "command"}
    return validate(RunConfig(args.command, opts))


def _parse_params(items) -> dict:
    out = {}
    if isinstance(items, dict):
        return {k: float(v) for k, v in items.items()}
    for item in items:
        key, sep, val = str(item).partition("=")
        if not sep:
            raise ConfigError(f"--param expects KEY=VALUE, got {item!r}")
        try:
            out[key.strip()] = float(val)
        except ValueError:
            raise ConfigError(f"--param {key}: {val!r} is not a number") from None
    return out


def _parse_floats(text, n, what):
    parts = str(text).split(":")
    if len(parts) != n:
        raise ConfigError(f"{what} needs {n} ':'-separated numbers, got {text!r}")
    try:
        return [float(v) for v in parts]
    except ValueError:
        raise ConfigError(f"{what}: {text!r} is not numeric") from None


def _parse_radii(text) -> np.ndarray:
    text = str(text)
    if text.startswith(("log:", "lin:")):
        a, b, n = _parse_floats(text[4:], 3, "--radii")
        if n != int(n) or n < 1:
            raise ConfigError(f"--radii count must be a positive integer, got {n}")
        return np.geomspace(a, b, int(n)) if text.startswith("log") else np.linspace(a, b, int(n))
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise ConfigError(f"--radii: cannot parse {text!r}") from None


def validate(cfg: RunConfig) -> RunConfig:
    """Check option combinations; raise :class:`ConfigError` with a hint."""
    o = dict(cfg.options)
    if cfg.command in ("tables", "stability") and o.get("degree") is None:
        raise ConfigError(f"{cfg.command} needs --degree")
    if cfg.command in ("solve", "converge") and not o.get("problem"):
        raise ConfigError(f"{cfg.command} needs --problem (see 'problems list')")
    if o.get("problem") is not None and o["problem"] not in PROBLEMS:
        raise ConfigError(f"unknown problem {o['problem']!r}; known: {', '.join(PROBLEMS)}")
    if o.get("dps") is not None and o["dps"] < 16:
        raise ConfigError("--dps must be at least 16 (omit it for binary64)")
    if "degree" in o and (not isinstance(o["degree"], int) or o["degree"] < 0):
        raise ConfigError(f"--degree must be a non-negative integer, got {o['degree']!r}")
    if cfg.command in ("solve", "converge"):
        o["param"] = _parse_params(o.get("param") or [])
        if o.get("tol") is not None and not o["tol"] > 0:
            raise ConfigError("--tol must be positive")
    if cfg.command == "solve" and o["subnodes"] < 0:
        raise ConfigError("--subnodes must be >= 0")
    if cfg.command == "converge":
        if o["subnodes"] < 1:
            raise ConfigError("--subnodes must be >= 1 for a convergence study")
        if o["jobs"] < 1:
            raise ConfigError("--jobs must be >= 1")
        if o.get("meshes"):
            try:
                m = o["meshes"]
                o["meshes"] = [int(v) for v in (m if isinstance(m, list) else str(m).split(","))]
            except ValueError:
                raise ConfigError(f"--meshes expects node counts like 6,11,16, got {o['meshes']!r}") from None
    if cfg.command == "stability":
        if o.get("window") is None and o.get("ray") is None:
            raise ConfigError("stability needs --window or --ray")
        if o.get("window") is not None:
            o["window"] = _parse_floats(o["window"], 4, "--window")
            W, H = _parse_floats(o["res"], 2, "--res")
            if W < 1 or H < 1 or W != int(W) or H != int(H):
                raise ConfigError(f"--res must be two positive integers, got {o['res']!r}")
            o["res"] = (int(W), int(H))
        else:
            o["radii"] = _parse_radii(o["radii"])
            if np.any(o["radii"] <= 0) or np.any(np.diff(o["radii"]) <= 0):
                raise ConfigError("--radii must be positive and increasing")
    return RunConfig(cfg.command, o)


# -- commands -------------------------------------------------------------------


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
        sys.stdout.flush()
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _summary(**counters):
    print(" ".join(f"{k}={v}" for k, v in counters.items()), file=sys.stderr)


def _cmd_tables(cfg):
    tb = build_tables(cfg.degree, cfg.dps)

    def lst(a):
        a = np.asarray(a)
        if a.ndim == 1:
            return [fmt(v, cfg.dps) if cfg.dps else float(v) for v in a]
        return [lst(r) for r in a]

    with _output(cfg.out) as fh:
        if cfg.format == "json":
            write_json(fh, {
                "degree": tb.degree,
                "nodes": lst(tb.nodes),
                "weights": lst(tb.weights),
                "M": lst(tb.M),
                "K": lst(tb.K),
                "B": lst(tb.B),
                "phi_at_0": lst(tb.phi_at_0),
                "phi_at_1": lst(tb.phi_at_1),
            })
        else:
            header = ["p", "tau", "w", "phi_at_0", "phi_at_1", *(f"B_{q}" for q in range(tb.size))]
            rows = [(str(p), tb.nodes[p], tb.weights[p], tb.phi_at_0[p], tb.phi_at_1[p], *tb.B[p])
                    for p in range(tb.size)]
            write_csv(fh, header, rows, cfg.dps)


def _problem(cfg):
    try:
        return get_problem(cfg.problem, dps=cfg.dps, **cfg.param)
    except (UnknownProblemError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _cmd_solve(cfg):
    spec = _problem(cfg)
    prob = spec.problem
    if cfg.mesh:
        try:
            mesh = TimeMesh.parse(cfg.mesh)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    elif spec.default_meshes and isinstance(spec.default_meshes[0], tuple):
        mesh = TimeMesh.graded(spec.default_meshes)
    else:
        mesh = TimeMesh.uniform(prob.t0, prob.t_end, spec.default_meshes[0] - 1)
    start = time.perf_counter()
    try:
        traj = solve_ivp(prob, mesh, cfg.degree, solver=cfg.solver, tol=cfg.tol,
                         max_iter=cfg.max_iter, dps=cfg.dps)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    header, rows = solution_rows(traj, cfg.subnodes, cfg.endpoints)
    with _output(cfg.out) as fh:
        write_csv(fh, header, rows, cfg.dps)
    s = traj.stats
    _summary(elements=mesh.n_elements, rhs_evals=s.rhs_evals, jac_evals=s.jac_evals,
             iterations=s.iterations, wall_time=f"{time.perf_counter() - start:.3f}s")


def _cmd_stability(cfg):
    tb = build_tables(cfg.degree, cfg.dps)
    start = time.perf_counter()
    with _output(cfg.out) as fh:
        if cfg.window is not None:
            a, b, c, d = cfg.window
            r = raster_region(tb, (a, b), (c, d), cfg.res)
            rows = ((x, y, r.abs_R[i, j]) for i, y in enumerate(r.im) for j, x in enumerate(r.re))
            write_csv(fh, ["re", "im", "absR"], rows)
            n = r.abs_R.size
        else:
            absR = ray_profile(tb, cfg.ray * np.pi, cfg.radii)
            write_csv(fh, ["r", "absR"], zip(cfg.radii, absR))
            n = absR.size
    _summary(points=n, wall_time=f"{time.perf_counter() - start:.3f}s")


def _cmd_converge(cfg):
    spec = _problem(cfg)
    meshes = cfg.meshes or spec.default_meshes
    if meshes and isinstance(meshes[0], tuple):
        raise ConfigError(f"{cfg.problem} has no uniform ladder; pass --meshes")
    start = time.perf_counter()
    try:
        rep = convergence_study(spec, cfg.degree, meshes, cfg.subnodes, cfg.noise_floor,
                                solver=cfg.solver, jobs=cfg.jobs, dps=cfg.dps, tol=cfg.tol)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    with _output(cfg.out) as fh:
        write_json(fh, rep.to_dict())
    s = rep.stats
    _summary(elements=sum(int(m) - 1 for m in meshes), rhs_evals=s.rhs_evals, jac_evals=s.jac_evals,
             wall_time=f"{time.perf_counter() - start:.3f}s")


def _cmd_problems(cfg):
    with _output(cfg.out) as fh:
        rows = [(n, str(k), repr(a), repr(b), json.dumps(p)) for n, k, a, b, p in list_problems()]
        write_csv(fh, ["name", "dim", "t0", "t_end", "params"], rows)


_COMMANDS = {
    "tables": _cmd_tables,
    "solve": _cmd_solve,
    "stability": _cmd_stability,
    "converge": _cmd_converge,
    "problems": _cmd_problems,
}


def run(config: RunConfig) -> int:
    """Execute a validated configuration and return the exit status."""
    try:
        _COMMANDS[config.command](config)
    except ConfigError as exc:
        print(f"aderdg: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergenceError, EvaluationError, SingularMatrixError) as exc:
        print(f"aderdg: solver failure: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except OSError as exc:
        print(f"aderdg: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"aderdg: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
