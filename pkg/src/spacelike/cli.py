"""Command-line entry point.

Subcommands:

``kernel``
    Evaluate one of the correlation kernels on a grid and write CSV rows
    ``x1,n1,t1,x2,n2,t2,value,error``.
``simulate``
    Sample the Hermitian minor process, the Wishart process or the
    interlaced particle system and write the samples as CSV.
``verify``
    Run the identity, HCIZ, finite-weight or Monte Carlo suites and write a
    JSON report.
``eynard-check``
    Compare kernel determinants with brute-force enumeration for one
    finite weight spec, read from JSON or drawn at random.

Each file is written with a ``<file>.manifest.json`` next to it.  The
manifest holds the package version and the full resolved configuration.
Defaults can come from a JSON config file (``--config``), with one object
per subcommand.  Flags given on the command line win over the file.  When
``--output`` is not given, files go to ``$SPACELIKE_OUTPUT_DIR`` if it is
set, and to standard output otherwise.

Exit codes: 0 pass, 1 a verification check failed, 2 bad usage, 3 numerical
failure, 4 any other runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from ._backend import BACKEND
from . import eynard as ey
from . import mc_verify as mv
from . import particles as pt
from . import rmt_sim as rs
from .kernels import (LueParams, SpaceTimePoint, discrete_kernel_grid, gue_kernel_grid,
                      kernel_diffusion_scaled, kernel_lue)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERICAL, EXIT_RUNTIME = 0, 1, 2, 3, 4
OUTPUT_ENV = "SPACELIKE_OUTPUT_DIR"
KERNEL_NAMES = ("discrete", "gue", "gue-static", "scaled", "lue")
MODELS = ("dbm-minors", "wishart", "particles")
SUITES = ("identities", "hciz", "eynard", "montecarlo", "all")


class UsageError(ValueError):
    """Arguments that parse but do not make sense together."""


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spacelike", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file with per-subcommand defaults")
    common.add_argument("--output", "-o", help="output file ('-' for stdout)")

    k = sub.add_parser("kernel", parents=[common], help="evaluate a correlation kernel")
    k.add_argument("--name", choices=KERNEL_NAMES, required=False)
    k.add_argument("--n", type=int, default=1, help="level of the first point")
    k.add_argument("--t", type=float, default=1.0, help="time of the first point")
    k.add_argument("--n2", type=int, help="level of the second point (default: --n)")
    k.add_argument("--t2", type=float, help="time of the second point (default: --t)")
    k.add_argument("--p", type=int, help="number of rows of the Wishart matrix (lue)")
    k.add_argument("--x", type=float, nargs="+", help="explicit first coordinates")
    k.add_argument("--x2", type=float, nargs="+", help="explicit second coordinates")
    k.add_argument("--xmin", type=float, default=-3.0)
    k.add_argument("--xmax", type=float, default=3.0)
    k.add_argument("--num", type=int, default=61, help="grid size between xmin and xmax")
    k.add_argument("--diag", action="store_true", help="only x2 = x (one-point function)")
    k.add_argument("--method", default="contour", help="contour or sum (gue, lue)")
    k.add_argument("--epsilon", type=float, default=None, help="line offset for the gue contours")

    s = sub.add_parser("simulate", parents=[common], help="sample a process")
    s.add_argument("--model", choices=MODELS, required=False)
    s.add_argument("--seed", type=int, required=False)
    s.add_argument("--N", type=int, default=3, help="matrix size / number of columns")
    s.add_argument("--p", type=int, default=None, help="rows of the Wishart matrix")
    s.add_argument("--levels", type=int, default=2, help="particle levels")
    s.add_argument("--times", type=float, nargs="+", default=[1.0])
    s.add_argument("--samples", type=int, default=10)
    s.add_argument("--workers", type=int, default=1)

    v = sub.add_parser("verify", parents=[common], help="run verification suites")
    v.add_argument("--suite", choices=SUITES, default="identities")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--trials", type=int, default=50, help="random specs for the eynard suite")
    v.add_argument("--samples", type=int, default=1_000_000, help="Haar samples per HCIZ case")
    v.add_argument("--scale", type=float, default=1.0, help="multiplier for Monte Carlo sizes")
    v.add_argument("--workers", type=int, default=1)
    v.add_argument("--quick", action="store_true", help="reduced identity grids")
    v.add_argument("--tolerance", action="append", default=[], metavar="NAME=VALUE",
                   help="override a tolerance, e.g. lemma=1e-7")
    e = sub.add_parser("eynard-check", parents=[common],
                       help="compare kernel determinants with enumeration for a weight spec")
    e.add_argument("--spec", type=Path, help="weight spec JSON (see eynard.SpaceLikeWeightSpec)")
    e.add_argument("--random", action="store_true", help="draw a random spec instead")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--point", action="append", default=[], metavar="N,A,X",
                   help="level, copy and label of a point; repeat for several")
    e.add_argument("--tol", type=float, default=mv.DEFAULT_TOLERANCES["eynard"])
    e.add_argument("--dump-spec", type=Path, help="write the (possibly random) spec as JSON")
    return parser


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    """Parse flags, filling unset options from the ``--config`` file."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    try:
        config = json.loads(args.config.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    section = config.get(args.command, {})
    if not isinstance(section, dict):
        raise UsageError(f"config section {args.command!r} must be an object")
    for key, value in section.items():
        attr = key.replace("-", "_")
        if attr in ("command", "config") or not hasattr(args, attr):
            raise UsageError(f"unknown config key {key!r} for {args.command}")
        if not _given(argv, attr):
            setattr(args, attr, value)
    return args


def _given(argv: Sequence[str] | None, attr: str) -> bool:
    """Whether the option for ``attr`` appears on the command line."""
    argv = list(sys.argv[1:] if argv is None else argv)
    flags = {"--" + attr}
    if attr == "output":
        flags.add("-o")
    return any(a in flags or a.split("=", 1)[0] in flags for a in argv)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _resolve_output(args, default_name: str) -> Path | None:
    if args.output == "-":
        return None
    if args.output:
        return Path(args.output)
    env = os.environ.get(OUTPUT_ENV)
    if env:
        return Path(env) / default_name
    return None


def manifest(args, **extra) -> str:
    cfg = {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items())
           if k not in ("output",)}
    body = {"version": __version__, "backend": BACKEND, "config": cfg, **extra}
    return json.dumps(body, indent=2, sort_keys=True) + "\n"


def emit(text: str, args, default_name: str, **extra) -> None:
    path = _resolve_output(args, default_name)
    if path is None:
        sys.stdout.write(text)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    Path(str(path) + ".manifest.json").write_text(manifest(args, **extra))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _grid(args) -> tuple[np.ndarray, np.ndarray | None]:
    if args.x is not None:
        x1 = np.asarray(args.x, dtype=float)
    else:
        if args.num < 1 or not args.xmax >= args.xmin:
            raise UsageError("need num >= 1 and xmax >= xmin")
        x1 = np.linspace(args.xmin, args.xmax, args.num)
    if args.diag:
        return x1, None
    x2 = np.asarray(args.x2, dtype=float) if args.x2 is not None else x1
    return x1, x2


def kernel_values(args) -> list:
    """Rows ``(x1, n1, t1, x2, n2, t2, value, error)`` for the requested kernel."""
    if args.name is None:
        raise UsageError("--name is required")
    n1, t1 = args.n, args.t
    n2 = args.n2 if args.n2 is not None else n1
    t2 = args.t2 if args.t2 is not None else t1
    if min(n1, n2) < 1:
        raise UsageError("levels must be >= 1")
    x1, x2 = _grid(args)
    pairs = [(a, a) for a in x1] if x2 is None else [(a, b) for a in x1 for b in x2]
    name = args.name
    rows = []
    if name == "discrete":
        if any(a != int(a) or b != int(b) for a, b in pairs):
            raise UsageError("the discrete kernel needs integer positions")
        for a, b in pairs:
            val = discrete_kernel_grid(int(a), n1, t1, int(b), n2, t2)[0, 0]
            rows.append((a, n1, t1, b, n2, t2, val, 0.0))
    elif name in ("gue", "gue-static"):
        if name == "gue-static":
            t1 = t2 = 1.0
        kw = {} if args.epsilon is None else {"epsilon": args.epsilon}
        if args.method not in ("contour", "sum"):
            raise UsageError("method must be contour or sum")
        for a, b in pairs:
            if args.method == "contour":
                val, err = gue_kernel_grid(a, n1, t1, b, n2, t2, with_error=True, **kw)
                val, err = val[0, 0], err[0, 0]
            else:
                val, err = gue_kernel_grid(a, n1, t1, b, n2, t2, method="sum")[0, 0], 0.0
            rows.append((a, n1, t1, b, n2, t2, val, err))
    elif name == "scaled":
        for a, b in pairs:
            val = kernel_diffusion_scaled(SpaceTimePoint(a, n1, t1), SpaceTimePoint(b, n2, t2))
            rows.append((a, n1, t1, b, n2, t2, val, 0.0))
    elif name == "lue":
        if args.p is None:
            raise UsageError("--p is required for the lue kernel")
        params = LueParams(args.p)
        params.check_level(n1)
        params.check_level(n2)
        if any(a < 0 or b < 0 for a, b in pairs):
            raise UsageError("lue positions must be >= 0")
        if args.method not in ("contour", "sum"):
            raise UsageError("method must be contour or sum")
        for a, b in pairs:
            kv = kernel_lue(SpaceTimePoint(a, n1, t1), SpaceTimePoint(b, n2, t2), params,
                            method=args.method)
            rows.append((a, n1, t1, b, n2, t2, kv.value, kv.quadrature_error_estimate))
    return rows


def cmd_kernel(args) -> int:
    rows = kernel_values(args)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x1", "n1", "t1", "x2", "n2", "t2", "value", "error"])
    for x1, n1, t1, x2, n2, t2, val, err in rows:
        writer.writerow([_fmt(x1), n1, _fmt(t1), _fmt(x2), n2, _fmt(t2), _fmt(val), _fmt(err)])
    emit(buf.getvalue(), args, f"kernel_{args.name}.csv")
    return EXIT_OK


def simulate_csv(args) -> str:
    if args.model is None:
        raise UsageError("--model is required")
    if args.seed is None:
        raise UsageError("--seed is required for simulations")
    if args.samples < 1:
        raise UsageError("--samples must be >= 1")
    times = [float(t) for t in args.times]
    if args.model == "particles":
        samples = pt.simulate(args.levels, times, args.samples, args.seed, workers=args.workers)
        return pt.trajectory_csv(samples, times, args.levels)
    rows = []
    if args.model == "dbm-minors":
        paths = rs.sample_hermitian_paths(args.N, times, args.samples, rs.RngStream(args.seed))
        for sid in range(args.samples):
            minors = [rs.minor_eigenvalues(paths[sid, j], range(1, args.N + 1))
                      for j in range(len(times))]
            if any(rs.interlacing_violations(m) for m in minors):
                raise pt.InterlacingError("eigenvalues of nested minors do not interlace")
            rows += rs.eigenvalue_rows(times, minors, sid)
    else:
        p = args.p if args.p is not None else args.N
        a = rs.sample_wishart_matrices(p, args.N, times, rs.RngStream(args.seed), n_paths=args.samples)
        for sid in range(args.samples):
            minors = []
            for j in range(len(times)):
                h = rs.gram(a[sid, j])
                minors.append({n: np.maximum(rs.hermitian_eigenvalues(h[:n, :n]), 0.0)
                               for n in range(1, args.N + 1)})
            rows += rs.eigenvalue_rows(times, minors, sid)
    return rs.write_eigenvalue_csv(rows)


def cmd_simulate(args) -> int:
    text = simulate_csv(args)
    emit(text, args, f"simulate_{args.model}.csv", seed=args.seed)
    return EXIT_OK


def _tolerances(items: Sequence[str]) -> dict:
    out = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep or name not in mv.DEFAULT_TOLERANCES:
            raise UsageError(f"bad tolerance {item!r}; known: {sorted(mv.DEFAULT_TOLERANCES)}")
        try:
            out[name] = float(value)
        except ValueError as exc:
            raise UsageError(f"bad tolerance value in {item!r}") from exc
    return out


def run_suite(args) -> list:
    tol = {**mv.DEFAULT_TOLERANCES, **_tolerances(args.tolerance)}
    suites = SUITES[:-1] if args.suite == "all" else (args.suite,)
    results = []
    for suite in suites:
        if suite == "identities":
            results += mv.identity_suite(tol, quick=args.quick)
        elif suite == "hciz":
            results += mv.hciz_suite(args.samples, args.seed)
        elif suite == "eynard":
            results += mv.eynard_suite(args.trials, args.seed, tolerance=tol["eynard"])
        elif suite == "montecarlo":
            results += mv.montecarlo_suite(args.scale, args.seed, args.workers, z_max=tol["z"])
    return results


def cmd_verify(args) -> int:
    results = run_suite(args)
    report = mv.report_json(results, version=__version__, suite=args.suite, seed=args.seed)
    emit(report + "\n", args, f"verify_{args.suite}.json", seed=args.seed)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name} {r.value:.3e}", file=sys.stderr)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def _parse_point(text: str) -> ey.LevelTimePoint:
    try:
        n, a, x = text.split(",")
        return ey.LevelTimePoint(int(n), int(a), float(x))
    except ValueError as exc:
        raise UsageError(f"bad point {text!r}; expected N,A,X") from exc


def cmd_eynard_check(args) -> int:
    if (args.spec is None) == (not args.random):
        raise UsageError("give exactly one of --spec and --random")
    if args.spec is not None:
        try:
            spec = ey.SpaceLikeWeightSpec.from_json(args.spec.read_text())
        except OSError as exc:
            raise UsageError(f"cannot read {args.spec}: {exc}") from exc
    else:
        spec = mv.draw_eynard_spec(rs.RngStream(args.seed).generator(), upper=False)
    if args.dump_spec is not None:
        args.dump_spec.write_text(spec.to_json())
    points = [_parse_point(p) for p in args.point]
    if not points:
        points = mv.random_points(rs.RngStream(args.seed, 1).generator(), spec, 2)
    data = ey.prepare(spec)
    direct = ey.brute_force_correlations(spec, points)
    via_kernel = ey.determinantal_correlation(spec, points, data)
    diff = abs(direct - via_kernel)

    def num(v):
        v = complex(v)
        return v.real if v.imag == 0 else {"re": v.real, "im": v.imag}

    report = {"points": [[p.n, p.a, p.x] for p in points], "brute_force": num(direct),
              "kernel_determinant": num(via_kernel), "abs_difference": diff,
              "condition_M": data.condition, "tolerance": args.tol, "pass": diff < args.tol}
    emit(json.dumps(report, indent=2, sort_keys=True) + "\n", args, "eynard_check.json")
    return EXIT_OK if diff < args.tol else EXIT_FAIL


COMMANDS = {"kernel": cmd_kernel, "simulate": cmd_simulate, "verify": cmd_verify,
            "eynard-check": cmd_eynard_check}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:          # argparse reports usage errors this way
        return int(exc.code) if exc.code is not None else EXIT_OK
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenPipeError:
        # the reader went away (e.g. piped into head); stay quiet
        sys.stdout = open(os.devnull, "w")
        return EXIT_OK
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except Exception as exc:  # noqa: BLE001 - any other failure maps to the runtime code
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
