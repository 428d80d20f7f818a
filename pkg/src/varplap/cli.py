"""Command-line front end: ``varplap {solve,check-inequalities,calibrate-gamma,norm}``.

Exit codes: 0 success, 1 an inequality scan failed, 2 bad input or
configuration, 3 the solver did not converge (partial outputs are written).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, inequalities
from .config import (ConfigError, exponent_field, load_config, read_field_csv,
                     write_grid_function)
from .fields import Grid, GridFunction
from .modular import luxemburg_norm, modular
from .solver import LineSearchError, minimize

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NOCONV = 0, 1, 2, 3

log = logging.getLogger("varplap")


def _threads(arg):
    if arg is not None:
        return arg
    try:
        return max(1, int(os.environ.get("VARPLAP_THREADS", "1")))
    except ValueError:
        return 1


def _dump(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")


def _p_grid(spec: str | None):
    if not spec:
        return None
    try:
        a, b, n = spec.split(":")
        return np.linspace(float(a), float(b), int(n))
    except ValueError:
        raise ConfigError(f"--p-grid expects a:b:n, got {spec!r}") from None


def _float_list(spec: str):
    try:
        return [float(s) for s in spec.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {spec!r}") from None


# --------------------------------------------------------------- commands

def cmd_solve(args) -> int:
    run = load_config(args.config)
    out = Path(args.out) if args.out else run.output_dir
    out.mkdir(parents=True, exist_ok=True)
    try:
        rep = minimize(run.problem, run.solver)
        msg = rep.message
    except LineSearchError as exc:
        rep, msg = exc.report, str(exc)
    write_grid_function(out / "solution.csv", rep.u_final)
    with open(out / "convergence.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "energy", "grad_norm"])
        for k, (e, g) in enumerate(zip(rep.energies, rep.grad_norms)):
            w.writerow([k, f"{e:.17g}", f"{g:.17g}"])
    body = rep.to_dict()
    body.update(message=msg, config=run.raw, version=__version__,
                timestamp=datetime.now(timezone.utc).isoformat())
    _dump(out / "report.json", body)
    print(f"{msg}: {rep.iterations} iterations, residual {rep.residual_max:.3e}, "
          f"energy {rep.final_energy:.12g}")
    return EXIT_OK if rep.converged else EXIT_NOCONV


def cmd_check_inequalities(args) -> int:
    if args.samples < 1:
        raise ConfigError("--samples must be >= 1")
    results = inequalities.scan_all(args.samples, args.seed, _p_grid(args.p_grid),
                                    args.fault_scale, _threads(args.threads))
    ok = all(r.passed for r in results)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _dump(out / "inequalities.json",
          dict(samples=args.samples, seed=args.seed, p_grid=args.p_grid,
               all_passed=ok, results=[r.to_dict() for r in results]))
    for r in results:
        print(f"{r.name:16s} {'PASS' if r.passed else 'FAIL'}  worst margin {r.worst_margin:+.3e}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_calibrate_gamma(args) -> int:
    ps = _float_list(args.p_list)
    bad = [p for p in ps if p < 2]
    if bad or not ps:
        raise ConfigError(f"every p must be >= 2, got {bad or 'an empty list'}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "gamma.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["p", "gamma_empirical", "samples", "gamma_nominal", "gamma_collinear"])
        for p in ps:
            g = inequalities.calibrate_gamma(p, args.samples, args.seed)
            w.writerow([f"{p:.17g}", f"{g:.17g}", args.samples,
                        f"{inequalities.nominal_gamma(p):.17g}",
                        f"{inequalities.collinear_gamma(p):.17g}"])
            print(f"p = {p:g}: gamma = {g:.10g}")
    return EXIT_OK


def _grid_from_samples(data) -> Grid:
    xs, ys = np.unique(data[:, 0]), np.unique(data[:, 1])
    if xs.size < 2 or ys.size < 2 or xs.size * ys.size != data.shape[0]:
        raise ConfigError("field file is not a full rectangular node grid")
    if xs[0] != 0 or ys[0] != 0:
        raise ConfigError("field file grid must start at the origin")
    return Grid(xs.size, ys.size, float(xs[-1]), float(ys[-1]))


def cmd_norm(args) -> int:
    data = read_field_csv(args.field)
    grid = _grid_from_samples(data)
    order = np.lexsort((data[:, 1], data[:, 0]))
    u = GridFunction(grid, data[order, 2].reshape(grid.shape))
    try:
        spec = json.loads(args.p)
    except json.JSONDecodeError:
        raise ConfigError(f"--p must be a number or a JSON field spec, got {args.p!r}") from None
    try:
        p = exponent_field(spec, grid, Path("."))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    res = dict(norm=luxemburg_norm(u, p, args.weighted), modular=modular(u, p, args.weighted),
               weighted=args.weighted, p_minus=p.p_minus, p_plus=p.p_plus)
    print(json.dumps(res))
    return EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="varplap", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="minimise the energy for a JSON configuration")
    s.add_argument("config")
    s.add_argument("--out", help="output directory (overrides output.dir)")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("check-inequalities", help="randomised margin scans")
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--p-grid", help="restrict exponents to linspace(a, b, n), given as a:b:n")
    s.add_argument("--threads", type=int, default=None)
    s.add_argument("--out", default=".")
    s.add_argument("--fault-scale", type=float, default=1.0, help=argparse.SUPPRESS)
    s.set_defaults(func=cmd_check_inequalities)

    s = sub.add_parser("calibrate-gamma", help="empirical uniqueness constant")
    s.add_argument("--p-list", default="2,2.5,3,3.5,4")
    s.add_argument("--samples", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default=".")
    s.set_defaults(func=cmd_calibrate_gamma)

    s = sub.add_parser("norm", help="Luxemburg norm of a CSV field")
    s.add_argument("--field", required=True)
    s.add_argument("--p", required=True, help='a number or a JSON field spec')
    s.add_argument("--weighted", action="store_true", help="include the 1/p weight")
    s.set_defaults(func=cmd_norm)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
