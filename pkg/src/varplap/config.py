"""JSON run configurations and CSV field files.

A configuration is one JSON object::

    {
      "grid":   {"nx": 33, "ny": 33, "lx": 1.0, "ly": 1.0, "dirichlet": "all"},
      "p":      2.5,
      "q":      {"type": "affine", "c0": 1.0, "cx": 1.0},
      "f":      {"type": "sin-product", "amp": 19.739, "kx": 1, "ky": 1},
      "phi":    0.0,
      "solver": {"tol_energy": 1e-12, "max_iters": 20000},
      "output": {"dir": "out"}
    }

Field values are either a number or one of the whitelisted forms
``constant``, ``affine`` (``c0 + cx x + cy y``), ``sin-product``
(``offset + amp sin(kx pi x) sin(ky pi y)``; a zero wave number drops that
factor) or ``file`` (CSV written by :func:`write_field_csv`).  Exponents
are sampled at cell centres, all other fields at nodes.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .discretization import DirichletProblem
from .fields import ExponentField, Grid, GridFunction
from .solver import SolverConfig


class ConfigError(ValueError):
    """The configuration or a field file is malformed."""


FIELD_KEYS = {
    "constant": {"value"},
    "affine": {"c0", "cx", "cy"},
    "sin-product": {"offset", "amp", "kx", "ky"},
    "file": {"path"},
}
TOP_KEYS = {"grid", "p", "q", "f", "phi", "solver", "output"}
GRID_KEYS = {"nx", "ny", "lx", "ly", "dirichlet"}
SOLVER_KEYS = {f.name for f in dataclasses.fields(SolverConfig)}


# ----------------------------------------------------------------------- CSV

def write_field_csv(path, x, y, values, header=("x", "y", "value")):
    """One row per sample, 17 significant digits so values round-trip exactly."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(np.ravel(x), np.ravel(y), np.ravel(values)):
            w.writerow([f"{v:.17g}" for v in row])


def read_field_csv(path) -> np.ndarray:
    """Return the ``(n, 3)`` array of ``x, y, value`` rows."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read field file {path}: {exc}") from exc
    if not rows or [h.strip() for h in rows[0]][:2] != ["x", "y"]:
        raise ConfigError(f"{path}: expected a header row starting with x,y")
    try:
        data = np.array([[float(c) for c in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if data.ndim != 2 or data.shape[1] != 3:
        raise ConfigError(f"{path}: expected three columns")
    return data


def write_grid_function(path, u: GridFunction):
    x, y = u.grid.nodes()
    write_field_csv(path, x, y, u.values)


def _match_samples(data, x, y, path):
    if data.shape[0] != x.size:
        raise ConfigError(f"{path}: {data.shape[0]} rows, grid needs {x.size}")
    if not (np.allclose(data[:, 0], x.ravel(), rtol=0, atol=1e-9 * max(1.0, np.ptp(x)))
            and np.allclose(data[:, 1], y.ravel(), rtol=0, atol=1e-9 * max(1.0, np.ptp(y)))):
        raise ConfigError(f"{path}: sample coordinates do not match the grid")
    return data[:, 2].reshape(x.shape)


def read_grid_function(path, grid: Grid) -> GridFunction:
    x, y = grid.nodes()
    return GridFunction(grid, _match_samples(read_field_csv(path), x, y, path))


# ------------------------------------------------------------------ configs

def _field_fn(spec: Any, name: str):
    """Callable ``fn(x, y)`` for a non-file field spec."""
    if isinstance(spec, bool) or not isinstance(spec, (int, float, dict)):
        raise ConfigError(f"{name}: expected a number or an object")
    if not isinstance(spec, dict):
        c = float(spec)
        return lambda x, y: np.full(np.shape(x), c)
    kind = spec.get("type")
    if kind not in FIELD_KEYS:
        raise ConfigError(f"{name}: unknown field type {kind!r}; allowed {sorted(FIELD_KEYS)}")
    extra = set(spec) - FIELD_KEYS[kind] - {"type"}
    if extra:
        raise ConfigError(f"{name}: unexpected keys {sorted(extra)} for type {kind!r}")
    try:
        if kind == "constant":
            c = float(spec["value"])
            return lambda x, y: np.full(np.shape(x), c)
        if kind == "affine":
            c0, cx, cy = (float(spec.get(k, 0.0)) for k in ("c0", "cx", "cy"))
            return lambda x, y: c0 + cx * x + cy * y
        if kind == "sin-product":
            off, amp = float(spec.get("offset", 0.0)), float(spec.get("amp", 1.0))
            kx, ky = float(spec.get("kx", 1.0)), float(spec.get("ky", 1.0))

            def fn(x, y):
                s = np.ones(np.shape(x))
                if kx:
                    s = s * np.sin(kx * np.pi * x)
                if ky:
                    s = s * np.sin(ky * np.pi * y)
                return off + amp * s
            return fn
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"{name}: bad parameter ({exc})") from exc
    return None   # file


def _resolve(spec, base: Path) -> Path:
    p = Path(spec["path"])
    return p if p.is_absolute() else base / p


def nodal_field(spec, grid: Grid, name: str, base: Path = Path(".")) -> GridFunction:
    fn = _field_fn(spec, name)
    if fn is None:
        return read_grid_function(_resolve(spec, base), grid)
    return GridFunction.from_function(grid, fn)


def exponent_field(spec, grid: Grid, base: Path = Path(".")) -> ExponentField:
    """Exponent from a spec; file exponents hold one row per cell centre."""
    fn = _field_fn(spec, "p")
    if fn is None:
        path = _resolve(spec, base)
        x, y = grid.cell_centers()
        return ExponentField(_match_samples(read_field_csv(path), x, y, path))
    return ExponentField.from_function(grid, fn)


@dataclass
class RunConfig:
    problem: DirichletProblem
    solver: SolverConfig
    output_dir: Path
    raw: dict


def parse_config(raw: dict, base: Path = Path(".")) -> RunConfig:
    """Build the problem and solver settings; every failure is a :class:`ConfigError`
    whose message names the offending entry."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    extra = set(raw) - TOP_KEYS
    if extra:
        raise ConfigError(f"unknown top-level keys {sorted(extra)}")
    g = raw.get("grid")
    if not isinstance(g, dict) or "nx" not in g or "ny" not in g:
        raise ConfigError("grid: nx and ny are required")
    if set(g) - GRID_KEYS:
        raise ConfigError(f"grid: unknown keys {sorted(set(g) - GRID_KEYS)}")
    s = raw.get("solver", {}) or {}
    if set(s) - SOLVER_KEYS:
        raise ConfigError(f"solver: unknown keys {sorted(set(s) - SOLVER_KEYS)}")
    if "p" not in raw:
        raise ConfigError("p is required")
    try:
        grid = Grid(int(g["nx"]), int(g["ny"]), float(g.get("lx", 1.0)),
                    float(g.get("ly", 1.0)), g.get("dirichlet", "all"))
        p = exponent_field(raw["p"], grid, base)
        fields = {k: nodal_field(raw.get(k, 0.0), grid, k, base) for k in ("q", "f", "phi")}
        prob = DirichletProblem(grid, p, **fields)
        cfg = SolverConfig(**s)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{type(exc).__name__}: {exc}") from exc
    out = (raw.get("output") or {}).get("dir", ".")
    return RunConfig(prob, cfg, Path(out), raw)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(raw, path.parent)
