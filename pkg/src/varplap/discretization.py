"""Discrete gradients, boundary lifting and the load functional."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels._reference import _corner_grads, _node_weights
from .fields import (CellVectorField, ExponentField, Grid, GridFunction,
                     GridMismatchError)


class ProblemError(ValueError):
    """A problem definition violates its invariants."""


@dataclass(frozen=True, eq=False)
class DirichletProblem:
    """``-div(|grad u|^(p-2) grad u) + q |u|^(p-2) u = f`` with ``u = phi`` on the boundary."""

    grid: Grid
    p: ExponentField
    q: GridFunction
    f: GridFunction
    phi: GridFunction

    def __post_init__(self):
        self.p.check_grid(self.grid)
        for name in ("q", "f", "phi"):
            if getattr(self, name).grid != self.grid:
                raise GridMismatchError(f"{name} lives on a different grid")
        if np.any(self.q.values < 0):
            raise ProblemError("q must be nonnegative")
        for name in ("q", "f", "phi"):
            if not np.all(np.isfinite(getattr(self, name).values)):
                raise ProblemError(f"{name} has non-finite values")

    @classmethod
    def build(cls, grid: Grid, p, q=0.0, f=0.0, phi=0.0) -> "DirichletProblem":
        """Assemble a problem from constants, callables ``fn(x, y)`` or fields."""
        if not isinstance(p, ExponentField):
            p = (ExponentField.from_function(grid, p) if callable(p)
                 else ExponentField.constant(grid, p))

        def nodal(v):
            if isinstance(v, GridFunction):
                return v
            if callable(v):
                return GridFunction.from_function(grid, v)
            return GridFunction.constant(grid, v)

        return cls(grid, p, nodal(q), nodal(f), nodal(phi))

    def replace(self, **kw) -> "DirichletProblem":
        args = dict(grid=self.grid, p=self.p, q=self.q, f=self.f, phi=self.phi)
        args.update(kw)
        return DirichletProblem(**args)


def gradient(u: GridFunction, grid: Grid | None = None) -> CellVectorField:
    """Cell-centred gradient: each component is the mean of the two parallel
    edge differences of the cell.  Exact for affine ``u``."""
    grid = grid or u.grid
    if u.grid != grid:
        raise GridMismatchError("u is not defined on this grid")
    gx, gy = _corner_grads(u.values, grid.hx, grid.hy)
    return CellVectorField(grid, np.stack([gx.mean(axis=0), gy.mean(axis=0)], axis=-1))


def corner_gradients(u: GridFunction) -> CellVectorField:
    """Gradient at the four corners of every cell from the two edges meeting
    there.  Their mean is :func:`gradient`; this is the field the energy uses."""
    gx, gy = _corner_grads(u.values, u.grid.hx, u.grid.hy)
    vals = np.stack([gx, gy], axis=-1)          # (4, ncx, ncy, 2)
    return CellVectorField(u.grid, np.moveaxis(vals, 0, 2))


def lift_boundary(phi: GridFunction, w_interior=None) -> GridFunction:
    """``u = phi`` on the boundary and ``phi + w`` at interior nodes."""
    mask = phi.grid.boundary_mask
    vals = phi.values.copy()
    if w_interior is not None:
        w = np.asarray(w_interior, dtype=float).ravel()
        if w.size != (~mask).sum():
            raise GridMismatchError(
                f"{w.size} interior values for {(~mask).sum()} interior nodes")
        vals[~mask] += w
    return GridFunction(phi.grid, vals)


def extract_interior(u: GridFunction, phi: GridFunction) -> np.ndarray:
    """Inverse of :func:`lift_boundary`: the interior part of ``u - phi``."""
    return (u - phi).interior()


def functional_f(f_density: GridFunction, u: GridFunction) -> float:
    """``int f u dx`` with the cell-corner rule."""
    f_density._check(u)
    g = u.grid
    return float(np.sum(_node_weights(g.shape, g.cell_area) * f_density.values * u.values))


def boundary_violation(u: GridFunction, phi: GridFunction) -> float:
    mask = u.grid.boundary_mask
    return float(np.max(np.abs(u.values[mask] - phi.values[mask]), initial=0.0))
