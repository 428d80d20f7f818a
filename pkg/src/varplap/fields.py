"""Grid geometry and the field containers shared by every module.

Nodal arrays are indexed ``values[i, j]`` with ``i`` running along x and
``j`` along y, so a grid with ``nx`` by ``ny`` nodes stores arrays of shape
``(nx, ny)``.  Cell arrays have shape ``(nx - 1, ny - 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class GridMismatchError(ValueError):
    """Two fields were combined that do not live on the same grid."""


class ExponentError(ValueError):
    """An exponent field violates ``1 < p(x) < inf``."""


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Grid:
    """Uniform node grid on the rectangle ``[0, lx] x [0, ly]``.

    ``dirichlet="all"`` fixes the outermost node layer.  ``dirichlet="x"``
    fixes only the ``x = 0`` and ``x = lx`` columns and leaves the y sides
    natural; with ``ny = 2`` and y-independent data this is the 1-D path.
    """

    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0
    dirichlet: str = "all"

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError(f"need at least 2 nodes per axis, got {self.nx}x{self.ny}")
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError("domain extents must be positive")
        if self.dirichlet not in ("all", "x"):
            raise ValueError(f"unknown dirichlet layout {self.dirichlet!r}")

    @property
    def hx(self) -> float:
        return self.lx / (self.nx - 1)

    @property
    def hy(self) -> float:
        return self.ly / (self.ny - 1)

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def cell_shape(self) -> tuple[int, int]:
        return (self.nx - 1, self.ny - 1)

    @property
    def n_cells(self) -> int:
        return (self.nx - 1) * (self.ny - 1)

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.linspace(0.0, self.lx, self.nx)
        y = np.linspace(0.0, self.ly, self.ny)
        return np.meshgrid(x, y, indexing="ij")

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        x = (np.arange(self.nx - 1) + 0.5) * self.hx
        y = (np.arange(self.ny - 1) + 0.5) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    @property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[0, :] = mask[-1, :] = True
        if self.dirichlet == "all":
            mask[:, 0] = mask[:, -1] = True
        return mask

    @property
    def n_interior(self) -> int:
        return int((~self.boundary_mask).sum())

    def node_weights(self) -> np.ndarray:
        """Quadrature weight of each node under the cell-corner rule."""
        cnt = np.zeros(self.shape)
        cnt[:-1, :-1] += 1
        cnt[1:, :-1] += 1
        cnt[:-1, 1:] += 1
        cnt[1:, 1:] += 1
        return cnt * (0.25 * self.cell_area)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nodal scalar field on a :class:`Grid`."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = _frozen(self.values)
        if vals.size != self.grid.nx * self.grid.ny:
            raise GridMismatchError(
                f"{vals.size} values for a {self.grid.nx}x{self.grid.ny} grid")
        object.__setattr__(self, "values", vals.reshape(self.grid.shape))

    @classmethod
    def zeros(cls, grid: Grid) -> "GridFunction":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "GridFunction":
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable) -> "GridFunction":
        x, y = grid.nodes()
        return cls(grid, np.broadcast_to(fn(x, y), grid.shape))

    nx = property(lambda self: self.grid.nx)
    ny = property(lambda self: self.grid.ny)
    hx = property(lambda self: self.grid.hx)
    hy = property(lambda self: self.grid.hy)
    boundary_mask = property(lambda self: self.grid.boundary_mask)

    def _check(self, other: "GridFunction"):
        if other.grid != self.grid:
            raise GridMismatchError(f"grids differ: {self.grid} vs {other.grid}")

    def __add__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return GridFunction(self.grid, self.values + other.values)
        return GridFunction(self.grid, self.values + other)

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return GridFunction(self.grid, self.values - other.values)
        return GridFunction(self.grid, self.values - other)

    def __mul__(self, c):
        return GridFunction(self.grid, self.values * float(c))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return GridFunction(self.grid, self.values / float(c))

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def interior(self) -> np.ndarray:
        return self.values[~self.grid.boundary_mask].copy()


@dataclass(frozen=True, eq=False)
class ExponentField:
    """Per-cell samples of a variable exponent with cached extremes."""

    values: np.ndarray
    p_minus: float = field(init=False)
    p_plus: float = field(init=False)

    def __post_init__(self):
        vals = _frozen(self.values)
        if vals.ndim != 2:
            raise ExponentError("exponent samples must be a 2-D cell array")
        if not np.all(np.isfinite(vals)):
            raise ExponentError("exponent must be finite (p = inf is not supported)")
        if np.any(vals <= 1.0):
            raise ExponentError(
                f"exponent must satisfy p > 1 everywhere, got p_minus = {vals.min()!r}")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "p_minus", float(vals.min()))
        object.__setattr__(self, "p_plus", float(vals.max()))

    @classmethod
    def constant(cls, grid: Grid, p: float) -> "ExponentField":
        return cls(np.full(grid.cell_shape, float(p)))

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable) -> "ExponentField":
        x, y = grid.cell_centers()
        return cls(np.broadcast_to(fn(x, y), grid.cell_shape))

    @property
    def is_constant(self) -> bool:
        return self.p_minus == self.p_plus

    def check_grid(self, grid: Grid):
        if self.values.shape != grid.cell_shape:
            raise GridMismatchError(
                f"exponent has cell shape {self.values.shape}, grid has {grid.cell_shape}")


@dataclass(frozen=True, eq=False)
class CellVectorField:
    """Vectors sampled at quadrature points inside each cell.

    ``values`` has shape ``(ncx, ncy, nq, d)``; the ``nq`` samples of a cell
    share its area equally.  ``nq = 1`` is a plain cell-centred field.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = _frozen(self.values)
        if vals.ndim == 3:
            vals = vals[:, :, None, :]
        if vals.ndim != 4 or vals.shape[:2] != self.grid.cell_shape:
            raise GridMismatchError(
                f"vector field of shape {vals.shape} does not match cells {self.grid.cell_shape}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, grid: Grid, vec) -> "CellVectorField":
        vec = np.asarray(vec, dtype=float)
        return cls(grid, np.broadcast_to(vec, grid.cell_shape + (1, vec.size)))

    @property
    def dim(self) -> int:
        return self.values.shape[-1]

    def norms(self) -> np.ndarray:
        """Euclidean norm of every sample, shape ``(ncx, ncy, nq)``."""
        return np.sqrt(np.sum(self.values**2, axis=-1))

    def cell_means(self) -> np.ndarray:
        return self.values.mean(axis=2)
