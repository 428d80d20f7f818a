"""Reference solutions that do not go through the energy code.

* :func:`poisson_oracle` -- the p = 2 problem as a sparse 5-point linear
  system, solved by conjugate gradients.
* :func:`manufacture_rhs` -- the load that makes a chosen field the exact
  discrete solution.
* :func:`closed_form_1d` -- constant-exponent one-dimensional solutions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg

from .discretization import DirichletProblem
from .energy import energy_first_variation
from .fields import ExponentField, Grid, GridFunction


class OracleError(ValueError):
    """The oracle does not apply to the given problem."""


def _edge_couplings(grid: Grid):
    """Coefficient of ``(u_i - u_j)^2 / 2`` for every horizontal and vertical
    grid edge: ``h_perp / h_par`` times half the number of adjacent cells."""
    nx, ny = grid.shape
    cx = np.full((nx - 1, ny), grid.hy / grid.hx)
    cx[:, 0] *= 0.5
    cx[:, -1] *= 0.5
    cy = np.full((nx, ny - 1), grid.hx / grid.hy)
    cy[0, :] *= 0.5
    cy[-1, :] *= 0.5
    return cx, cy


def poisson_matrix(grid: Grid, q: np.ndarray | None = None) -> sp.csr_matrix:
    """Full nodal matrix of ``-Laplace u + q u`` (5-point stencil, lumped mass),
    multiplied by the node weights."""
    nx, ny = grid.shape
    n = nx * ny
    idx = np.arange(n).reshape(nx, ny)
    cx, cy = _edge_couplings(grid)
    a = np.concatenate([idx[:-1, :].ravel(), idx[:, :-1].ravel()])
    b = np.concatenate([idx[1:, :].ravel(), idx[:, 1:].ravel()])
    c = np.concatenate([cx.ravel(), cy.ravel()])
    diag = np.bincount(a, c, n) + np.bincount(b, c, n)
    if q is not None:
        diag = diag + (grid.node_weights() * q).ravel()
    A = sp.coo_matrix((-c, (a, b)), shape=(n, n))
    return (A + A.T + sp.diags(diag)).tocsr()


def poisson_oracle(prob: DirichletProblem, rtol: float = 1e-12, maxiter: int | None = None) -> GridFunction:
    """Solve the p = 2 discrete problem directly as a linear system.

    The matrix is symmetric positive definite once the Dirichlet rows are
    eliminated, so conjugate gradients converges; the relative residual is
    checked against ``rtol`` after the solve.
    """
    if not np.all(prob.p.values == 2.0):
        raise OracleError("poisson_oracle needs p = 2 everywhere")
    grid = prob.grid
    A = poisson_matrix(grid, prob.q.values)
    mask = grid.boundary_mask.ravel()
    inner = np.flatnonzero(~mask)
    phi = prob.phi.values.ravel()
    rhs = (grid.node_weights() * prob.f.values).ravel() - A @ np.where(mask, phi, 0.0)
    A_ii = A[inner][:, inner]
    b = rhs[inner]
    x, info = cg(A_ii, b, rtol=rtol, atol=0.0, maxiter=maxiter or 20 * inner.size)
    res = np.linalg.norm(A_ii @ x - b)
    if info != 0 or res > 10 * rtol * max(np.linalg.norm(b), 1e-300):
        raise OracleError(f"CG did not reach the requested residual ({res:.3e}, info={info})")
    u = phi.copy()
    u[inner] = x
    return GridFunction(grid, u.reshape(grid.shape))


def manufacture_rhs(u_target: GridFunction, prob: DirichletProblem,
                    eps_reg: float = 0.0) -> DirichletProblem:
    """Return ``prob`` with boundary datum ``u_target`` and the load density
    for which ``u_target`` is the exact discrete minimiser.

    The load is the first variation of the gradient and mass terms at
    ``u_target`` divided by the node weights.  Dirichlet nodes get ``f = 0``;
    they never enter the discrete equations.  The datum is ``u_target`` on
    the boundary and zero inside, so the default start is not the answer.
    """
    mask = prob.grid.boundary_mask
    phi = GridFunction(prob.grid, np.where(mask, u_target.values, 0.0))
    V = energy_first_variation(u_target, prob.replace(f=GridFunction.zeros(prob.grid),
                                                      phi=u_target), eps_reg).values
    if not np.all(np.isfinite(V)):
        raise OracleError("first variation is singular at the target field")
    f = np.where(mask, 0.0, V / prob.grid.node_weights())
    return prob.replace(f=GridFunction(prob.grid, f), phi=phi)


# ------------------------------------------------------------------ 1-D cases

def _unit_load(p: float):
    # flux |u'|^(p-2) u' = 1/2 - x  =>  u' = sgn(1/2 - x) |1/2 - x|^(1/(p-1))
    pc = p / (p - 1.0)

    def u(x):
        return (p - 1.0) / p * (0.5**pc - np.abs(x - 0.5) ** pc)

    def du(x):
        t = 0.5 - x
        return np.sign(t) * np.abs(t) ** (1.0 / (p - 1.0))

    return u, du


_CASES = {"unit-load": _unit_load}


def closed_form_1d(p_const: float, case: str = "unit-load"):
    """Exact solution of ``-(|u'|^(p-2) u')' = f`` on (0, 1), ``u(0) = u(1) = 0``.

    Returns ``(u, f)`` as callables of ``x``.  The ``"unit-load"`` case has
    ``f = 1`` and ``u = (p-1)/p * ((1/2)^p' - |x - 1/2|^p')``, ``p' = p/(p-1)``.
    """
    if not p_const > 1:
        raise OracleError("p must exceed 1")
    try:
        u, _ = _CASES[case](float(p_const))
    except KeyError:
        raise OracleError(f"unknown case {case!r}; known: {sorted(_CASES)}") from None
    return u, (lambda x: np.ones_like(np.asarray(x, dtype=float)))


def closed_form_flux(p_const: float, case: str = "unit-load"):
    """Derivative of the closed-form solution (used to check it)."""
    return _CASES[case](float(p_const))[1]


def grid_1d(n: int) -> Grid:
    """A 1-D grid on (0, 1): two node rows, Dirichlet only at x = 0 and x = 1."""
    return Grid(n, 2, 1.0, 1.0, dirichlet="x")


@dataclass
class ManufacturedCase:
    """A target solution and the data generating it on any grid."""

    name: str
    u_exact: Callable[[Grid], GridFunction]
    p: Callable[[Grid], ExponentField]
    q: Callable[[Grid], GridFunction]
    expected_order: float | None = None
    f: Callable[[Grid], GridFunction] | None = None

    def problem(self, grid: Grid, discrete: bool = True) -> DirichletProblem:
        """``discrete=True`` manufactures ``f`` through the discrete operator;
        otherwise the continuous load ``self.f`` is used."""
        u = self.u_exact(grid)
        prob = DirichletProblem(grid, self.p(grid), self.q(grid), GridFunction.zeros(grid), u)
        if discrete or self.f is None:
            return manufacture_rhs(u, prob)
        return prob.replace(f=self.f(grid))


def poisson_sine_case() -> ManufacturedCase:
    pi = np.pi
    return ManufacturedCase(
        "poisson-sine",
        u_exact=lambda g: GridFunction.from_function(g, lambda x, y: np.sin(pi * x) * np.sin(pi * y)),
        p=lambda g: ExponentField.constant(g, 2.0),
        q=GridFunction.zeros,
        expected_order=2.0,
        f=lambda g: GridFunction.from_function(
            g, lambda x, y: 2 * pi**2 * np.sin(pi * x) * np.sin(pi * y)),
    )


def variable_p_case() -> ManufacturedCase:
    return ManufacturedCase(
        "variable-p-bubble",
        u_exact=lambda g: GridFunction.from_function(g, lambda x, y: x * (1 - x) * y * (1 - y)),
        p=lambda g: ExponentField.from_function(g, lambda x, y: 2 + 0.5 * np.sin(np.pi * x)),
        q=GridFunction.zeros,
    )
