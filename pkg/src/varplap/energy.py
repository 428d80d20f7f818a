"""The discrete Dirichlet energy and its first variation.

The energy of a nodal field ``u`` is

    J(u) = int |grad u|^p / p + int q |u|^p / p - int f u,

evaluated with the cell-corner rule, over fields with ``u = phi`` on the
Dirichlet nodes.  With ``eps_reg > 0`` the gradient density becomes
``(|grad u|^2 + eps^2)^(p/2) / p``, whose derivative is the regularised
flux ``(|grad u|^2 + eps^2)^((p-2)/2) grad u``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .discretization import DirichletProblem, boundary_violation, corner_gradients, functional_f
from .fields import GridFunction
from .modular import modular_grad, modular_q


class BoundaryConditionError(ValueError):
    """``u`` does not match the Dirichlet datum on the boundary."""


def _check_bc(u: GridFunction, datum: GridFunction):
    u._check(datum)
    tol = 1e-12 * (1.0 + float(np.max(np.abs(datum.values), initial=0.0)))
    err = boundary_violation(u, datum)
    if err > tol:
        raise BoundaryConditionError(f"boundary values differ from phi by {err:.3e}")


def _c(a):
    return np.ascontiguousarray(a, dtype=float)


@dataclass
class EnergyParts:
    gradient: float
    mass: float
    load: float

    @property
    def total(self) -> float:
        return self.gradient + self.mass - self.load


class DiscreteEnergy:
    """Energy as a function of the interior nodal values ``x``.

    Boundary nodes are pinned to ``datum``.  ``const`` is added to every
    value (used by the translated form).
    """

    def __init__(self, prob: DirichletProblem, eps_reg: float = 0.0, backend=None,
                 datum: GridFunction | None = None, const: float = 0.0):
        self.prob = prob
        self.grid = prob.grid
        self.eps = float(eps_reg)
        self.kern = _kernels if backend is None else _kernels.get_backend(backend)
        self.datum = prob.phi if datum is None else datum
        self.const = const
        self.mask = self.grid.boundary_mask
        self._p = _c(prob.p.values)
        self._q = _c(prob.q.values)
        self._f = _c(prob.f.values)
        self._base = _c(self.datum.values)
        self.hx, self.hy = self.grid.hx, self.grid.hy

    def full(self, x) -> np.ndarray:
        u = self._base.copy()
        u[~self.mask] = x
        return u

    def field(self, x) -> GridFunction:
        return GridFunction(self.grid, self.full(x))

    def parts(self, u: np.ndarray, eps: float | None = None):
        eps = self.eps if eps is None else eps
        eg, em, el, g = self.kern.energy_grad(_c(u), self._p, self._q, self._f,
                                              self.hx, self.hy, eps)
        return EnergyParts(eg, em, el), g

    def value_grad(self, x):
        parts, g = self.parts(self.full(x))
        return parts.total + self.const, parts, g[~self.mask]

    def delta(self, x, dx) -> float:
        u = self.full(x)
        du = np.zeros_like(u)
        du[~self.mask] = dx
        dg, dm, dl = self.kern.energy_delta(u, du, self._p, self._q, self._f,
                                            self.hx, self.hy, self.eps)
        return dg + dm - dl


def energy_parts(u: GridFunction, prob: DirichletProblem, eps_reg: float = 0.0) -> EnergyParts:
    _check_bc(u, prob.phi)
    return DiscreteEnergy(prob, eps_reg).parts(u.values)[0]


def energy(u: GridFunction, prob: DirichletProblem, eps_reg: float = 0.0) -> float:
    """``J(u)``; raises :class:`BoundaryConditionError` unless ``u = phi`` on the boundary."""
    return energy_parts(u, prob, eps_reg).total


def energy_first_variation(u: GridFunction, prob: DirichletProblem,
                           eps_reg: float = 0.0) -> GridFunction:
    """Derivative of the discrete energy with respect to each interior nodal
    value, returned as a field that is zero on the Dirichlet nodes."""
    _check_bc(u, prob.phi)
    _, g = DiscreteEnergy(prob, eps_reg).parts(u.values)
    g[u.grid.boundary_mask] = 0.0
    return GridFunction(u.grid, g)


def translated_energy(w: GridFunction, prob: DirichletProblem, phi_tilde: GridFunction) -> float:
    """``G(w) = rho_grad(w - phi_tilde) + rho_q(w - phi_tilde) - f(w)`` for ``w``
    vanishing on the boundary, assembled from the modular routines."""
    _check_bc(w, GridFunction.zeros(w.grid))
    v = w - phi_tilde
    return (modular_grad(corner_gradients(v), prob.p)
            + modular_q(v, prob.q, prob.p) - functional_f(prob.f, w))


def translated_objective(prob: DirichletProblem, phi_tilde: GridFunction,
                         eps_reg: float = 0.0) -> DiscreteEnergy:
    """The translated form as a function of the interior values of ``w``.

    With ``v = w - phi_tilde`` one has ``G(w) = J_{-phi_tilde}(v) - f(phi_tilde)``,
    so ``x`` here holds the interior values of ``v``.
    """
    return DiscreteEnergy(prob, eps_reg, datum=-phi_tilde,
                          const=-functional_f(prob.f, phi_tilde))


def functional_F(u: GridFunction, prob: DirichletProblem) -> float:
    """``F(w) = rho_grad(phi_tilde - w) - f(w)`` at ``w = u - phi``, ``phi_tilde = -phi``.

    This is the functional bounded below in :func:`varplap.solver.lower_bound_F`;
    it equals ``rho_grad(u) - f(u - phi)``.
    """
    return modular_grad(corner_gradients(u), prob.p) - functional_f(prob.f, u - prob.phi)
