"""Convex modulars of variable exponent type and their Luxemburg norms.

Nodal fields are integrated with the cell-corner rule: every cell gives
weight ``area / 4`` to each of its corners and uses its own exponent
sample there.  Gradient fields are integrated with equal weights over the
quadrature samples stored in the :class:`CellVectorField`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .fields import CellVectorField, ExponentField, GridFunction, GridMismatchError

LUX_TOL = 1e-12
LUX_MAX_ITER = 200


class IterationLimitError(RuntimeError):
    """Bisection did not meet its tolerance; ``bracket`` holds the last interval."""

    def __init__(self, msg, bracket):
        super().__init__(f"{msg}; bracket = {bracket}")
        self.bracket = bracket


class NotApplicableError(ValueError):
    """The norm-modular inequality needs ``||u|| >= 1``."""


def _corners(a: np.ndarray) -> tuple[np.ndarray, ...]:
    return a[:-1, :-1], a[1:, :-1], a[:-1, 1:], a[1:, 1:]


def _nodal_modular(vals: np.ndarray, p: np.ndarray, area: float, weighted: bool,
                   weight: np.ndarray | None = None) -> float:
    total = np.zeros(p.shape)
    w = None if weight is None else _corners(weight)
    for k, c in enumerate(_corners(np.abs(vals))):
        term = c**p
        if w is not None:
            term = term * w[k]
        total += term
    if weighted:
        total /= p
    return float(0.25 * area * total.sum())


def modular_raw(u: GridFunction, p: ExponentField) -> float:
    """Integral of ``|u|^p`` (no ``1/p`` weight)."""
    p.check_grid(u.grid)
    return _nodal_modular(u.values, p.values, u.grid.cell_area, weighted=False)


def modular_weighted(u: GridFunction, p: ExponentField) -> float:
    """Integral of ``|u|^p / p``."""
    p.check_grid(u.grid)
    return _nodal_modular(u.values, p.values, u.grid.cell_area, weighted=True)


def modular(u: GridFunction, p: ExponentField, weighted: bool = True) -> float:
    return modular_weighted(u, p) if weighted else modular_raw(u, p)


def modular_q(u: GridFunction, q: GridFunction, p: ExponentField) -> float:
    """Integral of ``q |u|^p / p``, the zeroth-order part of the energy."""
    p.check_grid(u.grid)
    u._check(q)
    return _nodal_modular(u.values, p.values, u.grid.cell_area, True, q.values)


def modular_grad(g: CellVectorField, p: ExponentField, weighted: bool = True,
                 subset: np.ndarray | None = None) -> float:
    """Integral of ``|g|^p / p`` (or ``|g|^p``) over the selected cells.

    ``subset`` is an optional boolean cell mask standing for the region of
    integration; ``None`` integrates over the whole domain.
    """
    p.check_grid(g.grid)
    norms = g.norms()
    nq = norms.shape[2]
    dens = np.sum(norms ** p.values[:, :, None], axis=2)
    if weighted:
        dens = dens / p.values
    if subset is not None:
        subset = np.asarray(subset, dtype=bool)
        if subset.shape != p.values.shape:
            raise GridMismatchError("cell subset mask has the wrong shape")
        dens = np.where(subset, dens, 0.0)
    return float(g.grid.cell_area / nq * dens.sum())


def luxemburg(scaled: Callable[[float], float], p_minus: float, p_plus: float,
              tol: float = LUX_TOL, max_iter: int = LUX_MAX_ITER) -> float:
    """Solve ``scaled(lam) = 1`` for a modular ``scaled(lam) = rho(u / lam)``.

    ``rho(u)`` is read off ``scaled(1)``.  The root is bracketed by the
    power bounds ``rho(u)^(1/p_plus)`` and ``rho(u)^(1/p_minus)``, which hold
    for every modular of the form ``int |.|^p``.
    """
    r = scaled(1.0)
    if r == 0.0:
        return 0.0
    if not np.isfinite(r):
        raise FloatingPointError("modular is not finite")
    if abs(r - 1.0) <= tol:
        return 1.0
    a, b = r ** (1.0 / p_plus), r ** (1.0 / p_minus)
    lo, hi = min(a, b), max(a, b)
    # rounding in the power bounds can leave the root just outside
    while scaled(lo) < 1.0:
        lo *= 0.5
    while scaled(hi) > 1.0:
        hi *= 2.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        val = scaled(mid)
        if abs(val - 1.0) <= tol:
            return mid
        if val > 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            # bracket collapsed at floating resolution
            lam = hi if abs(scaled(hi) - 1) < abs(scaled(lo) - 1) else lo
            if abs(scaled(lam) - 1.0) <= max(tol, 1e3 * np.finfo(float).eps):
                return lam
            break
    raise IterationLimitError("Luxemburg bisection did not converge", (lo, hi))


def luxemburg_norm(u: GridFunction, p: ExponentField, weighted: bool = True,
                   tol: float = LUX_TOL, max_iter: int = LUX_MAX_ITER) -> float:
    """Luxemburg norm ``inf{lam > 0 : rho(u / lam) <= 1}`` of a nodal field."""
    p.check_grid(u.grid)
    vals, pv, area = u.values, p.values, u.grid.cell_area
    return luxemburg(lambda lam: _nodal_modular(vals / lam, pv, area, weighted),
                     p.p_minus, p.p_plus, tol, max_iter)


def luxemburg_norm_grad(g: CellVectorField, p: ExponentField, weighted: bool = True,
                        tol: float = LUX_TOL, max_iter: int = LUX_MAX_ITER) -> float:
    """Luxemburg norm of ``|g|`` for a sampled gradient field."""
    p.check_grid(g.grid)
    return luxemburg(
        lambda lam: modular_grad(CellVectorField(g.grid, g.values / lam), p, weighted),
        p.p_minus, p.p_plus, tol, max_iter)


@dataclass
class AxiomReport:
    zero_ok: bool
    symmetry_margin: float
    convexity_margin: float
    scale: float
    n_pairs: int
    worst_pair: tuple | None = None
    tol: float = 1e-12
    passed: bool = field(init=False)

    def __post_init__(self):
        lim = -self.tol * max(self.scale, 1.0)
        self.passed = (self.zero_ok and self.symmetry_margin >= lim
                       and self.convexity_margin >= lim)


def check_modular_axioms(samples: Sequence[GridFunction], p: ExponentField,
                         weighted: bool = False, n_alpha: int = 1, seed: int = 0,
                         tol: float = 1e-12) -> AxiomReport:
    """Check the three convex-modular axioms on sampled fields.

    Convexity is tested on consecutive pairs ``(u_k, u_{k+1})`` with
    ``n_alpha`` random mixing weights each, plus ``alpha = 0, 1``.
    Margins are ``rhs - lhs`` (worst over all checks), so zero means
    equality and negative means violation.
    """
    if not samples:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    rho = [modular(u, p, weighted) for u in samples]

    zero_ok = all((r == 0.0) == (not np.any(u.values)) for u, r in zip(samples, rho))
    sym = min(-abs(modular(-u, p, weighted) - r) for u, r in zip(samples, rho))

    conv, worst, n = 0.0, None, 0
    m = len(samples)
    for k in range(m if m > 1 else 0):
        j = (k + 1) % m
        u, v = samples[k], samples[j]
        for a in np.concatenate([[0.0, 1.0], rng.uniform(0, 1, n_alpha)]):
            mix = GridFunction(u.grid, a * u.values + (1 - a) * v.values)
            margin = a * rho[k] + (1 - a) * rho[j] - modular(mix, p, weighted)
            n += 1
            if margin < conv:
                conv, worst = margin, (k, j, float(a))
    return AxiomReport(zero_ok, sym, conv, max(rho), n, worst, tol)


def check_norm_modular_inequality(u: GridFunction, p: ExponentField,
                                  weighted: bool = True) -> float:
    """Margin ``rho(u) - ||u||^p_minus``, defined only when ``||u|| >= 1``."""
    norm = luxemburg_norm(u, p, weighted)
    if norm < 1.0:
        raise NotApplicableError(f"||u|| = {norm!r} < 1")
    return modular(u, p, weighted) - norm**p.p_minus
