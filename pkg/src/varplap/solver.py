"""Descent minimisation of the discrete energy and its convergence certificates."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._kernels import NumericalError
from .discretization import DirichletProblem, corner_gradients, functional_f, lift_boundary
from .energy import DiscreteEnergy, _check_bc, energy, energy_first_variation, translated_objective
from .fields import GridFunction
from .modular import luxemburg_norm_grad, modular_grad

log = logging.getLogger(__name__)

STEP_RULES = ("fixed", "backtracking", "spectral")


class LineSearchError(RuntimeError):
    """No acceptable step after the allowed number of halvings."""

    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report


@dataclass
class SolverConfig:
    tol_energy: float = 1e-12
    tol_grad: float | None = None   # None -> 1e-8 * cell area
    max_iters: int = 20000
    eps_reg: float = 1e-8
    step_rule: str = "spectral"
    seed: int = 0
    step_size: float | None = None
    armijo: float = 1e-4
    shrink: float = 0.5
    max_halvings: int = 60
    window: int = 10
    backend: str | None = None
    precondition: bool = True

    def __post_init__(self):
        if self.step_rule == "spectral-with-backtracking":
            self.step_rule = "spectral"
        if self.step_rule not in STEP_RULES:
            raise ValueError(f"unknown step rule {self.step_rule!r}")
        if not self.tol_energy > 0 or (self.tol_grad is not None and not self.tol_grad > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.eps_reg < 0:
            raise ValueError("eps_reg must be >= 0")

    def grad_tol(self, prob: DirichletProblem) -> float:
        return self.tol_grad if self.tol_grad is not None else 1e-8 * prob.grid.cell_area


@dataclass
class SolveReport:
    u_final: GridFunction
    energies: list[float]
    grad_norms: list[float]
    F_values: list[float]
    cauchy_diag: list[float]        # consecutive pairs over the trailing window
    cauchy_extreme: float           # first vs last iterate of the window
    residual_max: float
    residual_unreg: float
    iterations: int
    converged: bool
    final_energy: float
    tol_grad: float
    backtracks: int = 0
    message: str = ""
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dict(energies=self.energies, grad_norms=self.grad_norms,
                    F_values=self.F_values, cauchy_diag=self.cauchy_diag,
                    cauchy_extreme=self.cauchy_extreme,
                    residual_max=self.residual_max, residual_unreg=self.residual_unreg,
                    iterations=self.iterations, converged=self.converged,
                    final_energy=self.final_energy, tol_grad=self.tol_grad,
                    backtracks=self.backtracks, message=self.message)


def _descend(obj: DiscreteEnergy, x, cfg: SolverConfig, tol_grad: float, on_accept=None):
    """Monotone gradient descent on ``obj`` from interior values ``x``.

    Energies are tracked as ``J_0`` plus the accumulated, cancellation-free
    increments, so the recorded sequence is exactly non-increasing.
    """
    x = np.array(x, dtype=float)
    solve_M = _stiffness_solver(obj.grid) if cfg.precondition else None
    J, _, g = obj.value_grad(x)
    energies, gnorms = [J], [float(np.max(np.abs(g), initial=0.0))]
    tail = deque([x.copy()], maxlen=cfg.window + 1)
    if on_accept:
        on_accept(x)
    g_ = obj.grid
    if solve_M is not None:
        alpha = cfg.step_size or 1.0
    else:
        alpha = cfg.step_size or 1.0 / (g_.cell_area * (4 / g_.hx**2 + 4 / g_.hy**2))
    rel_dec, k, backtracks, converged, msg = np.inf, 0, 0, False, ""
    while True:
        if gnorms[-1] < tol_grad and (k == 0 or rel_dec < cfg.tol_energy):
            converged, msg = True, "converged"
            break
        if k >= cfg.max_iters:
            msg = "iteration limit reached"
            break
        d = -g if solve_M is None else -solve_M(g)
        slope = float(g @ d)
        if cfg.step_rule in ("backtracking", "fixed") and cfg.step_size:
            alpha = cfg.step_size
        for h in range(cfg.max_halvings + 1):
            dx = alpha * d
            try:
                dJ = obj.delta(x, dx)
            except NumericalError:
                dJ = np.inf
            if dJ < 0 and dJ <= cfg.armijo * alpha * slope:
                break
            if cfg.step_rule == "fixed":
                raise LineSearchError(f"fixed step {alpha:g} does not decrease the energy "
                                      f"at iteration {k}", (x, energies, gnorms, k))
            alpha *= cfg.shrink
            backtracks += 1
        else:
            raise LineSearchError(f"line search failed after {cfg.max_halvings} halvings "
                                  f"at iteration {k}", (x, energies, gnorms, k))
        x = x + dx
        J_new, _, g_new = obj.value_grad(x)
        J = energies[-1] + dJ
        rel_dec = abs(dJ) / max(abs(J), np.finfo(float).tiny)
        energies.append(J)
        gnorms.append(float(np.max(np.abs(g_new))))
        tail.append(x.copy())
        if on_accept:
            on_accept(x)
        if cfg.step_rule == "spectral":
            y = g_new - g
            sy = float(dx @ y)
            # spectral step in the metric of the preconditioner
            # (M s = -alpha g, so s'Ms = -alpha s'g)
            ss = float(dx @ dx) if solve_M is None else -alpha * float(dx @ g)
            alpha = ss / sy if sy > 0 else 2.0 * alpha
            alpha = min(max(alpha, 1e-30), 1e30)
        g = g_new
        k += 1
    return x, energies, gnorms, list(tail), k, converged, backtracks, msg


def _stiffness_solver(grid):
    """Factorised p = 2 stiffness matrix on the interior nodes (the Sobolev
    gradient metric used to precondition descent directions)."""
    n = grid.nx * grid.ny
    idx = np.arange(n).reshape(grid.shape)
    # every cell edge carries weight area / (2 h^2) under the corner rule
    wx = 0.5 * grid.cell_area / grid.hx**2
    wy = 0.5 * grid.cell_area / grid.hy**2
    rows, cols, vals = [], [], []
    for a, b, w in ((idx[:-1, :-1], idx[1:, :-1], wx), (idx[:-1, 1:], idx[1:, 1:], wx),
                    (idx[:-1, :-1], idx[:-1, 1:], wy), (idx[1:, :-1], idx[1:, 1:], wy)):
        a, b = a.ravel(), b.ravel()
        rows += [a, b, a, b]
        cols += [a, b, b, a]
        vals += [np.full(a.size, w), np.full(a.size, w), np.full(a.size, -w), np.full(a.size, -w)]
    K = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n))
    inner = np.flatnonzero(~grid.boundary_mask.ravel())
    return spla.factorized(sp.csc_matrix(K[inner][:, inner]))


def minimize(prob: DirichletProblem, cfg: SolverConfig | None = None,
             u0: GridFunction | None = None) -> SolveReport:
    """Minimise the energy over ``{u : u = phi on the boundary}``."""
    cfg = cfg or SolverConfig()
    if u0 is None:
        u0 = lift_boundary(prob.phi)
    _check_bc(u0, prob.phi)
    obj = DiscreteEnergy(prob, cfg.eps_reg, cfg.backend)
    tol = cfg.grad_tol(prob)
    Fvals = []
    track = lambda x: Fvals.append(functional_F_values(obj, x))  # noqa: E731
    try:
        x, energies, gnorms, tail, k, conv, bt, msg = _descend(
            obj, u0.interior(), cfg, tol, on_accept=track)
    except LineSearchError as exc:
        x, energies, gnorms, k = exc.report
        exc.report = _report(prob, obj, cfg, x, energies, gnorms, Fvals, [x], k,
                             False, 0, str(exc))
        raise
    rep = _report(prob, obj, cfg, x, energies, gnorms, Fvals, tail, k, conv, bt, msg)
    log.info("minimize: %s after %d iterations, residual %.3e", msg, k, rep.residual_max)
    return rep


def functional_F_values(obj: DiscreteEnergy, x) -> float:
    u = obj.full(x)
    parts, _ = obj.parts(u, eps=0.0)
    return parts.gradient - float(np.sum(obj.grid.node_weights() * obj._f * (u - obj._base)))


def _report(prob, obj, cfg, x, energies, gnorms, Fvals, tail, k, conv, bt, msg):
    u = obj.field(x)
    tol = cfg.grad_tol(prob)
    res = weak_residual(u, prob, eps_reg=cfg.eps_reg, seed=cfg.seed)
    res0 = weak_residual(u, prob, eps_reg=0.0, trials=0) if cfg.eps_reg > 0 else res
    diag = cauchy_diagnostic([obj.field(t) for t in tail], prob) if len(tail) > 1 else [0.0, 0.0]
    conv = conv and res <= tol
    return SolveReport(u, energies, gnorms, Fvals, diag[:-1], diag[-1], res, res0, k, conv,
                       energy(u, prob), tol, bt, msg)


def minimize_translated(prob: DirichletProblem, phi_tilde: GridFunction,
                        cfg: SolverConfig | None = None):
    """Minimise ``G(w) = rho_grad(w - phi_tilde) + rho_q(w - phi_tilde) - f(w)``
    over fields ``w`` vanishing on the boundary.  Returns ``(w, energies)``."""
    cfg = cfg or SolverConfig()
    obj = translated_objective(prob, phi_tilde, cfg.eps_reg)
    x0 = obj.datum.interior()
    x, energies, *_ = _descend(obj, x0, cfg, cfg.grad_tol(prob))
    w = obj.field(x) + phi_tilde
    return GridFunction(w.grid, np.where(w.grid.boundary_mask, 0.0, w.values)), energies


def cauchy_diagnostic(iterates: list[GridFunction], prob: DirichletProblem) -> list[float]:
    """``rho_grad((u_j - u_k) / 2)`` for consecutive pairs, then for the
    first/last pair of the window."""
    if len(iterates) < 2:
        raise ValueError("need at least two iterates")

    def half(a, b):
        return modular_grad(corner_gradients((a - b) * 0.5), prob.p)

    out = [half(b, a) for a, b in zip(iterates[:-1], iterates[1:])]
    out.append(half(iterates[-1], iterates[0]))
    return out


def weak_residual(u: GridFunction, prob: DirichletProblem, trials: int = 16, seed: int = 0,
                  eps_reg: float = 0.0) -> float:
    """Largest ``|<dJ(u), h>|`` over test functions ``h`` in the discrete W0.

    Test functions are the interior hats and ``trials`` random Gaussian
    bumps, each normalised to unit nodal l1 norm, so the value equals the
    max-norm of the first variation.
    """
    _check_bc(u, prob.phi)
    V = energy_first_variation(u, prob, eps_reg).values
    interior = ~u.grid.boundary_mask
    best = float(np.max(np.abs(V[interior]), initial=0.0))
    rng = np.random.default_rng(seed)
    x, y = u.grid.nodes()
    for _ in range(trials):
        cx, cy = rng.uniform(0, u.grid.lx), rng.uniform(0, u.grid.ly)
        s = rng.uniform(0.05, 0.3) * max(u.grid.lx, u.grid.ly)
        h = np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / s**2) * interior
        n1 = np.abs(h).sum()
        if n1 > 0:
            best = max(best, abs(float(np.sum(V * h))) / n1)
    return best


# -------------------------------------------------------------- lower bound

@dataclass
class DualNorm:
    lower: float
    upper: float
    scale: float


def dual_norm_load(prob: DirichletProblem, cfg: SolverConfig | None = None,
                   max_solves: int = 8) -> DualNorm:
    """Bracket ``||f||_* = sup{f(w) : w in W0, ||grad w||_p <= 1}``.

    For any ``s > 0`` let ``w_s`` minimise ``rho_grad(w) - s f(w)``.  Then
    ``f(w) <= (s f(w_s) - rho_grad(w_s) + 1) / s`` whenever ``rho_grad(w) <= 1``
    (upper bound), while ``f(w_s) / ||grad w_s||`` is attained (lower bound).
    ``s`` is adjusted towards ``rho_grad(w_s) = 1``, where the two meet.
    """
    grid = prob.grid
    zero = GridFunction.zeros(grid)
    if not np.any(prob.f.values[~grid.boundary_mask]):
        return DualNorm(0.0, 0.0, 0.0)
    cfg = cfg or SolverConfig(tol_grad=1e-9 * grid.cell_area, max_iters=50000)
    pm = prob.p.p_minus
    conj = pm / (pm - 1)
    s, lo, hi, best_s = 1.0, 0.0, np.inf, 1.0
    w = None
    for _ in range(max_solves):
        sub = prob.replace(q=zero, phi=zero, f=prob.f * s)
        rep = minimize(sub, cfg, u0=w)
        w = rep.u_final
        rho = modular_grad(corner_gradients(w), prob.p)
        fw = functional_f(prob.f, w)
        if rho <= 0 or fw <= 0:
            s *= 10.0
            continue
        up = (s * fw - rho + 1.0) / s
        lo = max(lo, fw / luxemburg_norm_grad(corner_gradients(w), prob.p))
        if up < hi:
            hi, best_s = up, s
        if abs(rho - 1.0) < 1e-6:
            break
        # rho_grad(w_s) grows roughly like s^conj
        s *= rho ** (-1.0 / conj)
    return DualNorm(lo, hi, best_s)


def lower_bound_F(prob: DirichletProblem, dual: DualNorm | None = None) -> float:
    """Lower bound for ``F(w) = rho_grad(phi - w) - f(w)`` over ``w`` in W0.

    With ``A = ||f||_*`` (certified upper estimate) and ``B = ||grad phi||_p``:
    on ``{||grad(phi - w)|| >= 1}``, ``F >= x - A x^(1/p_minus) - A B`` at
    ``x = rho_grad(phi - w) >= 1``; otherwise ``F >= -A (1 + B)``.  The smaller
    of ``min_{x >= 1}`` of the first expression and the second is returned.
    """
    dual = dual or dual_norm_load(prob)
    A = dual.upper
    B = luxemburg_norm_grad(corner_gradients(prob.phi), prob.p)
    pm = prob.p.p_minus
    xs = max(1.0, (A / pm) ** (pm / (pm - 1))) if A > 0 else 1.0
    h_min = xs - A * xs ** (1 / pm) - A * B
    return float(min(h_min, -A * (1 + B)))
