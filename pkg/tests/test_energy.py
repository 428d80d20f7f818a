import numpy as np
import pytest

from conftest import fd_relative_errors, variable_p
from varplap._kernels import NumericalError
from varplap.discretization import DirichletProblem, corner_gradients, functional_f
from varplap.energy import (BoundaryConditionError, DiscreteEnergy, energy, energy_first_variation,
                            energy_parts, functional_F, translated_energy, translated_objective)
from varplap.fields import ExponentField, Grid, GridFunction
from varplap.modular import modular_grad, modular_q
from varplap.oracles import poisson_matrix


def test_energy_examples():
    g = Grid(9, 9)
    prob = DirichletProblem.build(g, 2.0)
    assert energy(GridFunction.zeros(g), prob) == 0.0
    phi = GridFunction.from_function(g, lambda x, y: 3 * x - 2 * y)
    assert energy(phi, prob.replace(phi=phi)) == pytest.approx(6.5, rel=1e-14)


def test_energy_requires_boundary_condition():
    g = Grid(5, 5)
    prob = DirichletProblem.build(g, 2.0, phi=1.0)
    with pytest.raises(BoundaryConditionError):
        energy(GridFunction.zeros(g), prob)
    with pytest.raises(BoundaryConditionError):
        energy_first_variation(GridFunction.zeros(g), prob)


def _brute_energy(u, prob):
    """Cell-by-cell loop over the four corners, written out independently."""
    g = prob.grid
    hx, hy, w = g.hx, g.hy, g.cell_area / 4
    U, P, Q, F = u.values, prob.p.values, prob.q.values, prob.f.values
    total = 0.0
    for i in range(g.nx - 1):
        for j in range(g.ny - 1):
            p = P[i, j]
            for di, dj in ((0, 0), (1, 0), (0, 1), (1, 1)):
                gx = (U[i + 1, j + dj] - U[i, j + dj]) / hx
                gy = (U[i + di, j + 1] - U[i + di, j]) / hy
                ii, jj = i + di, j + dj
                total += w * ((gx * gx + gy * gy) ** (p / 2) / p
                              + Q[ii, jj] * abs(U[ii, jj]) ** p / p - F[ii, jj] * U[ii, jj])
    return total


def test_energy_matches_brute_force_loop(rng):
    g = Grid(8, 7, 1.3, 0.9)
    u = GridFunction(g, rng.normal(size=g.shape))
    prob = DirichletProblem.build(g, variable_p(g, rng=rng), q=GridFunction(g, rng.uniform(0, 1, g.shape)),
                                  f=GridFunction(g, rng.normal(size=g.shape)), phi=u)
    assert energy(u, prob) == pytest.approx(_brute_energy(u, prob), rel=1e-12)


def test_energy_converges_under_refinement():
    """Smooth data: the discrete energy approaches its continuum value at O(h^2)."""
    def J(n):
        g = Grid(n, n)
        u = GridFunction.from_function(g, lambda x, y: np.sin(x + 2 * y))
        prob = DirichletProblem.build(g, lambda x, y: 2 + 0.5 * np.sin(np.pi * x),
                                      q=lambda x, y: 1 + x, f=1.0, phi=u)
        return energy(u, prob)

    vals = [J(n) for n in (33, 65, 129, 257)]
    d = np.abs(np.diff(vals))
    assert np.all(np.log2(d[:-1] / d[1:]) > 1.8)


def test_parts_add_up(rng):
    g = Grid(9, 9)
    u = GridFunction(g, rng.normal(size=g.shape))
    prob = DirichletProblem.build(g, variable_p(g), q=2.0, f=1.5, phi=u)
    parts = energy_parts(u, prob)
    assert parts.gradient == pytest.approx(modular_grad(corner_gradients(u), prob.p), rel=1e-13)
    assert parts.mass == pytest.approx(modular_q(u, prob.q, prob.p), rel=1e-13)
    assert parts.load == pytest.approx(functional_f(prob.f, u), rel=1e-13)
    assert parts.total == pytest.approx(energy(u, prob), rel=1e-15)


@pytest.mark.parametrize("p", [1.3, 2.0, 3.1, "variable"])
def test_first_variation_finite_differences(p):
    g = Grid(17, 17)
    pf = variable_p(g, 1.3, 4.0) if p == "variable" else ExponentField.constant(g, p)
    errs = fd_relative_errors(g, pf, 5, seed=hash(str(p)) % 1000)
    assert errs.max() < 1e-6


def test_first_variation_is_5_point_stencil_for_p2(rng):
    g = Grid(11, 9, 1.0, 0.8)
    u = GridFunction(g, rng.normal(size=g.shape))
    q = rng.uniform(0, 2, g.shape)
    f = rng.normal(size=g.shape)
    prob = DirichletProblem.build(g, 2.0, q=GridFunction(g, q), f=GridFunction(g, f), phi=u)
    V = energy_first_variation(u, prob).values
    A = poisson_matrix(g, q)
    expected = (A @ u.values.ravel()).reshape(g.shape) - g.node_weights() * f
    inner = ~g.boundary_mask
    assert np.allclose(V[inner], expected[inner], rtol=0, atol=1e-12 * np.abs(expected).max())
    assert np.all(V[g.boundary_mask] == 0)


@pytest.mark.parametrize("pspec", [1.5, 2.0, 3.5])
def test_variation_vanishes_for_affine_data(pspec):
    g = Grid(9, 9)
    phi = GridFunction.from_function(g, lambda x, y: 3 * x - 2 * y)
    prob = DirichletProblem.build(g, pspec, phi=phi)
    V = energy_first_variation(phi, prob).values
    assert np.abs(V).max() < 1e-12 * 13 ** (pspec / 2)


def test_affine_not_harmonic_for_generic_variable_p():
    """p varying along the gradient direction makes the flux non-constant."""
    g = Grid(17, 17)
    phi = GridFunction.from_function(g, lambda x, y: 3 * x - 2 * y)
    prob = DirichletProblem.build(g, lambda x, y: 2 + np.sin(np.pi * x), phi=phi)
    assert np.abs(energy_first_variation(phi, prob).values).max() > 1e-3


def test_overflow_reports_cell():
    g = Grid(5, 5)
    vals = np.zeros(g.shape)
    vals[2, 2] = 1e200
    u = GridFunction(g, vals)
    prob = DirichletProblem.build(g, 4.0, phi=u)
    with pytest.raises(NumericalError) as exc:
        energy(u, prob)
    assert exc.value.cell in {(1, 1), (1, 2), (2, 1), (2, 2)}


def test_translated_forms_agree(rng):
    g = Grid(9, 9)
    prob = DirichletProblem.build(g, variable_p(g), q=1.0, f=lambda x, y: 1 + x,
                                  phi=lambda x, y: x * y)
    phi_t = GridFunction(g, rng.normal(size=g.shape))
    w = GridFunction(g, np.where(g.boundary_mask, 0.0, rng.normal(size=g.shape)))
    obj = translated_objective(prob, phi_t)
    x = (w - phi_t).interior()
    J, _, _ = obj.value_grad(x)
    assert J == pytest.approx(translated_energy(w, prob, phi_t), rel=1e-12)


def test_translation_identity(rng):
    """With phi_tilde = -phi the translated form is J(w + phi) + f(phi)."""
    g = Grid(9, 9)
    prob = DirichletProblem.build(g, variable_p(g), q=0.7, f=2.0, phi=lambda x, y: x - y)
    w = GridFunction(g, np.where(g.boundary_mask, 0.0, rng.normal(size=g.shape)))
    lhs = translated_energy(w, prob, -prob.phi)
    rhs = energy(w + prob.phi, prob) + functional_f(prob.f, prob.phi)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_functional_F_is_gradient_modular_minus_load(rng):
    g = Grid(9, 9)
    prob = DirichletProblem.build(g, 3.0, f=1.0, phi=lambda x, y: x)
    u = prob.phi + GridFunction(g, np.where(g.boundary_mask, 0.0, rng.normal(size=g.shape)))
    expected = modular_grad(corner_gradients(u), prob.p) - functional_f(prob.f, u - prob.phi)
    assert functional_F(u, prob) == pytest.approx(expected, rel=1e-14)


def test_delta_is_exact_increment(rng):
    g = Grid(9, 9)
    prob = DirichletProblem.build(g, variable_p(g), q=1.0, f=1.0)
    obj = DiscreteEnergy(prob)
    x = rng.normal(size=g.n_interior)
    dx = 1e-9 * rng.normal(size=g.n_interior)
    d = obj.delta(x, dx)
    J0, _, G = obj.value_grad(x)
    assert d == pytest.approx(float(G @ dx), rel=1e-6)
    big = rng.normal(size=g.n_interior)
    assert obj.delta(x, big) == pytest.approx(obj.value_grad(x + big)[0] - J0, rel=1e-10)
