import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import random_field, variable_p
from varplap.fields import (CellVectorField, ExponentError, ExponentField, Grid,
                            GridFunction, GridMismatchError)
from varplap.modular import (IterationLimitError, NotApplicableError, check_modular_axioms,
                             check_norm_modular_inequality, luxemburg_norm,
                             luxemburg_norm_grad, modular, modular_grad, modular_raw,
                             modular_weighted)

G5 = Grid(5, 5)
finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
nodal = arrays(float, G5.shape, elements=finite)
exps = arrays(float, G5.cell_shape, elements=st.floats(1.05, 6.0))


# ------------------------------------------------------------------ fields

def test_grid_geometry():
    g = Grid(5, 3, 2.0, 1.0)
    assert g.hx == 0.5 and g.hy == 0.5
    assert g.n_cells == 8 and g.cell_shape == (4, 2)
    m = g.boundary_mask
    assert m.sum() == 5 * 3 - 3 and not m[1:-1, 1:-1].any()
    assert np.isclose(g.node_weights().sum(), 2.0)


def test_grid_dirichlet_x_marks_only_x_sides():
    m = Grid(6, 2, dirichlet="x").boundary_mask
    assert m[0].all() and m[-1].all() and not m[1:-1].any()


@pytest.mark.parametrize("bad", [dict(nx=1, ny=3), dict(nx=3, ny=3, lx=0.0),
                                 dict(nx=3, ny=3, dirichlet="y")])
def test_grid_rejects(bad):
    with pytest.raises(ValueError):
        Grid(**bad)


@pytest.mark.parametrize("vals", [1.0, 0.5, np.inf, np.nan])
def test_exponent_invariants(vals):
    v = np.full((2, 2), 2.0)
    v[0, 1] = vals
    with pytest.raises(ExponentError):
        ExponentField(v)


def test_exponent_extremes():
    p = ExponentField(np.array([[1.5, 3.0], [2.0, 2.5]]))
    assert (p.p_minus, p.p_plus) == (1.5, 3.0) and not p.is_constant


def test_gridfunction_immutable_and_checked():
    u = GridFunction.constant(G5, 1.0)
    with pytest.raises(ValueError):
        u.values[0, 0] = 3.0
    with pytest.raises(GridMismatchError):
        u + GridFunction.zeros(Grid(4, 4))
    with pytest.raises(GridMismatchError):
        GridFunction(G5, np.zeros((3, 3)))


def test_cell_vector_norm_is_euclidean():
    g = CellVectorField.constant(G5, [3.0, 4.0, 12.0])
    assert np.all(g.norms() == 13.0) and g.dim == 3


# ------------------------------------------------------------------ modulars

def test_modular_examples():
    g = Grid(11, 11)
    p2 = ExponentField.constant(g, 2.0)
    assert modular_raw(GridFunction.zeros(g), variable_p(g)) == 0.0
    assert modular_raw(GridFunction.constant(g, 2.0), p2) == pytest.approx(4.0, rel=1e-14)
    assert modular_weighted(GridFunction.constant(g, 2.0), p2) == pytest.approx(2.0, rel=1e-14)


def test_modular_raw_x_squared_converges_to_one_third():
    errs = []
    for n in (17, 33, 65, 129):
        g = Grid(n, n)
        u = GridFunction.from_function(g, lambda x, y: x)
        errs.append(abs(modular_raw(u, ExponentField.constant(g, 2.0)) - 1 / 3))
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(np.abs(rates - 2) < 0.1)
    assert errs[-1] < 2e-5


def test_modular_weighted_variable_p_matches_refined_quadrature():
    fn = lambda x, y: 2 + np.sin(np.pi * x)   # noqa: E731

    def value(n):
        g = Grid(n, 2)
        return modular_weighted(GridFunction.constant(g, 1.0), ExponentField.from_function(g, fn))

    coarse, fine = value(513), value(5121)
    assert abs(coarse - fine) / fine < 1e-6


def test_modular_grad_examples():
    g = Grid(7, 7)
    assert modular_grad(CellVectorField.constant(g, [0.0, 0.0]), variable_p(g)) == 0.0
    assert modular_grad(CellVectorField.constant(g, [1.0, 0.0]),
                        ExponentField.constant(g, 2.0)) == pytest.approx(0.5, rel=1e-14)
    assert modular_grad(CellVectorField.constant(g, [3.0, 4.0]),
                        ExponentField.constant(g, 3.0)) == pytest.approx(125 / 3, rel=1e-14)
    assert modular_grad(CellVectorField.constant(g, [3.0, 4.0]), ExponentField.constant(g, 3.0),
                        weighted=False) == pytest.approx(125.0, rel=1e-14)


def test_modular_grad_subset_additivity(rng):
    g = Grid(9, 9)
    vf = CellVectorField(g, rng.normal(size=g.cell_shape + (4, 2)))
    p = variable_p(g, rng=rng)
    A = rng.uniform(size=g.cell_shape) < 0.4
    total = modular_grad(vf, p)
    parts = modular_grad(vf, p, subset=A) + modular_grad(vf, p, subset=~A)
    assert parts == pytest.approx(total, rel=1e-14)


def test_grid_mismatch_raises():
    with pytest.raises(GridMismatchError):
        modular_raw(GridFunction.zeros(Grid(4, 4)), ExponentField.constant(G5, 2.0))


# ------------------------------------------------------------------ Luxemburg

def test_luxemburg_examples():
    g = Grid(17, 17)
    assert luxemburg_norm(GridFunction.zeros(g), variable_p(g)) == 0.0
    one = GridFunction.constant(g, 1.0)
    assert luxemburg_norm(one, ExponentField.constant(g, 2.0), weighted=False) == pytest.approx(1.0, abs=1e-12)


def test_luxemburg_constant_p_is_lp_norm():
    ests = []
    for n in (65, 257):
        g = Grid(n, n)
        u = GridFunction.from_function(g, lambda x, y: x)
        p3 = ExponentField.constant(g, 3.0)
        nrm = luxemburg_norm(u, p3, weighted=False)
        # exact for the discrete modular; the quadrature approaches (1/4)^(1/3)
        assert nrm == pytest.approx(modular_raw(u, p3) ** (1 / 3), rel=1e-11)
        ests.append(abs(nrm - 0.25 ** (1 / 3)))
    assert ests[1] < ests[0] / 10 and ests[1] < 1e-5


def test_luxemburg_iteration_limit_reports_bracket():
    g = Grid(9, 9)
    u = GridFunction.from_function(g, lambda x, y: 1 + 3 * x * y)
    with pytest.raises(IterationLimitError) as exc:
        luxemburg_norm(u, variable_p(g), max_iter=2)
    lo, hi = exc.value.bracket
    assert lo < hi


def test_luxemburg_of_gradient_scales_with_field(unit_grid, rng):
    vf = CellVectorField(unit_grid, rng.normal(size=unit_grid.cell_shape + (2,)))
    p = variable_p(unit_grid, rng=rng)
    n1 = luxemburg_norm_grad(vf, p)
    n3 = luxemburg_norm_grad(CellVectorField(unit_grid, 3 * vf.values), p)
    assert n3 == pytest.approx(3 * n1, rel=1e-10)


# ---------------------------------------------------------- axioms / properties

def test_axioms_zero_sample_passes():
    rep = check_modular_axioms([GridFunction.zeros(G5)], ExponentField.constant(G5, 2.0))
    assert rep.passed and rep.symmetry_margin == 0 and rep.convexity_margin == 0


@given(nodal, exps)
def test_symmetry_is_exact(u, p):
    a = GridFunction(G5, u)
    assert modular_raw(-a, ExponentField(p)) == modular_raw(a, ExponentField(p))


@given(nodal, exps)
def test_zero_iff_zero(u, p):
    val = modular_raw(GridFunction(G5, u), ExponentField(p))
    assert (val == 0.0) == (not np.any(u))


@given(nodal, nodal, exps, st.floats(0, 1))
def test_convexity(u, v, p, a):
    pf = ExponentField(p)
    fu, fv = GridFunction(G5, u), GridFunction(G5, v)
    mix = GridFunction(G5, a * u + (1 - a) * v)
    lhs = modular_raw(mix, pf)
    rhs = a * modular_raw(fu, pf) + (1 - a) * modular_raw(fv, pf)
    assert lhs <= rhs + 1e-12 * max(rhs, 1.0)


@given(nodal, exps, st.floats(1.0, 20.0))
def test_scaling_bounds(u, p, lam):
    pf = ExponentField(p)
    a = GridFunction(G5, u)
    r, rl = modular_raw(a, pf), modular_raw(a * lam, pf)
    assert lam**pf.p_minus * r * (1 - 1e-12) <= rl <= lam**pf.p_plus * r * (1 + 1e-12)


@given(nodal.filter(lambda a: np.abs(a).max() > 1e-3), exps,
       st.floats(0.1, 10), st.floats(1.01, 5))
def test_rho_of_u_over_lambda_strictly_decreasing(u, p, lam, factor):
    pf = ExponentField(p)
    a = GridFunction(G5, u)
    assert modular(a / (lam * factor), pf) < modular(a / lam, pf)


def test_norm_modular_inequality_examples():
    g = Grid(9, 9)
    p2 = ExponentField.constant(g, 2.0)
    assert check_norm_modular_inequality(GridFunction.constant(g, 2.0), p2, weighted=False) == pytest.approx(0.0, abs=1e-10)
    with pytest.raises(NotApplicableError):
        check_norm_modular_inequality(GridFunction.constant(g, 0.1), p2)


@given(nodal.filter(lambda a: np.abs(a).max() > 1e-2), exps, st.booleans())
def test_norm_modular_inequality_property(u, p, weighted):
    pf = ExponentField(p)
    a = GridFunction(G5, u)
    a = a * (1.5 / luxemburg_norm(a, pf, weighted))
    assert check_norm_modular_inequality(a, pf, weighted) >= -1e-10


def test_axioms_random_fields(rng):
    g = Grid(6, 6)
    samples = [random_field(g, rng, 5.0) for _ in range(50)]
    rep = check_modular_axioms(samples, variable_p(g, rng=rng), n_alpha=3, seed=1)
    assert rep.passed and rep.n_pairs == 50 * 5
