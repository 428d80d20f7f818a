import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from varplap.fields import ExponentField, Grid, GridFunction

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def unit_grid():
    return Grid(9, 9)


def random_field(grid, rng, scale=1.0):
    return GridFunction(grid, scale * rng.uniform(-1, 1, grid.shape))


def variable_p(grid, lo=1.3, hi=4.0, rng=None):
    if rng is None:
        return ExponentField.from_function(
            grid, lambda x, y: lo + (hi - lo) * (0.5 + 0.5 * np.sin(2.3 * x + 1.7 * y)))
    return ExponentField(rng.uniform(lo, hi, grid.cell_shape))


def fd_relative_errors(grid, p, n_pairs, seed=0, eps_reg=1e-8, t_rel=1e-5):
    """Relative mismatch between central differences of the energy and the
    first variation along random admissible directions."""
    from varplap.discretization import DirichletProblem
    from varplap.energy import energy, energy_first_variation

    rng = np.random.default_rng(seed)
    errs = []
    for _ in range(n_pairs):
        x, y = grid.nodes()
        a = rng.normal(size=4)
        smooth = a[0] * np.sin(2 * x + a[1]) * np.cos(3 * y + a[2]) + a[3] * x * y
        u = GridFunction(grid, smooth + 0.05 * rng.normal(size=grid.shape))
        prob = DirichletProblem.build(grid, p, q=GridFunction(grid, rng.uniform(0, 2, grid.shape)),
                                      f=GridFunction(grid, rng.normal(size=grid.shape)), phi=u)
        h = np.where(grid.boundary_mask, 0.0, rng.normal(size=grid.shape))
        h *= np.abs(u.values).max() / np.abs(h).max()
        t = t_rel
        up, um = GridFunction(grid, u.values + t * h), GridFunction(grid, u.values - t * h)
        fd = (energy(up, prob, eps_reg) - energy(um, prob, eps_reg)) / (2 * t)
        an = float(np.sum(energy_first_variation(u, prob, eps_reg).values * h))
        errs.append(abs(fd - an) / max(abs(an), 1e-300))
    return np.array(errs)
