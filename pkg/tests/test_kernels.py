import os
import subprocess
import sys

import numpy as np
import pytest

from varplap import _kernels
from varplap.discretization import DirichletProblem
from varplap.fields import Grid
from varplap.solver import SolverConfig, minimize

try:
    CY = _kernels.get_backend("cython")
except ImportError:   # extension not built
    CY = None
PY = _kernels.get_backend("python")
needs_cython = pytest.mark.skipif(CY is None, reason="compiled kernels not built")


def inputs(seed, n=13, m=9, q_zero=False):
    rng = np.random.default_rng(seed)
    u = rng.normal(size=(n, m))
    du = rng.normal(size=(n, m)) * rng.choice([1e-8, 1.0])
    p = rng.uniform(1.2, 5.0, (n - 1, m - 1))
    q = np.zeros((n, m)) if q_zero else rng.uniform(0, 2, (n, m))
    u[3, 4] = 0.0    # exercise the |u| = 0 branch
    return u, du, p, q, rng.normal(size=(n, m)), 0.7, 0.3


@needs_cython
@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("eps", [0.0, 1e-8])
def test_energy_grad_agrees(seed, eps):
    u, _, p, q, f, hx, hy = inputs(seed, q_zero=seed % 3 == 0)
    a = PY.energy_grad(u, p, q, f, hx, hy, eps)
    b = CY.energy_grad(u, p, q, f, hx, hy, eps)
    for x, y in zip(a[:3], b[:3]):
        assert x == pytest.approx(y, rel=1e-12, abs=1e-300)
    assert np.allclose(a[3], b[3], rtol=1e-11, atol=1e-12 * np.abs(a[3]).max())


@needs_cython
@pytest.mark.parametrize("seed", range(6))
def test_energy_delta_agrees(seed):
    u, du, p, q, f, hx, hy = inputs(seed, q_zero=seed % 2 == 0)
    a = PY.energy_delta(u, du, p, q, f, hx, hy, 1e-8)
    b = CY.energy_delta(u, du, p, q, f, hx, hy, 1e-8)
    for x, y in zip(a, b):
        assert x == pytest.approx(y, rel=1e-11, abs=1e-14)


@needs_cython
def test_both_backends_raise_on_overflow():
    u = np.zeros((4, 4))
    u[1, 1] = 1e200
    args = (np.full((3, 3), 4.0), np.zeros((4, 4)), np.zeros((4, 4)), 0.5, 0.5, 0.0)
    for k in (PY, CY):
        with pytest.raises(_kernels.NumericalError):
            k.energy_grad(u, *args)


@needs_cython
def test_solver_identical_across_backends():
    g = Grid(17, 17)
    prob = DirichletProblem.build(g, lambda x, y: 1.7 + x, q=1.0, f=1.0)
    a = minimize(prob, SolverConfig(backend="python"))
    b = minimize(prob, SolverConfig(backend="cython"))
    assert a.iterations == b.iterations
    assert np.abs(a.u_final.values - b.u_final.values).max() < 1e-12


def test_pure_fallback_selected_by_environment():
    env = dict(os.environ, VARPLAP_PURE="1")
    r = subprocess.run([sys.executable, "-c", "import varplap._kernels as k; print(k.BACKEND)"],
                       capture_output=True, text=True, env=env)
    assert r.stdout.strip() == "python"


def test_unknown_backend():
    with pytest.raises(ValueError):
        _kernels.get_backend("fortran")
