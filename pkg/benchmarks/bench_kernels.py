"""Compare the compiled and numpy energy kernels.

    python benchmarks/bench_kernels.py [--sizes 33 65 129 257] [--repeat 5]

Prints the best-of-``repeat`` time per call for ``energy_grad`` and
``energy_delta``, the speed-up, and the largest disagreement between the
two backends, followed by one full solve per backend.
"""

import argparse
import time
import timeit

import numpy as np

from varplap import _kernels
from varplap.discretization import DirichletProblem
from varplap.fields import Grid
from varplap.solver import SolverConfig, minimize


def _inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    g = Grid(n, n)
    x, y = g.nodes()
    u = np.sin(3 * x) * np.cos(2 * y) + 0.1 * rng.normal(size=g.shape)
    du = 1e-3 * rng.normal(size=g.shape)
    p = 1.5 + 2.0 * rng.uniform(size=g.cell_shape)
    q = 1.0 + x
    f = np.ones(g.shape)
    return g, u, du, p, q, f


def bench(sizes, repeat):
    try:
        backends = {"python": _kernels.get_backend("python"), "cython": _kernels.get_backend("cython")}
    except ImportError:
        print("compiled kernels are not built; only the numpy backend is available")
        backends = {"python": _kernels.get_backend("python")}
    print(f"{'n':>5} {'kernel':>13} " + " ".join(f"{b:>12}" for b in backends)
          + f" {'speed-up':>9} {'max |diff|':>11}")
    for n in sizes:
        g, u, du, p, q, f = _inputs(n)
        calls = {
            "energy_grad": lambda k: k.energy_grad(u, p, q, f, g.hx, g.hy, 1e-8),
            "energy_delta": lambda k: k.energy_delta(u, du, p, q, f, g.hx, g.hy, 1e-8),
        }
        for name, call in calls.items():
            times, outs = {}, {}
            for b, k in backends.items():
                number = max(1, int(2e5 // (n * n)))
                times[b] = min(timeit.repeat(lambda: call(k), number=number, repeat=repeat)) / number
                outs[b] = call(k)
            diff = 0.0
            if len(outs) == 2:
                for a, c in zip(outs["python"], outs["cython"]):
                    diff = max(diff, float(np.max(np.abs(np.asarray(a) - np.asarray(c)))))
            sp = times["python"] / times["cython"] if "cython" in times else float("nan")
            print(f"{n:>5} {name:>13} " + " ".join(f"{times[b] * 1e3:>10.3f}ms" for b in backends)
                  + f" {sp:>8.1f}x {diff:>11.2e}")

    prob = DirichletProblem.build(Grid(65, 65), lambda x, y: 2 + 0.5 * np.sin(np.pi * x), f=1.0)
    for b in backends:
        t0 = time.perf_counter()
        rep = minimize(prob, SolverConfig(backend=b))
        print(f"solve 65x65 variable p [{b}]: {time.perf_counter() - t0:.3f}s, "
              f"{rep.iterations} iterations, energy {rep.final_energy:.15g}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[33, 65, 129, 257])
    ap.add_argument("--repeat", type=int, default=5)
    a = ap.parse_args()
    bench(a.sizes, a.repeat)
