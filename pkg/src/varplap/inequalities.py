"""Clarkson-type inequalities, the monotonicity identity and its consequences.

Every check returns a :class:`MarginReport` with ``margin = rhs - lhs``; a
true inequality has ``margin >= 0`` up to rounding.  The array helpers
(``*_lr``) evaluate both sides elementwise and drive the randomized scans.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

SCAN_TOL = 1e-12


class DegenerateInputError(ValueError):
    """Input sits on a pole of the inequality (e.g. ``|a| + |b| = 0``)."""


class DomainError(ValueError):
    """Exponent outside the range where the inequality is stated."""


@dataclass
class MarginReport:
    lhs: float
    rhs: float
    inputs: dict = field(default_factory=dict)
    margin: float = field(init=False)

    def __post_init__(self):
        self.margin = self.rhs - self.lhs

    def holds(self, tol: float = SCAN_TOL, scale: float | None = None) -> bool:
        s = max(abs(self.rhs), 1.0) if scale is None else scale
        return self.margin >= -tol * s


def low_constant(p):
    """``p (p - 1) / 2^(p + 1)``."""
    return p * (p - 1) / 2.0 ** (p + 1)


# ---------------------------------------------------------------- array forms

def scalar_low_lr(a, b, p, const_scale=1.0):
    a, b, p = np.asarray(a, float), np.asarray(b, float), np.asarray(p, float)
    lhs = (np.abs((a + b) / 2) ** p
           + const_scale * low_constant(p) * (a - b) ** 2 / (np.abs(a) + np.abs(b)) ** (2 - p))
    rhs = 0.5 * (np.abs(a) ** p + np.abs(b) ** p)
    return lhs, rhs


def scalar_high_lr(a, b, p):
    a, b, p = np.asarray(a, float), np.asarray(b, float), np.asarray(p, float)
    lhs = np.abs((a + b) / 2) ** p + np.abs((a - b) / 2) ** p
    rhs = 0.5 * (np.abs(a) ** p + np.abs(b) ** p)
    return lhs, rhs


def complex_lr(z1, z2, p, const_scale=1.0):
    """Both sides of the complex inequality; the low form is used for ``p <= 2``."""
    z1, z2, p = np.asarray(z1, complex), np.asarray(z2, complex), np.asarray(p, float)
    r1, r2 = np.abs(z1), np.abs(z2)
    mean = np.abs((z1 + z2) / 2) ** p
    with np.errstate(divide="ignore", invalid="ignore"):
        low = (mean + const_scale * low_constant(p) * np.abs(z1 - z2) ** 2
               / (r1**2 + r2**2) ** ((2 - p) / 2))
    high = mean + np.abs((z1 - z2) / 2) ** p
    lhs = np.where(p <= 2, low, high)
    rhs = 0.5 * (r1**p + r2**p)
    return lhs, rhs


def vector_lr(u, v, p, const_scale=1.0):
    """Both sides of the Hilbert-space inequality; ``u, v`` have shape ``(..., d)``."""
    u, v, p = np.asarray(u, float), np.asarray(v, float), np.asarray(p, float)
    nu, nv = np.linalg.norm(u, axis=-1), np.linalg.norm(v, axis=-1)
    mean = np.linalg.norm((u + v) / 2, axis=-1) ** p
    diff = np.linalg.norm(u - v, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        low = mean + const_scale * low_constant(p) * diff**2 / (nu + nv) ** (2 - p)
    high = mean + (diff / 2) ** p
    lhs = np.where(p <= 2, low, high)
    rhs = 0.5 * (nu**p + nv**p)
    return lhs, rhs


def _duality_map(u, nu, p):
    """``|u|^(p-2) u`` with the zero vector at ``u = 0``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(nu > 0, nu ** (p - 2), 0.0)
    return w[..., None] * u


def monotone_pairing(u, v, p):
    """``(|u|^(p-2) u - |v|^(p-2) v) . (u - v)``."""
    u, v, p = np.asarray(u, float), np.asarray(v, float), np.asarray(p, float)
    nu, nv = np.linalg.norm(u, axis=-1), np.linalg.norm(v, axis=-1)
    return np.sum((_duality_map(u, nu, p) - _duality_map(v, nv, p)) * (u - v), axis=-1)


def identity_lr(u, v, p):
    u, v, p = np.asarray(u, float), np.asarray(v, float), np.asarray(p, float)
    nu, nv = np.linalg.norm(u, axis=-1), np.linalg.norm(v, axis=-1)
    lhs = monotone_pairing(u, v, p)
    au, av = nu ** (p - 2), nv ** (p - 2)
    rhs = 0.5 * (au - av) * (nu**2 - nv**2) + 0.5 * (au + av) * np.sum((u - v) ** 2, axis=-1)
    return lhs, rhs


def uniqueness_high_lr(u, v, p, gamma):
    lhs = np.linalg.norm(np.asarray(u, float) - np.asarray(v, float), axis=-1) ** p
    return lhs, gamma * monotone_pairing(u, v, p)


def uniqueness_low_lr(u, v, p):
    u, v, p = np.asarray(u, float), np.asarray(v, float), np.asarray(p, float)
    nu2, nv2 = np.sum(u**2, axis=-1), np.sum(v**2, axis=-1)
    lhs = (p - 1) * np.sum((u - v) ** 2, axis=-1) * (1 + nu2 + nv2) ** ((p - 2) / 2)
    return lhs, monotone_pairing(u, v, p)


# ------------------------------------------------------------- single checks

def _vec(x):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise ValueError("expected a 1-D vector")
    return x


def clarkson_scalar_low(a: float, b: float, p: float, const_scale: float = 1.0) -> MarginReport:
    if not 1 < p <= 2:
        raise DomainError(f"need 1 < p <= 2, got {p}")
    if abs(a) + abs(b) == 0:
        raise DegenerateInputError("|a| + |b| = 0")
    lhs, rhs = scalar_low_lr(a, b, p, const_scale)
    return MarginReport(float(lhs), float(rhs), dict(a=a, b=b, p=p))


def clarkson_scalar_high(a: float, b: float, p: float) -> MarginReport:
    if p < 2:
        raise DomainError(f"need p >= 2, got {p}")
    lhs, rhs = scalar_high_lr(a, b, p)
    return MarginReport(float(lhs), float(rhs), dict(a=a, b=b, p=p))


def clarkson_complex(z1: complex, z2: complex, p: float, const_scale: float = 1.0) -> MarginReport:
    """Complex form; for ``1 < p <= 2`` the correction term is divided by
    ``(|z1|^2 + |z2|^2)^((2 - p)/2)``."""
    if p <= 1:
        raise DomainError(f"need p > 1, got {p}")
    if p <= 2 and abs(z1) ** 2 + abs(z2) ** 2 == 0:
        raise DegenerateInputError("|z1|^2 + |z2|^2 = 0")
    lhs, rhs = complex_lr(z1, z2, p, const_scale)
    return MarginReport(float(lhs), float(rhs), dict(z1=complex(z1), z2=complex(z2), p=p))


def clarkson_vector(u, v, p: float, const_scale: float = 1.0) -> MarginReport:
    u, v = _vec(u), _vec(v)
    if u.shape != v.shape:
        raise ValueError("u and v must have the same dimension")
    if p < 1:
        raise DomainError(f"need p >= 1, got {p}")
    if p <= 2 and np.linalg.norm(u) + np.linalg.norm(v) == 0:
        raise DegenerateInputError("||u|| + ||v|| = 0")
    lhs, rhs = vector_lr(u, v, p, const_scale)
    return MarginReport(float(lhs), float(rhs), dict(u=u.tolist(), v=v.tolist(), p=p))


def bound_estimate_g(p: float) -> float:
    """``(p - 1)^(2 / (2 - p))`` on ``[1, 2)``; increases from 0 towards ``e^-2``."""
    if not 1 <= p < 2:
        raise DomainError(f"need 1 <= p < 2, got {p}")
    if p == 1:
        return 0.0
    # log1p keeps precision as p -> 2
    return math.exp(2.0 / (2.0 - p) * math.log1p(p - 2.0))


def monotonicity_identity(u, v, p: float) -> tuple[float, float]:
    u, v = _vec(u), _vec(v)
    if p < 2 and (not np.any(u) or not np.any(v)):
        raise DegenerateInputError("|u|^(p-2) is singular at 0 for p < 2")
    lhs, rhs = identity_lr(u, v, p)
    return float(lhs), float(rhs)


def uniqueness_high(u, v, p: float, gamma: float) -> MarginReport:
    if p < 2:
        raise DomainError(f"need p >= 2, got {p}")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    u, v = _vec(u), _vec(v)
    lhs, rhs = uniqueness_high_lr(u, v, p, gamma)
    return MarginReport(float(lhs), float(rhs), dict(u=u.tolist(), v=v.tolist(), p=p, gamma=gamma))


def uniqueness_low(u, v, p: float) -> MarginReport:
    if not 1 < p <= 2:
        raise DomainError(f"need 1 < p <= 2, got {p}")
    u, v = _vec(u), _vec(v)
    lhs, rhs = uniqueness_low_lr(u, v, p)
    return MarginReport(float(lhs), float(rhs), dict(u=u.tolist(), v=v.tolist(), p=p))


def nominal_gamma(p: float) -> float:
    """The nominal constant: 2 on ``[2, 3)`` and ``2^(2 - p)`` beyond."""
    return 2.0 if p < 3 else 2.0 ** (2 - p)


def collinear_gamma(p: float) -> float:
    """Ratio at ``v = -u``, i.e. ``2^(p - 2)``."""
    return 2.0 ** (p - 2)


def calibrate_gamma(p: float, samples: int = 10**4, seed: int = 0, dim: int = 2,
                    n_sweep: int = 20001) -> float:
    """Smallest ``gamma`` with ``|u - v|^p <= gamma * pairing`` on the sample.

    The sample is ``samples`` random pairs in ``R^dim`` together with the
    collinear sweep ``v = t u``, ``t in [-1, 1)``.
    """
    if p < 2:
        raise DomainError(f"need p >= 2, got {p}")
    rng = np.random.default_rng(seed)
    u = rng.normal(size=(samples, dim))
    v = rng.normal(size=(samples, dim))
    t = np.linspace(-1.0, 1.0, n_sweep)[:-1]
    e = np.zeros(dim)
    e[0] = 1.0
    u = np.concatenate([u, np.broadcast_to(e, (t.size, dim))])
    v = np.concatenate([v, t[:, None] * e])
    num, den = uniqueness_high_lr(u, v, p, 1.0)
    ok = den > 0
    return float(np.max(num[ok] / den[ok]))


# ---------------------------------------------------------------- scan harness

@dataclass
class ScanResult:
    name: str
    n: int
    worst_margin: float      # min over samples of margin / scale
    argmin: dict[str, Any]
    tol: float = SCAN_TOL
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = bool(self.worst_margin >= -self.tol)

    def to_dict(self):
        return dict(name=self.name, n=self.n, worst_margin=self.worst_margin,
                    argmin=self.argmin, threshold=-self.tol, passed=self.passed)


def _pairs(rng, n, d):
    """Uniform pairs on ``[-10, 10]^d`` with a share of near-boundary pairs."""
    u = rng.uniform(-10, 10, (n, d))
    v = rng.uniform(-10, 10, (n, d))
    k = n // 10
    if k:
        # v close to u, v close to -u, both tiny
        v[:k] = u[:k] * (1 + rng.uniform(-1e-6, 1e-6, (k, 1)))
        v[k:2 * k] = -u[k:2 * k] * (1 + rng.uniform(-1e-6, 1e-6, (k, 1)))
        u[2 * k:3 * k] *= 1e-8
        v[2 * k:3 * k] *= 1e-8
    return u, v


def _vector_pairs(rng, n, d_max=8):
    """Pairs in R^d with ``d`` drawn per sample from ``1..d_max``; vectors are
    stored zero-padded to ``d_max`` components (norms are unaffected)."""
    u, v = _pairs(rng, n, d_max)
    d = rng.integers(1, d_max + 1, n)
    live = np.arange(d_max) < d[:, None]
    return u * live, v * live, d


def _p_values(rng, n, lo, hi, p_grid, lo_open=True):
    if p_grid is not None:
        g = np.asarray([q for q in p_grid if (q > lo if lo_open else q >= lo) and q <= hi])
        if g.size:
            return rng.choice(g, n)
    p = rng.uniform(lo, hi, n)
    if lo_open:
        p = np.where(p <= lo, np.nextafter(lo, np.inf), p)
    return p


def _targeted(name):
    """Equality and boundary configurations checked in every scan."""
    one = np.array([1.0])
    if name in ("scalar_low", "scalar_high"):
        a = np.array([1.0, 1.0, 2.0, 1.0, -3.0, 1e-300])
        b = np.array([1.0, -1.0, 0.0, 0.0, 3.0, 0.0])
        return a, b
    return one, one


def _scan_shard(name, n, seed, p_grid, const_scale):
    rng = np.random.default_rng(seed)
    if name == "scalar_low":
        a, b = _pairs(rng, n, 1)
        a, b = a[:, 0], b[:, 0]
        ta, tb = _targeted(name)
        a, b = np.concatenate([a, ta]), np.concatenate([b, tb])
        p = _p_values(rng, a.size, 1.0, 2.0, p_grid)
        keep = np.abs(a) + np.abs(b) > 0
        a, b, p = a[keep], b[keep], p[keep]
        lhs, rhs = scalar_low_lr(a, b, p, const_scale)
        scale = np.maximum(rhs, 1.0)
        inputs = dict(a=a, b=b, p=p)
    elif name == "scalar_high":
        a, b = _pairs(rng, n, 1)
        ta, tb = _targeted(name)
        a, b = np.concatenate([a[:, 0], ta]), np.concatenate([b[:, 0], tb])
        p = _p_values(rng, a.size, 2.0, 10.0, p_grid, lo_open=False)
        lhs, rhs = scalar_high_lr(a, b, p)
        scale = np.maximum(rhs, 1.0)
        inputs = dict(a=a, b=b, p=p)
    elif name in ("complex_low", "complex_high"):
        u, v = _pairs(rng, n, 2)
        # theta = 0 ray, r spread over decades
        r = np.geomspace(1e-3, 1e3, 61)
        u = np.concatenate([u, np.tile([1.0, 0.0], (r.size, 1))])
        v = np.concatenate([v, np.stack([r, np.zeros_like(r)], axis=1)])
        z1, z2 = u[:, 0] + 1j * u[:, 1], v[:, 0] + 1j * v[:, 1]
        if name == "complex_low":
            p = _p_values(rng, z1.size, 1.0, 2.0, p_grid)
        else:
            p = _p_values(rng, z1.size, 2.0, 10.0, p_grid, lo_open=False)
        keep = np.abs(z1) ** 2 + np.abs(z2) ** 2 > 0
        z1, z2, p = z1[keep], z2[keep], p[keep]
        lhs, rhs = complex_lr(z1, z2, p, const_scale)
        scale = np.maximum(rhs, 1.0)
        inputs = dict(z1=z1, z2=z2, p=p)
    elif name in ("vector_low", "vector_high"):
        u, v, d = _vector_pairs(rng, n)
        if name == "vector_low":
            p = _p_values(rng, n, 1.0, 2.0, p_grid, lo_open=False)
        else:
            p = _p_values(rng, n, 2.0, 6.0, p_grid, lo_open=False)
        keep = np.linalg.norm(u, axis=1) + np.linalg.norm(v, axis=1) > 0
        u, v, p = u[keep], v[keep], p[keep]
        lhs, rhs = vector_lr(u, v, p, const_scale)
        scale = np.maximum(rhs, 1.0)
        inputs = dict(u=u, v=v, p=p, d=d[keep])
    elif name == "uniqueness_low":
        u, v, d = _vector_pairs(rng, n)
        p = _p_values(rng, n, 1.0, 2.0, p_grid)
        lhs, rhs = uniqueness_low_lr(u, v, p)
        scale = np.maximum(np.abs(rhs), 1.0)
        inputs = dict(u=u, v=v, p=p, d=d)
    elif name == "uniqueness_high":
        u, v, d = _vector_pairs(rng, n)
        p = _p_values(rng, n, 2.0, 3.0, p_grid, lo_open=False)
        p = np.where(p >= 3.0, np.nextafter(3.0, 0), p)
        lhs, rhs = uniqueness_high_lr(u, v, p, 2.0)
        scale = np.maximum(np.abs(rhs), 1.0)
        inputs = dict(u=u, v=v, p=p, d=d)
    elif name == "identity":
        u, v, d = _vector_pairs(rng, n)
        p = _p_values(rng, n, 1.0, 6.0, p_grid)
        lhs, rhs = identity_lr(u, v, p)
        # equality: margin is minus the relative discrepancy
        scale = np.maximum(np.abs(lhs), 1.0)
        lhs, rhs = np.abs(lhs - rhs), np.zeros_like(lhs)
        inputs = dict(u=u, v=v, p=p, d=d)
    else:
        raise KeyError(name)
    m = (rhs - lhs) / scale
    m = np.where(np.isnan(m), -np.inf, m)
    i = int(np.argmin(m))
    arg = {k: _jsonable(val[i]) for k, val in inputs.items()}
    return float(m[i]), arg, int(m.size)


def _jsonable(x):
    x = np.asarray(x)
    if np.iscomplexobj(x):
        return [float(x.real), float(x.imag)] if x.ndim == 0 else [[float(c.real), float(c.imag)] for c in x]
    return x.tolist()


SCAN_NAMES = ("scalar_low", "scalar_high", "complex_low", "complex_high",
              "vector_low", "vector_high", "uniqueness_low", "uniqueness_high",
              "identity")
SHARD = 25_000


def scan(name: str, n: int, seed: int = 0, p_grid=None, const_scale: float = 1.0,
         threads: int = 1, tol: float = SCAN_TOL) -> ScanResult:
    """Randomized scan of one inequality over ``n`` samples (+ targeted cases).

    Samples are generated in fixed-size shards whose seeds are spawned from
    ``seed``, so the result does not depend on ``threads``.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    sizes = [SHARD] * (n // SHARD) + ([n % SHARD] if n % SHARD else [])
    key = SCAN_NAMES.index(name) if name in SCAN_NAMES else 0
    seeds = np.random.SeedSequence([seed, key]).spawn(len(sizes))
    args = [(name, s, ss, p_grid, const_scale) for s, ss in zip(sizes, seeds)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(lambda a: _scan_shard(*a), args))
    else:
        parts = [_scan_shard(*a) for a in args]
    worst = min(parts, key=lambda t: t[0])
    return ScanResult(name, sum(t[2] for t in parts), worst[0], worst[1], tol)


def scan_all(n: int, seed: int = 0, p_grid=None, const_scale: float = 1.0,
             threads: int = 1, names=SCAN_NAMES) -> list[ScanResult]:
    return [scan(k, n, seed, p_grid, const_scale, threads) for k in names]
