"""Vectorised numpy kernels for the discrete energy (pure-Python fallback).

Each cell contributes at its four corners with weight ``area / 4``.  The
gradient at a corner is built from the two cell edges that meet there, and
the cell's exponent is used at all four corners.
"""

import numpy as np


class NumericalError(FloatingPointError):
    """Non-finite energy or flux; ``cell`` is the first offending cell index."""

    def __init__(self, msg, cell):
        super().__init__(f"{msg} at cell {cell}")
        self.cell = cell


def _edges(u, hx, hy):
    dxb = (u[1:, :-1] - u[:-1, :-1]) / hx
    dxt = (u[1:, 1:] - u[:-1, 1:]) / hx
    dyl = (u[:-1, 1:] - u[:-1, :-1]) / hy
    dyr = (u[1:, 1:] - u[1:, :-1]) / hy
    return dxb, dxt, dyl, dyr


def _corner_grads(u, hx, hy):
    dxb, dxt, dyl, dyr = _edges(u, hx, hy)
    gx = np.stack([dxb, dxb, dxt, dxt])
    gy = np.stack([dyl, dyr, dyl, dyr])
    return gx, gy


def _corner_nodes(a):
    return np.stack([a[:-1, :-1], a[1:, :-1], a[:-1, 1:], a[1:, 1:]])


def _first_bad(*arrays):
    bad = np.zeros(arrays[0].shape[-2:], dtype=bool)
    for a in arrays:
        a = a.reshape((-1,) + a.shape[-2:])
        bad |= ~np.all(np.isfinite(a), axis=0)
    idx = np.argwhere(bad)
    return tuple(int(i) for i in idx[0]) if idx.size else None


def energy_grad(u, p, q, f, hx, hy, eps):
    """Return ``(e_grad, e_mass, e_load, grad)``.

    The energy is ``e_grad + e_mass - e_load`` and ``grad`` is its derivative
    with respect to every nodal value (boundary rows included).
    """
    area = hx * hy
    w = 0.25 * area
    gx, gy = _corner_grads(u, hx, hy)
    uc, qc = _corner_nodes(u), _corner_nodes(q)
    # overflow is detected below and reported with the cell index
    with np.errstate(all="ignore"):
        a = gx * gx + gy * gy + eps * eps
        e_cells = a ** (0.5 * p) / p
        s = np.where(a > 0, a ** (0.5 * p - 1.0), 0.0)
        fx, fy = s * gx, s * gy
        au = np.abs(uc)
        m_cells = qc * au**p / p
        dm = qc * np.sign(uc) * au ** (p - 1.0)
    bad = _first_bad(e_cells, fx, fy, m_cells, dm)
    if bad is not None:
        raise NumericalError("non-finite energy term", bad)

    e_grad = w * float(e_cells.sum())
    e_mass = w * float(m_cells.sum())

    grad = np.zeros_like(u)
    bx = w / hx * (fx[0] + fx[1])
    tx = w / hx * (fx[2] + fx[3])
    ly = w / hy * (fy[0] + fy[2])
    ry = w / hy * (fy[1] + fy[3])
    grad[1:, :-1] += bx
    grad[:-1, :-1] -= bx
    grad[1:, 1:] += tx
    grad[:-1, 1:] -= tx
    grad[:-1, 1:] += ly
    grad[:-1, :-1] -= ly
    grad[1:, 1:] += ry
    grad[1:, :-1] -= ry

    dm = w * dm
    grad[:-1, :-1] += dm[0]
    grad[1:, :-1] += dm[1]
    grad[:-1, 1:] += dm[2]
    grad[1:, 1:] += dm[3]

    nw = _node_weights(u.shape, area)
    e_load = float(np.sum(nw * f * u))
    grad -= nw * f
    return e_grad, e_mass, e_load, grad


def _node_weights(shape, area):
    cnt = np.zeros(shape)
    cnt[:-1, :-1] += 1
    cnt[1:, :-1] += 1
    cnt[:-1, 1:] += 1
    cnt[1:, 1:] += 1
    return 0.25 * area * cnt


def _power_delta(a, da, p):
    """``(a + da)^(p/2) - a^(p/2)`` without cancellation."""
    with np.errstate(all="ignore"):
        b = a + da
        rel = np.maximum(np.where(a > 0, da / np.where(a > 0, a, 1.0), 0.0), -1.0)
        small = a ** (0.5 * p) * np.expm1(0.5 * p * np.log1p(rel))
        return np.where(a > 0, small, np.maximum(b, 0.0) ** (0.5 * p))


def energy_delta(u, du, p, q, f, hx, hy, eps):
    """Return ``(d_grad, d_mass, d_load)``, the exact increments of the three
    energy parts between ``u`` and ``u + du``, computed term by term."""
    area = hx * hy
    w = 0.25 * area
    gx, gy = _corner_grads(u, hx, hy)
    dgx, dgy = _corner_grads(du, hx, hy)
    a = gx * gx + gy * gy + eps * eps
    da = dgx * (2 * gx + dgx) + dgy * (2 * gy + dgy)
    d_cells = _power_delta(a, da, p) / p

    uc, qc, duc = _corner_nodes(u), _corner_nodes(q), _corner_nodes(du)
    au = uc * uc
    dau = duc * (2 * uc + duc)
    m_cells = qc * _power_delta(au, dau, p) / p
    bad = _first_bad(d_cells, m_cells)
    if bad is not None:
        raise NumericalError("non-finite energy increment", bad)

    nw = _node_weights(u.shape, area)
    return (w * float(d_cells.sum()), w * float(m_cells.sum()),
            float(np.sum(nw * f * du)))
