# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled cell loops for the discrete energy.

Same contract as :mod:`varplap._kernels._reference`; sums are accumulated
in fixed cell order so results are reproducible run to run.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport pow, fabs, expm1, log1p, isfinite

from ._reference import NumericalError

cnp.import_array()


cdef inline double _pdelta(double a, double da, double p) nogil:
    cdef double r
    if a > 0:
        r = da / a
        if r <= -1.0:
            return -pow(a, 0.5 * p)
        return pow(a, 0.5 * p) * expm1(0.5 * p * log1p(r))
    if a + da > 0:
        return pow(a + da, 0.5 * p)
    return 0.0


def energy_grad(const double[:, ::1] u, const double[:, ::1] p, const double[:, ::1] q,
                const double[:, ::1] f, double hx, double hy, double eps):
    cdef Py_ssize_t nx = u.shape[0], ny = u.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double area = hx * hy, w = 0.25 * hx * hy
    cdef double eps2 = eps * eps
    cdef double pc, dxb, dxt, dyl, dyr, gx, gy, a, s, e, m
    cdef double fx[4]
    cdef double fy[4]
    cdef double uk[4]
    cdef double qk[4]
    cdef double e_grad = 0.0, e_mass = 0.0, e_load = 0.0, cell_e, cell_m
    cdef double bx, tx, ly, ry, wn
    grad_arr = np.zeros((nx, ny))
    cdef double[:, ::1] g = grad_arr
    cdef int bad_i = -1, bad_j = -1

    for i in range(nx - 1):
        for j in range(ny - 1):
            pc = p[i, j]
            dxb = (u[i + 1, j] - u[i, j]) / hx
            dxt = (u[i + 1, j + 1] - u[i, j + 1]) / hx
            dyl = (u[i, j + 1] - u[i, j]) / hy
            dyr = (u[i + 1, j + 1] - u[i + 1, j]) / hy
            uk[0] = u[i, j]; uk[1] = u[i + 1, j]; uk[2] = u[i, j + 1]; uk[3] = u[i + 1, j + 1]
            qk[0] = q[i, j]; qk[1] = q[i + 1, j]; qk[2] = q[i, j + 1]; qk[3] = q[i + 1, j + 1]
            cell_e = 0.0
            cell_m = 0.0
            for k in range(4):
                gx = dxb if k < 2 else dxt
                gy = dyl if (k == 0 or k == 2) else dyr
                a = gx * gx + gy * gy + eps2
                # one pow per corner: the flux weight is a^(p/2) / a
                e = pow(a, 0.5 * pc)
                s = e / a if a > 0 else 0.0
                fx[k] = s * gx
                fy[k] = s * gy
                cell_e += e
                if qk[k] != 0.0 and uk[k] != 0.0:
                    m = pow(fabs(uk[k]), pc)
                    cell_m += qk[k] * m
                    uk[k] = w * qk[k] * m / uk[k]
                else:
                    uk[k] = 0.0
            cell_e /= pc
            cell_m /= pc
            if bad_i < 0 and not (isfinite(cell_e) and isfinite(cell_m)
                                  and isfinite(fx[0] + fx[1] + fx[2] + fx[3])
                                  and isfinite(fy[0] + fy[1] + fy[2] + fy[3])
                                  and isfinite(uk[0] + uk[1] + uk[2] + uk[3])):
                bad_i = i
                bad_j = j
            e_grad += cell_e
            e_mass += cell_m
            bx = w / hx * (fx[0] + fx[1])
            tx = w / hx * (fx[2] + fx[3])
            ly = w / hy * (fy[0] + fy[2])
            ry = w / hy * (fy[1] + fy[3])
            g[i + 1, j] += bx - ry + uk[1]
            g[i, j] += -bx - ly + uk[0]
            g[i + 1, j + 1] += tx + ry + uk[3]
            g[i, j + 1] += -tx + ly + uk[2]
    if bad_i >= 0:
        raise NumericalError("non-finite energy term", (bad_i, bad_j))

    for i in range(nx):
        for j in range(ny):
            wn = 0.0
            if i > 0 and j > 0:
                wn += w
            if i < nx - 1 and j > 0:
                wn += w
            if i > 0 and j < ny - 1:
                wn += w
            if i < nx - 1 and j < ny - 1:
                wn += w
            e_load += wn * f[i, j] * u[i, j]
            g[i, j] -= wn * f[i, j]
    return w * e_grad, w * e_mass, e_load, grad_arr


def energy_delta(const double[:, ::1] u, const double[:, ::1] du, const double[:, ::1] p,
                 const double[:, ::1] q, const double[:, ::1] f, double hx, double hy, double eps):
    cdef Py_ssize_t nx = u.shape[0], ny = u.shape[1]
    cdef Py_ssize_t i, j, k, ii, jj
    cdef double w = 0.25 * hx * hy, eps2 = eps * eps
    cdef double pc, gx, gy, dgx, dgy, a, da, x, dx, wn
    cdef double g0[4]
    cdef double g1[4]
    cdef double d_grad = 0.0, d_mass = 0.0, d_load = 0.0, cell_d, cell_m
    cdef int bad_i = -1, bad_j = -1

    for i in range(nx - 1):
        for j in range(ny - 1):
            pc = p[i, j]
            g0[0] = (u[i + 1, j] - u[i, j]) / hx
            g0[1] = (u[i + 1, j + 1] - u[i, j + 1]) / hx
            g0[2] = (u[i, j + 1] - u[i, j]) / hy
            g0[3] = (u[i + 1, j + 1] - u[i + 1, j]) / hy
            g1[0] = (du[i + 1, j] - du[i, j]) / hx
            g1[1] = (du[i + 1, j + 1] - du[i, j + 1]) / hx
            g1[2] = (du[i, j + 1] - du[i, j]) / hy
            g1[3] = (du[i + 1, j + 1] - du[i + 1, j]) / hy
            cell_d = 0.0
            cell_m = 0.0
            for k in range(4):
                if k < 2:
                    gx = g0[0]; dgx = g1[0]
                else:
                    gx = g0[1]; dgx = g1[1]
                if k == 0 or k == 2:
                    gy = g0[2]; dgy = g1[2]
                else:
                    gy = g0[3]; dgy = g1[3]
                a = gx * gx + gy * gy + eps2
                da = dgx * (2 * gx + dgx) + dgy * (2 * gy + dgy)
                cell_d += _pdelta(a, da, pc)
                ii = i + (k & 1)
                jj = j + (k >> 1)
                if q[ii, jj] != 0.0:
                    x = u[ii, jj]
                    dx = du[ii, jj]
                    cell_m += q[ii, jj] * _pdelta(x * x, dx * (2 * x + dx), pc)
            cell_d /= pc
            cell_m /= pc
            if bad_i < 0 and not (isfinite(cell_d) and isfinite(cell_m)):
                bad_i = i
                bad_j = j
            d_grad += cell_d
            d_mass += cell_m
    if bad_i >= 0:
        raise NumericalError("non-finite energy increment", (bad_i, bad_j))

    for i in range(nx):
        for j in range(ny):
            wn = 0.0
            if i > 0 and j > 0:
                wn += w
            if i < nx - 1 and j > 0:
                wn += w
            if i > 0 and j < ny - 1:
                wn += w
            if i < nx - 1 and j < ny - 1:
                wn += w
            d_load += wn * f[i, j] * du[i, j]
    return w * d_grad, w * d_mass, d_load
