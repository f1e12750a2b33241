# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled warp kernels: the hot inner loops of displacement-field fitting.

Semantics match roireg._kernels._numpy exactly: multilinear interpolation at
voxel + displacement with zero padding outside the grid, plus the spatial
gradient of the interpolant in the *_grad variants.  Sample points that are
not strictly inside (-1, n) per axis contribute 0 (this branch also absorbs
NaN displacements safely; the optimizer detects those via its loss check).
"""

from libc.math cimport floor

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline double _at2(const double[:, ::1] g, Py_ssize_t i, Py_ssize_t j,
                        Py_ssize_t h, Py_ssize_t w) noexcept nogil:
    if 0 <= i < h and 0 <= j < w:
        return g[i, j]
    return 0.0


cdef inline double _at3(const double[:, :, ::1] g, Py_ssize_t i, Py_ssize_t j,
                        Py_ssize_t k, Py_ssize_t d0, Py_ssize_t d1,
                        Py_ssize_t d2) noexcept nogil:
    if 0 <= i < d0 and 0 <= j < d1 and 0 <= k < d2:
        return g[i, j, k]
    return 0.0


def warp2d(const double[:, ::1] grid, const double[:, :, ::1] disp):
    cdef Py_ssize_t h = grid.shape[0], w = grid.shape[1]
    out_arr = np.zeros((h, w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, g0, g1
    cdef double p0, p1, r0, r1, v00, v01, v10, v11
    with nogil:
        for i in range(h):
            for j in range(w):
                p0 = i + disp[0, i, j]
                p1 = j + disp[1, i, j]
                if p0 > -1.0 and p0 < h and p1 > -1.0 and p1 < w:
                    g0 = <Py_ssize_t>floor(p0)
                    g1 = <Py_ssize_t>floor(p1)
                    r0 = p0 - g0
                    r1 = p1 - g1
                    v00 = _at2(grid, g0, g1, h, w)
                    v01 = _at2(grid, g0, g1 + 1, h, w)
                    v10 = _at2(grid, g0 + 1, g1, h, w)
                    v11 = _at2(grid, g0 + 1, g1 + 1, h, w)
                    out[i, j] = ((1 - r0) * ((1 - r1) * v00 + r1 * v01)
                                 + r0 * ((1 - r1) * v10 + r1 * v11))
    return out_arr


def warp2d_grad(const double[:, ::1] grid, const double[:, :, ::1] disp):
    cdef Py_ssize_t h = grid.shape[0], w = grid.shape[1]
    out_arr = np.zeros((h, w), dtype=np.float64)
    grad_arr = np.zeros((2, h, w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[:, :, ::1] grad = grad_arr
    cdef Py_ssize_t i, j, g0, g1
    cdef double p0, p1, r0, r1, v00, v01, v10, v11
    with nogil:
        for i in range(h):
            for j in range(w):
                p0 = i + disp[0, i, j]
                p1 = j + disp[1, i, j]
                if p0 > -1.0 and p0 < h and p1 > -1.0 and p1 < w:
                    g0 = <Py_ssize_t>floor(p0)
                    g1 = <Py_ssize_t>floor(p1)
                    r0 = p0 - g0
                    r1 = p1 - g1
                    v00 = _at2(grid, g0, g1, h, w)
                    v01 = _at2(grid, g0, g1 + 1, h, w)
                    v10 = _at2(grid, g0 + 1, g1, h, w)
                    v11 = _at2(grid, g0 + 1, g1 + 1, h, w)
                    out[i, j] = ((1 - r0) * ((1 - r1) * v00 + r1 * v01)
                                 + r0 * ((1 - r1) * v10 + r1 * v11))
                    grad[0, i, j] = (1 - r1) * (v10 - v00) + r1 * (v11 - v01)
                    grad[1, i, j] = (1 - r0) * (v01 - v00) + r0 * (v11 - v10)
    return out_arr, grad_arr


def warp3d(const double[:, :, ::1] grid, const double[:, :, :, ::1] disp):
    cdef Py_ssize_t d0 = grid.shape[0], d1 = grid.shape[1], d2 = grid.shape[2]
    out_arr = np.zeros((d0, d1, d2), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, j, k, g0, g1, g2
    cdef double p0, p1, p2, r0, r1, r2
    cdef double c000, c001, c010, c011, c100, c101, c110, c111
    cdef double e00, e01, e10, e11, f0, f1
    with nogil:
        for i in range(d0):
            for j in range(d1):
                for k in range(d2):
                    p0 = i + disp[0, i, j, k]
                    p1 = j + disp[1, i, j, k]
                    p2 = k + disp[2, i, j, k]
                    if (p0 > -1.0 and p0 < d0 and p1 > -1.0 and p1 < d1
                            and p2 > -1.0 and p2 < d2):
                        g0 = <Py_ssize_t>floor(p0)
                        g1 = <Py_ssize_t>floor(p1)
                        g2 = <Py_ssize_t>floor(p2)
                        r0 = p0 - g0
                        r1 = p1 - g1
                        r2 = p2 - g2
                        c000 = _at3(grid, g0, g1, g2, d0, d1, d2)
                        c001 = _at3(grid, g0, g1, g2 + 1, d0, d1, d2)
                        c010 = _at3(grid, g0, g1 + 1, g2, d0, d1, d2)
                        c011 = _at3(grid, g0, g1 + 1, g2 + 1, d0, d1, d2)
                        c100 = _at3(grid, g0 + 1, g1, g2, d0, d1, d2)
                        c101 = _at3(grid, g0 + 1, g1, g2 + 1, d0, d1, d2)
                        c110 = _at3(grid, g0 + 1, g1 + 1, g2, d0, d1, d2)
                        c111 = _at3(grid, g0 + 1, g1 + 1, g2 + 1, d0, d1, d2)
                        e00 = (1 - r2) * c000 + r2 * c001
                        e01 = (1 - r2) * c010 + r2 * c011
                        e10 = (1 - r2) * c100 + r2 * c101
                        e11 = (1 - r2) * c110 + r2 * c111
                        f0 = (1 - r1) * e00 + r1 * e01
                        f1 = (1 - r1) * e10 + r1 * e11
                        out[i, j, k] = (1 - r0) * f0 + r0 * f1
    return out_arr


def warp3d_grad(const double[:, :, ::1] grid, const double[:, :, :, ::1] disp):
    cdef Py_ssize_t d0 = grid.shape[0], d1 = grid.shape[1], d2 = grid.shape[2]
    out_arr = np.zeros((d0, d1, d2), dtype=np.float64)
    grad_arr = np.zeros((3, d0, d1, d2), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef double[:, :, :, ::1] grad = grad_arr
    cdef Py_ssize_t i, j, k, g0, g1, g2
    cdef double p0, p1, p2, r0, r1, r2
    cdef double c000, c001, c010, c011, c100, c101, c110, c111
    cdef double e00, e01, e10, e11, f0, f1
    with nogil:
        for i in range(d0):
            for j in range(d1):
                for k in range(d2):
                    p0 = i + disp[0, i, j, k]
                    p1 = j + disp[1, i, j, k]
                    p2 = k + disp[2, i, j, k]
                    if (p0 > -1.0 and p0 < d0 and p1 > -1.0 and p1 < d1
                            and p2 > -1.0 and p2 < d2):
                        g0 = <Py_ssize_t>floor(p0)
                        g1 = <Py_ssize_t>floor(p1)
                        g2 = <Py_ssize_t>floor(p2)
                        r0 = p0 - g0
                        r1 = p1 - g1
                        r2 = p2 - g2
                        c000 = _at3(grid, g0, g1, g2, d0, d1, d2)
                        c001 = _at3(grid, g0, g1, g2 + 1, d0, d1, d2)
                        c010 = _at3(grid, g0, g1 + 1, g2, d0, d1, d2)
                        c011 = _at3(grid, g0, g1 + 1, g2 + 1, d0, d1, d2)
                        c100 = _at3(grid, g0 + 1, g1, g2, d0, d1, d2)
                        c101 = _at3(grid, g0 + 1, g1, g2 + 1, d0, d1, d2)
                        c110 = _at3(grid, g0 + 1, g1 + 1, g2, d0, d1, d2)
                        c111 = _at3(grid, g0 + 1, g1 + 1, g2 + 1, d0, d1, d2)
                        e00 = (1 - r2) * c000 + r2 * c001
                        e01 = (1 - r2) * c010 + r2 * c011
                        e10 = (1 - r2) * c100 + r2 * c101
                        e11 = (1 - r2) * c110 + r2 * c111
                        f0 = (1 - r1) * e00 + r1 * e01
                        f1 = (1 - r1) * e10 + r1 * e11
                        out[i, j, k] = (1 - r0) * f0 + r0 * f1
                        grad[0, i, j, k] = f1 - f0
                        grad[1, i, j, k] = (1 - r0) * (e01 - e00) + r0 * (e11 - e10)
                        grad[2, i, j, k] = (
                            (1 - r0) * ((1 - r1) * (c001 - c000) + r1 * (c011 - c010))
                            + r0 * ((1 - r1) * (c101 - c100) + r1 * (c111 - c110)))
    return out_arr, grad_arr
