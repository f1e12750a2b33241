"""Pure-NumPy warp kernels (fallback backend).

Each kernel resamples a scalar grid at ``voxel + displacement`` with
multilinear interpolation and zero padding outside the grid.  The ``*_grad``
variants additionally return the spatial gradient of the interpolant at each
sample point, which is all the chain rule needs to differentiate losses
through the warp (the warped value at voxel v depends on the displacement at
v only).
"""

import numpy as np


def _gather2d(grid, i, j):
    h, w = grid.shape
    valid = (i >= 0) & (i < h) & (j >= 0) & (j < w)
    v = grid[np.clip(i, 0, h - 1), np.clip(j, 0, w - 1)]
    return np.where(valid, v, 0.0)


def _gather3d(grid, i, j, k):
    d0, d1, d2 = grid.shape
    valid = (i >= 0) & (i < d0) & (j >= 0) & (j < d1) & (k >= 0) & (k < d2)
    v = grid[np.clip(i, 0, d0 - 1), np.clip(j, 0, d1 - 1), np.clip(k, 0, d2 - 1)]
    return np.where(valid, v, 0.0)


def _corners2d(grid, disp):
    h, w = grid.shape
    ii, jj = np.meshgrid(np.arange(h, dtype=np.float64),
                         np.arange(w, dtype=np.float64), indexing="ij")
    p0 = ii + disp[0]
    p1 = jj + disp[1]
    # Non-finite sample positions must read as outside the grid (value 0),
    # matching the compiled backend; a finite far-outside stand-in keeps the
    # floor/cast below well defined.
    p0 = np.where(np.isfinite(p0), p0, -1e9)
    p1 = np.where(np.isfinite(p1), p1, -1e9)
    f0 = np.floor(p0)
    f1 = np.floor(p1)
    r0 = p0 - f0
    r1 = p1 - f1
    g0 = f0.astype(np.int64)
    g1 = f1.astype(np.int64)
    v00 = _gather2d(grid, g0, g1)
    v01 = _gather2d(grid, g0, g1 + 1)
    v10 = _gather2d(grid, g0 + 1, g1)
    v11 = _gather2d(grid, g0 + 1, g1 + 1)
    return r0, r1, v00, v01, v10, v11


def warp2d(grid, disp):
    r0, r1, v00, v01, v10, v11 = _corners2d(grid, disp)
    return (1 - r0) * ((1 - r1) * v00 + r1 * v01) + r0 * ((1 - r1) * v10 + r1 * v11)


def warp2d_grad(grid, disp):
    r0, r1, v00, v01, v10, v11 = _corners2d(grid, disp)
    out = (1 - r0) * ((1 - r1) * v00 + r1 * v01) + r0 * ((1 - r1) * v10 + r1 * v11)
    grad = np.empty((2,) + grid.shape, dtype=np.float64)
    grad[0] = (1 - r1) * (v10 - v00) + r1 * (v11 - v01)
    grad[1] = (1 - r0) * (v01 - v00) + r0 * (v11 - v10)
    return out, grad


def _corners3d(grid, disp):
    d0, d1, d2 = grid.shape
    ii, jj, kk = np.meshgrid(np.arange(d0, dtype=np.float64),
                             np.arange(d1, dtype=np.float64),
                             np.arange(d2, dtype=np.float64), indexing="ij")
    p0 = ii + disp[0]
    p1 = jj + disp[1]
    p2 = kk + disp[2]
    p0 = np.where(np.isfinite(p0), p0, -1e9)
    p1 = np.where(np.isfinite(p1), p1, -1e9)
    p2 = np.where(np.isfinite(p2), p2, -1e9)
    f0, f1, f2 = np.floor(p0), np.floor(p1), np.floor(p2)
    r0, r1, r2 = p0 - f0, p1 - f1, p2 - f2
    g0 = f0.astype(np.int64)
    g1 = f1.astype(np.int64)
    g2 = f2.astype(np.int64)
    c = {}
    for a in (0, 1):
        for b in (0, 1):
            for cc in (0, 1):
                c[a, b, cc] = _gather3d(grid, g0 + a, g1 + b, g2 + cc)
    return r0, r1, r2, c


def warp3d(grid, disp):
    r0, r1, r2, c = _corners3d(grid, disp)
    # interpolate along axis 2, then 1, then 0
    e00 = (1 - r2) * c[0, 0, 0] + r2 * c[0, 0, 1]
    e01 = (1 - r2) * c[0, 1, 0] + r2 * c[0, 1, 1]
    e10 = (1 - r2) * c[1, 0, 0] + r2 * c[1, 0, 1]
    e11 = (1 - r2) * c[1, 1, 0] + r2 * c[1, 1, 1]
    f0 = (1 - r1) * e00 + r1 * e01
    f1 = (1 - r1) * e10 + r1 * e11
    return (1 - r0) * f0 + r0 * f1


def warp3d_grad(grid, disp):
    r0, r1, r2, c = _corners3d(grid, disp)
    e00 = (1 - r2) * c[0, 0, 0] + r2 * c[0, 0, 1]
    e01 = (1 - r2) * c[0, 1, 0] + r2 * c[0, 1, 1]
    e10 = (1 - r2) * c[1, 0, 0] + r2 * c[1, 0, 1]
    e11 = (1 - r2) * c[1, 1, 0] + r2 * c[1, 1, 1]
    f0 = (1 - r1) * e00 + r1 * e01
    f1 = (1 - r1) * e10 + r1 * e11
    out = (1 - r0) * f0 + r0 * f1

    grad = np.empty((3,) + grid.shape, dtype=np.float64)
    grad[0] = f1 - f0
    grad[1] = (1 - r0) * (e01 - e00) + r0 * (e11 - e10)
    d00 = c[0, 0, 1] - c[0, 0, 0]
    d01 = c[0, 1, 1] - c[0, 1, 0]
    d10 = c[1, 0, 1] - c[1, 0, 0]
    d11 = c[1, 1, 1] - c[1, 1, 0]
    grad[2] = ((1 - r0) * ((1 - r1) * d00 + r1 * d01)
               + r0 * ((1 - r1) * d10 + r1 * d11))
    return out, grad
