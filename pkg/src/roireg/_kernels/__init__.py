"""Warp kernel backend selection.

Two interchangeable implementations of the multilinear warp kernels exist:
a compiled Cython extension (``native``) and a vectorized NumPy fallback
(``numpy``).  The compiled one is preferred when it imported successfully;
``ROIREG_KERNEL=numpy|native|auto`` overrides the choice.  Both produce the
same results (the benchmark in benchmarks/bench_kernels.py compares speed).
"""

import os

import numpy as np

from ..errors import DimMismatchError
from . import _numpy

_BACKENDS = {"numpy": _numpy}
try:
    from . import _native
    _BACKENDS["native"] = _native
except ImportError:
    pass

_requested = os.environ.get("ROIREG_KERNEL", "auto").strip().lower()
if _requested in ("auto", ""):
    backend_name = "native" if "native" in _BACKENDS else "numpy"
elif _requested in _BACKENDS:
    backend_name = _requested
else:
    raise ImportError(
        f"ROIREG_KERNEL={_requested!r} not available; built backends: "
        f"{sorted(_BACKENDS)}")

_impl = _BACKENDS[backend_name]


def available_backends():
    """Names of the kernel backends that imported successfully."""
    return sorted(_BACKENDS)


def get_backend(name):
    """Fetch a backend module by name (for tests and benchmarks)."""
    return _BACKENDS[name]


def _check(grid, disp):
    grid = np.ascontiguousarray(grid, dtype=np.float64)
    disp = np.ascontiguousarray(disp, dtype=np.float64)
    if grid.ndim not in (2, 3):
        raise DimMismatchError(f"warp kernels are 2D/3D only, got {grid.ndim}D")
    if disp.shape != (grid.ndim,) + grid.shape:
        raise DimMismatchError(
            f"displacement shape {disp.shape} does not match grid {grid.shape}")
    return grid, disp


def warp(grid, disp):
    """Resample ``grid`` at voxel + disp; zero outside the domain."""
    grid, disp = _check(grid, disp)
    return _impl.warp2d(grid, disp) if grid.ndim == 2 else _impl.warp3d(grid, disp)


def warp_with_grad(grid, disp):
    """Warp plus the interpolant's spatial gradient at every sample point."""
    grid, disp = _check(grid, disp)
    if grid.ndim == 2:
        return _impl.warp2d_grad(grid, disp)
    return _impl.warp3d_grad(grid, disp)
