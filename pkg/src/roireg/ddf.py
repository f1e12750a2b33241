"""Dense displacement field fitting from matched ROI pairs.

The field lives on the moving image grid: voxel ``v`` corresponds to point
``v + ddf(v)`` in fixed-image coordinates, so the warp resamples *fixed*
masks into moving space.  ``fit_ddf`` minimizes

    sum_k [ 0.5*MSE + 0.5*soft-Dice ](moving_k, warp(fixed_k))
        + lam * smoothness(ddf)

with an Adam-style first-order optimizer and exact analytic gradients
through the multilinear warp (one warp+gradient kernel call per pair per
iteration; no numeric differentiation).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from . import _kernels as kernels
from ._parallel import thread_map
from .core import (BinaryMask, DisplacementField, RoiPair, RoiPairing,
                   Spacing, check_spacing, mask_centroid)
from .errors import (DimMismatchError, EmptyPairingError, GridTooSmallError,
                     ManifestParseError, MissingFileError, NonFiniteLossError,
                     PointOutOfRangeError, SizeMismatchError)


class DisplacedPointWarning(UserWarning):
    """A displaced sample point left the grid and was skipped."""


@dataclass(frozen=True)
class FitConfig:
    """Optimizer settings.  ``lam`` balances alignment against smoothness;
    the rest are standard first-order optimization knobs."""

    lam: float = 1.0
    iterations: int = 300
    step_size: float = 0.1
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    dice_smooth: float = 1e-5
    convergence_tol: float = 1e-7

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        for name in ("iterations", "step_size", "adam_eps", "dice_smooth",
                     "convergence_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("adam_beta1", "adam_beta2"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ValueError(f"{name} must be in [0, 1)")


@dataclass(frozen=True)
class LossBreakdown:
    """One iteration's loss decomposition.

    ``roi_mse`` and ``roi_dice`` are the summed, equally-weighted halves of
    the alignment term (0.5 * sum of per-pair MSE / Dice losses), so
    ``total == roi_mse + roi_dice + lam * smoothness``.  ``per_pair`` holds
    the raw (mse, dice_loss) value per pair.
    """

    total: float
    roi_mse: float
    roi_dice: float
    smoothness: float
    per_pair: Tuple[Tuple[float, float], ...]


def _as_grid(mask: Union[BinaryMask, np.ndarray]) -> np.ndarray:
    if isinstance(mask, BinaryMask):
        return mask.bits.astype(np.float64)
    return np.asarray(mask, dtype=np.float64)


def warp_mask(mask: Union[BinaryMask, np.ndarray],
              ddf: DisplacementField) -> np.ndarray:
    """Resample a scalar grid (binary masks are promoted to floats) at
    voxel + displacement; samples outside the grid read 0."""
    grid = _as_grid(mask)
    if grid.shape != ddf.dims:
        raise DimMismatchError(f"grid {grid.shape} vs field {ddf.dims}")
    return kernels.warp(grid, ddf.vectors)


def roi_loss(fixed_warped: np.ndarray, moving: np.ndarray,
             dice_smooth: float = 1e-5) -> Tuple[float, float]:
    """(MSE, soft Dice loss) between two real-valued grids.

    Soft Dice uses the squared-sum denominator with a smoothing constant so
    it stays differentiable even around empty grids.
    """
    a = np.asarray(fixed_warped, dtype=np.float64)
    b = np.asarray(moving, dtype=np.float64)
    if a.shape != b.shape:
        raise DimMismatchError(f"grid shapes {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    s = float(dice_smooth)
    inter = float((a * b).sum())
    denom = float((a * a).sum() + (b * b).sum()) + s
    dice_loss = 1.0 - (2.0 * inter + s) / denom
    return mse, dice_loss


def _smoothness_and_grad(vec: np.ndarray) -> Tuple[float, np.ndarray]:
    # Mean of squared forward differences over all (component, axis, voxel)
    # triples; the last voxel per axis has no forward difference.
    d = vec.shape[0]
    dims = vec.shape[1:]
    count = 0
    total = 0.0
    grad = np.zeros_like(vec)
    for axis in range(len(dims)):
        diff = np.diff(vec, axis=axis + 1)
        total += float((diff * diff).sum())
        count += d * diff[0].size
        lo = [slice(None)] * vec.ndim
        hi = [slice(None)] * vec.ndim
        lo[axis + 1] = slice(0, dims[axis] - 1)
        hi[axis + 1] = slice(1, dims[axis])
        grad[tuple(hi)] += 2.0 * diff
        grad[tuple(lo)] -= 2.0 * diff
    return total / count, grad / count


def smoothness_loss(ddf: DisplacementField) -> float:
    """Mean squared forward finite difference of the displacement, over all
    components and axes.  Translation-invariant: constant fields score 0."""
    if any(n < 2 for n in ddf.dims):
        raise GridTooSmallError(
            f"smoothness needs >= 2 voxels per axis, got {ddf.dims}")
    return _smoothness_and_grad(ddf.vectors)[0]


def _pair_terms(moving: np.ndarray, fixed: np.ndarray, vec: np.ndarray,
                dice_smooth: float):
    # Loss terms for one pair plus d(0.5*mse + 0.5*dice)/d(displacement).
    warped, spatial_grad = kernels.warp_with_grad(fixed, vec)
    n = moving.size
    diff = warped - moving
    mse = float((diff * diff).sum()) / n

    s = dice_smooth
    inter = float((moving * warped).sum())
    denom = float((moving * moving).sum() + (warped * warped).sum()) + s
    dice_loss = 1.0 - (2.0 * inter + s) / denom

    # dL/d(warped) for the equally-weighted pair loss.
    g = diff / n  # 0.5 * d(mse)/dw
    g += 0.5 * (-(2.0 * moving * denom - (2.0 * inter + s) * 2.0 * warped)
                / (denom * denom))
    return mse, dice_loss, g[np.newaxis] * spatial_grad


def pairing_grids(pairing: RoiPairing) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """Float grids (moving list, fixed list) for a pairing's masks.  All
    masks must share one grid."""
    if not pairing.pairs:
        raise EmptyPairingError("displacement fitting needs at least one pair")
    dims = pairing.pairs[0].moving_mask.dims
    for p in pairing.pairs:
        if p.moving_mask.dims != dims or p.fixed_mask.dims != dims:
            raise DimMismatchError("all masks in a pairing must share dims")
    moving = [_as_grid(p.moving_mask) for p in pairing.pairs]
    fixed = [_as_grid(p.fixed_mask) for p in pairing.pairs]
    return moving, fixed


def total_loss_and_grad(moving: Sequence[np.ndarray], fixed: Sequence[np.ndarray],
                        vec: np.ndarray, cfg: FitConfig,
                        ) -> Tuple[LossBreakdown, np.ndarray]:
    """Loss breakdown and its exact gradient w.r.t. every field component.

    Exposed separately from fit_ddf so the gradient can be checked against
    finite differences on arbitrary (soft) grids.
    """
    terms = thread_map(
        lambda mf: _pair_terms(mf[0], mf[1], vec, cfg.dice_smooth),
        list(zip(moving, fixed)))
    grad = np.zeros_like(vec)
    per_pair = []
    for mse, dice_loss, g in terms:  # fixed order: deterministic reduction
        per_pair.append((mse, dice_loss))
        grad += g
    roi_mse = 0.5 * sum(t[0] for t in per_pair)
    roi_dice = 0.5 * sum(t[1] for t in per_pair)
    smooth, smooth_grad = _smoothness_and_grad(vec)
    grad += cfg.lam * smooth_grad
    breakdown = LossBreakdown(
        total=roi_mse + roi_dice + cfg.lam * smooth,
        roi_mse=roi_mse, roi_dice=roi_dice, smoothness=smooth,
        per_pair=tuple(per_pair))
    return breakdown, grad


def fit_ddf(pairing: RoiPairing, cfg: Optional[FitConfig] = None,
            ) -> Tuple[DisplacementField, List[LossBreakdown]]:
    """Fit a dense displacement field to the matched ROI pairs.

    Starts from zero displacement and runs Adam until the iteration budget
    or until the relative loss change drops below ``convergence_tol``.  The
    returned history has one entry per evaluated iterate, ending with the
    returned field's loss.
    """
    cfg = cfg or FitConfig()
    moving, fixed = pairing_grids(pairing)
    vec = np.zeros((moving[0].ndim,) + moving[0].shape, dtype=np.float64)

    m = np.zeros_like(vec)
    v = np.zeros_like(vec)
    history: List[LossBreakdown] = []
    for t in range(1, cfg.iterations + 1):
        breakdown, grad = total_loss_and_grad(moving, fixed, vec, cfg)
        if not np.isfinite(breakdown.total):
            raise NonFiniteLossError(
                f"loss diverged at iteration {t} (step_size too large?)")
        history.append(breakdown)
        if len(history) >= 2:
            prev = history[-2].total
            if abs(prev - breakdown.total) < cfg.convergence_tol * max(abs(prev), 1e-30):
                return DisplacementField(vec), history

        m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * grad
        v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * grad * grad
        m_hat = m / (1.0 - cfg.adam_beta1 ** t)
        v_hat = v / (1.0 - cfg.adam_beta2 ** t)
        vec = vec - cfg.step_size * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)

    breakdown, _ = total_loss_and_grad(moving, fixed, vec, cfg)
    if not np.isfinite(breakdown.total):
        raise NonFiniteLossError("loss diverged on the final iterate")
    history.append(breakdown)
    return DisplacementField(vec), history


def sample_field(ddf: DisplacementField, points: np.ndarray) -> np.ndarray:
    """Multilinear field values at fractional points (N, d) inside the grid."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != ddf.ndim:
        raise DimMismatchError(f"points must be (N, {ddf.ndim}), got {pts.shape}")
    dims = np.asarray(ddf.dims)
    if pts.size and ((pts < 0).any() or (pts > dims - 1).any()):
        raise PointOutOfRangeError("sample points must lie inside the grid")
    base = np.floor(pts).astype(np.int64)
    frac = pts - base
    out = np.zeros((pts.shape[0], ddf.ndim), dtype=np.float64)
    for corner in product((0, 1), repeat=ddf.ndim):
        weight = np.ones(pts.shape[0], dtype=np.float64)
        idx = []
        for axis, bit in enumerate(corner):
            weight *= frac[:, axis] if bit else 1.0 - frac[:, axis]
            # clip only ever fires where the corner weight is exactly 0
            idx.append(np.clip(base[:, axis] + bit, 0, dims[axis] - 1))
        vals = ddf.vectors[(slice(None), *idx)]  # (d, N)
        out += weight[:, np.newaxis] * vals.T
    return out


def ddf_to_roi_pairs(ddf: DisplacementField,
                     sample_points: Sequence[Sequence[float]]) -> RoiPairing:
    """Sample the field into single-voxel ROI pairs: point x pairs the voxel
    at round(x) with the voxel at round(x + ddf(x)).

    This is the extreme K=N, L=1 case in which the pair representation
    carries exactly the information of the dense field.  Points whose
    displaced position leaves the grid are skipped with a warning.
    """
    pts = np.asarray(sample_points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    disp = sample_field(ddf, pts)
    targets = pts + disp
    dims = np.asarray(ddf.dims)

    pairs = []
    skipped = 0
    for k in range(pts.shape[0]):
        src = np.rint(pts[k]).astype(np.int64)
        dst = np.rint(targets[k]).astype(np.int64)
        if (dst < 0).any() or (dst >= dims).any():
            skipped += 1
            continue
        src_bits = np.zeros(ddf.dims, dtype=bool)
        src_bits[tuple(src)] = True
        dst_bits = np.zeros(ddf.dims, dtype=bool)
        dst_bits[tuple(dst)] = True
        pairs.append(RoiPair(
            moving_index=len(pairs), fixed_index=len(pairs), similarity=1.0,
            moving_mask=BinaryMask(src_bits), fixed_mask=BinaryMask(dst_bits)))
    if skipped:
        warnings.warn(f"skipped {skipped} sample points displaced outside the grid",
                      DisplacedPointWarning, stacklevel=2)
    return RoiPairing(tuple(pairs), epsilon_used=0.0)


def all_voxel_points(dims: Sequence[int]) -> np.ndarray:
    """Every voxel center of a grid as an (N, d) float array, row-major."""
    axes = [np.arange(n, dtype=np.float64) for n in dims]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def reconstruct_ddf_from_pairs(pairing: RoiPairing,
                               dims: Sequence[int]) -> DisplacementField:
    """Rebuild a field from single-voxel pairs by centroid differencing.

    Voxels not covered by any pair keep zero displacement.
    """
    dims = tuple(int(n) for n in dims)
    vec = np.zeros((len(dims),) + dims, dtype=np.float64)
    for p in pairing.pairs:
        src = mask_centroid(p.moving_mask)
        dst = mask_centroid(p.fixed_mask)
        voxel = tuple(np.rint(src).astype(np.int64))
        vec[(slice(None), *voxel)] = dst - src
    return DisplacementField(vec)


# -- serialization ----------------------------------------------------------

DDF_RAW = "ddf.raw"
DDF_META = "ddf.json"
_F32 = np.dtype("<f4")


def save_ddf(out_dir: Union[str, Path], ddf: DisplacementField,
             spacing: Optional[Sequence[float]] = None) -> None:
    """Write ddf.raw (float32, component-major) + ddf.json ({dims, spacing})."""
    spacing = check_spacing(spacing, len(ddf.dims))
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / DDF_RAW).write_bytes(
        np.ascontiguousarray(ddf.vectors, dtype=_F32).tobytes())
    meta = {"dims": list(ddf.dims), "spacing": list(spacing)}
    (out_dir / DDF_META).write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def load_ddf(ddf_dir: Union[str, Path]) -> Tuple[DisplacementField, Spacing]:
    ddf_dir = Path(ddf_dir)
    meta_path = ddf_dir / DDF_META
    if not meta_path.is_file():
        raise MissingFileError(f"no {DDF_META} in {ddf_dir}")
    try:
        meta = json.loads(meta_path.read_bytes())
        dims = tuple(int(n) for n in meta["dims"])
        spacing = check_spacing([float(s) for s in meta["spacing"]], len(dims))
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise ManifestParseError(f"bad {DDF_META}: {exc}") from exc
    raw_path = ddf_dir / DDF_RAW
    if not raw_path.is_file():
        raise MissingFileError(f"no {DDF_RAW} in {ddf_dir}")
    raw = raw_path.read_bytes()
    expected = len(dims) * int(np.prod(dims)) * 4
    if len(raw) != expected:
        raise SizeMismatchError(
            f"{raw_path} holds {len(raw)} bytes, expected {expected}")
    vec = np.frombuffer(raw, dtype=_F32).astype(np.float64).reshape(
        (len(dims),) + dims)
    return DisplacementField(vec), spacing
