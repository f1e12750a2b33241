"""Core grid types shared by every stage of the registration engine.

Conventions (used consistently across the package):

* Grids are 2D or 3D, stored row-major with axis order ``(y, x)`` in 2D and
  ``(z, y, x)`` in 3D.  ``dims`` always lists voxel counts in that order.
* Voxel ``(i, j, k)`` occupies the physical point ``(i*sz, j*sy, k*sx)``
  (voxel-center convention); ``spacing`` defaults to 1.0 per axis, i.e.
  coordinates in voxel units.
* All types are immutable after construction (arrays are copied and marked
  read-only), so instances can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np

from .errors import DimMismatchError, EmptyMaskError

Dims = Tuple[int, ...]
Spacing = Tuple[float, ...]


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


def check_dims(dims: Sequence[int]) -> Dims:
    """Validate a dims tuple: 2 or 3 axes, all positive integers."""
    dims = tuple(int(n) for n in dims)
    if len(dims) not in (2, 3):
        raise DimMismatchError(f"grids must be 2D or 3D, got dims={dims}")
    if any(n <= 0 for n in dims):
        raise DimMismatchError(f"all dims must be positive, got {dims}")
    return dims


def check_spacing(spacing: Optional[Sequence[float]], ndim: int) -> Spacing:
    """Validate per-axis spacing; None means 1.0 everywhere (voxel units)."""
    if spacing is None:
        return (1.0,) * ndim
    spacing = tuple(float(s) for s in spacing)
    if len(spacing) != ndim:
        raise DimMismatchError(
            f"spacing has {len(spacing)} components for a {ndim}D grid")
    if any(not np.isfinite(s) or s <= 0 for s in spacing):
        raise ValueError(f"spacing components must be positive, got {spacing}")
    return spacing


@dataclass(frozen=True)
class Image:
    """A d-dimensional scalar intensity grid with optional voxel spacing.

    ``data`` is stored as float32 (the interchange dtype), row-major.
    """

    data: np.ndarray
    spacing: Spacing = None  # type: ignore[assignment]

    def __post_init__(self):
        data = _frozen(np.asarray(self.data, dtype=np.float32))
        dims = check_dims(data.shape)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "spacing", check_spacing(self.spacing, len(dims)))

    @property
    def dims(self) -> Dims:
        return self.data.shape


@dataclass(frozen=True)
class BinaryMask:
    """A boolean ROI mask on a grid; ``area`` caches the true-voxel count."""

    bits: np.ndarray
    area: int = field(init=False)

    def __post_init__(self):
        bits = _frozen(np.asarray(self.bits, dtype=bool))
        check_dims(bits.shape)
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "area", int(bits.sum()))

    @property
    def dims(self) -> Dims:
        return self.bits.shape


@dataclass(frozen=True)
class MaskMeta:
    """Per-mask quality metadata attached by the segmenter (all optional)."""

    predicted_iou: Optional[float] = None
    stability_score: Optional[float] = None
    source_slice: Optional[int] = None

    def __post_init__(self):
        for name in ("predicted_iou", "stability_score"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.source_slice is not None and self.source_slice < 0:
            raise ValueError(f"source_slice must be >= 0, got {self.source_slice}")


@dataclass(frozen=True)
class MaskSet:
    """An ordered list of candidate masks for one image, plus metadata.

    All masks share identical dims.  ``meta`` is parallel to ``masks``;
    omitted metadata defaults to empty records.
    """

    masks: Tuple[BinaryMask, ...]
    meta: Tuple[MaskMeta, ...] = None  # type: ignore[assignment]

    def __post_init__(self):
        masks = tuple(self.masks)
        meta = tuple(self.meta) if self.meta is not None else tuple(
            MaskMeta() for _ in masks)
        if len(meta) != len(masks):
            raise ValueError(
                f"{len(masks)} masks but {len(meta)} metadata records")
        dims = {m.dims for m in masks}
        if len(dims) > 1:
            raise DimMismatchError(f"masks in one set must share dims, got {dims}")
        object.__setattr__(self, "masks", masks)
        object.__setattr__(self, "meta", meta)

    def __len__(self) -> int:
        return len(self.masks)

    def __iter__(self) -> Iterator[BinaryMask]:
        return iter(self.masks)

    def __getitem__(self, i: int) -> BinaryMask:
        return self.masks[i]

    @property
    def dims(self) -> Optional[Dims]:
        return self.masks[0].dims if self.masks else None


@dataclass(frozen=True)
class FeatureMap:
    """A C-channel spatial embedding grid, channel-major: shape (C, *grid_dims).

    The spatial grid is typically coarser than the image it encodes.
    """

    data: np.ndarray

    def __post_init__(self):
        data = _frozen(np.asarray(self.data, dtype=np.float32))
        if data.ndim not in (3, 4):
            raise DimMismatchError(
                f"feature data must be (C, *grid_dims), got shape {data.shape}")
        check_dims(data.shape[1:])
        object.__setattr__(self, "data", data)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def grid_dims(self) -> Dims:
        return self.data.shape[1:]


@dataclass(frozen=True)
class Prototype:
    """The mean feature vector of one ROI (mask-weighted pooling output)."""

    vec: np.ndarray

    def __post_init__(self):
        vec = _frozen(np.asarray(self.vec, dtype=np.float64).reshape(-1))
        if not np.all(np.isfinite(vec)):
            raise ValueError("prototype entries must be finite")
        object.__setattr__(self, "vec", vec)

    @property
    def channels(self) -> int:
        return self.vec.shape[0]


@dataclass(frozen=True)
class RoiPair:
    """One matched (moving, fixed) mask pair with its similarity score.

    Indices refer to positions in the candidate mask sets the pairing was
    built from (before filtering).
    """

    moving_index: int
    fixed_index: int
    similarity: float
    moving_mask: BinaryMask
    fixed_mask: BinaryMask


@dataclass(frozen=True)
class RoiPairing:
    """The registration output: K matched ROI pairs, best first.

    Invariants: pairs are sorted by descending similarity, every similarity
    is >= ``epsilon_used``, and no moving or fixed index repeats.
    """

    pairs: Tuple[RoiPair, ...]
    epsilon_used: float

    def __post_init__(self):
        pairs = tuple(self.pairs)
        sims = [p.similarity for p in pairs]
        if any(s2 > s1 for s1, s2 in zip(sims, sims[1:])):
            raise ValueError("pairs must be sorted by descending similarity")
        if any(s < self.epsilon_used for s in sims):
            raise ValueError("pair similarity below epsilon_used")
        for name in ("moving_index", "fixed_index"):
            idx = [getattr(p, name) for p in pairs]
            if len(set(idx)) != len(idx):
                raise ValueError(f"duplicate {name} in pairing")
        object.__setattr__(self, "pairs", pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[RoiPair]:
        return iter(self.pairs)

    def top_k(self, k: int) -> "RoiPairing":
        """Keep only the k most similar pairs (pairs are already sorted)."""
        return RoiPairing(self.pairs[:k], self.epsilon_used)


@dataclass(frozen=True)
class DisplacementField:
    """Per-voxel displacement vectors on a reference grid.

    ``vectors`` has shape (d, *dims), component-major: ``vectors[c]`` is the
    displacement along axis ``c`` in voxel units.  This is the dense
    correspondence representation: voxel ``v`` maps to ``v + vectors[:, v]``.
    """

    vectors: np.ndarray

    def __post_init__(self):
        vec = _frozen(np.asarray(self.vectors, dtype=np.float64))
        if vec.ndim < 3 or vec.shape[0] != vec.ndim - 1:
            raise DimMismatchError(
                f"vectors must have shape (d, *dims), got {vec.shape}")
        check_dims(vec.shape[1:])
        if not np.all(np.isfinite(vec)):
            raise ValueError("displacement components must be finite")
        object.__setattr__(self, "vectors", vec)

    @property
    def dims(self) -> Dims:
        return self.vectors.shape[1:]

    @property
    def ndim(self) -> int:
        return self.vectors.shape[0]

    @classmethod
    def zero(cls, dims: Sequence[int]) -> "DisplacementField":
        dims = check_dims(dims)
        return cls(np.zeros((len(dims),) + dims, dtype=np.float64))


@dataclass(frozen=True)
class AffineTransform:
    """y = A x + t mapping moving-space coordinates to fixed-space ones."""

    matrix: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        mat = _frozen(np.asarray(self.matrix, dtype=np.float64))
        t = _frozen(np.asarray(self.translation, dtype=np.float64).reshape(-1))
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] != t.shape[0]:
            raise DimMismatchError(
                f"matrix {mat.shape} and translation {t.shape} are inconsistent")
        if abs(np.linalg.det(mat)) <= 1e-12:
            raise ValueError("affine matrix is singular")
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "translation", t)

    @property
    def ndim(self) -> int:
        return self.translation.shape[0]

    @classmethod
    def identity(cls, ndim: int) -> "AffineTransform":
        return cls(np.eye(ndim), np.zeros(ndim))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map points (..., d) through the transform."""
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.matrix.T + self.translation

    def inverse(self) -> "AffineTransform":
        inv = np.linalg.inv(self.matrix)
        return AffineTransform(inv, -inv @ self.translation)


def mask_centroid(mask: BinaryMask, spacing: Optional[Sequence[float]] = None) -> np.ndarray:
    """Mean physical coordinate of the mask's true voxels.

    Raises EmptyMaskError when the mask has no true voxel.
    """
    if mask.area == 0:
        raise EmptyMaskError("centroid of an empty mask is undefined")
    spacing = check_spacing(spacing, len(mask.dims))
    coords = np.argwhere(mask.bits)
    return coords.mean(axis=0) * np.asarray(spacing)


def overlap_ratio(a: BinaryMask, b: BinaryMask) -> float:
    """|a & b| / min(|a|, |b|); 0.0 when either mask is empty.

    Equals 1.0 exactly when one nonempty mask is contained in the other,
    which is the redundancy the candidate filter removes.
    """
    if a.dims != b.dims:
        raise DimMismatchError(f"overlap_ratio dims {a.dims} vs {b.dims}")
    smaller = min(a.area, b.area)
    if smaller == 0:
        return 0.0
    inter = int(np.logical_and(a.bits, b.bits).sum())
    return inter / smaller


def mask_iou(a: BinaryMask, b: BinaryMask) -> float:
    """Intersection over union; 0.0 when both masks are empty."""
    if a.dims != b.dims:
        raise DimMismatchError(f"mask_iou dims {a.dims} vs {b.dims}")
    inter = int(np.logical_and(a.bits, b.bits).sum())
    union = a.area + b.area - inter
    return inter / union if union else 0.0
