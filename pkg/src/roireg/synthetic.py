"""Ground-truth-known test case generation.

Builds paired cases from simple rasterized shapes: the moving image holds
the shapes in place, the fixed image holds the same shapes mapped through a
known affine transform, and a mock feature map assigns each shape an
orthonormal feature vector so prototype matching has a provable answer.
The generator is fully determined by the spec (seeded PCG64).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .core import (AffineTransform, BinaryMask, FeatureMap, Image, MaskMeta,
                   MaskSet, check_dims, check_spacing, mask_centroid)
from .errors import OutOfBoundsError, ShapePlacementError
from .pipeline import downsample_mask

SHAPE_KINDS = ("disc", "box", "ellipse")
_KIND_ALIASES = {"sphere": "disc", "ellipsoid": "ellipse"}

CaseTriple = Tuple[Image, FeatureMap, MaskSet]


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for one moving/fixed case pair.

    ``size_frac`` bounds shape radii as a fraction of the smallest grid
    axis; the defaults keep areas inside the standard candidate filter
    window on 64x64 and 32x32x32 grids.  ``feature_channels`` defaults to
    num_shapes + 1 (one direction per shape plus background).
    """

    dims: Tuple[int, ...]
    num_shapes: int = 3
    shape_kinds: Tuple[str, ...] = ("disc",)
    transform: Optional[AffineTransform] = None
    feature_channels: Optional[int] = None
    feature_noise_sigma: float = 0.0
    seed: int = 0
    spacing: Optional[Tuple[float, ...]] = None
    feature_stride: int = 4
    size_frac: Tuple[float, float] = (0.14, 0.20)
    max_attempts: int = 400

    def __post_init__(self):
        dims = check_dims(self.dims)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", check_spacing(self.spacing, len(dims)))
        if self.num_shapes < 1:
            raise ValueError("num_shapes must be >= 1")
        kinds = tuple(_KIND_ALIASES.get(k, k) for k in self.shape_kinds)
        if not kinds or any(k not in SHAPE_KINDS for k in kinds):
            raise ValueError(f"shape_kinds must be a nonempty subset of {SHAPE_KINDS}")
        object.__setattr__(self, "shape_kinds", kinds)
        transform = self.transform or AffineTransform.identity(len(dims))
        if transform.ndim != len(dims):
            raise ValueError("transform dimensionality does not match dims")
        object.__setattr__(self, "transform", transform)
        channels = self.feature_channels
        if channels is None:
            channels = self.num_shapes + 1
        if channels < self.num_shapes + 1:
            raise ValueError("feature_channels must be >= num_shapes + 1")
        object.__setattr__(self, "feature_channels", int(channels))
        if self.feature_noise_sigma < 0:
            raise ValueError("feature_noise_sigma must be >= 0")
        if self.feature_stride < 1 or self.feature_stride > min(dims):
            raise ValueError("feature_stride must be in [1, min(dims)]")
        lo, hi = self.size_frac
        if not 0 < lo <= hi < 0.5:
            raise ValueError("size_frac must satisfy 0 < lo <= hi < 0.5")

    @property
    def feature_dims(self) -> Tuple[int, ...]:
        return tuple(max(1, n // self.feature_stride) for n in self.dims)


@dataclass(frozen=True)
class GroundTruth:
    """What the generator knows: the true matching and motion.

    ``pair_permutation[s]`` gives (position in moving mask list, position in
    fixed mask list) of shape s.  Centroids are per canonical shape, in
    physical units.
    """

    pair_permutation: Tuple[Tuple[int, int], ...]
    transform: AffineTransform
    moving_centroids: np.ndarray
    fixed_centroids: np.ndarray

    def __post_init__(self):
        for name in ("moving_centroids", "fixed_centroids"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def to_json_dict(self) -> dict:
        return {
            "pair_permutation": [list(p) for p in self.pair_permutation],
            "transform_matrix": self.transform.matrix.tolist(),
            "transform_translation": self.transform.translation.tolist(),
            "moving_centroids": np.asarray(self.moving_centroids).tolist(),
            "fixed_centroids": np.asarray(self.fixed_centroids).tolist(),
        }


def _inside(kind: str, params: Dict[str, np.ndarray], pts: np.ndarray) -> np.ndarray:
    center = np.asarray(params["center"], dtype=np.float64)
    rel = pts - center
    if kind == "disc":
        r = float(params["radius"])
        return (rel * rel).sum(axis=1) <= r * r
    if kind == "box":
        half = np.asarray(params["half_sizes"], dtype=np.float64)
        return (np.abs(rel) <= half).all(axis=1)
    if kind == "ellipse":
        axes = np.asarray(params["semi_axes"], dtype=np.float64)
        scaled = rel / axes
        return (scaled * scaled).sum(axis=1) <= 1.0
    raise ValueError(f"unknown shape kind {kind!r}")


def rasterize_shape(kind: str, params: Dict[str, object], dims: Sequence[int],
                    transform: Optional[AffineTransform] = None) -> BinaryMask:
    """Inside-test rasterization at voxel centers.

    With a transform given, the shape is defined in a source space and the
    grid voxels are pulled back through the inverse before the inside test,
    so the mask shows the shape as mapped *into* this grid.
    """
    kind = _KIND_ALIASES.get(kind, kind)
    dims = check_dims(dims)
    center = np.asarray(params["center"], dtype=np.float64).reshape(-1)
    if center.shape[0] != len(dims):
        raise OutOfBoundsError(f"center {center} does not match dims {dims}")
    placed = transform.apply(center) if transform is not None else center
    if (placed < 0).any() or (placed > np.asarray(dims) - 1).any():
        raise OutOfBoundsError(f"shape center {placed} lies outside grid {dims}")

    axes = [np.arange(n, dtype=np.float64) for n in dims]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    if transform is not None:
        pts = transform.inverse().apply(pts)
    return BinaryMask(_inside(kind, params, pts).reshape(dims))


def affine_about_center(dims: Sequence[int], translation: Sequence[float],
                        rot_deg: float = 0.0, scale: float = 1.0,
                        ) -> AffineTransform:
    """Affine that rotates/scales about the grid center, then translates.

    3D rotation is in-plane (about the first axis); translation is in axis
    order.
    """
    dims = check_dims(dims)
    d = len(dims)
    t = np.asarray(translation, dtype=np.float64).reshape(-1)
    if t.shape[0] != d:
        raise ValueError(f"translation must have {d} components")
    theta = np.deg2rad(rot_deg)
    rot2 = np.array([[np.cos(theta), -np.sin(theta)],
                     [np.sin(theta), np.cos(theta)]])
    mat = np.eye(d)
    mat[d - 2:, d - 2:] = rot2
    mat *= scale
    center = (np.asarray(dims, dtype=np.float64) - 1.0) / 2.0
    return AffineTransform(mat, center - mat @ center + t)


def _touches_border(bits: np.ndarray) -> bool:
    for axis in range(bits.ndim):
        if bits.take(0, axis=axis).any() or bits.take(-1, axis=axis).any():
            return True
    return False


def _random_params(kind: str, size: float, d: int,
                   rng: np.random.Generator) -> Dict[str, object]:
    if kind == "disc":
        return {"radius": size}
    if kind == "box":
        return {"half_sizes": size * rng.uniform(0.8, 1.2, size=d)}
    return {"semi_axes": size * rng.uniform(0.7, 1.3, size=d)}


def generate_case(spec: SyntheticSpec) -> Tuple[CaseTriple, CaseTriple, GroundTruth]:
    """Generate the (moving, fixed, ground truth) triple for a spec.

    Shapes are placed so that no feature cell is touched by two shapes on
    either side; that guarantees each shape's pooled prototype is exactly
    its assigned unit vector at noise 0.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    dims = spec.dims
    d = len(dims)
    grid_dims = spec.feature_dims

    shape_masks_m = []
    shape_masks_f = []
    occupancy_m = []
    occupancy_f = []
    for _ in range(spec.num_shapes):
        placed = False
        for attempt in range(spec.max_attempts):
            shrink = 0.97 ** (attempt // 20)
            kind = spec.shape_kinds[int(rng.integers(len(spec.shape_kinds)))]
            size = rng.uniform(*spec.size_frac) * min(dims) * shrink
            params = _random_params(kind, size, d, rng)
            margin = 1.3 * size + 1.0
            if any(margin >= (n - 1) / 2.0 for n in dims):
                continue
            params["center"] = np.array(
                [rng.uniform(margin, n - 1 - margin) for n in dims])
            try:
                mask_m = rasterize_shape(kind, params, dims)
                mask_f = rasterize_shape(kind, params, dims, spec.transform)
            except OutOfBoundsError:
                continue
            if mask_m.area == 0 or mask_f.area == 0:
                continue
            if _touches_border(mask_m.bits) or _touches_border(mask_f.bits):
                continue
            occ_m = downsample_mask(mask_m, grid_dims) > 0
            occ_f = downsample_mask(mask_f, grid_dims) > 0
            if any((occ_m & prev).any() for prev in occupancy_m):
                continue
            if any((occ_f & prev).any() for prev in occupancy_f):
                continue
            shape_masks_m.append(mask_m)
            shape_masks_f.append(mask_f)
            occupancy_m.append(occ_m)
            occupancy_f.append(occ_f)
            placed = True
            break
        if not placed:
            raise ShapePlacementError(
                f"could not place shape {len(shape_masks_m)} after "
                f"{spec.max_attempts} attempts (grid {dims} too crowded)")

    order_m = rng.permutation(spec.num_shapes)
    order_f = rng.permutation(spec.num_shapes)
    pos_m = np.argsort(order_m)
    pos_f = np.argsort(order_f)

    # Orthonormal feature directions: columns of a seeded random rotation.
    basis = np.linalg.qr(rng.standard_normal((spec.feature_channels,
                                              spec.feature_channels)))[0]
    shape_vecs = [basis[:, s] for s in range(spec.num_shapes)]
    background = basis[:, spec.num_shapes]

    def features_for(occupancy) -> np.ndarray:
        feat = np.tile(background.reshape((-1,) + (1,) * len(grid_dims)),
                       (1,) + grid_dims).astype(np.float64)
        for s, occ in enumerate(occupancy):
            feat[:, occ] = shape_vecs[s][:, np.newaxis]
        if spec.feature_noise_sigma > 0:
            feat = feat + spec.feature_noise_sigma * rng.standard_normal(feat.shape)
        return feat

    feat_m = features_for(occupancy_m)
    feat_f = features_for(occupancy_f)

    def image_for(masks) -> Image:
        data = np.zeros(dims, dtype=np.float64)
        for s, mask in enumerate(masks):
            data[mask.bits] = (s + 1) / (spec.num_shapes + 1)
        return Image(data, spacing=spec.spacing)

    def case_for(masks, order, feat) -> CaseTriple:
        ordered = [masks[k] for k in order]
        meta = [MaskMeta() for _ in ordered]
        return (image_for(masks), FeatureMap(feat), MaskSet(tuple(ordered), tuple(meta)))

    moving = case_for(shape_masks_m, order_m, feat_m)
    fixed = case_for(shape_masks_f, order_f, feat_f)

    truth = GroundTruth(
        pair_permutation=tuple(
            (int(pos_m[s]), int(pos_f[s])) for s in range(spec.num_shapes)),
        transform=spec.transform,
        moving_centroids=np.stack(
            [mask_centroid(m, spec.spacing) for m in shape_masks_m]),
        fixed_centroids=np.stack(
            [mask_centroid(m, spec.spacing) for m in shape_masks_f]),
    )
    return moving, fixed, truth
