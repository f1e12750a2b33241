"""Candidate filtering, prototype embedding, similarity, and ROI matching.

The pipeline turns two candidate mask sets (one per image) into a
:class:`~roireg.core.RoiPairing`:

1. ``filter_rois``       — drop outliers by area, quality scores, and overlap;
2. ``compute_prototype`` — mask-weighted average pooling over the feature map;
3. ``similarity_matrix`` — pairwise |cosine| between prototypes;
4. ``match_rois``        — greedy threshold-constrained one-to-one matching.

For 3D volumes segmented slice by slice, ``stack_slices_to_3d`` assembles 2D
candidates into 3D ones before the steps above.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ._parallel import thread_map
from .core import (BinaryMask, Dims, FeatureMap, Image, MaskMeta, MaskSet,
                   Prototype, RoiPair, RoiPairing, mask_iou, overlap_ratio)
from .errors import (ChannelMismatchError, DegenerateMaskError,
                     DimMismatchError, SliceOutOfRangeError)

log = logging.getLogger(__name__)

# Weight-sum floor below which a mask is considered to vanish at feature
# resolution, and norm floor below which a prototype has no direction.
DEGENERATE_EPS = 1e-12


@dataclass(frozen=True)
class FilterConfig:
    """Candidate outlier-removal settings (defaults follow the reference
    segmenter configuration: area window 200..7000, overlap cap 0.8,
    quality thresholds 0.90)."""

    min_area: int = 200
    max_area: int = 7000
    max_overlap: float = 0.8
    min_pred_iou: float = 0.90
    min_stability: float = 0.90

    def __post_init__(self):
        if self.min_area > self.max_area:
            raise ValueError(f"min_area {self.min_area} > max_area {self.max_area}")
        if not 0.0 <= self.max_overlap <= 1.0:
            raise ValueError(f"max_overlap must be in [0, 1], got {self.max_overlap}")


@dataclass(frozen=True)
class SimilarityMatrix:
    """Prototype similarity S with entries in [0, 1], shape (K^x, K^y)."""

    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DimMismatchError(f"similarity matrix must be 2D, got {values.shape}")
        if values.size and (values.min() < 0.0 or values.max() > 1.0):
            raise ValueError("similarity entries must lie in [0, 1]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


def _quality_key(meta: MaskMeta, mask: BinaryMask, index: int):
    # Higher tuple wins; unscored masks rank below any scored one.
    iou = meta.predicted_iou if meta.predicted_iou is not None else -1.0
    return (iou, mask.area, -index)


def filter_roi_indices(masks: MaskSet, cfg: FilterConfig) -> List[int]:
    """Indices (ascending) of the masks that survive the outlier filter.

    Rules, in order: (a) area inside [min_area, max_area]; (b) quality
    thresholds when the scores are present; (c) among surviving masks that
    overlap more than max_overlap, only the highest-quality one is kept
    (quality = predicted_iou, then larger area, then lower index).
    """
    survivors = []
    for i, (mask, meta) in enumerate(zip(masks.masks, masks.meta)):
        if not cfg.min_area <= mask.area <= cfg.max_area:
            continue
        if meta.predicted_iou is not None and meta.predicted_iou < cfg.min_pred_iou:
            continue
        if meta.stability_score is not None and meta.stability_score < cfg.min_stability:
            continue
        survivors.append(i)

    by_quality = sorted(
        survivors, key=lambda i: _quality_key(masks.meta[i], masks.masks[i], i),
        reverse=True)
    kept: List[int] = []
    for i in by_quality:
        if all(overlap_ratio(masks.masks[i], masks.masks[j]) <= cfg.max_overlap
               for j in kept):
            kept.append(i)
    return sorted(kept)


def filter_rois(masks: MaskSet, cfg: Optional[FilterConfig] = None) -> MaskSet:
    """Apply the outlier filter, preserving the original relative order."""
    cfg = cfg or FilterConfig()
    kept = filter_roi_indices(masks, cfg)
    return MaskSet(tuple(masks.masks[i] for i in kept),
                   tuple(masks.meta[i] for i in kept))


def _block_edges(n: int, m: int) -> np.ndarray:
    # Cell i covers input indices [floor(i*n/m), floor((i+1)*n/m)): a
    # partition into m blocks whose sizes differ by at most one.
    return (np.arange(m + 1, dtype=np.int64) * n) // m


def downsample_mask(mask: BinaryMask, grid_dims: Sequence[int]) -> np.ndarray:
    """Area-average the mask onto a coarser grid; entries are coverage
    fractions in [0, 1].  Fractional weights keep thin structures alive
    where nearest-neighbor resizing would drop them."""
    grid_dims = tuple(int(g) for g in grid_dims)
    if len(grid_dims) != len(mask.dims):
        raise DimMismatchError(
            f"grid rank {len(grid_dims)} vs mask rank {len(mask.dims)}")
    for g, n in zip(grid_dims, mask.dims):
        if g <= 0 or g > n:
            raise DimMismatchError(
                f"grid dims {grid_dims} must be in [1, mask dims {mask.dims}]")

    out = mask.bits.astype(np.float64)
    sizes = 1.0
    for axis, (n, m) in enumerate(zip(mask.dims, grid_dims)):
        edges = _block_edges(n, m)
        out = np.add.reduceat(out, edges[:-1], axis=axis)
        block = np.diff(edges).astype(np.float64)
        sizes = sizes * block.reshape((-1,) + (1,) * (len(mask.dims) - 1 - axis))
    return out / sizes


def compute_prototype(mask: BinaryMask, features: FeatureMap) -> Prototype:
    """Mask-weighted average of feature vectors: sum(w * F) / sum(w), with
    weights from ``downsample_mask`` at the feature grid's resolution."""
    weights = downsample_mask(mask, features.grid_dims)
    total = float(weights.sum())
    if total < DEGENERATE_EPS:
        raise DegenerateMaskError(
            f"mask (area {mask.area}) vanishes on feature grid {features.grid_dims}")
    feats = features.data.astype(np.float64, copy=False)
    vec = np.tensordot(feats, weights, axes=(tuple(range(1, feats.ndim)),
                                             tuple(range(weights.ndim))))
    return Prototype(vec / total)


def compute_prototypes(masks: MaskSet, features: FeatureMap,
                       ) -> Tuple[List[Prototype], List[int]]:
    """Prototypes for every mask in the set, skipping degenerate ones.

    Returns (prototypes, indices of the masks they came from).  A single
    vanishing candidate must not abort registration, so degenerate masks are
    dropped here with a log line instead of raising.
    """
    def one(i):
        try:
            return compute_prototype(masks.masks[i], features)
        except DegenerateMaskError:
            return None

    results = thread_map(one, range(len(masks)))
    protos, kept = [], []
    for i, proto in enumerate(results):
        if proto is None:
            log.warning("dropping mask %d: degenerate at feature resolution", i)
            continue
        protos.append(proto)
        kept.append(i)
    return protos, kept


def similarity_matrix(protos_x: Sequence[Prototype],
                      protos_y: Sequence[Prototype]) -> SimilarityMatrix:
    """S(i, j) = |cosine(p_i^x, p_j^y)|, mapped into [0, 1].

    The absolute value makes antiparallel prototypes score 1; a prototype
    with vanishing norm scores 0 against everything.
    """
    channels = {p.channels for p in protos_x} | {p.channels for p in protos_y}
    if len(channels) > 1:
        raise ChannelMismatchError(f"mixed prototype channel counts: {channels}")
    c = channels.pop() if channels else 0
    x = np.array([p.vec for p in protos_x], dtype=np.float64).reshape(len(protos_x), c)
    y = np.array([p.vec for p in protos_y], dtype=np.float64).reshape(len(protos_y), c)
    nx = np.linalg.norm(x, axis=1)
    ny = np.linalg.norm(y, axis=1)
    denom = np.outer(nx, ny)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.abs(x @ y.T) / denom
    s[denom < DEGENERATE_EPS] = 0.0
    return SimilarityMatrix(np.clip(s, 0.0, 1.0))


def _greedy_indices(values: np.ndarray, epsilon: float) -> List[Tuple[int, int]]:
    i_idx, j_idx = np.nonzero(values > epsilon)
    if i_idx.size == 0:
        return []
    sims = values[i_idx, j_idx]
    # Descending similarity; ties broken by ascending (i, j).
    order = np.lexsort((j_idx, i_idx, -sims))
    used_i, used_j, accepted = set(), set(), []
    for n in order:
        i, j = int(i_idx[n]), int(j_idx[n])
        if i in used_i or j in used_j:
            continue
        used_i.add(i)
        used_j.add(j)
        accepted.append((i, j))
    return accepted


def _optimal_indices(values: np.ndarray, epsilon: float) -> List[Tuple[int, int]]:
    from scipy.optimize import linear_sum_assignment

    if values.size == 0:
        return []
    rows, cols = linear_sum_assignment(values, maximize=True)
    accepted = [(int(i), int(j)) for i, j in zip(rows, cols)
                if values[i, j] > epsilon]
    accepted.sort(key=lambda ij: (-values[ij], ij))
    return accepted


def match_rois(masks_x: MaskSet, masks_y: MaskSet, s: SimilarityMatrix,
               epsilon: float, method: str = "greedy") -> RoiPairing:
    """Select index pairs with similarity above epsilon, each index used at
    most once, preferring the most similar pairs first.

    ``method="greedy"`` is the contract (descending-similarity selection
    with lexicographic tie-breaks); ``"optimal"`` solves the assignment
    problem instead and exists for comparison runs.
    """
    if s.rows != len(masks_x) or s.cols != len(masks_y):
        raise DimMismatchError(
            f"similarity {s.rows}x{s.cols} vs mask sets {len(masks_x)}/{len(masks_y)}")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    if method == "greedy":
        accepted = _greedy_indices(s.values, epsilon)
    elif method == "optimal":
        accepted = _optimal_indices(s.values, epsilon)
    else:
        raise ValueError(f"unknown matching method {method!r}")

    pairs = tuple(
        RoiPair(moving_index=i, fixed_index=j, similarity=float(s.values[i, j]),
                moving_mask=masks_x.masks[i], fixed_mask=masks_y.masks[j])
        for i, j in accepted)
    return RoiPairing(pairs, epsilon_used=float(epsilon))


def stack_slices_to_3d(per_slice_masks: Sequence[Tuple[int, MaskSet]],
                       volume_dims: Sequence[int],
                       min_link_iou: float = 0.5) -> MaskSet:
    """Chain-link 2D candidates across adjacent slices into 3D candidates.

    A mask on slice z links to the unclaimed mask on slice z+1 with maximal
    in-plane IoU when that IoU >= min_link_iou; maximal chains become single
    3D masks (single-slice chains included).  Quality metadata is averaged
    over chain members; source_slice is dropped since the result spans
    several slices.
    """
    volume_dims = tuple(int(n) for n in volume_dims)
    if len(volume_dims) != 3:
        raise DimMismatchError(f"volume dims must be 3D, got {volume_dims}")
    in_plane = volume_dims[1:]
    nz = volume_dims[0]

    slices = sorted(per_slice_masks, key=lambda zm: zm[0])
    seen = set()
    for z, mask_set in slices:
        if not 0 <= z < nz:
            raise SliceOutOfRangeError(f"slice {z} outside volume of {nz} slices")
        if z in seen:
            raise SliceOutOfRangeError(f"slice {z} appears twice")
        seen.add(z)
        for mask in mask_set:
            if mask.dims != in_plane:
                raise DimMismatchError(
                    f"slice {z} mask dims {mask.dims} vs in-plane {in_plane}")

    chains: List[List[Tuple[int, int]]] = []  # members as (z, mask idx in slice)
    open_chains: dict = {}  # chain id -> tail (z, mask)
    sets_by_z = dict(slices)

    prev_z = None
    for z, mask_set in slices:
        claimed = [False] * len(mask_set)
        if prev_z is not None and z == prev_z + 1:
            for cid in sorted(open_chains):
                tail_z, tail = open_chains[cid]
                if tail_z != prev_z:
                    continue
                best_j, best_iou = -1, 0.0
                for j, cand in enumerate(mask_set):
                    if claimed[j]:
                        continue
                    iou = mask_iou(tail, cand)
                    if iou > best_iou:
                        best_j, best_iou = j, iou
                if best_j >= 0 and best_iou >= min_link_iou:
                    claimed[best_j] = True
                    chains[cid].append((z, best_j))
                    open_chains[cid] = (z, mask_set.masks[best_j])
        for j, mask in enumerate(mask_set.masks):
            if not claimed[j]:
                cid = len(chains)
                chains.append([(z, j)])
                open_chains[cid] = (z, mask)
        prev_z = z

    out_masks, out_meta = [], []
    for members in chains:
        bits = np.zeros(volume_dims, dtype=bool)
        ious, stabs = [], []
        for z, j in members:
            mask_set = sets_by_z[z]
            bits[z] |= mask_set.masks[j].bits
            meta = mask_set.meta[j]
            if meta.predicted_iou is not None:
                ious.append(meta.predicted_iou)
            if meta.stability_score is not None:
                stabs.append(meta.stability_score)
        out_masks.append(BinaryMask(bits))
        out_meta.append(MaskMeta(
            predicted_iou=float(np.mean(ious)) if ious else None,
            stability_score=float(np.mean(stabs)) if stabs else None,
            source_slice=None))
    return MaskSet(tuple(out_masks), tuple(out_meta))


def assemble_candidates(image: Image, masks: MaskSet,
                        min_link_iou: float = 0.5) -> MaskSet:
    """Return the candidate set for matching: for 3D cases delivered as 2D
    per-slice masks, stack them into 3D; otherwise pass through."""
    if not masks.masks or masks.dims == image.dims:
        return masks
    if len(image.dims) == 3 and len(masks.dims) == 2:
        by_slice: dict = {}
        for mask, meta in zip(masks.masks, masks.meta):
            if meta.source_slice is None:
                raise DimMismatchError(
                    "2D masks in a 3D case must carry source_slice metadata")
            by_slice.setdefault(meta.source_slice, ([], []))
            by_slice[meta.source_slice][0].append(mask)
            by_slice[meta.source_slice][1].append(meta)
        per_slice = [(z, MaskSet(tuple(m), tuple(t)))
                     for z, (m, t) in sorted(by_slice.items())]
        return stack_slices_to_3d(per_slice, image.dims, min_link_iou)
    raise DimMismatchError(
        f"mask dims {masks.dims} do not fit image dims {image.dims}")


@dataclass(frozen=True)
class MatchStats:
    """Per-stage candidate counts, for run records and logs."""

    moving_candidates: int
    fixed_candidates: int
    moving_filtered: int
    fixed_filtered: int
    moving_embedded: int
    fixed_embedded: int
    pairs: int


def match_cases(moving: Tuple[Image, FeatureMap, MaskSet],
                fixed: Tuple[Image, FeatureMap, MaskSet],
                filter_cfg: Optional[FilterConfig] = None,
                epsilon: float = 0.8,
                method: str = "greedy",
                min_link_iou: float = 0.5) -> Tuple[RoiPairing, MatchStats]:
    """Full matching pipeline on two in-memory cases.

    Pair indices in the result refer to the candidate sets after slice
    stacking but before filtering, i.e. to the mask order of the case as
    read (stable across filter settings).
    """
    filter_cfg = filter_cfg or FilterConfig()
    img_x, feat_x, raw_x = moving
    img_y, feat_y, raw_y = fixed
    cand_x = assemble_candidates(img_x, raw_x, min_link_iou)
    cand_y = assemble_candidates(img_y, raw_y, min_link_iou)

    surv_x = filter_roi_indices(cand_x, filter_cfg)
    surv_y = filter_roi_indices(cand_y, filter_cfg)
    sub_x = MaskSet(tuple(cand_x.masks[i] for i in surv_x),
                    tuple(cand_x.meta[i] for i in surv_x))
    sub_y = MaskSet(tuple(cand_y.masks[i] for i in surv_y),
                    tuple(cand_y.meta[i] for i in surv_y))

    protos_x, kept_x = compute_prototypes(sub_x, feat_x)
    protos_y, kept_y = compute_prototypes(sub_y, feat_y)
    emb_x = MaskSet(tuple(sub_x.masks[i] for i in kept_x),
                    tuple(sub_x.meta[i] for i in kept_x))
    emb_y = MaskSet(tuple(sub_y.masks[i] for i in kept_y),
                    tuple(sub_y.meta[i] for i in kept_y))
    idx_x = [surv_x[i] for i in kept_x]
    idx_y = [surv_y[i] for i in kept_y]

    s = similarity_matrix(protos_x, protos_y)
    local = match_rois(emb_x, emb_y, s, epsilon, method=method)
    pairs = tuple(
        RoiPair(moving_index=idx_x[p.moving_index],
                fixed_index=idx_y[p.fixed_index],
                similarity=p.similarity,
                moving_mask=p.moving_mask, fixed_mask=p.fixed_mask)
        for p in local.pairs)
    pairing = RoiPairing(pairs, epsilon_used=local.epsilon_used)
    stats = MatchStats(
        moving_candidates=len(cand_x), fixed_candidates=len(cand_y),
        moving_filtered=len(sub_x), fixed_filtered=len(sub_y),
        moving_embedded=len(emb_x), fixed_embedded=len(emb_y),
        pairs=len(pairing))
    return pairing, stats
