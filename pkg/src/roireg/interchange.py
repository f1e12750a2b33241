"""Bit-exact case-directory format shared with external segmenter tools.

Layout::

    case_dir/
      manifest.json     UTF-8, canonical key order
      image.raw         little-endian IEEE-754 float32, row-major
      features.raw      float32, channel-major then row-major spatial
      mask_000.raw      one byte per voxel (0/1), row-major
      ...

Masks are stored at full grid resolution, with one exception: in a 3D case a
mask whose metadata carries ``source_slice`` is a single 2D slice (in-plane
dims) — this is how slice-wise segmenters hand 3D volumes to the engine,
which reassembles them with ``stack_slices_to_3d``.  A 3D case must use one
convention for all its masks, never a mix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from .core import (BinaryMask, Dims, FeatureMap, Image, MaskMeta, MaskSet,
                   Spacing, check_dims, check_spacing)
from .errors import (InconsistentDimsError, ManifestParseError,
                     MissingFileError, SizeMismatchError,
                     UnsupportedVersionError)

FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.json"
ROLES = ("moving", "fixed")

_F32 = np.dtype("<f4")


@dataclass(frozen=True)
class CaseManifest:
    """Describes one case directory; the schema of manifest.json."""

    version: int
    role: str
    image_ref: str
    feature_ref: str
    mask_refs: Tuple[str, ...]
    mask_meta: Tuple[MaskMeta, ...]
    dims: Dims
    spacing: Spacing
    feature_dims: Dims
    feature_channels: int

    def __post_init__(self):
        object.__setattr__(self, "mask_refs", tuple(self.mask_refs))
        object.__setattr__(self, "mask_meta", tuple(self.mask_meta))
        if self.role not in ROLES:
            raise ManifestParseError(f"role must be one of {ROLES}, got {self.role!r}")
        if len(self.mask_refs) != len(self.mask_meta):
            raise ManifestParseError(
                f"{len(self.mask_refs)} mask_refs but {len(self.mask_meta)} mask_meta")
        object.__setattr__(self, "dims", check_dims(self.dims))
        object.__setattr__(self, "spacing", check_spacing(self.spacing, len(self.dims)))
        object.__setattr__(self, "feature_dims", check_dims(self.feature_dims))
        if len(self.feature_dims) != len(self.dims):
            raise ManifestParseError(
                f"feature_dims {self.feature_dims} vs dims {self.dims} rank mismatch")
        if self.feature_channels < 1:
            raise ManifestParseError("feature_channels must be >= 1")

    def mask_is_slice(self, i: int) -> bool:
        return len(self.dims) == 3 and self.mask_meta[i].source_slice is not None

    def mask_dims(self, i: int) -> Dims:
        return self.dims[1:] if self.mask_is_slice(i) else self.dims


def build_manifest(role: str, image: Image, features: FeatureMap,
                   masks: MaskSet) -> CaseManifest:
    """Default-named manifest for the given in-memory objects."""
    return CaseManifest(
        version=FORMAT_VERSION,
        role=role,
        image_ref="image.raw",
        feature_ref="features.raw",
        mask_refs=tuple(f"mask_{i:03d}.raw" for i in range(len(masks))),
        mask_meta=masks.meta,
        dims=image.dims,
        spacing=image.spacing,
        feature_dims=features.grid_dims,
        feature_channels=features.channels,
    )


def _meta_to_json(m: MaskMeta) -> dict:
    return {
        "predicted_iou": m.predicted_iou,
        "stability_score": m.stability_score,
        "source_slice": m.source_slice,
    }


def manifest_to_json(manifest: CaseManifest) -> str:
    """Canonical manifest serialization: sorted keys, two-space indent."""
    doc = {
        "version": manifest.version,
        "role": manifest.role,
        "image_ref": manifest.image_ref,
        "feature_ref": manifest.feature_ref,
        "mask_refs": list(manifest.mask_refs),
        "mask_meta": [_meta_to_json(m) for m in manifest.mask_meta],
        "dims": list(manifest.dims),
        "spacing": list(manifest.spacing),
        "feature_dims": list(manifest.feature_dims),
        "feature_channels": manifest.feature_channels,
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _require(doc: dict, key: str, kinds) -> object:
    if key not in doc:
        raise ManifestParseError(f"manifest is missing key {key!r}")
    value = doc[key]
    if not isinstance(value, kinds):
        raise ManifestParseError(f"manifest key {key!r} has wrong type")
    return value


def _parse_meta(entry: object) -> MaskMeta:
    if not isinstance(entry, dict):
        raise ManifestParseError("mask_meta entries must be objects")
    out = {}
    for key, kinds in (("predicted_iou", (int, float)),
                       ("stability_score", (int, float)),
                       ("source_slice", int)):
        value = entry.get(key)
        if value is not None and not isinstance(value, kinds) or isinstance(value, bool):
            raise ManifestParseError(f"mask_meta field {key!r} has wrong type")
        out[key] = value
    for key in ("predicted_iou", "stability_score"):
        if out[key] is not None and not 0.0 <= out[key] <= 1.0:
            raise ManifestParseError(f"mask_meta field {key!r} outside [0, 1]")
    return MaskMeta(**out)


def parse_manifest(text: Union[str, bytes]) -> CaseManifest:
    """Parse and validate manifest.json contents."""
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ManifestParseError(f"manifest.json is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ManifestParseError("manifest.json must contain a JSON object")

    version = _require(doc, "version", int)
    if isinstance(version, bool) or version != FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"unsupported case format version {version!r} (expected {FORMAT_VERSION})")

    def int_list(key):
        raw = _require(doc, key, list)
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in raw):
            raise ManifestParseError(f"manifest key {key!r} must be a list of ints")
        return tuple(raw)

    def float_list(key):
        raw = _require(doc, key, list)
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw):
            raise ManifestParseError(f"manifest key {key!r} must be a list of numbers")
        return tuple(float(v) for v in raw)

    mask_refs = _require(doc, "mask_refs", list)
    if not all(isinstance(r, str) for r in mask_refs):
        raise ManifestParseError("mask_refs must be a list of filenames")
    mask_meta = tuple(_parse_meta(e) for e in _require(doc, "mask_meta", list))

    fc = _require(doc, "feature_channels", int)
    if isinstance(fc, bool):
        raise ManifestParseError("feature_channels has wrong type")

    try:
        manifest = CaseManifest(
            version=version,
            role=_require(doc, "role", str),
            image_ref=_require(doc, "image_ref", str),
            feature_ref=_require(doc, "feature_ref", str),
            mask_refs=tuple(mask_refs),
            mask_meta=mask_meta,
            dims=int_list("dims"),
            spacing=float_list("spacing"),
            feature_dims=int_list("feature_dims"),
            feature_channels=fc,
        )
    except ManifestParseError:
        raise
    except Exception as exc:
        raise ManifestParseError(f"manifest is inconsistent: {exc}") from exc

    if len(manifest.dims) == 3:
        sliced = [manifest.mask_is_slice(i) for i in range(len(manifest.mask_refs))]
        if any(sliced) and not all(sliced):
            raise ManifestParseError(
                "a 3D case must not mix sliced and full-volume masks")
        for meta in manifest.mask_meta:
            s = meta.source_slice
            if s is not None and not 0 <= s < manifest.dims[0]:
                raise ManifestParseError(
                    f"source_slice {s} outside volume extent {manifest.dims[0]}")
    return manifest


def write_case(manifest: CaseManifest, image: Image, features: FeatureMap,
               masks: MaskSet, case_dir: Union[str, Path]) -> None:
    """Write a complete case directory (overwrites existing files)."""
    if image.dims != manifest.dims or image.spacing != manifest.spacing:
        raise InconsistentDimsError(
            f"image {image.dims}/{image.spacing} disagrees with manifest "
            f"{manifest.dims}/{manifest.spacing}")
    if features.grid_dims != manifest.feature_dims \
            or features.channels != manifest.feature_channels:
        raise InconsistentDimsError(
            f"features {features.channels}x{features.grid_dims} disagree with "
            f"manifest {manifest.feature_channels}x{manifest.feature_dims}")
    if len(masks) != len(manifest.mask_refs) or masks.meta != manifest.mask_meta:
        raise InconsistentDimsError("mask set does not match manifest mask entries")
    for i, mask in enumerate(masks):
        if mask.dims != manifest.mask_dims(i):
            raise InconsistentDimsError(
                f"mask {i} dims {mask.dims}, manifest expects {manifest.mask_dims(i)}")

    case_dir = Path(case_dir)
    case_dir.mkdir(parents=True, exist_ok=True)
    (case_dir / MANIFEST_NAME).write_text(manifest_to_json(manifest), encoding="utf-8")
    (case_dir / manifest.image_ref).write_bytes(
        np.ascontiguousarray(image.data, dtype=_F32).tobytes())
    (case_dir / manifest.feature_ref).write_bytes(
        np.ascontiguousarray(features.data, dtype=_F32).tobytes())
    for ref, mask in zip(manifest.mask_refs, masks):
        (case_dir / ref).write_bytes(
            np.ascontiguousarray(mask.bits, dtype=np.uint8).tobytes())


def save_case(case_dir: Union[str, Path], role: str, image: Image,
              features: FeatureMap, masks: MaskSet) -> CaseManifest:
    """Convenience wrapper: build a default manifest and write the case."""
    manifest = build_manifest(role, image, features, masks)
    write_case(manifest, image, features, masks, case_dir)
    return manifest


def _read_exact(case_dir: Path, ref: str, expected: int) -> bytes:
    path = case_dir / ref
    if not path.is_file():
        raise MissingFileError(f"case references missing file: {path}")
    raw = path.read_bytes()
    if len(raw) != expected:
        raise SizeMismatchError(
            f"{path} holds {len(raw)} bytes, expected {expected}")
    return raw


def read_manifest(case_dir: Union[str, Path]) -> CaseManifest:
    path = Path(case_dir) / MANIFEST_NAME
    if not path.is_file():
        raise MissingFileError(f"no {MANIFEST_NAME} in {case_dir}")
    return parse_manifest(path.read_bytes())


def read_case(case_dir: Union[str, Path]) -> Tuple[Image, FeatureMap, MaskSet]:
    """Read and validate a case directory written by write_case (or any tool
    following the format contract)."""
    case_dir = Path(case_dir)
    manifest = read_manifest(case_dir)

    nvox = int(np.prod(manifest.dims))
    raw = _read_exact(case_dir, manifest.image_ref, nvox * 4)
    image = Image(np.frombuffer(raw, dtype=_F32).reshape(manifest.dims),
                  spacing=manifest.spacing)

    nfeat = manifest.feature_channels * int(np.prod(manifest.feature_dims))
    raw = _read_exact(case_dir, manifest.feature_ref, nfeat * 4)
    features = FeatureMap(np.frombuffer(raw, dtype=_F32).reshape(
        (manifest.feature_channels,) + manifest.feature_dims))

    mask_list = []
    for i, ref in enumerate(manifest.mask_refs):
        dims = manifest.mask_dims(i)
        raw = _read_exact(case_dir, ref, int(np.prod(dims)))
        mask_list.append(BinaryMask(
            np.frombuffer(raw, dtype=np.uint8).reshape(dims) != 0))
    masks = MaskSet(tuple(mask_list), manifest.mask_meta)
    return image, features, masks
