"""Case-directory format: golden bytes, canonical manifest, typed failures."""

import json

import numpy as np
import pytest

from roireg import (BinaryMask, CaseManifest, FeatureMap, Image,
                    InconsistentDimsError, ManifestParseError, MaskMeta,
                    MaskSet, MissingFileError, SizeMismatchError,
                    UnsupportedVersionError, build_manifest, manifest_to_json,
                    parse_manifest, read_case, read_manifest, save_case,
                    write_case)


def small_case(dims=(2, 3), channels=2, num_masks=2, rng=None):
    rng = rng or np.random.default_rng(7)
    image = Image(rng.standard_normal(dims), spacing=(1.5,) * len(dims))
    features = FeatureMap(rng.standard_normal((channels,) + dims))
    masks = MaskSet(
        tuple(BinaryMask(rng.random(dims) < 0.5) for _ in range(num_masks)),
        tuple(MaskMeta(predicted_iou=0.5 + 0.1 * i) for i in range(num_masks)),
    )
    return image, features, masks


class TestGoldenBytes:
    def test_image_raw_is_little_endian_float32_row_major(self, tmp_path):
        image = Image(np.array([[0.0, 1.0], [2.0, 3.0]]))
        features = FeatureMap(np.zeros((1, 2, 2)))
        masks = MaskSet((BinaryMask(np.ones((2, 2), dtype=bool)),))
        save_case(tmp_path, "moving", image, features, masks)
        raw = (tmp_path / "image.raw").read_bytes()
        assert raw.hex() == "000000000000803f0000004000004040"

    def test_mask_raw_is_one_byte_per_voxel(self, tmp_path):
        image = Image(np.zeros((2, 2)))
        features = FeatureMap(np.zeros((1, 2, 2)))
        bits = np.array([[True, False], [False, True]])
        masks = MaskSet((BinaryMask(bits),))
        save_case(tmp_path, "fixed", image, features, masks)
        raw = (tmp_path / "mask_000.raw").read_bytes()
        assert raw == b"\x01\x00\x00\x01"
        assert set(raw) <= {0, 1}

    def test_features_raw_channel_major(self, tmp_path):
        image = Image(np.zeros((2, 2)))
        feat = np.arange(8, dtype=np.float32).reshape(2, 2, 2)
        features = FeatureMap(feat)
        masks = MaskSet((BinaryMask(np.ones((2, 2), dtype=bool)),))
        save_case(tmp_path, "moving", image, features, masks)
        raw = (tmp_path / "features.raw").read_bytes()
        assert np.array_equal(
            np.frombuffer(raw, dtype="<f4").reshape(2, 2, 2), feat)


class TestManifestCanonicalForm:
    def test_sorted_keys_indent_two_trailing_newline(self):
        image, features, masks = small_case()
        text = manifest_to_json(build_manifest("moving", image, features, masks))
        assert text.endswith("}\n") and not text.endswith("\n\n")
        doc = json.loads(text)
        assert text == json.dumps(doc, sort_keys=True, indent=2) + "\n"
        keys = list(json.loads(text, object_pairs_hook=lambda p: [k for k, _ in p]))
        assert keys == sorted(keys)

    def test_serialization_round_trips_exactly(self):
        image, features, masks = small_case(dims=(3, 4, 5))
        manifest = build_manifest("fixed", image, features, masks)
        assert parse_manifest(manifest_to_json(manifest)) == manifest

    def test_manifest_is_utf8(self, tmp_path):
        image, features, masks = small_case()
        save_case(tmp_path, "moving", image, features, masks)
        raw = (tmp_path / "manifest.json").read_bytes()
        raw.decode("utf-8")
        assert parse_manifest(raw) == build_manifest("moving", image, features, masks)


class TestRoundTrip:
    @pytest.mark.parametrize("dims", [(2, 3), (4, 5), (2, 3, 4)])
    def test_write_then_read_preserves_everything(self, tmp_path, dims):
        image, features, masks = small_case(dims=dims, channels=3, num_masks=3)
        manifest = save_case(tmp_path, "moving", image, features, masks)
        assert read_manifest(tmp_path) == manifest
        image2, features2, masks2 = read_case(tmp_path)
        assert np.array_equal(image2.data, image.data)
        assert image2.spacing == image.spacing
        assert np.array_equal(features2.data, features.data)
        assert len(masks2) == len(masks)
        for a, b in zip(masks2, masks):
            assert np.array_equal(a.bits, b.bits)
        assert masks2.meta == masks.meta

    def test_meta_fields_survive(self, tmp_path):
        image = Image(np.zeros((2, 2)))
        features = FeatureMap(np.zeros((1, 2, 2)))
        meta = (MaskMeta(predicted_iou=0.75, stability_score=0.5),
                MaskMeta())
        masks = MaskSet((BinaryMask(np.ones((2, 2), dtype=bool)),
                         BinaryMask(np.eye(2, dtype=bool))), meta)
        save_case(tmp_path, "fixed", image, features, masks)
        _, _, masks2 = read_case(tmp_path)
        assert masks2.meta == meta

    def test_3d_per_slice_masks(self, tmp_path):
        rng = np.random.default_rng(11)
        dims = (4, 3, 3)
        image = Image(rng.standard_normal(dims))
        features = FeatureMap(rng.standard_normal((2,) + dims))
        meta = (MaskMeta(source_slice=0), MaskMeta(source_slice=3))
        masks = MaskSet((BinaryMask(rng.random(dims[1:]) < 0.5),
                         BinaryMask(rng.random(dims[1:]) < 0.5)), meta)
        manifest = save_case(tmp_path, "moving", image, features, masks)
        assert manifest.mask_is_slice(0) and manifest.mask_dims(0) == dims[1:]
        _, _, masks2 = read_case(tmp_path)
        assert masks2[0].dims == dims[1:]
        assert np.array_equal(masks2[1].bits, masks[1].bits)


class TestFailureModes:
    def test_missing_referenced_file_names_the_file(self, tmp_path):
        image, features, masks = small_case()
        save_case(tmp_path, "moving", image, features, masks)
        (tmp_path / "mask_001.raw").unlink()
        with pytest.raises(MissingFileError, match="mask_001.raw"):
            read_case(tmp_path)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(MissingFileError, match="manifest.json"):
            read_manifest(tmp_path)

    def test_truncated_raw_file(self, tmp_path):
        image, features, masks = small_case()
        save_case(tmp_path, "moving", image, features, masks)
        path = tmp_path / "image.raw"
        path.write_bytes(path.read_bytes()[:-1])
        with pytest.raises(SizeMismatchError, match="bytes"):
            read_case(tmp_path)

    def test_oversized_raw_file(self, tmp_path):
        image, features, masks = small_case()
        save_case(tmp_path, "moving", image, features, masks)
        path = tmp_path / "features.raw"
        path.write_bytes(path.read_bytes() + b"\x00")
        with pytest.raises(SizeMismatchError):
            read_case(tmp_path)

    def test_unsupported_version(self):
        image, features, masks = small_case()
        doc = json.loads(manifest_to_json(build_manifest("moving", image,
                                                         features, masks)))
        doc["version"] = 99
        with pytest.raises(UnsupportedVersionError, match="99"):
            parse_manifest(json.dumps(doc))

    def test_invalid_json(self):
        with pytest.raises(ManifestParseError):
            parse_manifest("{not json")

    def test_non_object_json(self):
        with pytest.raises(ManifestParseError):
            parse_manifest("[1, 2, 3]")

    @pytest.mark.parametrize("key", ["role", "image_ref", "mask_refs", "dims",
                                     "spacing", "feature_dims",
                                     "feature_channels", "mask_meta"])
    def test_missing_key(self, key):
        image, features, masks = small_case()
        doc = json.loads(manifest_to_json(build_manifest("moving", image,
                                                         features, masks)))
        del doc[key]
        with pytest.raises(ManifestParseError, match=key):
            parse_manifest(json.dumps(doc))

    def test_meta_out_of_range(self):
        image, features, masks = small_case()
        doc = json.loads(manifest_to_json(build_manifest("moving", image,
                                                         features, masks)))
        doc["mask_meta"][0]["predicted_iou"] = 1.5
        with pytest.raises(ManifestParseError, match="predicted_iou"):
            parse_manifest(json.dumps(doc))

    def test_bad_role(self):
        image, features, masks = small_case()
        doc = json.loads(manifest_to_json(build_manifest("moving", image,
                                                         features, masks)))
        doc["role"] = "template"
        with pytest.raises(ManifestParseError, match="role"):
            parse_manifest(json.dumps(doc))

    def test_mixed_slice_and_volume_masks_rejected(self):
        image, features, masks = small_case(dims=(3, 2, 2))
        meta = [{"predicted_iou": None, "stability_score": None,
                 "source_slice": s} for s in (1, None)]
        doc = json.loads(manifest_to_json(build_manifest("moving", image,
                                                         features, masks)))
        doc["mask_meta"] = meta
        with pytest.raises(ManifestParseError, match="mix"):
            parse_manifest(json.dumps(doc))

    def test_source_slice_beyond_volume(self):
        image, features, masks = small_case(dims=(3, 2, 2))
        doc = json.loads(manifest_to_json(build_manifest("moving", image,
                                                         features, masks)))
        for entry in doc["mask_meta"]:
            entry["source_slice"] = 3
        with pytest.raises(ManifestParseError, match="source_slice"):
            parse_manifest(json.dumps(doc))

    def test_writer_rejects_mismatched_image(self, tmp_path):
        image, features, masks = small_case()
        manifest = build_manifest("moving", image, features, masks)
        other = Image(np.zeros((4, 4)))
        with pytest.raises(InconsistentDimsError):
            write_case(manifest, other, features, masks, tmp_path)

    def test_writer_rejects_mismatched_mask_dims(self, tmp_path):
        image, features, masks = small_case(dims=(2, 3))
        manifest = build_manifest("moving", image, features, masks)
        bad = MaskSet((BinaryMask(np.ones((4, 4), dtype=bool)),) * len(masks),
                      masks.meta)
        with pytest.raises(InconsistentDimsError):
            write_case(manifest, image, features, bad, tmp_path)

    def test_manifest_rejects_ref_meta_length_mismatch(self):
        with pytest.raises(ManifestParseError):
            CaseManifest(version=1, role="moving", image_ref="image.raw",
                         feature_ref="features.raw", mask_refs=("a.raw",),
                         mask_meta=(), dims=(2, 2), spacing=(1.0, 1.0),
                         feature_dims=(1, 1), feature_channels=1)


def test_fuzzed_round_trips_are_lossless(tmp_path):
    rng = np.random.default_rng(20240817)
    for trial in range(25):
        ndim = int(rng.integers(2, 4))
        dims = tuple(int(rng.integers(1, 7)) for _ in range(ndim))
        channels = int(rng.integers(1, 5))
        num_masks = int(rng.integers(0, 4))
        image = Image(rng.standard_normal(dims).astype(np.float32),
                      spacing=tuple(float(s) for s in rng.uniform(0.2, 3.0, ndim)))
        fdims = tuple(max(1, n // 2) for n in dims)
        features = FeatureMap(rng.standard_normal((channels,) + fdims))
        masks = MaskSet(
            tuple(BinaryMask(rng.random(dims) < rng.uniform(0.2, 0.8))
                  for _ in range(num_masks)),
            tuple(MaskMeta(predicted_iou=float(rng.uniform(0, 1)))
                  for _ in range(num_masks)))
        case = tmp_path / f"case_{trial:02d}"
        save_case(case, "moving" if trial % 2 else "fixed", image, features, masks)
        image2, features2, masks2 = read_case(case)
        assert np.array_equal(image2.data, image.data)
        assert image2.spacing == image.spacing
        assert np.array_equal(features2.data, features.data)
        assert all(np.array_equal(a.bits, b.bits)
                   for a, b in zip(masks2, masks))
        assert masks2.meta == masks.meta
