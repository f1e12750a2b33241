"""Evaluation metrics: binary Dice, RMS centroid error, report assembly."""

import json

import numpy as np
import pytest

from roireg import (BinaryMask, DimMismatchError, DisplacementField,
                    EmptyListError, EmptyMaskError, EmptyPairingError,
                    FitConfig, RoiPair, RoiPairing, dice_binary, evaluate,
                    fit_ddf, tre_rms)


def voxel_mask(dims, *voxels):
    bits = np.zeros(dims, dtype=bool)
    for v in voxels:
        bits[v] = True
    return BinaryMask(bits)


def pairing_of(mask_pairs):
    pairs = tuple(
        RoiPair(moving_index=k, fixed_index=k, similarity=1.0,
                moving_mask=m, fixed_mask=f)
        for k, (m, f) in enumerate(mask_pairs))
    return RoiPairing(pairs, epsilon_used=0.0)


class TestDiceBinary:
    def test_identical_nonempty(self, rng):
        m = BinaryMask(rng.random((8, 8)) < 0.5)
        if m.area == 0:
            m = voxel_mask((8, 8), (1, 1))
        assert dice_binary(m, m) == 1.0

    def test_disjoint(self):
        a = voxel_mask((4, 4), (0, 0))
        b = voxel_mask((4, 4), (3, 3))
        assert dice_binary(a, b) == 0.0

    def test_half_overlap_is_exactly_half(self):
        bits_a = np.zeros((20, 10), dtype=bool)
        bits_a[:10] = True  # 100 voxels
        bits_b = np.zeros((20, 10), dtype=bool)
        bits_b[5:15] = True  # 100 voxels, 50 shared
        assert dice_binary(BinaryMask(bits_a), BinaryMask(bits_b)) == 0.5

    def test_empty_edge_cases(self):
        empty = BinaryMask(np.zeros((4, 4), dtype=bool))
        full = voxel_mask((4, 4), (2, 2))
        assert dice_binary(empty, BinaryMask(np.zeros((4, 4), dtype=bool))) == 1.0
        assert dice_binary(empty, full) == 0.0
        assert dice_binary(full, empty) == 0.0

    def test_symmetric(self, rng):
        a = BinaryMask(rng.random((6, 6)) < 0.4)
        b = BinaryMask(rng.random((6, 6)) < 0.4)
        assert dice_binary(a, b) == dice_binary(b, a)

    def test_one_only_for_identical_masks(self, rng):
        for _ in range(20):
            a = BinaryMask(rng.random((5, 5)) < 0.5)
            b = BinaryMask(rng.random((5, 5)) < 0.5)
            if dice_binary(a, b) == 1.0:
                assert np.array_equal(a.bits, b.bits)

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatchError):
            dice_binary(voxel_mask((4, 4), (0, 0)), voxel_mask((5, 5), (0, 0)))


class TestTreRms:
    def test_aligned_pairs_score_zero(self, rng):
        m = BinaryMask(rng.random((6, 6)) < 0.5)
        if m.area == 0:
            m = voxel_mask((6, 6), (2, 2))
        assert tre_rms([(m, m)]) == 0.0

    def test_single_pair_distance(self):
        a = voxel_mask((6, 6), (0, 0))
        b = voxel_mask((6, 6), (3, 0))
        assert tre_rms([(a, b)]) == pytest.approx(3.0, abs=1e-12)

    def test_two_pairs_rms(self):
        pairs = [
            (voxel_mask((6, 6), (0, 0)), voxel_mask((6, 6), (3, 0))),
            (voxel_mask((6, 6), (0, 0)), voxel_mask((6, 6), (0, 4))),
        ]
        assert abs(tre_rms(pairs) - np.sqrt(12.5)) <= 1e-9

    def test_spacing_scales_distances(self):
        a = voxel_mask((6, 6), (0, 0))
        b = voxel_mask((6, 6), (3, 0))
        assert tre_rms([(a, b)], spacing=(2.0, 1.0)) == pytest.approx(6.0)
        assert tre_rms([(a, b)], spacing=(1.0, 2.0)) == pytest.approx(3.0)

    def test_rigid_motion_invariance(self, rng):
        def interior_mask():
            # Confined away from the borders so np.roll acts as a pure
            # translation instead of wrapping.
            bits = np.zeros((10, 10), dtype=bool)
            bits[2:7, 2:5] = rng.random((5, 3)) < 0.5
            bits[4, 3] = True
            return BinaryMask(bits)

        a, b = interior_mask(), interior_mask()
        base = tre_rms([(a, b)])
        shift = (2, 3)
        moved = [(BinaryMask(np.roll(a.bits, shift, axis=(0, 1))),
                  BinaryMask(np.roll(b.bits, shift, axis=(0, 1))))]
        assert tre_rms(moved) == pytest.approx(base, abs=1e-12)

    def test_empty_list(self):
        with pytest.raises(EmptyListError):
            tre_rms([])

    def test_empty_mask(self):
        empty = BinaryMask(np.zeros((4, 4), dtype=bool))
        with pytest.raises(EmptyMaskError):
            tre_rms([(voxel_mask((4, 4), (0, 0)), empty)])


class TestEvaluate:
    def disc_case(self):
        yy, xx = np.mgrid[:24, :24]
        masks = []
        for cy, cx in [(8, 8), (8, 16), (16, 12)]:
            m = BinaryMask((yy - cy) ** 2 + (xx - cx) ** 2 <= 9.0)
            f = BinaryMask(np.roll(m.bits, (3, -2), axis=(0, 1)))
            masks.append((m, f))
        return pairing_of(masks)

    def test_identity_ddf_equals_no_ddf_bit_for_bit(self):
        pairing = self.disc_case()
        plain = evaluate(pairing)
        with_identity = evaluate(pairing, DisplacementField.zero((24, 24)))
        assert plain == with_identity

    def test_invariants_hold(self):
        report = evaluate(self.disc_case())
        assert report.mean_dice == pytest.approx(
            float(np.mean(report.per_roi_dice)), rel=1e-12)
        assert report.tre == pytest.approx(
            float(np.sqrt(np.mean(np.square(report.per_roi_centroid_dist)))),
            rel=1e-12)
        assert report.num_rois == 3
        assert report.dropped_rois == 0
        # integer translation by (3, -2) on every pair
        assert report.tre == pytest.approx(np.sqrt(13.0), rel=1e-9)

    def test_fitted_field_improves_scores(self):
        pairing = self.disc_case()
        before = evaluate(pairing)
        ddf, _ = fit_ddf(pairing, FitConfig(iterations=200))
        after = evaluate(pairing, ddf)
        assert after.mean_dice > 0.95
        assert after.tre < 1.0
        assert after.mean_dice > before.mean_dice

    def test_empty_warped_mask_is_dropped_from_tre(self, caplog):
        m = voxel_mask((8, 8), (4, 4))
        pairing = pairing_of([(m, m)])
        # A huge displacement samples the fixed mask entirely outside.
        vec = np.full((2, 8, 8), 100.0)
        with caplog.at_level("WARNING", logger="roireg.metrics"):
            report = evaluate(pairing, DisplacementField(vec))
        assert report.per_roi_dice == (0.0,)
        assert report.mean_dice == 0.0
        assert report.tre is None
        assert report.per_roi_centroid_dist == ()
        assert report.dropped_rois == 1
        assert any("excluded from TRE" in r.message for r in caplog.records)

    def test_spacing_reaches_tre(self):
        a = voxel_mask((6, 6), (0, 0))
        b = voxel_mask((6, 6), (3, 0))
        report = evaluate(pairing_of([(a, b)]), spacing=(2.0, 1.0))
        assert report.tre == pytest.approx(6.0)

    def test_empty_pairing(self):
        with pytest.raises(EmptyPairingError):
            evaluate(RoiPairing((), epsilon_used=0.0))


class TestReportJson:
    def test_exact_key_set(self):
        report = evaluate(pairing_of([(voxel_mask((4, 4), (1, 1)),
                                       voxel_mask((4, 4), (2, 1)))]))
        doc = report.to_json_dict()
        assert set(doc) == {"mean_dice", "per_roi_dice", "tre",
                            "per_roi_centroid_dist", "num_rois", "dropped_rois"}

    def test_json_round_trips(self):
        report = evaluate(pairing_of([(voxel_mask((4, 4), (1, 1)),
                                       voxel_mask((4, 4), (2, 1)))]))
        text = report.to_json()
        assert text.endswith("\n")
        doc = json.loads(text)
        assert doc == report.to_json_dict()
        assert text == json.dumps(doc, sort_keys=True, indent=2) + "\n"
