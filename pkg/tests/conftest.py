import sys
from pathlib import Path

import numpy as np
import pytest

from roireg import BinaryMask, FeatureMap, MaskMeta, MaskSet

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_mask(rng, dims, p=0.3):
    return BinaryMask(rng.random(dims) < p)


def random_maskset(rng, dims, count, with_meta=True):
    masks = tuple(random_mask(rng, dims) for _ in range(count))
    if with_meta:
        meta = tuple(
            MaskMeta(predicted_iou=float(rng.uniform(0.5, 1.0)),
                     stability_score=float(rng.uniform(0.5, 1.0)))
            for _ in range(count))
    else:
        meta = tuple(MaskMeta() for _ in range(count))
    return MaskSet(masks, meta)


def random_features(rng, channels, grid_dims, sigma=1.0):
    return FeatureMap(sigma * rng.standard_normal((channels,) + tuple(grid_dims)))
