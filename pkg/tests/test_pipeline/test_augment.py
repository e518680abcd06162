import numpy as np
import pytest

from pyrgbd.config.specs import AugmentSpec
from pyrgbd.pipeline.augment import apply_geometric, augment, draw_augmentation


@pytest.fixture
def sample(synth_samples):
    return synth_samples[0]


def test_factor_intervals_must_contain_one():
    with pytest.raises(ValueError):
        AugmentSpec(brightness=(1.1, 1.3))
    with pytest.raises(ValueError):
        AugmentSpec(contrast=(0.0, 1.2))


def test_identity_spec_leaves_sample_unchanged(sample):
    result = augment(sample, AugmentSpec.identity(), np.random.default_rng(0))

    np.testing.assert_array_equal(result.rgb, sample.rgb)
    np.testing.assert_array_equal(result.depth, sample.depth)
    np.testing.assert_array_equal(result.gt, sample.gt)


def test_double_flip_is_identity(sample):
    """Two forced horizontal flips give back the original sample."""
    spec = AugmentSpec(
        hflip_prob=1.0, rotation=0.0, brightness=(1, 1), saturation=(1, 1), contrast=(1, 1)
    )
    rng = np.random.default_rng(0)

    once = augment(sample, spec, rng)
    twice = augment(once, spec, rng)

    assert not np.array_equal(once.rgb, sample.rgb)
    np.testing.assert_array_equal(twice.rgb, sample.rgb)
    np.testing.assert_array_equal(twice.depth, sample.depth)
    np.testing.assert_array_equal(twice.gt, sample.gt)


def test_same_seed_same_output(sample):
    spec = AugmentSpec(hflip_prob=0.5, rotation=10.0)

    first = augment(sample, spec, np.random.default_rng(42))
    second = augment(sample, spec, np.random.default_rng(42))

    np.testing.assert_array_equal(first.rgb, second.rgb)
    np.testing.assert_array_equal(first.depth, second.depth)
    np.testing.assert_array_equal(first.gt, second.gt)


def test_geometric_draw_aligns_gt(sample):
    """The gt of an augmented sample equals the gt transformed on its own."""
    spec = AugmentSpec(
        hflip_prob=0.5, rotation=15.0, brightness=(1, 1), saturation=(1, 1), contrast=(1, 1)
    )
    for seed in range(10):
        draw = draw_augmentation(spec, np.random.default_rng(seed))
        expected = (apply_geometric(sample.gt, draw, order=0) >= 0.5).astype(np.float32)

        result = augment(sample, spec, np.random.default_rng(seed))

        np.testing.assert_array_equal(result.gt, expected)


def test_outputs_stay_in_range(sample):
    spec = AugmentSpec(hflip_prob=0.5, rotation=30.0, brightness=(0.5, 1.5))
    for seed in range(5):
        result = augment(sample, spec, np.random.default_rng(seed))
        assert 0.0 <= result.rgb.min() and result.rgb.max() <= 1.0
        assert 0.0 <= result.depth.min() and result.depth.max() <= 1.0
        assert set(np.unique(result.gt)) <= {0.0, 1.0}


def test_photometric_jitter_leaves_depth_alone(sample):
    spec = AugmentSpec(hflip_prob=0.0, rotation=0.0, brightness=(0.5, 1.5))

    result = augment(sample, spec, np.random.default_rng(5))

    np.testing.assert_array_equal(result.depth, sample.depth)
    np.testing.assert_array_equal(result.gt, sample.gt)
