import numpy as np
import pytest

from pyrgbd.pipeline.morphology import (
    MorphologyError,
    StructuringElement,
    depth_contour_gt,
    dilate,
    erode,
)


def _window_oracle(values, m, reduce):
    """Naive sliding window with edge replication."""
    half = m // 2
    padded = np.pad(values, half, mode="edge")
    out = np.empty_like(values)
    for i in range(values.shape[0]):
        for j in range(values.shape[1]):
            out[i, j] = reduce(padded[i : i + m, j : j + m])
    return out


def test_structuring_element_rejects_even_sizes():
    """Even or non-positive window sizes are invalid."""
    with pytest.raises(ValueError):
        StructuringElement(m=4)
    with pytest.raises(ValueError):
        StructuringElement(m=0)
    with pytest.raises(MorphologyError):
        dilate(np.zeros((4, 4)), 2)
    with pytest.raises(MorphologyError):
        erode(np.zeros((4, 4)), 6)


def test_step_edge_examples():
    """Dilation, erosion and contour of a 1-D step with m=3."""
    step = np.array([0, 0, 0, 1, 1, 1], dtype=float)

    np.testing.assert_array_equal(dilate(step, 3), [0, 0, 1, 1, 1, 1])
    np.testing.assert_array_equal(erode(step, 3), [0, 0, 0, 0, 1, 1])
    np.testing.assert_array_equal(depth_contour_gt(step, 3), [0, 0, 1, 1, 0, 0])


def test_single_peak_dilates_to_block():
    """A single 1 in 5x5 zeros becomes a centered 3x3 block."""
    values = np.zeros((5, 5))
    values[2, 2] = 1.0
    expected = np.zeros((5, 5))
    expected[1:4, 1:4] = 1.0

    np.testing.assert_array_equal(dilate(values, 3), expected)


@pytest.mark.parametrize("m", [1, 3, 5, 7])
def test_constant_maps_are_fixed_points(m):
    """Constant maps survive both operations and have zero contour."""
    values = np.full((9, 7), 0.37)

    np.testing.assert_array_equal(dilate(values, m), values)
    np.testing.assert_array_equal(erode(values, m), values)
    np.testing.assert_array_equal(depth_contour_gt(values, m), np.zeros_like(values))


@pytest.mark.parametrize("m", [1, 3, 5])
def test_matches_naive_oracle(m):
    """Dilation and erosion equal the double-loop oracle on random maps."""
    rng = np.random.default_rng(m)
    for _ in range(200):
        values = rng.random((16, 16))
        np.testing.assert_array_equal(dilate(values, m), _window_oracle(values, m, np.max))
        np.testing.assert_array_equal(erode(values, m), _window_oracle(values, m, np.min))


def test_ordering_and_duality():
    """erode(x) <= x <= dilate(x) and erode(-x) == -dilate(x)."""
    rng = np.random.default_rng(0)
    for _ in range(50):
        values = rng.random((8, 8))
        assert np.all(erode(values, 3) <= values)
        assert np.all(values <= dilate(values, 3))
        np.testing.assert_array_equal(erode(-values, 3), -dilate(values, 3))


def test_contour_range_and_default_size():
    """Contour values lie in [0, 1]; the default window is 5."""
    rng = np.random.default_rng(1)
    depth = rng.random((12, 12))

    contour = depth_contour_gt(depth)

    assert contour.min() >= 0.0
    assert contour.max() <= 1.0
    np.testing.assert_array_equal(contour, dilate(depth, 5) - erode(depth, 5))


def test_rejects_non_finite_maps():
    """NaN maps are rejected."""
    values = np.zeros((4, 4))
    values[1, 1] = np.nan
    with pytest.raises(MorphologyError):
        depth_contour_gt(values, 3)
