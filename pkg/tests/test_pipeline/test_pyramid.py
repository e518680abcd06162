import numpy as np
import pytest

from pyrgbd.pipeline.pyramid import PyramidError, contour_pyramid, gt_pyramid, side_out_sizes


def test_side_out_sizes_coarsest_first():
    """Side-outs of a 64x32 input at strides 16..1."""
    assert side_out_sizes(64, 32) == [(4, 2), (8, 4), (16, 8), (32, 16), (64, 32)]


def test_side_out_sizes_rejects_indivisible_input():
    with pytest.raises(PyramidError):
        side_out_sizes(40, 40)


def test_all_ones_stays_ones():
    gt = np.ones((16, 16))

    for level in gt_pyramid(gt, side_out_sizes(16, 16)):
        np.testing.assert_array_equal(level, np.ones_like(level))


def test_quadrant_average_pool():
    """A 2x2 foreground quadrant of a 4x4 mask maps to one foreground pixel."""
    gt = np.zeros((4, 4))
    gt[:2, 2:] = 1.0

    (level,) = gt_pyramid(gt, [(2, 2)])

    np.testing.assert_array_equal(level, [[0.0, 1.0], [0.0, 0.0]])


def test_checkerboard_ties_map_to_foreground():
    """Half-foreground windows (mean exactly 0.5) become foreground."""
    gt = np.indices((8, 8)).sum(axis=0) % 2

    (level,) = gt_pyramid(gt, [(4, 4)])

    np.testing.assert_array_equal(level, np.ones((4, 4)))


def test_levels_are_binary():
    rng = np.random.default_rng(3)
    gt = (rng.random((32, 32)) > 0.6).astype(float)

    for level in gt_pyramid(gt, side_out_sizes(32, 32)):
        assert set(np.unique(level)) <= {0.0, 1.0}


def test_larger_resolution_is_rejected():
    with pytest.raises(PyramidError):
        gt_pyramid(np.zeros((8, 8)), [(16, 16)])


def test_contour_pyramid_keeps_soft_values():
    contour = np.zeros((4, 4))
    contour[0, 0] = 1.0

    (level,) = contour_pyramid(contour, [(2, 2)])

    assert level[0, 0] == pytest.approx(0.25)
