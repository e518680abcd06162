"""Multi-resolution targets for deeply supervised side-outs."""

from typing import List, Sequence, Tuple

import numpy as np
import torch
import torch.nn.functional as F
from numpy.typing import ArrayLike, NDArray

Resolution = Tuple[int, int]


class PyramidError(ValueError):
    """Raised when a pyramid level cannot be derived from the source map."""

    pass


def side_out_sizes(
    height: int, width: int, strides: Sequence[int] = (16, 8, 4, 2, 1)
) -> List[Resolution]:
    """
    Resolutions of the side-outs for an input of the given size, coarsest first.

    Raises:
        PyramidError: If the input size is not divisible by every stride
    """
    sizes = []
    for stride in strides:
        if height % stride or width % stride:
            raise PyramidError(
                f"input size {(height, width)} is not divisible by stride {stride}"
            )
        sizes.append((height // stride, width // stride))
    return sizes


def _area_average(values: ArrayLike, resolutions: Sequence[Resolution]) -> List[NDArray]:
    array = np.asarray(values, dtype=np.float64)
    if array.ndim != 2:
        raise PyramidError(f"expected an HxW map, got shape {array.shape}")

    source = torch.from_numpy(array)[None, None]
    height, width = array.shape
    levels = []
    for h, w in resolutions:
        if h < 1 or w < 1 or h > height or w > width:
            raise PyramidError(
                f"requested resolution {(h, w)} is not reachable from {(height, width)}"
            )
        pooled = F.adaptive_avg_pool2d(source, (h, w))[0, 0]
        levels.append(pooled.numpy())
    return levels


def gt_pyramid(gt: ArrayLike, resolutions: Sequence[Resolution]) -> List[NDArray]:
    """
    Area-average downsampling of a binary map followed by a >= 0.5 threshold.

    Ties (mean exactly 0.5) map to foreground.

    Args:
        gt: HxW binary map
        resolutions: Target (h, w) per level

    Returns:
        One float32 binary map per requested resolution

    Raises:
        PyramidError: If a level is larger than the source or has a zero side
    """
    return [
        (level >= 0.5).astype(np.float32) for level in _area_average(gt, resolutions)
    ]


def contour_pyramid(contour: ArrayLike, resolutions: Sequence[Resolution]) -> List[NDArray]:
    """Area-average downsampling of a contour map, without binarization."""
    return [level.astype(np.float32) for level in _area_average(contour, resolutions)]
