"""
Grayscale morphology and depth-contour ground truth.

Dilation and erosion use a flat m x m (or length-m in 1-D) window with
replicate padding at the borders, so constant maps are fixed points and a
constant depth map has an all-zero contour.
"""

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy import ndimage

from pyrgbd.utils import get_logger

logger = get_logger(__name__)


class MorphologyError(ValueError):
    """Raised when a morphology input or structuring element is invalid."""

    pass


class StructuringElement(BaseModel):
    """Full-ones square window of odd side m."""

    model_config = ConfigDict(frozen=True)

    m: int = Field(5, ge=1)

    @field_validator("m")
    @classmethod
    def _check_odd(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError(f"structuring element size must be odd, got {value}")
        return value


def _as_element(se: "StructuringElement | int") -> StructuringElement:
    if isinstance(se, StructuringElement):
        return se
    try:
        return StructuringElement(m=se)
    except ValueError as e:
        raise MorphologyError(str(e)) from e


def _check_map(values: ArrayLike) -> NDArray[np.floating]:
    array = np.asarray(values)
    if array.ndim not in (1, 2):
        raise MorphologyError(f"expected a 1-D or 2-D map, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise MorphologyError("map contains non-finite values")
    return array


def dilate(values: ArrayLike, se: "StructuringElement | int" = 5) -> NDArray:
    """Windowed maximum over an m x m neighbourhood, replicate padding."""
    element = _as_element(se)
    array = _check_map(values)
    return ndimage.grey_dilation(array, size=(element.m,) * array.ndim, mode="nearest")


def erode(values: ArrayLike, se: "StructuringElement | int" = 5) -> NDArray:
    """Windowed minimum over an m x m neighbourhood, replicate padding."""
    element = _as_element(se)
    array = _check_map(values)
    return ndimage.grey_erosion(array, size=(element.m,) * array.ndim, mode="nearest")


def depth_contour_gt(depth: ArrayLike, m: int = 5) -> NDArray:
    """
    Morphological gradient of a depth map, used as the stage-2 pretext target.

    Args:
        depth: HxW depth map in [0, 1]
        m: Odd window size

    Returns:
        dilate(depth) - erode(depth), in [0, 1] and zero wherever depth is
        constant over the window

    Raises:
        MorphologyError: If m is even or non-positive, or depth is not finite
    """
    array = _check_map(depth)
    contour = dilate(array, m) - erode(array, m)
    return np.clip(contour, 0.0, 1.0)
