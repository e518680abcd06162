"""
RgbdSample class for representing one aligned RGB-D saliency example.

An RgbdSample bundles an RGB image, its depth map and, when available, the
binary saliency ground truth. Arrays are stored as float32 numpy arrays in
channel-last layout for images (HxWx3) and plain HxW for maps.
"""

from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Tuple

import numpy as np


@dataclass
class RgbdSample:
    """
    Aligned (RGB, depth, ground truth) triple with identity metadata.

    Args:
        id: Sample identifier, the filename stem on disk
        rgb: HxWx3 array in [0, 1]
        depth: HxW array in [0, 1]
        gt: HxW array with values exactly 0 or 1, or None for pretext-only data
        source_resolution: (H, W) of the files the sample was read from
        contour: Optional HxW depth-contour map in [0, 1]
        meta: Free-form metadata (e.g. the depth bit depth)

    Raises:
        ValueError: If the modalities do not share the same HxW
    """

    id: str
    rgb: np.ndarray
    depth: np.ndarray
    gt: Optional[np.ndarray] = None
    source_resolution: Optional[Tuple[int, int]] = None
    contour: Optional[np.ndarray] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.id = str(self.id)
        self.rgb = np.asarray(self.rgb, dtype=np.float32)
        self.depth = np.asarray(self.depth, dtype=np.float32)
        if self.gt is not None:
            self.gt = np.asarray(self.gt, dtype=np.float32)
        if self.contour is not None:
            self.contour = np.asarray(self.contour, dtype=np.float32)

        if self.rgb.ndim != 3 or self.rgb.shape[2] != 3:
            raise ValueError(f"Sample {self.id}: rgb must be HxWx3, got {self.rgb.shape}")

        height, width = self.rgb.shape[:2]
        for name in ("depth", "gt", "contour"):
            values = getattr(self, name)
            if values is not None and values.shape != (height, width):
                raise ValueError(
                    f"Sample {self.id}: {name} shape {values.shape} "
                    f"does not match rgb resolution {(height, width)}"
                )

        if self.source_resolution is None:
            self.source_resolution = (height, width)

    @property
    def resolution(self) -> Tuple[int, int]:
        return tuple(self.rgb.shape[:2])

    @property
    def has_gt(self) -> bool:
        return self.gt is not None

    def with_arrays(self, **arrays: Any) -> "RgbdSample":
        """Copy of the sample with some arrays replaced (metadata kept)."""
        return replace(self, meta=dict(self.meta), **arrays)

    def __repr__(self) -> str:
        return (
            f"RgbdSample(id={self.id!r}, resolution={self.resolution}, "
            f"gt={'yes' if self.has_gt else 'no'})"
        )
