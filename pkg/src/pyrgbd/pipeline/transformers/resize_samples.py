"""Transformer resizing samples to a square training resolution."""

from typing import List

import numpy as np
import torch
import torch.nn.functional as F
from sklearn.base import BaseEstimator, TransformerMixin

from pyrgbd.config.training import TrainConfig
from pyrgbd.core.sample import RgbdSample
from pyrgbd.utils import get_logger

logger = get_logger(__name__)


def _resize(values: np.ndarray, size: int) -> np.ndarray:
    # HxW or HxWxC -> NCHW and back
    tensor = torch.from_numpy(np.ascontiguousarray(values, dtype=np.float32))
    tensor = tensor[None, None] if tensor.ndim == 2 else tensor.permute(2, 0, 1)[None]
    resized = F.interpolate(tensor, size=(size, size), mode="bilinear", align_corners=False)
    resized = resized[0, 0] if values.ndim == 2 else resized[0].permute(1, 2, 0)
    return resized.clamp(0.0, 1.0).numpy()


class ResizeSamplesTransformer(BaseEstimator, TransformerMixin):
    """
    Bilinearly resizes every modality to config.image_size squared.

    Ground truth is resized bilinearly and re-binarized at 0.5. The original
    resolution stays in `source_resolution`.
    """

    def __init__(self, config: TrainConfig):
        self.config = config

    def fit(self, samples: List[RgbdSample], y=None) -> "ResizeSamplesTransformer":
        return self

    def transform(self, samples: List[RgbdSample]) -> List[RgbdSample]:
        size = self.config.image_size
        result = []
        resized = 0
        for sample in samples:
            if sample.resolution == (size, size):
                result.append(sample)
                continue
            gt = None
            if sample.gt is not None:
                gt = (_resize(sample.gt, size) >= 0.5).astype(np.float32)
            contour = None if sample.contour is None else _resize(sample.contour, size)
            result.append(
                sample.with_arrays(
                    rgb=_resize(sample.rgb, size),
                    depth=_resize(sample.depth, size),
                    gt=gt,
                    contour=contour,
                )
            )
            resized += 1
        logger.info(f"Resized {resized} of {len(samples)} samples to {size}x{size}")
        return result
