"""
Transformer for rescaling and re-orienting depth maps.

Real RGB-D datasets store depth with different ranges and polarities. This
transformer rescales each depth map and optionally inverts it so that larger
values mean closer (more likely salient) surfaces, matching the generator.

Methods:
    - 'minmax': per-image min-max rescaling to [0, 1]
    - 'none': keep the loaded values
    - 'auto': 'none' for generated datasets (known by their manifest),
      'minmax' otherwise
"""

from dataclasses import dataclass
from typing import List

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from pyrgbd.config.training import TrainConfig
from pyrgbd.core.sample import RgbdSample
from pyrgbd.utils import get_logger

logger = get_logger(__name__)


@dataclass
class DepthStats:
    """Statistics about depth normalization.

    Attributes:
        total_samples: Number of samples processed
        rescaled: Samples whose depth range was stretched
        constant: Samples with constant depth (left unchanged)
        inverted: Samples whose polarity was flipped
    """

    total_samples: int = 0
    rescaled: int = 0
    constant: int = 0
    inverted: int = 0


class NormalizeDepthTransformer(BaseEstimator, TransformerMixin):
    """
    Rescales depth maps and flips their polarity on request.

    Args:
        config: TrainConfig; uses depth_normalization and invert_depth
        synthetic: Whether the samples come from the generator

    Attributes:
        method: Resolved method ('minmax' or 'none')
    """

    def __init__(self, config: TrainConfig, synthetic: bool = False):
        self.config = config
        self.synthetic = synthetic

    @property
    def method(self) -> str:
        method = self.config.depth_normalization
        if method == "auto":
            return "none" if self.synthetic else "minmax"
        return method

    def fit(self, samples: List[RgbdSample], y=None) -> "NormalizeDepthTransformer":
        return self

    def transform(self, samples: List[RgbdSample]) -> List[RgbdSample]:
        stats = DepthStats()
        result = []
        for sample in samples:
            depth = sample.depth
            stats.total_samples += 1

            if self.method == "minmax":
                low, high = float(depth.min()), float(depth.max())
                if high > low:
                    depth = (depth - low) / (high - low)
                    stats.rescaled += 1
                else:
                    stats.constant += 1

            if self.config.invert_depth:
                depth = 1.0 - depth
                stats.inverted += 1

            result.append(sample.with_arrays(depth=depth) if depth is not sample.depth else sample)

        logger.info(
            f"Depth normalization ({self.method}): {stats.rescaled} rescaled, "
            f"{stats.constant} constant, {stats.inverted} inverted "
            f"of {stats.total_samples} samples"
        )
        return result
