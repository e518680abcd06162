"""
Pipeline state logging transformer for monitoring sample preparation.

This transformer provides visibility into data flow through the scikit-learn
pipeline by logging sample-list characteristics at different stages:
- Number of samples and resolutions present
- Ground-truth and contour availability
- Depth value range

The transformer is passive (does not modify data).
"""

from collections import Counter
from typing import List

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from pyrgbd.config.training import TrainConfig
from pyrgbd.core.sample import RgbdSample
from pyrgbd.utils import get_logger

logger = get_logger(__name__)


class PipelineLoggingTransformer(BaseEstimator, TransformerMixin):
    """
    Logs the state of a sample list during pipeline execution.

    Args:
        config: TrainConfig containing preparation settings
        name: Identifier for this logging point in the pipeline

    Example:
        >>> pipeline = Pipeline([
        ...     ("input_state", PipelineLoggingTransformer(config, "Input")),
        ...     # ... preparation transformers ...
        ...     ("output_state", PipelineLoggingTransformer(config, "Output"))
        ... ])
        >>> pipeline.fit_transform(samples)
        Input - Fit: 8 samples
        Input - Transform: 8 samples, resolutions {(64, 64): 8}, gt 8/8, contour 0/8
    """

    def __init__(self, config: TrainConfig, name: str = "Pipeline logging"):
        self.config = config
        self.name = name

    def fit(self, samples: List[RgbdSample], y=None) -> "PipelineLoggingTransformer":
        logger.info(f"{self.name} - Fit: {len(samples)} samples")
        return self

    def transform(self, samples: List[RgbdSample]) -> List[RgbdSample]:
        if not samples:
            logger.info(f"{self.name} - Transform: no samples")
            return samples

        resolutions = Counter(sample.resolution for sample in samples)
        with_gt = sum(sample.has_gt for sample in samples)
        with_contour = sum(sample.contour is not None for sample in samples)
        logger.info(
            f"{self.name} - Transform: {len(samples)} samples, "
            f"resolutions {dict(resolutions)}, gt {with_gt}/{len(samples)}, "
            f"contour {with_contour}/{len(samples)}"
        )

        depth_min = min(float(np.min(sample.depth)) for sample in samples)
        depth_max = max(float(np.max(sample.depth)) for sample in samples)
        logger.debug(f"{self.name} - depth range [{depth_min:.4f}, {depth_max:.4f}]")
        return samples
