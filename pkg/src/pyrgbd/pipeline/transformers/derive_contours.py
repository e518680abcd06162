"""Transformer attaching depth-contour maps to samples."""

from typing import List

from sklearn.base import BaseEstimator, TransformerMixin
from tqdm import tqdm

from pyrgbd.config.training import TrainConfig
from pyrgbd.core.sample import RgbdSample
from pyrgbd.pipeline.morphology import depth_contour_gt
from pyrgbd.utils import get_logger

logger = get_logger(__name__)


class DeriveContoursTransformer(BaseEstimator, TransformerMixin):
    """Computes dilate(depth) - erode(depth) with window config.contour_m."""

    def __init__(self, config: TrainConfig):
        self.config = config

    def fit(self, samples: List[RgbdSample], y=None) -> "DeriveContoursTransformer":
        return self

    def transform(self, samples: List[RgbdSample]) -> List[RgbdSample]:
        result = [
            sample.with_arrays(contour=depth_contour_gt(sample.depth, self.config.contour_m))
            for sample in tqdm(samples, desc="Deriving contours", leave=False)
        ]
        logger.info(f"Derived contours (m={self.config.contour_m}) for {len(result)} samples")
        return result
