"""
Sample preparation pipeline for RGB-D saliency data.

This module implements a scikit-learn pipeline that turns loaded samples into
training-ready samples through a series of configurable transformations:

1. Input logging
2. Resizing to the training resolution (optional)
3. Depth rescaling and polarity (always; 'none' is a no-op)
4. Depth-contour derivation (optional)
5. Output logging

Each transformation is a scikit-learn transformer that accepts the
TrainConfig, so all preparation settings live in one place.
"""

from typing import List, Sequence, cast

from sklearn.pipeline import Pipeline

from pyrgbd.config.training import TrainConfig
from pyrgbd.core.sample import RgbdSample
from pyrgbd.utils.logger import get_logger

from .transformers import (
    DeriveContoursTransformer,
    NormalizeDepthTransformer,
    PipelineLoggingTransformer,
    ResizeSamplesTransformer,
)

logger = get_logger(__name__)


class ProcessingError(Exception):
    """Raised when sample preparation fails due to invalid data or configuration."""

    pass


def create_processing_pipeline(
    config: TrainConfig, synthetic: bool = False, derive_contours: bool = False
) -> Pipeline:
    """
    Create a configured sample preparation pipeline.

    Args:
        config: Training configuration
        synthetic: Whether the samples come from the generator (drives 'auto'
            depth normalization)
        derive_contours: Attach depth-contour maps to every sample

    Returns:
        Configured scikit-learn Pipeline operating on lists of RgbdSample

    Raises:
        ProcessingError: On pipeline configuration failure
    """
    try:
        steps = []

        logger.info("Adding input_logging transformer to pipeline")
        steps.append(("input_logging", PipelineLoggingTransformer(config, "Input")))

        if config.image_size:
            logger.info(f"Adding resizing to {config.image_size}")
            steps.append(("resizing", ResizeSamplesTransformer(config)))

        logger.info(
            f"Adding depth normalization with {config.depth_normalization}"
            f"{' (inverted)' if config.invert_depth else ''}"
        )
        steps.append(("depth_normalization", NormalizeDepthTransformer(config, synthetic)))

        if derive_contours:
            logger.info(f"Adding contour derivation with m={config.contour_m}")
            steps.append(("contour_derivation", DeriveContoursTransformer(config)))

        logger.info("Adding output_logging transformer to pipeline")
        steps.append(("output_logging", PipelineLoggingTransformer(config, "Output")))

        return Pipeline(steps)

    except Exception as e:
        error_msg = f"Failed to create processing pipeline: {str(e)}"
        logger.error(error_msg)
        raise ProcessingError(error_msg) from e


def process_samples(
    samples: Sequence[RgbdSample],
    config: TrainConfig,
    synthetic: bool = False,
    derive_contours: bool = False,
) -> List[RgbdSample]:
    """
    Run the preparation pipeline on loaded samples.

    Raises:
        ProcessingError: If any transformation fails
    """
    pipeline = create_processing_pipeline(config, synthetic, derive_contours)
    try:
        return cast(List[RgbdSample], pipeline.fit_transform(list(samples)))
    except Exception as e:
        error_msg = f"Sample preparation failed: {str(e)}"
        logger.error(error_msg)
        raise ProcessingError(error_msg) from e
