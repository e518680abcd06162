"""
Transformer module for preparing RGB-D samples.

This module provides scikit-learn compatible transformers operating on lists
of RgbdSample:

1. Logging pipeline state for monitoring
2. Resizing samples to the training resolution
3. Rescaling and re-orienting depth maps
4. Attaching depth-contour maps
"""

from .derive_contours import DeriveContoursTransformer
from .normalize_depth import NormalizeDepthTransformer
from .pipeline_logging import PipelineLoggingTransformer
from .resize_samples import ResizeSamplesTransformer

__all__ = [
    "PipelineLoggingTransformer",
    "ResizeSamplesTransformer",
    "NormalizeDepthTransformer",
    "DeriveContoursTransformer",
]
