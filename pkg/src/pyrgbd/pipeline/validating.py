"""
Sample validation module for pyrgbd.

This module checks prepared samples against the invariants every consumer
relies on before they reach a model or a metric:

    - rgb, depth and gt share the same HxW
    - rgb and depth values are finite and lie in [0, 1]
    - gt values are exactly 0 or 1
    - sample ids are unique
    - gt is present on every sample when required
"""

from typing import List, Sequence

import numpy as np

from pyrgbd.core.sample import RgbdSample
from pyrgbd.utils.logger import get_logger

logger = get_logger(__name__)


class ValidationError(Exception):
    """Raised when a sample violates a range, shape, or completeness invariant."""

    pass


def validate_samples(samples: Sequence[RgbdSample], require_gt: bool = False) -> bool:
    """
    Validate prepared samples.

    Args:
        samples: Samples to check
        require_gt: Whether every sample must carry a ground-truth mask

    Returns:
        True if validation passes

    Raises:
        ValidationError: On the first violated invariant, naming the sample
    """
    try:
        if not samples:
            raise ValidationError("No samples to validate")

        _validate_unique_ids(samples)
        for sample in samples:
            _validate_shapes(sample)
            _validate_unit_range(sample)
            _validate_gt(sample, require_gt)

        logger.info(
            f"Sample validation passed: {len(samples)} samples "
            f"({sum(s.has_gt for s in samples)} with gt)"
        )
        return True

    except Exception as e:
        if not isinstance(e, ValidationError):
            e = ValidationError(f"Sample validation failed: {str(e)}")
        logger.error(str(e))
        raise e


def _validate_unique_ids(samples: Sequence[RgbdSample]) -> None:
    seen = set()
    duplicates: List[str] = []
    for sample in samples:
        if sample.id in seen:
            duplicates.append(sample.id)
        seen.add(sample.id)
    if duplicates:
        raise ValidationError(f"Duplicate sample ids: {sorted(set(duplicates))}")


def _validate_shapes(sample: RgbdSample) -> None:
    height, width = sample.resolution
    if sample.depth.shape != (height, width):
        raise ValidationError(
            f"Sample {sample.id}: depth shape {sample.depth.shape} != {(height, width)}"
        )
    if sample.gt is not None and sample.gt.shape != (height, width):
        raise ValidationError(
            f"Sample {sample.id}: gt shape {sample.gt.shape} != {(height, width)}"
        )


def _validate_unit_range(sample: RgbdSample) -> None:
    for name in ("rgb", "depth"):
        values = getattr(sample, name)
        if not np.all(np.isfinite(values)):
            raise ValidationError(f"Sample {sample.id}: {name} has non-finite values")
        if values.min() < 0.0 or values.max() > 1.0:
            raise ValidationError(
                f"Sample {sample.id}: {name} values outside [0, 1] "
                f"(min {values.min():.4f}, max {values.max():.4f})"
            )


def _validate_gt(sample: RgbdSample, require_gt: bool) -> None:
    if sample.gt is None:
        if require_gt:
            raise ValidationError(f"Sample {sample.id}: ground truth is required")
        return
    if not np.all((sample.gt == 0.0) | (sample.gt == 1.0)):
        raise ValidationError(f"Sample {sample.id}: gt is not binary")
