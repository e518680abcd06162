"""
Random training augmentation for RGB-D samples.

One geometric draw (horizontal flip, then rotation) is applied identically to
every modality. RGB and depth are resampled bilinearly, the ground truth with
nearest neighbour and re-binarized. Photometric jitter (brightness, contrast,
saturation) touches the RGB image only. All randomness comes from the numpy
generator passed in, so a sample is reproducible from its generator state.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import torch
from numpy.typing import NDArray
from scipy import ndimage
from torchvision.transforms.v2 import functional as TF

from pyrgbd.config.specs import AugmentSpec
from pyrgbd.core.sample import RgbdSample


@dataclass(frozen=True)
class AugmentDraw:
    """One realized set of augmentation parameters."""

    flip: bool = False
    angle: float = 0.0
    brightness: float = 1.0
    contrast: float = 1.0
    saturation: float = 1.0

    @property
    def is_identity(self) -> bool:
        return (
            not self.flip
            and self.angle == 0.0
            and self.brightness == 1.0
            and self.contrast == 1.0
            and self.saturation == 1.0
        )


def draw_augmentation(spec: AugmentSpec, rng: np.random.Generator) -> AugmentDraw:
    """
    Draw augmentation parameters from an AugmentSpec.

    Every field is drawn on every call, so the generator advances by the same
    amount whatever the probabilities and ranges are.
    """
    flip = bool(rng.random() < spec.hflip_prob)
    angle = float(rng.uniform(-1.0, 1.0) * spec.rotation)
    brightness = float(rng.uniform(*spec.brightness))
    contrast = float(rng.uniform(*spec.contrast))
    saturation = float(rng.uniform(*spec.saturation))
    return AugmentDraw(flip, angle, brightness, contrast, saturation)


def apply_geometric(values: NDArray, draw: AugmentDraw, order: int = 1) -> NDArray:
    """
    Flip and rotate an HxW or HxWxC array.

    Args:
        values: Array with the spatial axes first
        draw: Realized augmentation parameters
        order: Spline order of the rotation (1 bilinear, 0 nearest)

    Returns:
        Transformed array of the same shape
    """
    out = np.asarray(values)
    if draw.flip:
        out = out[:, ::-1]
    if draw.angle != 0.0:
        out = ndimage.rotate(
            out, draw.angle, axes=(1, 0), reshape=False, order=order, mode="nearest"
        )
    return np.ascontiguousarray(out)


def apply_photometric(rgb: NDArray, draw: AugmentDraw) -> NDArray:
    """Brightness, contrast and saturation jitter of an HxWx3 image in [0, 1]."""
    if (draw.brightness, draw.contrast, draw.saturation) == (1.0, 1.0, 1.0):
        return rgb
    image = torch.from_numpy(np.ascontiguousarray(rgb, dtype=np.float32)).permute(2, 0, 1)
    image = TF.adjust_brightness(image, draw.brightness)
    image = TF.adjust_contrast(image, draw.contrast)
    image = TF.adjust_saturation(image, draw.saturation)
    return image.permute(1, 2, 0).numpy()


def apply_draw(sample: RgbdSample, draw: AugmentDraw) -> RgbdSample:
    """Apply one realized draw to every modality of a sample."""
    if draw.is_identity:
        return sample

    rgb = apply_geometric(sample.rgb, draw, order=1)
    rgb = np.clip(apply_photometric(rgb, draw), 0.0, 1.0)
    depth = np.clip(apply_geometric(sample.depth, draw, order=1), 0.0, 1.0)

    gt: Optional[NDArray] = None
    if sample.gt is not None:
        gt = (apply_geometric(sample.gt, draw, order=0) >= 0.5).astype(np.float32)

    contour: Optional[NDArray] = None
    if sample.contour is not None:
        contour = np.clip(apply_geometric(sample.contour, draw, order=1), 0.0, 1.0)

    return sample.with_arrays(rgb=rgb, depth=depth, gt=gt, contour=contour)


def augment(
    sample: RgbdSample, spec: AugmentSpec, rng: np.random.Generator
) -> RgbdSample:
    """
    Randomly augment a sample.

    Args:
        sample: Valid sample
        spec: Augmentation ranges
        rng: Generator the draw is taken from

    Returns:
        Augmented sample; the input sample is not modified
    """
    return apply_draw(sample, draw_augmentation(spec, rng))
