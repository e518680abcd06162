"""
Feature dump of the fusion sites.

For one sample, every CDA site ('cm1'..'cm5', 'cl1'..'cl4') contributes its
joint-consistency, enhanced-consistency, joint-difference and fused maps.
Each map is reduced to its channel mean, min-max scaled to [0, 1] and
written as `<site>_<intermediate>.png` (8-bit grayscale).
"""

from pathlib import Path
from typing import Dict, List, Union

import numpy as np
import torch
from numpy.typing import NDArray

from pyrgbd.core.sample import RgbdSample
from pyrgbd.models.sod import SodModel
from pyrgbd.pipeline.loading import write_gray8
from pyrgbd.utils.logger import get_logger

logger = get_logger(__name__)

INTERMEDIATES = ("jc", "jc_ab", "jd", "fused")


def channel_mean_image(feature: torch.Tensor) -> NDArray[np.float64]:
    """CxHxW feature -> HxW channel mean scaled to [0, 1] (constant maps -> 0)."""
    values = feature.detach().double().mean(dim=0).cpu().numpy()
    low, high = values.min(), values.max()
    if high - low <= 0:
        return np.zeros_like(values)
    return (values - low) / (high - low)


@torch.no_grad()
def capture_intermediates(
    model: SodModel, sample: RgbdSample, device: Union[str, torch.device] = "cpu"
) -> Dict[str, NDArray[np.float64]]:
    """Channel-mean images keyed by '<site>_<intermediate>'."""
    was_training = model.training
    model.eval()
    model.capture = True
    try:
        rgb = torch.from_numpy(sample.rgb.transpose(2, 0, 1).copy())[None].to(device)
        depth = torch.from_numpy(sample.depth[None].copy())[None].to(device)
        model(rgb, depth)
        captured = dict(model.intermediates)
    finally:
        model.capture = False
        model.intermediates = {}
        model.train(was_training)

    images: Dict[str, NDArray[np.float64]] = {}
    for site in sorted(captured):
        output = captured[site]
        for name in INTERMEDIATES:
            tensor = getattr(output, name)
            if tensor is not None:
                images[f"{site}_{name}"] = channel_mean_image(tensor[0])
    return images


def dump_features(
    model: SodModel,
    sample: RgbdSample,
    out_dir: Union[str, Path],
    device: Union[str, torch.device] = "cpu",
) -> List[Path]:
    """
    Write the intermediate images of one sample.

    Returns:
        Written file paths, sorted by name
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for key, image in capture_intermediates(model, sample, device).items():
        path = out_dir / f"{key}.png"
        write_gray8(path, image)
        paths.append(path)
    logger.info(f"Wrote {len(paths)} feature images for sample '{sample.id}' to {out_dir}")
    return sorted(paths)
