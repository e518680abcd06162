"""
RgbdDataset class feeding RGB-D samples to torch training loops.

The dataset wraps a list of prepared samples and turns each into a dictionary
of tensors (see BatchFields). Augmentation draws come from a generator seeded
by (augmentation seed, sample id, epoch), so every item is reproducible and
independent of worker count or access order. Targets are produced at every
side-out resolution: binary gt pyramids for saliency training, depth-contour
pyramids for the stage-2 pretext task.
"""

from typing import Dict, List, Literal, Optional, Sequence

import numpy as np
import torch
from torch.utils.data import Dataset

from pyrgbd.config.specs import AugmentSpec
from pyrgbd.pipeline.augment import augment
from pyrgbd.pipeline.morphology import depth_contour_gt
from pyrgbd.pipeline.pyramid import contour_pyramid, gt_pyramid, side_out_sizes
from pyrgbd.utils.logger import get_logger
from pyrgbd.utils.seeding import sample_rng

from .fields import BatchFields
from .sample import RgbdSample

logger = get_logger(__name__)

Targets = Optional[Literal["gt", "contour"]]


def _map_tensor(values: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(values, dtype=np.float32))[None]


class RgbdDataset(Dataset):
    """
    Torch dataset over prepared RgbdSamples.

    Args:
        samples: Prepared, validated samples
        augment_spec: Random augmentation, or None for none
        targets: 'gt' for saliency pyramids, 'contour' for depth-contour
            pyramids, None for rgb/depth only (stage 1)
        contour_m: Window size of the depth-contour targets
        strides: Side-out strides, coarsest first

    Raises:
        ValueError: If samples is empty, or 'gt' targets are requested and a
            sample has no ground truth
    """

    def __init__(
        self,
        samples: Sequence[RgbdSample],
        augment_spec: Optional[AugmentSpec] = None,
        targets: Targets = None,
        contour_m: int = 5,
        strides: Sequence[int] = (16, 8, 4, 2, 1),
    ):
        if not samples:
            raise ValueError("RgbdDataset needs at least one sample")
        if targets == "gt":
            missing = [sample.id for sample in samples if not sample.has_gt]
            if missing:
                raise ValueError(f"Samples without ground truth: {missing[:5]}")

        self.samples: List[RgbdSample] = list(samples)
        self.augment_spec = augment_spec
        self.targets = targets
        self.contour_m = contour_m
        self.strides = tuple(strides)
        self.epoch = 0
        self.fields = BatchFields()

    def set_epoch(self, epoch: int) -> None:
        """Select the augmentation draw of an epoch."""
        self.epoch = int(epoch)

    @property
    def ids(self) -> List[str]:
        return [sample.id for sample in self.samples]

    def __len__(self) -> int:
        return len(self.samples)

    def prepared(self, index: int) -> RgbdSample:
        """The sample at index after this epoch's augmentation."""
        sample = self.samples[index]
        if self.augment_spec is not None:
            rng = sample_rng(self.augment_spec.seed, sample.id, self.epoch)
            sample = augment(sample, self.augment_spec, rng)
        return sample

    def __getitem__(self, index: int) -> Dict[str, object]:
        sample = self.prepared(index)
        fields = self.fields

        item: Dict[str, object] = {
            fields.ID: sample.id,
            fields.RGB: torch.from_numpy(
                np.ascontiguousarray(sample.rgb.transpose(2, 0, 1), dtype=np.float32)
            ),
            fields.DEPTH: _map_tensor(sample.depth),
        }

        if self.targets is None:
            return item

        sizes = side_out_sizes(*sample.resolution, strides=self.strides)
        if self.targets == "gt":
            item[fields.GT] = _map_tensor(sample.gt)
            item[fields.GT_PYRAMID] = [_map_tensor(level) for level in gt_pyramid(sample.gt, sizes)]
        else:
            contour = sample.contour
            if contour is None or self.augment_spec is not None:
                contour = depth_contour_gt(sample.depth, self.contour_m)
            item[fields.CONTOUR] = _map_tensor(contour)
            item[fields.CONTOUR_PYRAMID] = [
                _map_tensor(level) for level in contour_pyramid(contour, sizes)
            ]
        return item

    def __repr__(self) -> str:
        return (
            f"RgbdDataset(samples={len(self)}, targets={self.targets}, "
            f"augment={'yes' if self.augment_spec else 'no'}, epoch={self.epoch})"
        )
