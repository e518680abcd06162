"""
Stage-1 cross-modal auto-encoders.

Two independent networks translate between modalities: rgb2depth predicts
the depth map from the RGB image, depth2rgb reconstructs the RGB image from
the depth map. Each is a VGG encoder with an FPN decoder and a single
full-resolution sigmoid head. The networks share no parameters and no
activations.
"""

from enum import Enum
from typing import Dict, List

import torch
import torch.nn.functional as F
from torch import nn

from pyrgbd.config.specs import BackboneConfig
from pyrgbd.models.backbone import NetworkShapeError, VggEncoder, conv3x3, init_weights


class Direction(str, Enum):
    RGB2DEPTH = "rgb2depth"
    DEPTH2RGB = "depth2rgb"


class FeaturePyramidDecoder(nn.Module):
    """
    Top-down FPN over five encoder levels.

    Level i receives a 1x1 lateral projection of its encoder feature plus the
    upsampled output of level i+1, then a 3x3 smoothing conv.
    """

    def __init__(self, widths: List[int], width: int, norm: str):
        super().__init__()
        self.laterals = nn.ModuleList(nn.Conv2d(w, width, 1) for w in widths)
        self.smooth = nn.ModuleList(conv3x3(width, width, norm) for _ in widths)

    def forward(self, features: List[torch.Tensor]) -> torch.Tensor:
        top = self.smooth[-1](self.laterals[-1](features[-1]))
        for index in range(len(features) - 2, -1, -1):
            lateral = self.laterals[index](features[index])
            top = F.interpolate(
                top, size=lateral.shape[-2:], mode="bilinear", align_corners=False
            )
            top = self.smooth[index](lateral + top)
        return top


class CrossModalAutoEncoder(nn.Module):
    """
    One direction of the stage-1 pretext task.

    Args:
        backbone: Encoder configuration; transition_width sets the FPN width
        direction: 'rgb2depth' or 'depth2rgb'
    """

    def __init__(self, backbone: BackboneConfig, direction: Direction):
        super().__init__()
        self.direction = Direction(direction)
        if self.direction is Direction.RGB2DEPTH:
            self.in_channels = backbone.rgb_channels
            self.out_channels = backbone.depth_channels
        else:
            self.in_channels = backbone.depth_input_channels
            self.out_channels = backbone.rgb_channels
        self.replicate_input = backbone.replicate_depth and self.direction is Direction.DEPTH2RGB

        self.encoder = VggEncoder(backbone, self.in_channels)
        self.decoder = FeaturePyramidDecoder(
            list(backbone.widths), backbone.transition_width, backbone.norm
        )
        self.head = nn.Conv2d(backbone.transition_width, self.out_channels, 3, padding=1)
        init_weights(self)

    def forward(self, image: torch.Tensor) -> torch.Tensor:
        if self.replicate_input and image.dim() == 4 and image.shape[1] == 1:
            image = image.expand(-1, 3, -1, -1)
        if image.dim() != 4 or image.shape[1] != self.in_channels:
            raise NetworkShapeError(
                f"{self.direction.value} expects N x {self.in_channels} x H x W input, "
                f"got {tuple(image.shape)}"
            )
        height, width = image.shape[-2:]
        if height % 16 or width % 16:
            raise NetworkShapeError(f"input size {(height, width)} must be divisible by 16")
        return torch.sigmoid(self.head(self.decoder(self.encoder(image))))


def build_autoencoders(backbone: BackboneConfig) -> Dict[Direction, CrossModalAutoEncoder]:
    """Both stage-1 networks, keyed by direction."""
    return {direction: CrossModalAutoEncoder(backbone, direction) for direction in Direction}
