"""
VGG-16-topology encoder and the shared convolution building blocks.

The encoder keeps the five convolutional blocks of VGG-16 and drops the last
pooling layer and every fully-connected layer. Block i (i >= 2) starts with a
2x2 max-pool, so the five feature maps sit at strides 1, 2, 4, 8 and 16.
"""

from typing import List

import torch
from torch import nn

from pyrgbd.config.specs import BackboneConfig


class NetworkShapeError(ValueError):
    """Raised when a network input has the wrong channel count or spatial size."""

    pass


def conv3x3(in_channels: int, out_channels: int, norm: str = "batch") -> nn.Sequential:
    """3x3 convolution, optional batch norm, ReLU."""
    layers: List[nn.Module] = [nn.Conv2d(in_channels, out_channels, 3, padding=1)]
    if norm == "batch":
        layers.append(nn.BatchNorm2d(out_channels))
    layers.append(nn.ReLU(inplace=True))
    return nn.Sequential(*layers)


def conv1x1(in_channels: int, out_channels: int, norm: str = "batch") -> nn.Sequential:
    """1x1 convolution, optional batch norm, ReLU."""
    layers: List[nn.Module] = [nn.Conv2d(in_channels, out_channels, 1)]
    if norm == "batch":
        layers.append(nn.BatchNorm2d(out_channels))
    layers.append(nn.ReLU(inplace=True))
    return nn.Sequential(*layers)


def init_weights(module: nn.Module) -> None:
    """Fan-in scaled uniform (Kaiming, ReLU gain) convolutions, zero biases."""
    for layer in module.modules():
        if isinstance(layer, nn.Conv2d):
            nn.init.kaiming_uniform_(layer.weight, nonlinearity="relu")
            if layer.bias is not None:
                nn.init.zeros_(layer.bias)
        elif isinstance(layer, nn.BatchNorm2d):
            nn.init.ones_(layer.weight)
            nn.init.zeros_(layer.bias)


class VggEncoder(nn.Module):
    """
    Five-block VGG encoder of one stream.

    Args:
        config: Backbone widths, conv counts and normalization
        in_channels: Channels of the stream's input image
    """

    def __init__(self, config: BackboneConfig, in_channels: int):
        super().__init__()
        self.in_channels = in_channels
        self.widths = tuple(config.widths)

        blocks = []
        channels = in_channels
        for index, (width, count) in enumerate(zip(config.widths, config.convs)):
            layers: List[nn.Module] = [nn.MaxPool2d(2)] if index > 0 else []
            for _ in range(count):
                layers.append(conv3x3(channels, width, config.norm))
                channels = width
            blocks.append(nn.Sequential(*layers))
        self.blocks = nn.ModuleList(blocks)

    def forward(self, image: torch.Tensor) -> List[torch.Tensor]:
        if image.dim() != 4 or image.shape[1] != self.in_channels:
            raise NetworkShapeError(
                f"encoder expects N x {self.in_channels} x H x W input, got {tuple(image.shape)}"
            )
        features = []
        x = image
        for block in self.blocks:
            x = block(x)
            features.append(x)
        return features
