"""
Two-stream RGB-D salient object detection network.

Both streams run a VGG encoder. Five transition layers bring every level of
both streams to a common width. Decoding runs top-down:

    s5 = head5(cat(T5_rgb, T5_depth))
    f5 = CM5(T5_rgb, T5_depth, sigmoid(s5))
    for i = 4 .. 1:
        g  = up(sigmoid(s(i+1)))                 gate at level i
        cm = CMi(Ti_rgb, Ti_depth, g)            cross-modal fusion
        f  = Di(CLi(cm, up(f(i+1)), g))          cross-level fusion + decoder
        si = headi(f)

which gives nine fusion sites (five cross-modal, four cross-level), four
decoder blocks and five side-outs. Side-outs are logits returned coarsest
first; the final map is the sigmoid of s1 at input resolution. The stage-2
depth-contour network is this same module evaluated with `forward_contour`,
so its parameter names match the downstream model one to one.
"""

from typing import Dict, Iterator, List, NamedTuple, Optional

import torch
import torch.nn.functional as F
from torch import nn

from pyrgbd.config.specs import AblationConfig, BackboneConfig
from pyrgbd.models.backbone import (
    NetworkShapeError,
    VggEncoder,
    conv1x1,
    conv3x3,
    init_weights,
)
from pyrgbd.models.fusion import CdaModule, CdaOutput, build_fusion

LEVELS = 5


class SodOutput(NamedTuple):
    side_outs: List[torch.Tensor]
    final: torch.Tensor


class Transition(nn.Module):
    """1x1 projections of one level of both streams to the common width."""

    def __init__(self, rgb_channels: int, depth_channels: int, width: int, norm: str):
        super().__init__()
        self.rgb = conv1x1(rgb_channels, width, norm)
        self.depth = conv1x1(depth_channels, width, norm)

    def forward(self, rgb: torch.Tensor, depth: torch.Tensor):
        return self.rgb(rgb), self.depth(depth)


class DecoderBlock(nn.Sequential):
    """Two 3x3 conv layers applied after cross-level fusion."""

    def __init__(self, width: int, norm: str):
        super().__init__(conv3x3(width, width, norm), conv3x3(width, width, norm))


def _upsample(x: torch.Tensor, like: torch.Tensor) -> torch.Tensor:
    if x.shape[-2:] == like.shape[-2:]:
        return x
    return F.interpolate(x, size=like.shape[-2:], mode="bilinear", align_corners=False)


class SodModel(nn.Module):
    """
    RGB-D saliency network with configurable fusion sites.

    Args:
        backbone: Encoder and transition configuration
        ablation: Fusion flags; defaults to every CDA branch on
        identity_fusion: Build CDA conv blocks in identity mode (testing)

    Attributes:
        capture: When True, the next forward stores every CDA's intermediates
            in `intermediates`, keyed by site name ('cm1'..'cm5', 'cl1'..'cl4')
    """

    def __init__(
        self,
        backbone: BackboneConfig,
        ablation: Optional[AblationConfig] = None,
        identity_fusion: bool = False,
    ):
        super().__init__()
        ablation = ablation or AblationConfig.full()
        self.backbone_config = backbone
        self.ablation = ablation
        width = backbone.transition_width

        self.rgb_encoder = VggEncoder(backbone, backbone.rgb_channels)
        self.depth_encoder = VggEncoder(backbone, backbone.depth_input_channels)
        self.transitions = nn.ModuleList(
            Transition(w, w, width, backbone.norm) for w in backbone.widths
        )
        self.cross_modal = nn.ModuleList(
            build_fusion(
                width,
                ablation.use_cm_jc,
                ablation.use_cm_jd,
                ablation.fusion_fallback,
                identity_fusion,
            )
            for _ in range(LEVELS)
        )
        self.cross_level = nn.ModuleList(
            build_fusion(
                width,
                ablation.use_cl_jc,
                ablation.use_cl_jd,
                ablation.fusion_fallback,
                identity_fusion,
            )
            for _ in range(LEVELS - 1)
        )
        self.decoders = nn.ModuleList(
            DecoderBlock(width, backbone.norm) for _ in range(LEVELS - 1)
        )
        # heads[0..3] read decoder outputs of levels 1..4, heads[4] the level-5 concat
        self.heads = nn.ModuleList(
            [nn.Conv2d(width, 1, 3, padding=1) for _ in range(LEVELS - 1)]
            + [nn.Conv2d(2 * width, 1, 3, padding=1)]
        )

        for name, module in self.named_children():
            if name not in ("cross_modal", "cross_level"):
                init_weights(module)

        self.encoders_frozen = False
        self.capture = False
        self.intermediates: Dict[str, CdaOutput] = {}

    # Introspection

    def encoders(self) -> List[nn.Module]:
        return [self.rgb_encoder, self.depth_encoder]

    def encoder_parameters(self) -> Iterator[nn.Parameter]:
        for encoder in self.encoders():
            yield from encoder.parameters()

    def non_encoder_parameters(self) -> Iterator[nn.Parameter]:
        for name, parameter in self.named_parameters():
            if not name.startswith(("rgb_encoder.", "depth_encoder.")):
                yield parameter

    def cda_sites(self) -> Dict[str, nn.Module]:
        """Every fusion site by name, cross-modal first."""
        sites = {f"cm{i + 1}": m for i, m in enumerate(self.cross_modal)}
        sites.update({f"cl{i + 1}": m for i, m in enumerate(self.cross_level)})
        return sites

    def cda_modules(self) -> List[CdaModule]:
        return [m for m in self.cda_sites().values() if isinstance(m, CdaModule)]

    @property
    def cda_invocations(self) -> int:
        return sum(m.calls for m in self.cda_modules())

    def reset_counters(self) -> None:
        for module in self.cda_modules():
            module.reset_counters()

    def train(self, mode: bool = True) -> "SodModel":
        super().train(mode)
        if self.encoders_frozen:
            # frozen encoders keep their normalization statistics
            for encoder in self.encoders():
                encoder.eval()
        return self

    # Forward passes

    def _fuse(self, name: str, module: nn.Module, f_a, f_b, gate) -> torch.Tensor:
        if self.capture and isinstance(module, CdaModule):
            output = module(f_a, f_b, gate, return_intermediates=True)
            self.intermediates[name] = output
            return output.fused
        return module(f_a, f_b, gate)

    def side_outputs(self, rgb: torch.Tensor, depth: torch.Tensor) -> List[torch.Tensor]:
        """Side-out logits s5, s4, s3, s2, s1 (coarsest first)."""
        if rgb.dim() != 4 or depth.dim() != 4:
            raise NetworkShapeError(
                f"expected NCHW inputs, got rgb {tuple(rgb.shape)}, depth {tuple(depth.shape)}"
            )
        if rgb.shape[-2:] != depth.shape[-2:] or rgb.shape[0] != depth.shape[0]:
            raise NetworkShapeError(
                f"rgb {tuple(rgb.shape)} and depth {tuple(depth.shape)} are not aligned"
            )
        height, width = rgb.shape[-2:]
        if height % 16 or width % 16:
            raise NetworkShapeError(
                f"input size {(height, width)} must be divisible by 16"
            )
        if self.backbone_config.replicate_depth and depth.shape[1] == 1:
            depth = depth.expand(-1, 3, -1, -1)

        if self.capture:
            self.intermediates = {}

        rgb_features = self.rgb_encoder(rgb)
        depth_features = self.depth_encoder(depth)
        levels = [
            transition(r, d)
            for transition, r, d in zip(self.transitions, rgb_features, depth_features)
        ]

        tr5, td5 = levels[4]
        logit = self.heads[4](torch.cat([tr5, td5], dim=1))
        side_outs = [logit]
        decoded = self._fuse("cm5", self.cross_modal[4], tr5, td5, torch.sigmoid(logit))

        for index in range(LEVELS - 2, -1, -1):
            tr, td = levels[index]
            gate = _upsample(torch.sigmoid(logit), tr)
            fused = self._fuse(f"cm{index + 1}", self.cross_modal[index], tr, td, gate)
            fused = self._fuse(
                f"cl{index + 1}",
                self.cross_level[index],
                fused,
                _upsample(decoded, tr),
                gate,
            )
            decoded = self.decoders[index](fused)
            logit = self.heads[index](decoded)
            side_outs.append(logit)

        return side_outs

    def forward(self, rgb: torch.Tensor, depth: torch.Tensor) -> SodOutput:
        side_outs = self.side_outputs(rgb, depth)
        final = torch.sigmoid(_upsample(side_outs[-1], rgb))
        return SodOutput(side_outs, final)

    def forward_contour(self, rgb: torch.Tensor, depth: torch.Tensor) -> List[torch.Tensor]:
        """Depth-contour predictions in [0, 1] at every side-out, coarsest first."""
        return [torch.sigmoid(s) for s in self.side_outputs(rgb, depth)]

    def census(self) -> Dict[str, int]:
        """Counts of the architectural components."""
        return {
            "encoder_blocks": sum(len(e.blocks) for e in self.encoders()),
            "transitions": len(self.transitions),
            "fusion_sites": len(self.cda_sites()),
            "cda_modules": len(self.cda_modules()),
            "decoders": len(self.decoders),
            "heads": len(self.heads),
        }
