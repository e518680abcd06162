"""
Consistency-difference aggregation (CDA) and its fallback fusions.

A CDA fuses two feature maps F_A and F_B of equal shape under a one-channel
saliency gate S:

    F_JC    = Conv(F_A * F_B * S)                          joint consistency
    F_JC^AB = Conv(Conv(F_JC + F_A) + Conv(F_JC + F_B))    consistency enhancement
    F_JD    = Conv(|F_A - F_B| * S)                        joint difference
    out     = Conv(F_JC^AB + F_JD)                         aggregation

Each Conv is a channel-preserving 3x3 convolution followed by ReLU, with no
normalization. S broadcasts over channels. Either branch can be switched
off: without JC the enhancement adds nothing to F_A and F_B, without JD the
aggregation convolves F_JC^AB alone. A site with both branches off is built
as one of the fallbacks instead.
"""

from typing import NamedTuple, Optional

import torch
from torch import nn

from pyrgbd.models.backbone import init_weights


class FusionShapeError(ValueError):
    """Raised when fusion inputs have inconsistent shapes."""

    pass


class CdaOutput(NamedTuple):
    """Intermediates of one CDA evaluation."""

    jc: Optional[torch.Tensor]
    jc_ab: torch.Tensor
    jd: Optional[torch.Tensor]
    fused: torch.Tensor


def check_shapes(
    f_a: torch.Tensor, f_b: torch.Tensor, gate: Optional[torch.Tensor] = None
) -> None:
    """Validate a (F_A, F_B, S) triple, listing every shape on failure."""
    problem = None
    if f_a.shape != f_b.shape:
        problem = "feature shapes differ"
    elif f_a.dim() not in (3, 4):
        problem = "features must be CxHxW or NxCxHxW"
    elif gate is not None:
        if gate.dim() != f_a.dim() or gate.shape[-3] != 1:
            problem = "gate must have one channel and the features' rank"
        elif gate.shape[-2:] != f_a.shape[-2:]:
            problem = "gate spatial size differs from the features'"
        elif f_a.dim() == 4 and gate.shape[0] not in (1, f_a.shape[0]):
            problem = "gate batch size differs from the features'"
    if problem:
        gate_shape = None if gate is None else tuple(gate.shape)
        raise FusionShapeError(
            f"{problem}: F_A {tuple(f_a.shape)}, F_B {tuple(f_b.shape)}, S {gate_shape}"
        )


def joint_consistency_product(
    f_a: torch.Tensor, f_b: torch.Tensor, gate: torch.Tensor
) -> torch.Tensor:
    """Pre-convolution joint consistency F_A * F_B * S."""
    check_shapes(f_a, f_b, gate)
    return f_a * f_b * gate


def joint_difference_map(
    f_a: torch.Tensor, f_b: torch.Tensor, gate: torch.Tensor
) -> torch.Tensor:
    """Pre-convolution joint difference |F_A - F_B| * S."""
    check_shapes(f_a, f_b, gate)
    return torch.abs(f_a - f_b) * gate


class ConvBlock(nn.Module):
    """
    Channel-preserving 3x3 convolution followed by ReLU.

    In identity mode the kernel is a centred delta, the bias is zero and the
    ReLU is bypassed, so the block returns its input unchanged.
    """

    def __init__(self, channels: int, identity: bool = False):
        super().__init__()
        self.identity = identity
        self.conv = nn.Conv2d(channels, channels, 3, padding=1)
        if identity:
            with torch.no_grad():
                self.conv.weight.zero_()
                for c in range(channels):
                    self.conv.weight[c, c, 1, 1] = 1.0
                self.conv.bias.zero_()
        else:
            init_weights(self.conv)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        unbatched = x.dim() == 3
        out = self.conv(x[None] if unbatched else x)
        out = out[0] if unbatched else out
        return out if self.identity else torch.relu(out)


class CdaModule(nn.Module):
    """
    One consistency-difference aggregation site with independent parameters.

    Args:
        channels: Channel count of F_A and F_B
        use_jc: Build the joint-consistency branch
        use_jd: Build the joint-difference branch
        identity: Build every conv block in identity mode

    Attributes:
        calls: Number of forward evaluations since the last reset
    """

    def __init__(
        self,
        channels: int,
        use_jc: bool = True,
        use_jd: bool = True,
        identity: bool = False,
    ):
        super().__init__()
        if not (use_jc or use_jd):
            raise ValueError("a CDA needs at least one of the JC and JD branches")
        self.channels = channels
        self.use_jc = use_jc
        self.use_jd = use_jd

        self.jc = ConvBlock(channels, identity) if use_jc else None
        self.enhance_a = ConvBlock(channels, identity)
        self.enhance_b = ConvBlock(channels, identity)
        self.enhance_out = ConvBlock(channels, identity)
        self.jd = ConvBlock(channels, identity) if use_jd else None
        self.aggregate = ConvBlock(channels, identity)
        self.calls = 0

    def joint_consistency(
        self, f_a: torch.Tensor, f_b: torch.Tensor, gate: torch.Tensor
    ) -> torch.Tensor:
        if self.jc is None:
            raise RuntimeError("joint consistency branch is disabled")
        return self.jc(joint_consistency_product(f_a, f_b, gate))

    def consistency_enhance(
        self, f_jc: Optional[torch.Tensor], f_a: torch.Tensor, f_b: torch.Tensor
    ) -> torch.Tensor:
        check_shapes(f_a, f_b)
        if f_jc is None:
            return self.enhance_out(self.enhance_a(f_a) + self.enhance_b(f_b))
        check_shapes(f_jc, f_a)
        return self.enhance_out(self.enhance_a(f_jc + f_a) + self.enhance_b(f_jc + f_b))

    def joint_difference(
        self, f_a: torch.Tensor, f_b: torch.Tensor, gate: torch.Tensor
    ) -> torch.Tensor:
        if self.jd is None:
            raise RuntimeError("joint difference branch is disabled")
        return self.jd(joint_difference_map(f_a, f_b, gate))

    def forward(
        self,
        f_a: torch.Tensor,
        f_b: torch.Tensor,
        gate: torch.Tensor,
        return_intermediates: bool = False,
    ):
        check_shapes(f_a, f_b, gate)
        self.calls += 1

        f_jc = self.joint_consistency(f_a, f_b, gate) if self.use_jc else None
        f_jc_ab = self.consistency_enhance(f_jc, f_a, f_b)
        f_jd = self.joint_difference(f_a, f_b, gate) if self.use_jd else None
        fused = self.aggregate(f_jc_ab if f_jd is None else f_jc_ab + f_jd)

        if return_intermediates:
            return CdaOutput(f_jc, f_jc_ab, f_jd, fused)
        return fused

    def reset_counters(self) -> None:
        self.calls = 0

    def extra_repr(self) -> str:
        return f"channels={self.channels}, use_jc={self.use_jc}, use_jd={self.use_jd}"


class AdditiveFusion(nn.Module):
    """Element-wise F_A + F_B; the gate is accepted and ignored."""

    def forward(
        self,
        f_a: torch.Tensor,
        f_b: torch.Tensor,
        gate: Optional[torch.Tensor] = None,
        return_intermediates: bool = False,
    ) -> torch.Tensor:
        check_shapes(f_a, f_b, gate)
        return f_a + f_b


class AddConvFusion(nn.Module):
    """
    Addition/convolution control with the parameter count of a full CDA.

    Products and differences are replaced by sums and the gate is ignored,
    keeping six channel-preserving conv blocks.
    """

    def __init__(self, channels: int):
        super().__init__()
        self.channels = channels
        self.mix = ConvBlock(channels)
        self.enhance_a = ConvBlock(channels)
        self.enhance_b = ConvBlock(channels)
        self.enhance_out = ConvBlock(channels)
        self.side = ConvBlock(channels)
        self.aggregate = ConvBlock(channels)

    def forward(
        self,
        f_a: torch.Tensor,
        f_b: torch.Tensor,
        gate: Optional[torch.Tensor] = None,
        return_intermediates: bool = False,
    ) -> torch.Tensor:
        check_shapes(f_a, f_b, gate)
        total = f_a + f_b
        mixed = self.mix(total)
        enhanced = self.enhance_out(self.enhance_a(mixed + f_a) + self.enhance_b(mixed + f_b))
        return self.aggregate(enhanced + self.side(total))


def build_fusion(
    channels: int,
    use_jc: bool = True,
    use_jd: bool = True,
    fallback: str = "add",
    identity: bool = False,
) -> nn.Module:
    """CDA with the requested branches, or the fallback when both are off."""
    if use_jc or use_jd:
        return CdaModule(channels, use_jc=use_jc, use_jd=use_jd, identity=identity)
    if fallback == "add_conv":
        return AddConvFusion(channels)
    if fallback == "add":
        return AdditiveFusion()
    raise ValueError(f"Unknown fusion fallback: {fallback}")
