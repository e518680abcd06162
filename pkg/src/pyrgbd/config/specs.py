"""
Validated value types shared across pyrgbd.

The value types are frozen pydantic models. Invalid field values fail at
construction with a `pydantic.ValidationError` naming the offending field.
"""

from typing import Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Interval = Tuple[float, float]


class _FrozenSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class AugmentSpec(_FrozenSpec):
    """
    Random augmentation applied to training samples.

    Attributes:
        hflip_prob: Probability of a horizontal flip
        rotation: Rotation range in degrees, angles are drawn from [-rotation, rotation]
        brightness: Closed interval of brightness factors
        saturation: Closed interval of saturation factors
        contrast: Closed interval of contrast factors
        seed: Global augmentation seed
    """

    hflip_prob: float = Field(0.5, ge=0.0, le=1.0)
    rotation: float = Field(10.0, ge=0.0, le=180.0)
    brightness: Interval = (0.8, 1.2)
    saturation: Interval = (0.8, 1.2)
    contrast: Interval = (0.8, 1.2)
    seed: int = 0

    @field_validator("brightness", "saturation", "contrast")
    @classmethod
    def _check_factor_interval(cls, value: Interval) -> Interval:
        low, high = value
        if low <= 0 or high < low:
            raise ValueError(f"factor interval must satisfy 0 < low <= high, got {value}")
        if not low <= 1.0 <= high:
            raise ValueError(f"factor interval must contain 1.0, got {value}")
        return value

    @classmethod
    def identity(cls, seed: int = 0) -> "AugmentSpec":
        """Spec whose every draw leaves a sample unchanged."""
        return cls(
            hflip_prob=0.0,
            rotation=0.0,
            brightness=(1.0, 1.0),
            saturation=(1.0, 1.0),
            contrast=(1.0, 1.0),
            seed=seed,
        )

    @property
    def is_geometric_only(self) -> bool:
        return all(
            interval == (1.0, 1.0)
            for interval in (self.brightness, self.saturation, self.contrast)
        )


class SynthSpec(_FrozenSpec):
    """
    Parameters of the synthetic RGB-D scene generator.

    Foreground and background depth ranges must be disjoint so that depth
    carries information about saliency.
    """

    image_size: int = Field(64, ge=16)
    count: int = Field(200, ge=1)
    shapes: Tuple[int, int] = (1, 3)
    foreground_depth: Interval = (0.6, 1.0)
    background_depth: Interval = (0.0, 0.4)
    noise: float = Field(0.03, ge=0.0, le=0.5)
    seed: int = 0

    @field_validator("shapes")
    @classmethod
    def _check_shapes(cls, value: Tuple[int, int]) -> Tuple[int, int]:
        low, high = value
        if low < 1 or high < low:
            raise ValueError(f"shape count range must satisfy 1 <= min <= max, got {value}")
        return value

    @field_validator("foreground_depth", "background_depth")
    @classmethod
    def _check_depth_range(cls, value: Interval) -> Interval:
        low, high = value
        if not 0.0 <= low <= high <= 1.0:
            raise ValueError(f"depth range must lie in [0, 1] with low <= high, got {value}")
        return value

    @model_validator(mode="after")
    def _check_disjoint(self) -> "SynthSpec":
        fg_low, fg_high = self.foreground_depth
        bg_low, bg_high = self.background_depth
        if not (fg_high < bg_low or bg_high < fg_low):
            raise ValueError(
                f"foreground depth {self.foreground_depth} and background depth "
                f"{self.background_depth} must be disjoint"
            )
        return self


class BackboneConfig(_FrozenSpec):
    """
    VGG-16-topology two-stream backbone configuration.

    Attributes:
        name: Preset name the config was loaded from
        widths: Channel width of each of the five encoder blocks
        convs: Number of 3x3 convolutions in each block
        rgb_channels: Input channels of the RGB stream
        depth_channels: Input channels of the depth stream
        transition_width: Common width of the transition layers (also the FPN width)
        norm: Normalization after each encoder/transition/decoder conv
        replicate_depth: Feed depth as three identical channels
    """

    name: str = "custom"
    widths: Tuple[int, int, int, int, int] = (64, 128, 256, 512, 512)
    convs: Tuple[int, int, int, int, int] = (2, 2, 3, 3, 3)
    rgb_channels: int = Field(3, ge=1)
    depth_channels: int = Field(1, ge=1)
    transition_width: int = Field(64, ge=1)
    norm: Literal["batch", "none"] = "batch"
    replicate_depth: bool = False

    @field_validator("widths", "convs")
    @classmethod
    def _check_positive(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        if any(v < 1 for v in value):
            raise ValueError(f"all entries must be positive, got {value}")
        return value

    @property
    def strides(self) -> Tuple[int, int, int, int, int]:
        return (1, 2, 4, 8, 16)

    @property
    def depth_input_channels(self) -> int:
        return 3 if self.replicate_depth else self.depth_channels


class OptimSpec(_FrozenSpec):
    """SGD settings of one training procedure."""

    method: Literal["sgd"] = "sgd"
    momentum: float = Field(0.9, ge=0.0, lt=1.0)
    weight_decay: float = Field(5e-4, ge=0.0)
    batch_size: int = Field(4, ge=1)
    epochs: int = Field(50, ge=1)
    lr_backbone: float = Field(0.005, gt=0.0)
    lr_other: float = Field(0.05, gt=0.0)
    decay_biases: bool = True


class ScheduleSpec(_FrozenSpec):
    """Per-iteration learning-rate schedule."""

    kind: Literal["poly", "warmup_linear"] = "poly"
    power: float = Field(0.9, gt=0.0)
    warmup_frac: float = Field(0.1, gt=0.0, lt=1.0)
    total_iters: int = Field(0, ge=0)


class AblationConfig(_FrozenSpec):
    """
    Fusion and initialization flags of one ablation row.

    A fusion site whose JC and JD branches are both disabled is replaced by the
    `fusion_fallback` operation and no longer counts as a CDA.

    Attributes:
        name: Row identifier, e.g. "t3m9"
        use_cm_jc: Joint-consistency branch in the cross-modal CDAs
        use_cm_jd: Joint-difference branch in the cross-modal CDAs
        use_cl_jc: Joint-consistency branch in the cross-level CDAs
        use_cl_jd: Joint-difference branch in the cross-level CDAs
        init_p1: Initialize encoders from the stage-1 auto-encoders
        init_p2: Initialize fusion/decoder/heads from the stage-2 contour model
        fusion_fallback: Replacement for disabled CDA sites
        pretrain_fraction: Share of the pretext pool used for pretraining
    """

    name: str = "custom"
    use_cm_jc: bool = True
    use_cm_jd: bool = True
    use_cl_jc: bool = True
    use_cl_jd: bool = True
    init_p1: bool = True
    init_p2: bool = True
    fusion_fallback: Literal["add", "add_conv"] = "add"
    pretrain_fraction: float = Field(1.0, gt=0.0, le=1.0)
    description: Optional[str] = None

    @property
    def cross_modal_cda(self) -> bool:
        return self.use_cm_jc or self.use_cm_jd

    @property
    def cross_level_cda(self) -> bool:
        return self.use_cl_jc or self.use_cl_jd

    @property
    def cda_count(self) -> int:
        """Number of CDA instances the flags produce (5 cross-modal + 4 cross-level)."""
        return 5 * int(self.cross_modal_cda) + 4 * int(self.cross_level_cda)

    @property
    def needs_pretraining(self) -> bool:
        return self.init_p1 or self.init_p2

    @classmethod
    def full(cls) -> "AblationConfig":
        """All CDA branches on, initialized from both pretext stages."""
        return cls(name="full")

    @classmethod
    def baseline(cls) -> "AblationConfig":
        """Additive fusion everywhere and random initialization."""
        return cls(
            name="baseline",
            use_cm_jc=False,
            use_cm_jd=False,
            use_cl_jc=False,
            use_cl_jd=False,
            init_p1=False,
            init_p2=False,
        )
