import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, ClassVar, Dict, Iterable, List, Mapping, Optional, Tuple, Union

import torch
import yaml

from pyrgbd.config.ablation import load_ablation
from pyrgbd.config.preset import PresetConfig, available_presets
from pyrgbd.config.specs import (
    AblationConfig,
    AugmentSpec,
    BackboneConfig,
    OptimSpec,
    ScheduleSpec,
)
from pyrgbd.utils import get_logger

logger = get_logger(__name__)


class ConfigError(ValueError):
    """Raised when a training configuration is invalid or cannot be read."""

    pass


@dataclass
class TrainKeys:
    """Dataclass for training configuration key constants (flat file schema)."""

    # Architecture keys
    PRESET: ClassVar[str] = "preset"
    TRANSITION_WIDTH: ClassVar[str] = "transition_width"
    NORM: ClassVar[str] = "norm"
    REPLICATE_DEPTH: ClassVar[str] = "replicate_depth"

    # Data keys
    IMAGE_SIZE: ClassVar[str] = "image_size"
    DEPTH_NORMALIZATION: ClassVar[str] = "depth_normalization"
    INVERT_DEPTH: ClassVar[str] = "invert_depth"
    CONTOUR_M: ClassVar[str] = "contour_m"
    AUGMENT: ClassVar[str] = "augment"
    HFLIP_PROB: ClassVar[str] = "hflip_prob"
    ROTATION: ClassVar[str] = "rotation"
    BRIGHTNESS: ClassVar[str] = "brightness"
    SATURATION: ClassVar[str] = "saturation"
    CONTRAST: ClassVar[str] = "contrast"
    VAL_FRACTION: ClassVar[str] = "val_fraction"
    PRETRAIN_FRACTION: ClassVar[str] = "pretrain_fraction"
    NUM_WORKERS: ClassVar[str] = "num_workers"

    # Optimization keys
    BATCH_SIZE: ClassVar[str] = "batch_size"
    EPOCHS: ClassVar[str] = "epochs"
    ITERATIONS: ClassVar[str] = "iterations"
    LR_PRETEXT: ClassVar[str] = "lr_pretext"
    LR_BACKBONE: ClassVar[str] = "lr_backbone"
    LR_OTHER: ClassVar[str] = "lr_other"
    MOMENTUM: ClassVar[str] = "momentum"
    WEIGHT_DECAY: ClassVar[str] = "weight_decay"
    DECAY_BIASES: ClassVar[str] = "decay_biases"
    POLY_POWER: ClassVar[str] = "poly_power"
    WARMUP_FRAC: ClassVar[str] = "warmup_frac"
    RECON_SSIM_WEIGHT: ClassVar[str] = "recon_ssim_weight"

    # Ablation keys
    ABLATION: ClassVar[str] = "ablation"
    USE_CM_JC: ClassVar[str] = "use_cm_jc"
    USE_CM_JD: ClassVar[str] = "use_cm_jd"
    USE_CL_JC: ClassVar[str] = "use_cl_jc"
    USE_CL_JD: ClassVar[str] = "use_cl_jd"
    INIT_P1: ClassVar[str] = "init_p1"
    INIT_P2: ClassVar[str] = "init_p2"
    FUSION_FALLBACK: ClassVar[str] = "fusion_fallback"
    REUSE_CONTOUR_HEADS: ClassVar[str] = "reuse_contour_heads"

    # System keys
    SEED: ClassVar[str] = "seed"
    DETERMINISTIC: ClassVar[str] = "deterministic"
    DEVICE: ClassVar[str] = "device"
    LOG_EVERY: ClassVar[str] = "log_every"


class TrainOptions:
    """Class containing valid options for the training configuration."""

    NORMS: List[str] = ["batch", "none"]
    DEPTH_NORMALIZATIONS: List[str] = ["auto", "minmax", "none"]
    FUSION_FALLBACKS: List[str] = ["add", "add_conv"]
    DEVICES: List[str] = ["cpu", "cuda", "auto"]
    STAGES: List[str] = ["pretext", "downstream"]

    # Entries written next to a config echo that are not settings
    ECHO_KEYS: List[str] = ["command", "argv"]

    # Keys that change parameter names or shapes of the built networks
    ARCHITECTURE_KEYS: List[str] = [
        "use_cm_jc",
        "use_cm_jd",
        "use_cl_jc",
        "use_cl_jd",
        "fusion_fallback",
    ]

    @classmethod
    def validate_option(cls, option_name: str, value: Any) -> bool:
        """Validate if a value is a valid option for the given option type."""
        options_list = getattr(cls, option_name.upper(), None)
        if options_list is None:
            return True
        return value in options_list


class TrainConfig:
    """Flat configuration shared by all training procedures and CLI commands."""

    # Class-level access to keys and options
    Keys = TrainKeys
    Options = TrainOptions

    def __init__(
        self,
        preset: str = "vgg16",
        transition_width: Optional[int] = None,
        norm: Optional[str] = None,
        replicate_depth: bool = False,
        image_size: Optional[int] = None,
        depth_normalization: str = "auto",
        invert_depth: bool = False,
        contour_m: int = 5,
        augment: bool = True,
        hflip_prob: float = 0.5,
        rotation: float = 10.0,
        brightness: Iterable[float] = (0.8, 1.2),
        saturation: Iterable[float] = (0.8, 1.2),
        contrast: Iterable[float] = (0.8, 1.2),
        val_fraction: float = 0.2,
        pretrain_fraction: float = 1.0,
        num_workers: int = 0,
        batch_size: int = 4,
        epochs: int = 50,
        iterations: Optional[int] = None,
        lr_pretext: float = 0.001,
        lr_backbone: float = 0.005,
        lr_other: float = 0.05,
        momentum: float = 0.9,
        weight_decay: float = 5e-4,
        decay_biases: bool = True,
        poly_power: float = 0.9,
        warmup_frac: float = 0.1,
        recon_ssim_weight: float = 1.0,
        ablation: Optional[str] = None,
        use_cm_jc: bool = True,
        use_cm_jd: bool = True,
        use_cl_jc: bool = True,
        use_cl_jd: bool = True,
        init_p1: bool = True,
        init_p2: bool = True,
        fusion_fallback: str = "add",
        reuse_contour_heads: bool = True,
        seed: int = 0,
        deterministic: bool = True,
        device: str = "cpu",
        log_every: int = 50,
    ):
        """
        Initialize the training configuration.

        Args:
            preset: Backbone preset name ('tiny', 'vgg16')
            transition_width: Override of the preset's transition/FPN width
            norm: Override of the preset's normalization ('batch', 'none')
            replicate_depth: Feed depth to its encoder as three identical channels
            image_size: Square resize applied when loading samples (None keeps the size)
            depth_normalization: Depth rescaling after loading (auto, minmax, none)
            invert_depth: Flip depth polarity so that larger means closer
            contour_m: Structuring element size of the depth-contour targets
            augment: Apply random augmentation to training samples
            hflip_prob: Horizontal flip probability
            rotation: Rotation range in degrees
            brightness: Brightness factor interval
            saturation: Saturation factor interval
            contrast: Contrast factor interval
            val_fraction: Held-out share of downstream training data
            pretrain_fraction: Share of the pretext pool used for pretraining
            num_workers: DataLoader worker processes
            batch_size: Mini-batch size
            epochs: Training epochs (ignored when iterations is set)
            iterations: Fixed iteration budget
            lr_pretext: Base learning rate of both pretext stages
            lr_backbone: Maximum downstream learning rate of the encoders
            lr_other: Maximum downstream learning rate of everything else
            momentum: SGD momentum
            weight_decay: SGD weight decay
            decay_biases: Apply weight decay to biases and normalization parameters
            poly_power: Exponent of the poly schedule
            warmup_frac: Warm-up share of the downstream schedule
            recon_ssim_weight: Weight of (1 - SSIM) in the reconstruction loss
            ablation: Ablation row identifier (e.g. 't3m9'); its flags replace
                the use_*/init_*/fusion_fallback/pretrain_fraction values
            use_cm_jc: Joint consistency in the cross-modal CDAs
            use_cm_jd: Joint difference in the cross-modal CDAs
            use_cl_jc: Joint consistency in the cross-level CDAs
            use_cl_jd: Joint difference in the cross-level CDAs
            init_p1: Initialize downstream encoders from stage 1
            init_p2: Initialize downstream fusion and decoder from stage 2
            fusion_fallback: Replacement of disabled CDA sites (add, add_conv)
            reuse_contour_heads: Transfer the stage-2 side-out heads downstream
            seed: Global seed
            deterministic: Request deterministic torch algorithms
            device: Torch device ('cpu', 'cuda', 'auto')
            log_every: Iterations between progress log lines
        """
        # Architecture settings
        self.preset = self._validate_preset(preset)
        self.transition_width = self._optional_positive_int(
            self.Keys.TRANSITION_WIDTH, transition_width
        )
        self.norm = None if norm is None else self._validate_option("NORMS", norm)
        self.replicate_depth = bool(replicate_depth)

        # Data settings
        self.image_size = self._optional_positive_int(self.Keys.IMAGE_SIZE, image_size)
        if self.image_size is not None and self.image_size % 16 != 0:
            raise ConfigError(f"image_size must be divisible by 16, got {image_size}")
        self.depth_normalization = self._validate_option(
            "DEPTH_NORMALIZATIONS", depth_normalization
        )
        self.invert_depth = bool(invert_depth)
        self.contour_m = self._positive_int(self.Keys.CONTOUR_M, contour_m)
        if self.contour_m % 2 == 0:
            raise ConfigError(f"contour_m must be odd, got {contour_m}")
        self.augment = bool(augment)
        self.hflip_prob = self._unit_float(self.Keys.HFLIP_PROB, hflip_prob)
        self.rotation = float(rotation)
        self.brightness = self._interval(self.Keys.BRIGHTNESS, brightness)
        self.saturation = self._interval(self.Keys.SATURATION, saturation)
        self.contrast = self._interval(self.Keys.CONTRAST, contrast)
        self.val_fraction = self._unit_float(self.Keys.VAL_FRACTION, val_fraction)
        if self.val_fraction >= 1.0:
            raise ConfigError(f"val_fraction must be below 1, got {val_fraction}")
        self.pretrain_fraction = float(pretrain_fraction)
        self.num_workers = self._non_negative_int(self.Keys.NUM_WORKERS, num_workers)

        # Optimization settings
        self.batch_size = self._positive_int(self.Keys.BATCH_SIZE, batch_size)
        self.epochs = self._positive_int(self.Keys.EPOCHS, epochs)
        self.iterations = (
            None
            if iterations is None
            else self._non_negative_int(self.Keys.ITERATIONS, iterations)
        )
        self.lr_pretext = float(lr_pretext)
        self.lr_backbone = float(lr_backbone)
        self.lr_other = float(lr_other)
        self.momentum = float(momentum)
        self.weight_decay = float(weight_decay)
        self.decay_biases = bool(decay_biases)
        self.poly_power = float(poly_power)
        self.warmup_frac = float(warmup_frac)
        self.recon_ssim_weight = float(recon_ssim_weight)
        if self.recon_ssim_weight < 0:
            raise ConfigError(
                f"recon_ssim_weight must be non-negative, got {recon_ssim_weight}"
            )

        # Ablation settings
        self.ablation = ablation
        self.use_cm_jc = bool(use_cm_jc)
        self.use_cm_jd = bool(use_cm_jd)
        self.use_cl_jc = bool(use_cl_jc)
        self.use_cl_jd = bool(use_cl_jd)
        self.init_p1 = bool(init_p1)
        self.init_p2 = bool(init_p2)
        self.fusion_fallback = self._validate_option("FUSION_FALLBACKS", fusion_fallback)
        self.reuse_contour_heads = bool(reuse_contour_heads)
        if ablation is not None:
            self._apply_ablation_row(ablation)

        # System settings
        self.seed = int(seed)
        self.deterministic = bool(deterministic)
        self.device = self._validate_option("DEVICES", device)
        self.log_every = self._positive_int(self.Keys.LOG_EVERY, log_every)

        # Validate the composed value types early so errors name config keys
        try:
            self.backbone()
            self.ablation_config()
            self.optim_spec("pretext")
            self.optim_spec("downstream")
            self.schedule_spec("downstream", 0)
            self.schedule_spec("pretext", 0)
        except ValueError as e:
            raise ConfigError(f"Invalid training configuration: {e}") from e

        logger.debug(f"Initialized training config: {self}")

    def _validate_preset(self, preset: str) -> str:
        name = str(preset).lower().strip()
        presets = available_presets()
        if name not in presets:
            raise ConfigError(f"Invalid preset: {preset}. Valid options are {presets}")
        return name

    def _validate_option(self, option_type: str, value: str) -> str:
        """Validate option against allowed values."""
        options_list = getattr(self.Options, option_type, None)
        if options_list is None:
            return value

        if value not in options_list:
            raise ConfigError(
                f"Invalid {option_type.lower()}: {value}. Valid options are {options_list}"
            )
        return value

    @staticmethod
    def _positive_int(key: str, value: Any) -> int:
        if isinstance(value, bool) or int(value) != value or int(value) < 1:
            raise ConfigError(f"{key} must be a positive integer, got {value!r}")
        return int(value)

    @staticmethod
    def _non_negative_int(key: str, value: Any) -> int:
        if isinstance(value, bool) or int(value) != value or int(value) < 0:
            raise ConfigError(f"{key} must be a non-negative integer, got {value!r}")
        return int(value)

    def _optional_positive_int(self, key: str, value: Any) -> Optional[int]:
        return None if value is None else self._positive_int(key, value)

    @staticmethod
    def _unit_float(key: str, value: Any) -> float:
        value = float(value)
        if not 0.0 <= value <= 1.0:
            raise ConfigError(f"{key} must lie in [0, 1], got {value}")
        return value

    @staticmethod
    def _interval(key: str, value: Iterable[float]) -> Tuple[float, float]:
        values = tuple(float(v) for v in value)
        if len(values) != 2:
            raise ConfigError(f"{key} must be a [low, high] pair, got {value!r}")
        return values

    def _apply_ablation_row(self, name: str) -> None:
        try:
            row = load_ablation(name)
        except (ValueError, FileNotFoundError) as e:
            raise ConfigError(str(e)) from e

        self.ablation = row.name
        self.use_cm_jc = row.use_cm_jc
        self.use_cm_jd = row.use_cm_jd
        self.use_cl_jc = row.use_cl_jc
        self.use_cl_jd = row.use_cl_jd
        self.init_p1 = row.init_p1
        self.init_p2 = row.init_p2
        self.fusion_fallback = row.fusion_fallback
        self.pretrain_fraction = row.pretrain_fraction
        logger.info(f"Applied ablation row {row.name}: {row.description}")

    # Composed value types

    def backbone(self) -> BackboneConfig:
        """Backbone of the configured preset with the config's overrides applied."""
        return PresetConfig(self.preset).to_backbone(
            transition_width=self.transition_width,
            norm=self.norm,
            replicate_depth=self.replicate_depth,
        )

    def ablation_config(self) -> AblationConfig:
        return AblationConfig(
            name=self.ablation or "custom",
            use_cm_jc=self.use_cm_jc,
            use_cm_jd=self.use_cm_jd,
            use_cl_jc=self.use_cl_jc,
            use_cl_jd=self.use_cl_jd,
            init_p1=self.init_p1,
            init_p2=self.init_p2,
            fusion_fallback=self.fusion_fallback,
            pretrain_fraction=self.pretrain_fraction,
        )

    def augment_spec(self) -> Optional[AugmentSpec]:
        """Augmentation of training samples, or None when augmentation is off."""
        if not self.augment:
            return None
        return AugmentSpec(
            hflip_prob=self.hflip_prob,
            rotation=self.rotation,
            brightness=self.brightness,
            saturation=self.saturation,
            contrast=self.contrast,
            seed=self.seed,
        )

    def optim_spec(self, stage: str) -> OptimSpec:
        """
        SGD settings of a training stage.

        Both pretext stages use lr_pretext for every parameter group; the
        downstream stage uses the backbone/other split.
        """
        self._validate_option("STAGES", stage)
        pretext = stage == "pretext"
        return OptimSpec(
            momentum=self.momentum,
            weight_decay=self.weight_decay,
            batch_size=self.batch_size,
            epochs=self.epochs,
            lr_backbone=self.lr_pretext if pretext else self.lr_backbone,
            lr_other=self.lr_pretext if pretext else self.lr_other,
            decay_biases=self.decay_biases,
        )

    def schedule_spec(self, stage: str, total_iters: int) -> ScheduleSpec:
        """Poly schedule for the pretext stages, warm-up/linear decay downstream."""
        self._validate_option("STAGES", stage)
        return ScheduleSpec(
            kind="poly" if stage == "pretext" else "warmup_linear",
            power=self.poly_power,
            warmup_frac=self.warmup_frac,
            total_iters=total_iters,
        )

    def total_iterations(self, num_samples: int) -> int:
        """Iteration budget: the fixed count if set, else epochs times batches per epoch."""
        if self.iterations is not None:
            return self.iterations
        batches = -(-num_samples // self.batch_size)
        return self.epochs * batches

    def resolve_device(self) -> torch.device:
        if self.device == "auto":
            return torch.device("cuda" if torch.cuda.is_available() else "cpu")
        return torch.device(self.device)

    def fingerprint(self, include_fusion: bool = True) -> str:
        """
        Short hash of every setting that changes parameter names or shapes.

        Stage-1 auto-encoders contain no fusion sites, so their checkpoints
        are fingerprinted with include_fusion=False and stay valid across
        ablation rows.
        """
        payload = self.backbone().model_dump(exclude={"name"})
        if include_fusion:
            payload.update(
                {key: getattr(self, key) for key in self.Options.ARCHITECTURE_KEYS}
            )
        encoded = json.dumps(payload, sort_keys=True, default=list).encode("utf-8")
        return hashlib.sha256(encoded).hexdigest()[:16]

    # Serialization

    def to_dict(self) -> Dict[str, Any]:
        """Convert configuration to a flat dictionary (the config file schema)."""
        return {
            self.Keys.PRESET: self.preset,
            self.Keys.TRANSITION_WIDTH: self.transition_width,
            self.Keys.NORM: self.norm,
            self.Keys.REPLICATE_DEPTH: self.replicate_depth,
            self.Keys.IMAGE_SIZE: self.image_size,
            self.Keys.DEPTH_NORMALIZATION: self.depth_normalization,
            self.Keys.INVERT_DEPTH: self.invert_depth,
            self.Keys.CONTOUR_M: self.contour_m,
            self.Keys.AUGMENT: self.augment,
            self.Keys.HFLIP_PROB: self.hflip_prob,
            self.Keys.ROTATION: self.rotation,
            self.Keys.BRIGHTNESS: list(self.brightness),
            self.Keys.SATURATION: list(self.saturation),
            self.Keys.CONTRAST: list(self.contrast),
            self.Keys.VAL_FRACTION: self.val_fraction,
            self.Keys.PRETRAIN_FRACTION: self.pretrain_fraction,
            self.Keys.NUM_WORKERS: self.num_workers,
            self.Keys.BATCH_SIZE: self.batch_size,
            self.Keys.EPOCHS: self.epochs,
            self.Keys.ITERATIONS: self.iterations,
            self.Keys.LR_PRETEXT: self.lr_pretext,
            self.Keys.LR_BACKBONE: self.lr_backbone,
            self.Keys.LR_OTHER: self.lr_other,
            self.Keys.MOMENTUM: self.momentum,
            self.Keys.WEIGHT_DECAY: self.weight_decay,
            self.Keys.DECAY_BIASES: self.decay_biases,
            self.Keys.POLY_POWER: self.poly_power,
            self.Keys.WARMUP_FRAC: self.warmup_frac,
            self.Keys.RECON_SSIM_WEIGHT: self.recon_ssim_weight,
            self.Keys.ABLATION: self.ablation,
            self.Keys.USE_CM_JC: self.use_cm_jc,
            self.Keys.USE_CM_JD: self.use_cm_jd,
            self.Keys.USE_CL_JC: self.use_cl_jc,
            self.Keys.USE_CL_JD: self.use_cl_jd,
            self.Keys.INIT_P1: self.init_p1,
            self.Keys.INIT_P2: self.init_p2,
            self.Keys.FUSION_FALLBACK: self.fusion_fallback,
            self.Keys.REUSE_CONTOUR_HEADS: self.reuse_contour_heads,
            self.Keys.SEED: self.seed,
            self.Keys.DETERMINISTIC: self.deterministic,
            self.Keys.DEVICE: self.device,
            self.Keys.LOG_EVERY: self.log_every,
        }

    @classmethod
    def from_dict(cls, values: Mapping[str, Any]) -> "TrainConfig":
        """
        Build a config from a flat mapping.

        Raises:
            ConfigError: If the mapping holds unknown keys or invalid values
        """
        known = set(_KNOWN_KEYS)
        values = {k: v for k, v in values.items() if k not in cls.Options.ECHO_KEYS}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"Unknown config keys: {unknown}. Valid keys are {sorted(known)}")
        try:
            return cls(**dict(values))
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid config value: {e}") from e

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "TrainConfig":
        """Read a flat YAML config file."""
        path = Path(path)
        try:
            with open(path, "r") as f:
                values = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"Cannot read config file {path}: {e}") from e
        if not isinstance(values, dict):
            raise ConfigError(f"Config file {path} must hold a flat mapping")
        return cls.from_dict(values)

    def with_overrides(self, overrides: Iterable[str]) -> "TrainConfig":
        """
        Return a copy with 'key=value' overrides applied.

        Values are parsed as YAML scalars, so 'epochs=2' yields an int and
        'brightness=[0.9, 1.1]' a list.
        """
        values = self.to_dict()
        for item in overrides:
            key, sep, raw = item.partition("=")
            if not sep:
                raise ConfigError(f"Override must look like key=value, got '{item}'")
            values[key.strip()] = yaml.safe_load(raw)
        return self.from_dict(values)

    def save(self, path: Union[str, Path], extra: Optional[Dict[str, Any]] = None) -> None:
        """Write the config as flat YAML, optionally followed by extra echo entries."""
        payload = self.to_dict()
        if extra:
            payload.update(extra)
        with open(path, "w") as f:
            yaml.safe_dump(payload, f, sort_keys=False)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TrainConfig) and self.to_dict() == other.to_dict()

    def __str__(self) -> str:
        """String representation of the training configuration."""
        return (
            f"Train Config preset={self.preset} ablation={self.ablation or 'custom'} "
            f"batch={self.batch_size} "
            f"budget={self.iterations if self.iterations is not None else f'{self.epochs} epochs'} "
            f"seed={self.seed}"
        )


_KNOWN_KEYS = [
    value for name, value in vars(TrainKeys).items() if name.isupper()
]
