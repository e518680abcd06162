"""
Configuration handling for pyrgbd.

This module provides the flat training configuration, the backbone presets
and ablation tables shipped as YAML resources, and the validated value types
shared by the data, model and training code.
"""

from .ablation import AblationTableConfig, load_ablation
from .preset import PresetConfig, available_presets
from .specs import (
    AblationConfig,
    AugmentSpec,
    BackboneConfig,
    OptimSpec,
    ScheduleSpec,
    SynthSpec,
)
from .training import ConfigError, TrainConfig

__all__ = [
    "AblationConfig",
    "AblationTableConfig",
    "AugmentSpec",
    "BackboneConfig",
    "ConfigError",
    "OptimSpec",
    "PresetConfig",
    "ScheduleSpec",
    "SynthSpec",
    "TrainConfig",
    "available_presets",
    "load_ablation",
]
