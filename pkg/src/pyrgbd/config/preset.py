from dataclasses import dataclass
from pathlib import Path
from typing import Any, ClassVar, Dict, List, Optional

import yaml

from pyrgbd.config.specs import BackboneConfig


@dataclass
class PresetKeys:
    """Dataclass for preset configuration keys to avoid hardcoding strings."""

    # Top-level sections
    NAMES: ClassVar[str] = "names"
    BACKBONE: ClassVar[str] = "backbone"
    METADATA: ClassVar[str] = "metadata"

    # Name fields
    SHORT: ClassVar[str] = "short"
    FULL: ClassVar[str] = "full"

    # Backbone fields
    WIDTHS: ClassVar[str] = "widths"
    CONVS: ClassVar[str] = "convs"
    TRANSITION_WIDTH: ClassVar[str] = "transition_width"
    NORM: ClassVar[str] = "norm"

    # Metadata fields
    DESCRIPTION: ClassVar[str] = "description"


def presets_dir() -> Path:
    return Path(__file__).parent.parent / "presets"


def available_presets(base_dir: Optional[Path] = None) -> List[str]:
    """Names of all preset YAML files, sorted."""
    directory = Path(base_dir) if base_dir else presets_dir()
    return sorted(path.stem for path in directory.glob("*.yml"))


class PresetConfig:
    """Class for loading backbone presets from YAML files."""

    # Class-level access to keys
    Keys = PresetKeys

    def __init__(self, preset_id: str, base_dir: Optional[Path] = None):
        """
        Initialize a preset configuration.

        Args:
            preset_id: Identifier for the preset (e.g., 'tiny', 'vgg16')
            base_dir: Directory where preset YAML files are stored
        """
        self.preset_id = str(preset_id).lower().strip()
        self.config_dir = Path(base_dir) if base_dir else presets_dir()
        self.config_path = self.config_dir / f"{self.preset_id}.yml"

        self.names: Dict[str, str] = {}
        self.backbone: Dict[str, Any] = {}
        self.metadata: Dict[str, Any] = {}

        self.load_config()

    def load_config(self) -> None:
        """Load the preset configuration from YAML file."""
        if not self.config_path.exists():
            raise FileNotFoundError(
                f"Preset config file not found: {self.config_path}. "
                f"Available presets: {available_presets(self.config_dir)}"
            )

        with open(self.config_path, "r") as f:
            config = yaml.safe_load(f)

        self.names = config[self.Keys.NAMES]
        self.backbone = config[self.Keys.BACKBONE]
        self.metadata = config.get(self.Keys.METADATA, {})

    def get_name(self, name_type: str = "short") -> str:
        return self.names.get(name_type, self.preset_id)

    def to_backbone(self, **overrides: Any) -> BackboneConfig:
        """
        Build the validated backbone config, applying non-None overrides.

        Args:
            **overrides: BackboneConfig fields replacing the preset values

        Returns:
            BackboneConfig for this preset
        """
        values = dict(self.backbone)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return BackboneConfig(name=self.get_name(), **values)

    def __str__(self) -> str:
        widths = self.backbone.get(self.Keys.WIDTHS)
        return (
            f"Preset {self.preset_id}: {self.get_name(self.Keys.FULL)} - "
            f"widths {widths}, transition width {self.backbone.get(self.Keys.TRANSITION_WIDTH)}"
        )
