from dataclasses import dataclass
from pathlib import Path
from typing import Any, ClassVar, Dict, List, Optional

import yaml

from pyrgbd.config.specs import AblationConfig
from pyrgbd.utils import get_logger, resolve_ablation_name, resolve_table_name

logger = get_logger(__name__)


@dataclass
class AblationKeys:
    """Dataclass for ablation table keys to avoid hardcoding strings."""

    NAMES: ClassVar[str] = "names"
    METADATA: ClassVar[str] = "metadata"
    DEFAULTS: ClassVar[str] = "defaults"
    MODELS: ClassVar[str] = "models"

    SHORT: ClassVar[str] = "short"
    LONG: ClassVar[str] = "long"
    FULL: ClassVar[str] = "full"

    DESCRIPTION: ClassVar[str] = "description"


def ablations_dir() -> Path:
    return Path(__file__).parent.parent / "ablations"


class AblationTableConfig:
    """Class for loading one ablation table (a set of numbered rows) from YAML."""

    Keys = AblationKeys

    def __init__(self, table: str, base_dir: Optional[Path] = None):
        """
        Initialize an ablation table.

        Args:
            table: Table identifier (short code, long name, or full name)
            base_dir: Directory where ablation YAML files are stored
        """
        self.table_name, self.table_long_name, self.table_full_name = (
            resolve_table_name(table)
        )
        self.config_dir = Path(base_dir) if base_dir else ablations_dir()
        self.config_path = self.config_dir / f"{self.table_name}.yml"

        self.names: Dict[str, str] = {}
        self.metadata: Dict[str, Any] = {}
        self.defaults: Dict[str, Any] = {}
        self.models: Dict[int, Dict[str, Any]] = {}

        self.load_config()

    def load_config(self) -> None:
        """Load the ablation table from YAML file."""
        if not self.config_path.exists():
            raise FileNotFoundError(f"Ablation table not found: {self.config_path}")

        with open(self.config_path, "r") as f:
            config = yaml.safe_load(f)

        self.names = config[self.Keys.NAMES]
        self.metadata = config.get(self.Keys.METADATA, {})
        self.defaults = config.get(self.Keys.DEFAULTS, {}) or {}
        self.models = {int(k): v for k, v in config[self.Keys.MODELS].items()}

    def model_numbers(self) -> List[int]:
        return sorted(self.models)

    def get_row(self, model: int) -> AblationConfig:
        """
        Build the AblationConfig of one row, table defaults filled in.

        Raises:
            ValueError: If the table has no such row
        """
        if model not in self.models:
            raise ValueError(
                f"Table {self.table_name} has no model {model}. "
                f"Valid models: {self.model_numbers()}"
            )
        values = dict(self.defaults)
        values.update(self.models[model])
        return AblationConfig(name=f"{self.table_name}m{model}", **values)

    def rows(self) -> List[AblationConfig]:
        return [self.get_row(model) for model in self.model_numbers()]

    def __str__(self) -> str:
        return (
            f"Ablation table {self.table_name} ({self.table_long_name}) - "
            f"{len(self.models)} models"
        )


def load_ablation(name: str, base_dir: Optional[Path] = None) -> AblationConfig:
    """
    Resolve a row identifier such as 't3m9' or 'ssl-pretext:9' to its config.

    Args:
        name: Row identifier
        base_dir: Optional directory of ablation YAML files

    Returns:
        AblationConfig of that row
    """
    table, model = resolve_ablation_name(name)
    row = AblationTableConfig(table, base_dir=base_dir).get_row(model)
    logger.debug(f"Resolved ablation '{name}' to {row.name}")
    return row
