from . import core
from .main import get_data, list_ablations, list_presets

__all__ = ["main", "get_data", "list_ablations", "list_presets"]
