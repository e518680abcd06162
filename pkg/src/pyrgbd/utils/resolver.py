"""
Ablation name resolver for pyrgbd.

This module resolves the different ways an ablation table or one of its rows
can be named (short codes, long names, full names, with or without a model
number) to standardized identifiers.
"""

import re
from typing import Dict, List, Tuple

from pyrgbd.utils.logger import get_logger

logger = get_logger(__name__)

# Direct table mappings with integer keys
# Format: ID: [short_name, long_name, full_name]
TABLE_MAPPINGS = {
    2: ["t2", "cda-structure", "consistency-difference-structure"],
    3: ["t3", "ssl-pretext", "self-supervised-pretext"],
    5: ["t5", "pretrain-scale", "pretraining-data-scale"],
}

# Build a flattened dictionary for direct name lookup
_NAME_TO_TUPLE: Dict[str, List[str]] = {}

for _, name_tuple in TABLE_MAPPINGS.items():
    short_name, long_name, full_name = name_tuple
    _NAME_TO_TUPLE[short_name.lower()] = name_tuple
    _NAME_TO_TUPLE[long_name.lower()] = name_tuple
    _NAME_TO_TUPLE[full_name.lower()] = name_tuple

# "t3m9", "t3-m9", "t3:9", "ssl-pretext:9", "ssl-pretext/model-9"
_ROW_PATTERN = re.compile(
    r"^(?P<table>.+?)(?:[:/](?:model-?|m)?|-?model-?|-?m)(?P<model>\d+)$"
)


def resolve_table_name(table: str) -> Tuple[str, str, str]:
    """
    Resolve any ablation table identifier to standardized set of names.

    Args:
        table: A table identifier (short code, long name, or full name)

    Returns:
        Tuple of (short_name, long_name, full_name)

    Raises:
        ValueError: If the table identifier is not recognized
    """
    table_str = str(table).lower().strip()

    if table_str in _NAME_TO_TUPLE:
        result = _NAME_TO_TUPLE[table_str]

        if table_str != result[0].lower():
            logger.debug(
                f"Resolved table '{table}' to standard identifier '{result[0]}'"
            )

        return tuple(result)

    valid_names = sorted(set([v[0] for _, v in TABLE_MAPPINGS.items()]))
    raise ValueError(
        f"Unknown ablation table identifier: '{table}'. "
        f"Valid identifiers include: {', '.join(valid_names)}"
    )


def resolve_ablation_name(name: str) -> Tuple[str, int]:
    """
    Resolve an ablation row identifier to (table short name, model number).

    Accepted forms include "t3m9", "t3-m9", "t3:9", "ssl-pretext:9" and
    "self-supervised-pretext/model-9".

    Args:
        name: Row identifier

    Returns:
        Tuple of (table_short_name, model_number)

    Raises:
        ValueError: If the identifier cannot be parsed or the table is unknown
    """
    name_str = str(name).lower().strip()
    match = _ROW_PATTERN.match(name_str)
    if match is None:
        raise ValueError(
            f"Cannot parse ablation row identifier: '{name}'. "
            f"Expected forms like 't3m9' or 'ssl-pretext:9'"
        )

    short_name, _, _ = resolve_table_name(match.group("table"))
    model = int(match.group("model"))
    if model < 1:
        raise ValueError(f"Model numbers start at 1, got {model} in '{name}'")

    return short_name, model
