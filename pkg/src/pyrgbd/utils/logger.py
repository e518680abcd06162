"""
Logging setup for pyrgbd.

All module loggers are children of the ``pyrgbd`` package logger. The package
logger owns the handlers: a console handler on stderr (stdout carries command
output such as ``pyrgbd list``) and, when the location is writable, a file
handler. Level and file are read from the environment on first use:

    PYRGBD_LOG_LEVEL   DEBUG | INFO | WARNING | ERROR | CRITICAL (default INFO)
    PYRGBD_LOG_FILE    log file path (default utils/logs/pyrgbd.log)

Usage:
    from pyrgbd.utils.logger import get_logger

    logger = get_logger(__name__)
    logger.info("Starting stage-1 pretraining...")
"""

import logging
import os
import sys
from pathlib import Path
from typing import Optional, Union

PACKAGE_LOGGER = "pyrgbd"

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(name)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

LOG_LEVEL_ENV = "PYRGBD_LOG_LEVEL"
LOG_FILE_ENV = "PYRGBD_LOG_FILE"

DEFAULT_LOG_FILE = Path(__file__).parent / "logs" / "pyrgbd.log"


def parse_level(level: Optional[Union[str, int]]) -> int:
    """Turn a level name or number into a logging constant, INFO if unknown."""
    if level is None:
        level = os.environ.get(LOG_LEVEL_ENV, "INFO")
    if isinstance(level, int):
        return level
    value = logging.getLevelName(level.strip().upper())
    return value if isinstance(value, int) else logging.INFO


def _log_file() -> Path:
    env_file = os.environ.get(LOG_FILE_ENV)
    return Path(env_file) if env_file else DEFAULT_LOG_FILE


def _configure_package_logger() -> logging.Logger:
    package = logging.getLogger(PACKAGE_LOGGER)
    if package.handlers:
        return package

    formatter = logging.Formatter(LOG_FORMAT, DATE_FORMAT)
    package.setLevel(parse_level(None))

    console = logging.StreamHandler(sys.stderr)
    console.setFormatter(formatter)
    package.addHandler(console)

    # Unwritable log locations (read-only installs) fall back to console only
    log_path = _log_file()
    try:
        log_path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_path)
    except OSError:
        file_handler = None
    if file_handler is not None:
        file_handler.setFormatter(formatter)
        package.addHandler(file_handler)

    package.propagate = False
    return package


def get_logger(name: str, level: Optional[Union[str, int]] = None) -> logging.Logger:
    """
    Get a logger below the ``pyrgbd`` package logger.

    Names outside the package (for example ``__main__`` when a tool script is
    run directly) are placed under it, so every record reaches the same
    handlers.

    Args:
        name: Logger name, usually ``__name__`` of the calling module
        level: Optional level for this logger only; records still pass the
            package level set from the environment

    Returns:
        Configured logger instance
    """
    _configure_package_logger()
    if name != PACKAGE_LOGGER and not name.startswith(PACKAGE_LOGGER + "."):
        name = f"{PACKAGE_LOGGER}.{name}"
    logger = logging.getLogger(name)
    if level is not None:
        logger.setLevel(parse_level(level))
    return logger
