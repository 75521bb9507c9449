"""Logging helpers shared by all faireg modules."""

import logging
from typing import List, Union

__all__ = [
    'LOG_FORMAT',
    'configure_logging',
    'get_logger',
]


def __dir__() -> List[str]:
    return sorted(__all__)


LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
_ROOT = "faireg"


def get_logger(name: str) -> logging.Logger:
    """Return a logger living under the package root logger."""
    if name == _ROOT or name.startswith(_ROOT + "."):
        return logging.getLogger(name)
    return logging.getLogger(f"{_ROOT}.{name}")


def configure_logging(level: Union[int, str] = logging.INFO) -> logging.Logger:
    """Attach a single stream handler to the package root logger.

    Calling this repeatedly only updates the level.
    """
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.INFO

    logger = logging.getLogger(_ROOT)
    logger.setLevel(level)
    if not any(getattr(h, "_faireg_handler", False) for h in logger.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._faireg_handler = True
        logger.addHandler(handler)
    return logger
