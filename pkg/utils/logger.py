"""Logger configuration for the fisheye pose toolkit.

Every module logs through `get_logger(__name__)`. All loggers share one stderr
handler, so command output on stdout stays clean for piping. The level is read
from the environment each time a logger is requested:

- `FSP_DEBUG=true` forces DEBUG.
- Otherwise `LOG_LEVEL` (DEBUG, INFO, WARNING, ERROR) applies.
- Anything else falls back to INFO.
"""

import logging
import os
import sys

_LOG_FORMAT = "%(asctime)s %(levelname)s [%(name)s] %(message)s"
_LEVELS = {
    "DEBUG": logging.DEBUG,
    "INFO": logging.INFO,
    "WARNING": logging.WARNING,
    "ERROR": logging.ERROR,
}
_TRUTHY = frozenset({"true", "1", "yes", "y", "on"})

_stderr_handler = logging.StreamHandler(sys.stderr)
_stderr_handler.setFormatter(logging.Formatter(_LOG_FORMAT))


def _resolve_log_level() -> int:
    if os.getenv("FSP_DEBUG", "").strip().lower() in _TRUTHY:
        return logging.DEBUG
    return _LEVELS.get(os.getenv("LOG_LEVEL", "INFO").strip().upper(), logging.INFO)


def format_exception(error: BaseException) -> str:
    """Compact `Type: message` form used in log lines and error results."""
    return f"{type(error).__name__}: {error!s}"


def get_logger(name: str) -> logging.Logger:
    """Return the named logger attached to the shared stderr handler."""
    logger = logging.getLogger(name)
    level = _resolve_log_level()
    logger.setLevel(level)
    logger.propagate = False
    if _stderr_handler not in logger.handlers:
        logger.addHandler(_stderr_handler)
    _stderr_handler.setLevel(level)
    return logger
