"""Build runtime settings from the environment and parse JSON documents.

Settings come from environment variables (a `.env` file is loaded by the
entrypoint); command options override them:

- FSP_WORKERS          thread pool size for frame-parallel work
- FSP_MAP_CACHE_DIR    directory persisting lookup maps (optional)
- FSP_VIEW_FOV         virtual view field of view, degrees
- FSP_VIEW_SIZE        virtual view width and height, pixels
- FSP_MIN_CONF         minimum joint confidence for correspondences
- FSP_MAX_RESIDUAL     maximum reprojection residual, pixels
- FSP_INTERPOLATION    bilinear | nearest
- FSP_FILL             fill value for pixels outside the source image
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, TypeVar

from pydantic import BaseModel, ValidationError

from .constants import (
    DEFAULT_FILL,
    DEFAULT_INTERPOLATION,
    DEFAULT_MAX_RESIDUAL,
    DEFAULT_MIN_CONF,
    DEFAULT_VIEW_FOV,
    DEFAULT_VIEW_SIZE,
    INTERPOLATION_MODES,
)
from .errors import InputError
from .logger import get_logger

logger = get_logger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)

_SETTINGS_ENV = (
    "FSP_WORKERS",
    "FSP_MAP_CACHE_DIR",
    "FSP_VIEW_FOV",
    "FSP_VIEW_SIZE",
    "FSP_MIN_CONF",
    "FSP_MAX_RESIDUAL",
    "FSP_INTERPOLATION",
    "FSP_FILL",
)


def _raise_config_error(msg: str, error_cls: type[InputError] = InputError) -> None:
    """Raise a configuration error with logging.

    Args:
        msg: Error message to log and raise.
        error_cls: InputError subclass to raise.

    """
    logger.error(msg)
    raise error_cls(msg)


def _read_text(value: Any) -> str | None:
    """Return stripped string or None."""
    if isinstance(value, str):
        text = value.strip()
        return text or None
    return None


def _read_float(value: Any, default: float, name: str) -> float:
    text = _read_text(value)
    if text is None:
        return default
    try:
        return float(text)
    except ValueError:
        logger.warning("Invalid %s value: %s, using default: %s", name, text, default)
        return default


def _read_int(value: Any, default: int, name: str) -> int:
    text = _read_text(value)
    if text is None:
        return default
    try:
        return int(text)
    except ValueError:
        logger.warning("Invalid %s value: %s, using default: %s", name, text, default)
        return default


@dataclass(frozen=True)
class Settings:
    workers: int
    map_cache_dir: str | None
    view_fov: float
    view_size: int
    min_conf: float
    max_residual: float
    interpolation: str
    fill: int


# Cache for built settings keyed by the relevant environment
_settings_cache: dict[str, Settings] = {}
_settings_lock = threading.Lock()


def _env_hash(env: dict[str, str | None]) -> str:
    return hashlib.sha256(json.dumps(env, sort_keys=True).encode()).hexdigest()


def load_settings(environ: dict[str, str] | None = None) -> Settings:
    """Construct settings from FSP_* environment variables, reusing unchanged builds."""
    source = os.environ if environ is None else environ
    env = {name: source.get(name) for name in _SETTINGS_ENV}
    cache_key = _env_hash(env)
    with _settings_lock:
        cached = _settings_cache.get(cache_key)
        if cached is not None:
            return cached

        interpolation = (_read_text(env["FSP_INTERPOLATION"]) or DEFAULT_INTERPOLATION).lower()
        if interpolation not in INTERPOLATION_MODES:
            logger.warning(
                "Invalid FSP_INTERPOLATION value: %s, using default: %s", interpolation, DEFAULT_INTERPOLATION,
            )
            interpolation = DEFAULT_INTERPOLATION
        workers = _read_int(env["FSP_WORKERS"], os.cpu_count() or 1, "FSP_WORKERS")
        settings = Settings(
            workers=max(1, workers),
            map_cache_dir=_read_text(env["FSP_MAP_CACHE_DIR"]),
            view_fov=_read_float(env["FSP_VIEW_FOV"], DEFAULT_VIEW_FOV, "FSP_VIEW_FOV"),
            view_size=_read_int(env["FSP_VIEW_SIZE"], DEFAULT_VIEW_SIZE, "FSP_VIEW_SIZE"),
            min_conf=_read_float(env["FSP_MIN_CONF"], DEFAULT_MIN_CONF, "FSP_MIN_CONF"),
            max_residual=_read_float(env["FSP_MAX_RESIDUAL"], DEFAULT_MAX_RESIDUAL, "FSP_MAX_RESIDUAL"),
            interpolation=interpolation,
            fill=_read_int(env["FSP_FILL"], DEFAULT_FILL, "FSP_FILL"),
        )
        logger.debug("Built settings: %s", settings)
        _settings_cache[cache_key] = settings
        return settings


def reset_settings() -> None:
    """Clear cached settings (useful for testing)."""
    with _settings_lock:
        _settings_cache.clear()


def parse_json_document(
    raw: str | os.PathLike[str] | dict[str, Any],
    model: type[ModelT],
    error_cls: type[InputError] = InputError,
) -> ModelT:
    """Parse a JSON document (path, JSON text or already-parsed dict) into ``model``.

    Raises:
        InputError: ``error_cls`` when the file is unreadable, not JSON, or fails validation.

    """
    label = model.__name__
    if isinstance(raw, dict):
        data: Any = raw
    else:
        path = Path(raw)
        label = f"{label} ({path})"
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            _raise_config_error(f"{label} cannot be read: {e.strerror or e}", error_cls)
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            _raise_config_error(f"{label} is not valid JSON: {e}", error_cls)
    if not isinstance(data, dict):
        _raise_config_error(f"{label} must be a JSON object", error_cls)
    try:
        document = model.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"]) or "<root>"
        _raise_config_error(f"{label} failed validation at {location}: {first['msg']}", error_cls)
    logger.debug("Successfully parsed %s", label)
    return document


def write_json_document(path: str | os.PathLike[str], document: BaseModel) -> None:
    """Serialize ``document`` as UTF-8 JSON (deterministic for identical content)."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(document.model_dump_json(indent=2) + "\n", encoding="utf-8")
