"""Runtime settings loaded from ``.env`` files and the process environment.

Classes:
    EnvValidator: Schema-driven type conversion for raw string values.
    RuntimeSettings: Typed view of the ``FAIREG_*`` variables.

Functions:
    load_settings: Merge a dotenv file with ``os.environ`` and validate it.

Exceptions:
    EnvError: Base exception for environment errors.
    ValidationError: Raised when a variable does not match its schema type.

Key Features:
    - ``.env`` parsing through python-dotenv without touching ``os.environ``
    - Process environment overrides file values
    - ``${VAR}`` interpolation against already-known variables
    - Typed, validated settings object
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Type, Union

import dotenv

from .exceptions import ConfigError

__all__ = [
    'EnvError',
    'ValidationError',
    'EnvValidator',
    'RuntimeSettings',
    'SETTINGS_SCHEMA',
    'load_settings',
]


def __dir__() -> List[str]:
    return sorted(__all__)


EnvPath = Union[str, os.PathLike, None]

_PREFIX = "FAIREG_"
_INTERPOLATION = re.compile(r'\${([^}]+)}')


class EnvError(ConfigError):
    """Exception raised for environment errors."""
    pass


class ValidationError(EnvError):
    """Exception raised for environment validation errors."""
    pass


class EnvValidator:
    """Environment validator for type checking and conversion."""

    def __init__(self, schema: Dict[str, Type]):
        self.schema = schema

    def validate(self, key: str, value: Any) -> Any:
        """Validate a value against the schema.

        Args:
            key (str): Key to validate
            value (Any): Value to validate

        Returns:
            Any: Converted value

        Raises:
            ValidationError: If conversion fails
        """
        if key not in self.schema:
            return value

        expected_type = self.schema[key]
        try:
            if expected_type is bool and isinstance(value, str):
                return value.lower() in ('true', '1', 'yes', 'on')
            return expected_type(value)
        except (ValueError, TypeError) as e:
            raise ValidationError(
                f"Invalid value for {key}: {value!r} is not of type {expected_type.__name__}"
            ) from e


SETTINGS_SCHEMA: Dict[str, Type] = {
    'FAIREG_LOG_LEVEL': str,
    'FAIREG_THREADS': int,
    'FAIREG_OUTPUT_DIR': str,
    'FAIREG_SEED': int,
}


@dataclass(frozen=True)
class RuntimeSettings:
    """Process-level knobs that are not part of an experiment definition."""
    log_level: str = "INFO"
    threads: int = 1
    output_dir: str = "faireg_out"
    seed: int = 0

    def with_overrides(self, **overrides: Any) -> RuntimeSettings:
        """Return a copy with every non-``None`` override applied."""
        values = {k: v for k, v in overrides.items() if v is not None}
        current = {
            'log_level': self.log_level,
            'threads': self.threads,
            'output_dir': self.output_dir,
            'seed': self.seed,
        }
        current.update(values)
        return RuntimeSettings(**current)


def _interpolate(value: str, known: Mapping[str, str]) -> str:
    def replace(match):
        return known.get(match.group(1), match.group(0))

    return _INTERPOLATION.sub(replace, value)


def _read_env_file(env_file: EnvPath) -> Dict[str, str]:
    if env_file is None:
        return {}
    path = Path(env_file)
    if not path.exists():
        return {}
    try:
        raw = dotenv.dotenv_values(path, interpolate=False)
    except Exception as e:
        raise EnvError(f"Failed to load environment file {path}: {e}") from e
    return {k: v for k, v in raw.items() if v is not None}


def load_settings(
        env_file: EnvPath = ".env",
        environ: Optional[Mapping[str, str]] = None,
        validator: Optional[EnvValidator] = None,
) -> RuntimeSettings:
    """Build :class:`RuntimeSettings` from a dotenv file overlaid by the environment.

    Args:
        env_file: Path to a dotenv file; a missing file is ignored.
        environ: Mapping used instead of ``os.environ`` (tests pass their own).
        validator: Converter for the raw strings; defaults to ``SETTINGS_SCHEMA``.

    Raises:
        ValidationError: If a variable cannot be converted or is out of range.
    """
    environ = os.environ if environ is None else environ
    validator = validator or EnvValidator(SETTINGS_SCHEMA)

    merged: Dict[str, str] = dict(_read_env_file(env_file))
    merged.update({k: v for k, v in environ.items() if k.startswith(_PREFIX)})
    merged = {k: _interpolate(v, {**environ, **merged}) for k, v in merged.items()}

    values: Dict[str, Any] = {}
    for key in SETTINGS_SCHEMA:
        if key in merged:
            values[key[len(_PREFIX):].lower()] = validator.validate(key, merged[key])

    settings = RuntimeSettings(**values)
    if settings.threads < 1:
        raise ValidationError(f"FAIREG_THREADS must be >= 1, got {settings.threads}")
    if settings.seed < 0:
        raise ValidationError(f"FAIREG_SEED must be >= 0, got {settings.seed}")
    return settings
