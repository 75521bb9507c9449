"""JSON and number formatting shared by reports, configs and artifacts.

orjson is used when installed; the standard library ``json`` module otherwise.
Both paths produce sorted keys, two-space indentation, ``null`` for
non-finite floats and shortest round-trip float text.
"""

import math
from types import ModuleType
from typing import Any, List, Type

import numpy as np

__all__ = [
    'dumps',
    'loads',
    'format_number',
    'JSONDecodeError',
]


def __dir__() -> List[str]:
    return sorted(__all__)


# noinspection PyPackageRequirements
def _get_available_json() -> ModuleType:
    """Get the available JSON module, preferring orjson for performance."""
    try:
        import orjson
        return orjson
    except ImportError:
        import json
        return json


# noinspection PyPackageRequirements
def _get_available_json_exception() -> Type[Exception]:
    """Get the appropriate JSON decode exception."""
    try:
        import orjson
        return orjson.JSONDecodeError
    except ImportError:
        import json
        return json.JSONDecodeError


_json = _get_available_json()
JSONDecodeError = _get_available_json_exception()


def _plain(obj: Any) -> Any:
    """Convert numpy containers/scalars and non-finite floats to plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def dumps(obj: Any) -> bytes:
    """Serialize ``obj`` to UTF-8 JSON bytes with a stable layout."""
    data = _plain(obj)
    if _json.__name__ == "orjson":
        return _json.dumps(data, option=_json.OPT_SORT_KEYS | _json.OPT_INDENT_2) + b"\n"
    return (_json.dumps(data, sort_keys=True, indent=2, allow_nan=False) + "\n").encode("utf-8")


def loads(data: Any) -> Any:
    """Parse JSON from bytes or text."""
    if isinstance(data, str) and _json.__name__ == "orjson":
        data = data.encode("utf-8")
    return _json.loads(data)


def format_number(value: Any) -> str:
    """Format a number for CSV output with 17 significant digits."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return format(value, ".17g")
