"""File system artifact store for experiment outputs.

This module persists everything an experiment produces (reports, traces, model
coefficients, fitted forests, plots) under one root directory, with atomic
writes so a crashed run never leaves a half-written artifact behind.

Classes:
    ArtifactStore: Keyed file store with JSON, array, text and pickle codecs.

Exceptions:
    StorageError: See :exc:`faireg.exceptions.StorageError`
    KeyError: Raised when reading a key that was never written

Key Features:
    - Atomic temp-file-then-replace writes
    - Hierarchical keys (``"face/kelm.npz"``)
    - Path containment check against the root directory
    - Thread-safe operations
"""

import io
import pickle
import threading
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np

from .. import serialization
from ..exceptions import StorageError

__all__ = [
    'ArtifactStore',
]


def __dir__() -> List[str]:
    return sorted(__all__)


class ArtifactStore:
    """File system-based artifact store."""

    def __init__(self, base_dir: Union[str, Path]):
        """Initialize the store, creating ``base_dir`` if needed.

        Args:
            base_dir: Root directory for every artifact key.
        """
        self.base_dir = Path(base_dir).resolve()
        try:
            self.base_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise StorageError(f"Failed to create artifact directory {self.base_dir}: {e}")
        self._lock = threading.RLock()

    def _get_path(self, key: str) -> Path:
        """Resolve a key to a path inside ``base_dir``."""
        path = (self.base_dir / key).resolve()
        if path != self.base_dir and self.base_dir not in path.parents:
            raise StorageError(f"Invalid key {key!r}: attempting to access outside base directory")
        return path

    def path(self, key: str) -> Path:
        """Return the file path a key maps to."""
        return self._get_path(key)

    def _write_bytes(self, key: str, payload: bytes) -> Path:
        with self._lock:
            path = self._get_path(key)
            temp_path = path.with_suffix(path.suffix + '.tmp')
            try:
                path.parent.mkdir(parents=True, exist_ok=True)
                with open(temp_path, 'wb') as f:
                    f.write(payload)
                temp_path.replace(path)
            except Exception as e:
                if temp_path.exists():
                    temp_path.unlink()
                raise StorageError(f"Failed to store artifact {key!r}: {e}")
            return path

    def _read_bytes(self, key: str) -> bytes:
        with self._lock:
            path = self._get_path(key)
            try:
                with open(path, 'rb') as f:
                    return f.read()
            except FileNotFoundError:
                raise KeyError(f"No artifact found for key: {key}")
            except Exception as e:
                raise StorageError(f"Failed to retrieve artifact {key!r}: {e}")

    def store_bytes(self, key: str, payload: bytes) -> Path:
        return self._write_bytes(key, payload)

    def store_text(self, key: str, text: str) -> Path:
        return self._write_bytes(key, text.encode("utf-8"))

    def store_json(self, key: str, value: Any) -> Path:
        return self._write_bytes(key, serialization.dumps(value))

    def store_arrays(self, key: str, arrays: Dict[str, np.ndarray]) -> Path:
        """Store named arrays in ``.npz`` format."""
        buffer = io.BytesIO()
        np.savez(buffer, **{name: np.asarray(a) for name, a in arrays.items()})
        return self._write_bytes(key, buffer.getvalue())

    def store_object(self, key: str, value: Any) -> Path:
        return self._write_bytes(key, pickle.dumps(value, protocol=pickle.HIGHEST_PROTOCOL))

    def retrieve_bytes(self, key: str) -> bytes:
        return self._read_bytes(key)

    def retrieve_text(self, key: str) -> str:
        return self._read_bytes(key).decode("utf-8")

    def retrieve_json(self, key: str) -> Any:
        payload = self._read_bytes(key)
        try:
            return serialization.loads(payload)
        except serialization.JSONDecodeError as e:
            raise StorageError(f"Artifact {key!r} is not valid JSON: {e}")

    def retrieve_arrays(self, key: str) -> Dict[str, np.ndarray]:
        payload = self._read_bytes(key)
        try:
            with np.load(io.BytesIO(payload), allow_pickle=False) as data:
                return {name: data[name] for name in data.files}
        except Exception as e:
            raise StorageError(f"Failed to decode arrays in {key!r}: {e}")

    def retrieve_object(self, key: str) -> Any:
        payload = self._read_bytes(key)
        try:
            return pickle.loads(payload)
        except Exception as e:
            raise StorageError(f"Failed to unpickle {key!r}: {e}")

    def exists(self, key: str) -> bool:
        return self._get_path(key).exists()

    def delete(self, key: str) -> None:
        with self._lock:
            path = self._get_path(key)
            try:
                path.unlink(missing_ok=True)
            except Exception as e:
                raise StorageError(f"Failed to delete artifact {key!r}: {e}")

    def list_keys(self, prefix: str = "") -> List[str]:
        """List stored keys (relative paths) starting with ``prefix``."""
        keys = []
        for path in sorted(self.base_dir.glob("**/*")):
            if path.is_file() and not path.name.endswith(".tmp"):
                rel = path.relative_to(self.base_dir).as_posix()
                if rel.startswith(prefix):
                    keys.append(rel)
        return keys
