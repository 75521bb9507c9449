"""Dataset representation, CSV ingestion and protected-attribute algebra.

Classes:
    ProtectedAttr: Categorical protected variable with ordered categories.
    Dataset: Immutable feature/label/protected bundle with group identifiers.
    Manifest: Column-role map read from the JSON sidecar of a CSV file.

Functions:
    load_csv: Read a CSV file according to a manifest.
    write_csv: Emit a dataset as canonical CSV plus its manifest.
    csv_text: Render the canonical CSV as a string.
    cross_protected: Cartesian product of two protected attributes.

Exceptions:
    DataError: Missing columns, unparsable cells, inconsistent shapes.
    CategoryError: Unknown categories when a closed list is declared.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .. import serialization
from ..exceptions import CategoryError, DataError

__all__ = [
    'ProtectedAttr',
    'Dataset',
    'Manifest',
    'load_csv',
    'load_manifest',
    'write_csv',
    'csv_text',
    'write_manifest',
    'canonical_manifest',
    'cross_protected',
    'CROSS_SEPARATOR',
]


def __dir__() -> List[str]:
    return sorted(__all__)


CROSS_SEPARATOR = "*"

PathLike = Union[str, Path]


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class ProtectedAttr:
    """A categorical protected variable.

    ``codes[i]`` indexes ``categories``; category order is significant (it fixes
    the order of per-group statistics, EA pairs and cross products).
    """
    name: str
    codes: np.ndarray
    categories: Tuple[str, ...]

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.int64)
        if codes.ndim != 1:
            raise DataError(f"Protected attribute '{self.name}' must be one-dimensional")
        if len(self.categories) < 1:
            raise CategoryError(f"Protected attribute '{self.name}' has no categories")
        if codes.size and (codes.min() < 0 or codes.max() >= len(self.categories)):
            raise CategoryError(f"Protected attribute '{self.name}' has codes outside its category list")
        object.__setattr__(self, 'codes', _frozen(codes))
        object.__setattr__(self, 'categories', tuple(str(c) for c in self.categories))

    @classmethod
    def from_values(
            cls,
            name: str,
            values: Sequence[Any],
            categories: Optional[Sequence[str]] = None,
    ) -> ProtectedAttr:
        """Encode raw category labels.

        Without a declared ``categories`` list the categories are the sorted
        distinct values. With one, any value outside it raises
        :class:`CategoryError` naming the offending row (1-based).
        """
        values = [str(v) for v in values]
        if categories is None:
            categories = sorted(set(values))
        lookup = {c: i for i, c in enumerate(categories)}
        codes = np.empty(len(values), dtype=np.int64)
        for row, value in enumerate(values):
            if value not in lookup:
                raise CategoryError(f"Unknown category {value!r} for '{name}'", row=row + 1, column=name)
            codes[row] = lookup[value]
        return cls(name=name, codes=codes, categories=tuple(categories))

    @property
    def n(self) -> int:
        return int(self.codes.size)

    @property
    def K(self) -> int:
        return len(self.categories)

    @property
    def counts(self) -> np.ndarray:
        """Per-category sample counts ``n_c``."""
        return np.bincount(self.codes, minlength=self.K)

    @property
    def values(self) -> np.ndarray:
        """Category labels per sample."""
        return np.asarray(self.categories, dtype=object)[self.codes]

    def mask(self, category: str) -> np.ndarray:
        return self.codes == self.categories.index(category)

    def indicator(self, category: str) -> np.ndarray:
        return self.mask(category).astype(np.float64)

    def take(self, indices: np.ndarray) -> ProtectedAttr:
        return ProtectedAttr(self.name, self.codes[np.asarray(indices)], self.categories)

    def compact(self) -> ProtectedAttr:
        """Drop categories without samples, keeping the relative order."""
        present = np.flatnonzero(self.counts > 0)
        if present.size == self.K:
            return self
        remap = np.full(self.K, -1, dtype=np.int64)
        remap[present] = np.arange(present.size)
        return ProtectedAttr(self.name, remap[self.codes], tuple(self.categories[i] for i in present))


def cross_protected(a: ProtectedAttr, b: ProtectedAttr) -> ProtectedAttr:
    """Combine two attributes into their ordered Cartesian product.

    Category ``(i, j)`` gets code ``i * K_b + j`` and the label ``"a*b"``.
    """
    if a.n != b.n:
        raise DataError(f"Cannot cross '{a.name}' (n={a.n}) with '{b.name}' (n={b.n}): length mismatch")
    categories = tuple(
        f"{ca}{CROSS_SEPARATOR}{cb}" for ca, cb in itertools.product(a.categories, b.categories)
    )
    codes = a.codes * b.K + b.codes
    return ProtectedAttr(name=f"{a.name}{CROSS_SEPARATOR}{b.name}", codes=codes, categories=categories)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable dataset: features, multi-label targets and protected attributes."""
    features: np.ndarray
    labels: np.ndarray
    protected: Mapping[str, ProtectedAttr]
    sample_ids: np.ndarray
    group_ids: np.ndarray
    feature_names: Tuple[str, ...] = ()
    label_names: Tuple[str, ...] = ()
    views: Mapping[str, Tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.float64)
        if features.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        if labels.ndim == 1:
            labels = labels[:, None]
        if labels.ndim != 2:
            raise DataError("labels must be a 1-D vector or 2-D matrix")
        n = features.shape[0]
        sample_ids = np.asarray(self.sample_ids).astype(str)
        group_ids = np.asarray(self.group_ids).astype(str)
        for what, rows in (("labels", labels.shape[0]), ("sample_ids", sample_ids.size),
                           ("group_ids", group_ids.size)):
            if rows != n:
                raise DataError(f"{what} has {rows} rows, features have {n}")
        for name, attr in self.protected.items():
            if attr.n != n:
                raise DataError(f"protected attribute '{name}' has {attr.n} rows, features have {n}")
        if not (np.all(np.isfinite(features)) and np.all(np.isfinite(labels))):
            raise DataError("features and labels must be finite")

        feature_names = tuple(self.feature_names) or tuple(f"f{j}" for j in range(features.shape[1]))
        label_names = tuple(self.label_names) or tuple(f"y{j}" for j in range(labels.shape[1]))
        if len(feature_names) != features.shape[1] or len(label_names) != labels.shape[1]:
            raise DataError("feature/label names do not match matrix widths")
        views = {k: tuple(int(i) for i in v) for k, v in dict(self.views).items()}
        if not views and features.shape[1] > 0:
            views = {"all": tuple(range(features.shape[1]))}
        for view, columns in views.items():
            if not columns or min(columns) < 0 or max(columns) >= features.shape[1]:
                raise DataError(f"view '{view}' references invalid feature columns")

        object.__setattr__(self, 'features', _frozen(features))
        object.__setattr__(self, 'labels', _frozen(labels))
        object.__setattr__(self, 'protected', dict(self.protected))
        object.__setattr__(self, 'sample_ids', _frozen(sample_ids))
        object.__setattr__(self, 'group_ids', _frozen(group_ids))
        object.__setattr__(self, 'feature_names', feature_names)
        object.__setattr__(self, 'label_names', label_names)
        object.__setattr__(self, 'views', views)

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def d(self) -> int:
        return int(self.features.shape[1])

    @property
    def n_labels(self) -> int:
        return int(self.labels.shape[1])

    def take(self, indices: Sequence[int]) -> Dataset:
        """Row subset, preserving the order of ``indices``."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            features=self.features[idx],
            labels=self.labels[idx],
            protected={k: a.take(idx) for k, a in self.protected.items()},
            sample_ids=self.sample_ids[idx],
            group_ids=self.group_ids[idx],
            feature_names=self.feature_names,
            label_names=self.label_names,
            views=self.views,
        )

    def view(self, name: str) -> np.ndarray:
        """Feature columns of one view."""
        if name not in self.views:
            raise DataError(f"Unknown view '{name}'; available: {sorted(self.views)}")
        return self.features[:, list(self.views[name])]

    def protected_attr(self, selector: str) -> ProtectedAttr:
        """Resolve ``"A"`` or a crossed selector ``"A*B"`` to an attribute."""
        parts = [p.strip() for p in selector.split(CROSS_SEPARATOR)]
        missing = [p for p in parts if p not in self.protected]
        if missing:
            raise DataError(f"Unknown protected attribute(s) {missing}; available: {sorted(self.protected)}")
        attr = self.protected[parts[0]]
        for part in parts[1:]:
            attr = cross_protected(attr, self.protected[part])
        return attr

    def equals(self, other: Dataset) -> bool:
        """Exact equality of every field (bit-level for floats)."""
        if not isinstance(other, Dataset):
            return False
        same_protected = (
            list(self.protected) == list(other.protected)
            and all(
                self.protected[k].categories == other.protected[k].categories
                and np.array_equal(self.protected[k].codes, other.protected[k].codes)
                for k in self.protected
            )
        )
        return (
            same_protected
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.sample_ids, other.sample_ids)
            and np.array_equal(self.group_ids, other.group_ids)
            and self.feature_names == other.feature_names
            and self.label_names == other.label_names
            and dict(self.views) == dict(other.views)
        )


@dataclass(frozen=True)
class Manifest:
    """Column roles of a dataset CSV (the JSON sidecar)."""
    id: str
    group_id: str
    protected: Tuple[str, ...]
    labels: Tuple[str, ...]
    features: Union[Tuple[str, ...], str] = "rest"
    views: Mapping[str, Tuple[str, ...]] = field(default_factory=dict)
    categories: Mapping[str, Tuple[str, ...]] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Manifest:
        try:
            features = data.get("features", "rest")
            return cls(
                id=str(data["id"]),
                group_id=str(data["group_id"]),
                protected=tuple(data["protected"]),
                labels=tuple(data["labels"]),
                features=features if features == "rest" else tuple(features),
                views={k: tuple(v) for k, v in data.get("views", {}).items()},
                categories={k: tuple(v) for k, v in data.get("categories", {}).items()},
            )
        except (KeyError, TypeError) as e:
            raise DataError(f"Invalid manifest: missing or malformed entry {e}")

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "id": self.id,
            "group_id": self.group_id,
            "protected": list(self.protected),
            "labels": list(self.labels),
            "features": self.features if self.features == "rest" else list(self.features),
        }
        if self.views:
            data["views"] = {k: list(v) for k, v in self.views.items()}
        if self.categories:
            data["categories"] = {k: list(v) for k, v in self.categories.items()}
        return data


def load_manifest(path: PathLike) -> Manifest:
    try:
        payload = Path(path).read_bytes()
    except OSError as e:
        raise DataError(f"Cannot read manifest {path}: {e}")
    try:
        return Manifest.from_dict(serialization.loads(payload))
    except serialization.JSONDecodeError as e:
        raise DataError(f"Manifest {path} is not valid JSON: {e}")


def write_manifest(manifest: Manifest, path: PathLike) -> None:
    Path(path).write_bytes(serialization.dumps(manifest.to_dict()))


def _numeric_block(frame: pd.DataFrame, columns: Sequence[str]) -> np.ndarray:
    """Parse string columns to float64, reporting the first bad cell."""
    out = np.empty((len(frame), len(columns)), dtype=np.float64)
    for j, column in enumerate(columns):
        raw = frame[column]
        empty = raw.str.strip() == ""
        if empty.any():
            row = int(np.flatnonzero(empty.to_numpy())[0]) + 1
            raise DataError("Empty cell", row=row, column=column)
        cells = raw.to_numpy(dtype=str)
        try:
            parsed = cells.astype(np.float64)
        except ValueError:
            for row, cell in enumerate(cells, start=1):
                try:
                    float(cell)
                except ValueError:
                    raise DataError(f"Non-numeric cell {cell!r}", row=row, column=column)
            raise
        bad = ~np.isfinite(parsed)
        if bad.any():
            row = int(np.flatnonzero(bad)[0]) + 1
            raise DataError(f"Non-numeric cell {cells[row - 1]!r}", row=row, column=column)
        out[:, j] = parsed
    return out


def load_csv(path: PathLike, schema: Union[Manifest, Mapping[str, Any]]) -> Dataset:
    """Load a dataset CSV according to its column-role map.

    Rows keep file order. Errors carry the 1-based data row and the column.
    """
    manifest = schema if isinstance(schema, Manifest) else Manifest.from_dict(schema)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"File not found: {path}")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataError(f"Cannot parse CSV {path}: {e}")

    declared = [manifest.id, manifest.group_id, *manifest.protected, *manifest.labels]
    if manifest.features != "rest":
        declared += list(manifest.features)
    for column in declared:
        if column not in frame.columns:
            raise DataError("Missing column", column=column)

    if manifest.features == "rest":
        taken = set(declared)
        feature_columns = [c for c in frame.columns if c not in taken]
    else:
        feature_columns = list(manifest.features)

    features = _numeric_block(frame, feature_columns)
    labels = _numeric_block(frame, manifest.labels)

    protected = {}
    for column in manifest.protected:
        values = frame[column]
        empty = values.str.strip() == ""
        if empty.any():
            raise DataError("Empty cell", row=int(np.flatnonzero(empty.to_numpy())[0]) + 1, column=column)
        protected[column] = ProtectedAttr.from_values(
            column, values.tolist(), manifest.categories.get(column)
        )

    views = {}
    for view, columns in manifest.views.items():
        unknown = [c for c in columns if c not in feature_columns]
        if unknown:
            raise DataError(f"View '{view}' references non-feature columns {unknown}")
        views[view] = tuple(feature_columns.index(c) for c in columns)

    return Dataset(
        features=features,
        labels=labels,
        protected=protected,
        sample_ids=frame[manifest.id].to_numpy(),
        group_ids=frame[manifest.group_id].to_numpy(),
        feature_names=tuple(feature_columns),
        label_names=tuple(manifest.labels),
        views=views,
    )


def canonical_manifest(dataset: Dataset) -> Manifest:
    """Manifest describing the column layout :func:`write_csv` produces."""
    views = {}
    if set(dataset.views) != {"all"}:
        views = {k: tuple(dataset.feature_names[i] for i in v) for k, v in dataset.views.items()}
    return Manifest(
        id="id",
        group_id="group_id",
        protected=tuple(dataset.protected),
        labels=dataset.label_names,
        features=dataset.feature_names,
        views=views,
        categories={k: a.categories for k, a in dataset.protected.items()},
    )


def csv_text(dataset: Dataset) -> str:
    """Canonical CSV of ``dataset`` (17 significant digits, ``\\n`` line ends)."""
    columns: Dict[str, List[str]] = {
        "id": [str(s) for s in dataset.sample_ids],
        "group_id": [str(g) for g in dataset.group_ids],
    }
    for name, attr in dataset.protected.items():
        columns[name] = [str(v) for v in attr.values]
    for j, name in enumerate(dataset.label_names):
        columns[name] = [serialization.format_number(v) for v in dataset.labels[:, j]]
    for j, name in enumerate(dataset.feature_names):
        columns[name] = [serialization.format_number(v) for v in dataset.features[:, j]]
    if len(columns) != 2 + len(dataset.protected) + dataset.n_labels + dataset.d:
        raise DataError("Column names collide; cannot emit an unambiguous CSV")
    return pd.DataFrame(columns).to_csv(index=False, lineterminator="\n")


def write_csv(dataset: Dataset, path: PathLike, manifest_path: Optional[PathLike] = None) -> Manifest:
    """Emit ``dataset`` as canonical CSV.

    Writes the manifest next to the CSV (``<stem>.manifest.json``) unless a
    path is given, and returns it.
    """
    path = Path(path)
    text = csv_text(dataset)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")

    manifest = canonical_manifest(dataset)
    if manifest_path is None:
        manifest_path = path.with_name(path.stem + ".manifest.json")
    write_manifest(manifest, manifest_path)
    return manifest
