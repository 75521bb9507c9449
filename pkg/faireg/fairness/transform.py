"""Label normalization removing per-group location and scale differences.

Each training label is standardized within its protected group and mapped back
to the moments of the whole training set:

    y_hat = (y - mu_c) / sigma_c * sigma + mu

The hybrid variant fits ``mu`` and ``sigma`` with balancing weights while the
per-group moments stay unweighted.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np

from ..data.dataset import ProtectedAttr
from ..exceptions import CategoryError, DataError, NumericError
from ..log import get_logger

__all__ = [
    'SIGMA_FLOOR',
    'GroupStats',
    'FairLabels',
    'fit_group_stats',
    'normalize',
    'unfairness_covariance',
    'fair_loss',
    'FairLabelTransformer',
]


def __dir__() -> List[str]:
    return sorted(__all__)


logger = get_logger(__name__)

SIGMA_FLOOR = 1e-9


def _vector(values: Any, what: str) -> np.ndarray:
    array = np.asarray(values, dtype=np.float64)
    if array.ndim != 1:
        raise DataError(f"{what} must be one-dimensional, got shape {array.shape}")
    return array


@dataclass(frozen=True)
class GroupStats:
    """Per-category and global (mu, sigma) of one label column."""
    per_group: Mapping[str, Tuple[float, float]]
    global_stats: Tuple[float, float]
    weighted: bool = False

    @property
    def mu(self) -> float:
        return self.global_stats[0]

    @property
    def sigma(self) -> float:
        return self.global_stats[1]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "per_group": {c: {"mu": m, "sigma": s} for c, (m, s) in self.per_group.items()},
            "global": {"mu": self.mu, "sigma": self.sigma},
            "weighted": self.weighted,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> GroupStats:
        return cls(
            per_group={str(c): (float(v["mu"]), float(v["sigma"])) for c, v in data["per_group"].items()},
            global_stats=(float(data["global"]["mu"]), float(data["global"]["sigma"])),
            weighted=bool(data.get("weighted", False)),
        )


@dataclass(frozen=True, eq=False)
class FairLabels:
    values: np.ndarray
    source_stats: GroupStats
    protected_name: str


def fit_group_stats(y: Any, attr: ProtectedAttr, weights: Optional[Any] = None) -> GroupStats:
    """Population moments of ``y`` per category of ``attr`` and overall.

    With ``weights`` the overall moments are mu = mean(w * y) and
    sigma^2 = mean(w * (y - mu)^2); per-group moments stay unweighted.

    Raises:
        CategoryError: A present category has fewer than two samples.
        NumericError: A per-group standard deviation is at the floor.
    """
    y = _vector(y, "y")
    if y.size != attr.n:
        raise DataError(f"y has {y.size} samples, protected attribute '{attr.name}' has {attr.n}")

    per_group: Dict[str, Tuple[float, float]] = {}
    counts = attr.counts
    for code, category in enumerate(attr.categories):
        if counts[code] == 0:
            continue
        if counts[code] < 2:
            raise CategoryError(f"Category '{category}' of '{attr.name}' has {counts[code]} sample(s); need at least 2")
        values = y[attr.codes == code]
        mu_c = float(values.mean())
        sigma_c = float(values.std())
        if sigma_c <= SIGMA_FLOOR:
            raise NumericError(
                f"Standard deviation of category '{category}' of '{attr.name}' is {sigma_c!r}, "
                f"at or below the floor {SIGMA_FLOOR}"
            )
        per_group[category] = (mu_c, sigma_c)

    if weights is None:
        global_stats = (float(y.mean()), float(y.std()))
    else:
        w = _vector(weights, "weights")
        if w.size != y.size or np.any(w <= 0):
            raise DataError("weights must be positive and match y in length")
        mu = float(np.mean(w * y))
        global_stats = (mu, float(np.sqrt(np.mean(w * (y - mu) ** 2))))
    return GroupStats(per_group=per_group, global_stats=global_stats, weighted=weights is not None)


def normalize(y: Any, attr: ProtectedAttr, stats: GroupStats) -> FairLabels:
    """Map every label to the global moments through its group's affine standardization."""
    y = _vector(y, "y")
    if y.size != attr.n:
        raise DataError(f"y has {y.size} samples, protected attribute '{attr.name}' has {attr.n}")
    mu_c = np.empty(attr.K)
    sigma_c = np.ones(attr.K)
    present = attr.counts > 0
    for code, category in enumerate(attr.categories):
        if not present[code]:
            continue
        if category not in stats.per_group:
            raise CategoryError(f"Category '{category}' of '{attr.name}' was not seen when the statistics were fitted")
        mu_c[code], sigma_c[code] = stats.per_group[category]
        if sigma_c[code] <= SIGMA_FLOOR:
            raise NumericError(f"Standard deviation of category '{category}' is at the floor")
    codes = attr.codes
    values = (y - mu_c[codes]) / sigma_c[codes] * stats.sigma + stats.mu
    return FairLabels(values=values, source_stats=stats, protected_name=attr.name)


def unfairness_covariance(p: Any, y: Any, y_hat: Any) -> float:
    """Population covariance of predictions with the label correction ``y - y_hat``.

    ``mse(y_hat, p) == mse(y, p) + 2 * unfairness_covariance(p, y, y_hat)``
    whenever ``y_hat`` shares the mean and variance of ``y``.
    """
    p = _vector(p, "p")
    delta = _vector(y, "y") - _vector(y_hat, "y_hat")
    if p.size != delta.size:
        raise DataError("p, y and y_hat must have equal lengths")
    return float(np.mean((p - p.mean()) * (delta - delta.mean())))


def fair_loss(p: Any, y_hat: Any, weights: Optional[Any] = None) -> float:
    """Mean (optionally weighted) squared residual against the fair labels."""
    residual = _vector(p, "p") - _vector(y_hat, "y_hat")
    if weights is None:
        return float(np.mean(residual ** 2))
    w = _vector(weights, "weights")
    if w.size != residual.size:
        raise DataError("weights must match p in length")
    return float(np.mean(w * residual ** 2))


def _label_matrix(Y: Any) -> np.ndarray:
    array = np.asarray(Y, dtype=np.float64)
    if array.ndim == 1:
        array = array[:, None]
    if array.ndim != 2:
        raise DataError(f"Labels must be a vector or a matrix, got shape {array.shape}")
    return array


class FairLabelTransformer:
    """Group statistics per label column, fitted on training rows and applied to any rows.

    ``weights`` (one per training row) switch the global moments to their
    balanced form.

    Example:
        >>> transformer = FairLabelTransformer().fit(Y_train, attr_train)
        >>> Y_hat = transformer.transform(Y_validation, attr_validation)
    """

    def __init__(self, weights: Optional[np.ndarray] = None):
        self.weights = weights
        self.stats_: Optional[List[GroupStats]] = None

    def fit(self, Y: Any, attr: ProtectedAttr) -> FairLabelTransformer:
        Y = _label_matrix(Y)
        attr = attr.compact()
        self.stats_ = [fit_group_stats(Y[:, j], attr, self.weights) for j in range(Y.shape[1])]
        logger.debug(f"Fitted {'weighted' if self.weights is not None else 'plain'} group statistics "
                     f"for {Y.shape[1]} label(s) over '{attr.name}'")
        return self

    def _fitted(self) -> List[GroupStats]:
        if self.stats_ is None:
            raise NumericError("FairLabelTransformer used before fit")
        return self.stats_

    def seen(self, attr: ProtectedAttr) -> np.ndarray:
        """Row mask of categories that had statistics fitted."""
        known = self._fitted()[0].per_group
        return np.array([c in known for c in attr.categories], dtype=bool)[attr.codes]

    def transform(self, Y: Any, attr: ProtectedAttr) -> np.ndarray:
        """Normalized labels.

        Raises:
            CategoryError: A row belongs to a category unseen during ``fit``.
        """
        stats = self._fitted()
        Y = _label_matrix(Y)
        if Y.shape[1] != len(stats):
            raise DataError(f"Transformer was fitted on {len(stats)} labels, got {Y.shape[1]}")
        return np.column_stack([normalize(Y[:, j], attr, s).values for j, s in enumerate(stats)])

    def fit_transform(self, Y: Any, attr: ProtectedAttr) -> np.ndarray:
        return self.fit(Y, attr).transform(Y, attr)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "weighted": self.weights is not None,
            "stats": [s.to_dict() for s in self.stats_ or []],
        }
