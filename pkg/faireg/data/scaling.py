"""Min-max feature scaling fitted on training rows only."""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from sklearn.preprocessing import MinMaxScaler

from ..exceptions import DataError

__all__ = [
    'MinMaxParams',
    'minmax_fit_transform',
]


def __dir__() -> List[str]:
    return sorted(__all__)


@dataclass(frozen=True, eq=False)
class MinMaxParams:
    """Per-column minimum and maximum of the training matrix."""
    data_min: np.ndarray
    data_max: np.ndarray

    @property
    def scale(self) -> np.ndarray:
        # constant columns use unit scale, so they map to 0 on the training rows
        span = self.data_max - self.data_min
        return np.where(span > 0, span, 1.0)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.data_min.size:
            raise DataError(f"Expected a matrix with {self.data_min.size} columns, got shape {X.shape}")
        return (X - self.data_min) / self.scale

    def to_dict(self) -> dict:
        return {"data_min": self.data_min.tolist(), "data_max": self.data_max.tolist()}


def minmax_fit_transform(
        train_features: np.ndarray,
        apply_features: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray, MinMaxParams]:
    """Fit a min-max map on ``train_features`` and apply it to both matrices.

    Training columns land in [0, 1]; the apply set is not clipped and may fall
    outside that range.
    """
    train = np.asarray(train_features, dtype=np.float64)
    apply = np.asarray(apply_features, dtype=np.float64)
    if train.ndim != 2 or train.shape[0] < 1:
        raise DataError("train_features must be a matrix with at least one row")
    if apply.ndim != 2 or apply.shape[1] != train.shape[1]:
        raise DataError(f"apply_features must have {train.shape[1]} columns, got shape {apply.shape}")

    scaler = MinMaxScaler(feature_range=(0.0, 1.0), clip=False)
    scaled_train = scaler.fit_transform(train)
    scaled_apply = scaler.transform(apply) if apply.shape[0] else apply.copy()
    params = MinMaxParams(data_min=scaler.data_min_.copy(), data_max=scaler.data_max_.copy())
    return scaled_train, scaled_apply, params
