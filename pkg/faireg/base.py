"""Base regressor interface for the faireg package."""

from abc import ABC, abstractmethod
from typing import Optional

import numpy as np


class BaseRegressor(ABC):
    """Base class for the multi-output regressors used by tuning and the pipeline."""

    @abstractmethod
    def fit(self, X: np.ndarray, Y: np.ndarray, weights: Optional[np.ndarray] = None) -> 'BaseRegressor':
        """Fit on features ``X`` (n×d) and targets ``Y`` (n×L)."""
        pass

    @abstractmethod
    def predict(self, X: np.ndarray) -> np.ndarray:
        """Predict an n_test×L matrix."""
        pass

    @abstractmethod
    def clone(self) -> 'BaseRegressor':
        """Create an unfitted copy with the same hyperparameters."""
        pass
