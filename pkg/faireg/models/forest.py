"""Random-forest regression used to stack per-view predictions.

Every tree is a scikit-learn ``DecisionTreeRegressor`` fitted on its own
bootstrap sample. The bootstrap draw and the tree's split randomness come from
a stream derived from ``(seed, tree_index)``, so forests are identical no
matter how many threads build them.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional

import numpy as np
from sklearn.tree import DecisionTreeRegressor

from ..base import BaseRegressor
from ..exceptions import ConfigError, DataError, NumericError
from ..log import get_logger

__all__ = [
    'ForestParams',
    'ForestModel',
    'StackingForest',
    'forest_fit',
    'forest_predict',
    'merge',
]


def __dir__() -> List[str]:
    return sorted(__all__)


logger = get_logger(__name__)


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 1000
    max_depth: Optional[int] = None
    min_leaf: int = 2
    max_features: Optional[int] = None
    seed: int = 0
    threads: int = 1

    def validate(self) -> None:
        if self.n_trees < 1 or self.min_leaf < 1 or self.threads < 1:
            raise ConfigError("ForestParams needs n_trees >= 1, min_leaf >= 1 and threads >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ConfigError("max_depth must be positive or null")
        if self.max_features is not None and self.max_features < 1:
            raise ConfigError("max_features must be positive or null")

    def features_per_split(self, m: int) -> int:
        if self.max_features is not None:
            return min(self.max_features, m)
        return max(1, math.ceil(m / 3))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_leaf": self.min_leaf,
            "max_features": self.max_features,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ForestParams:
        try:
            return cls(
                n_trees=int(data.get("n_trees", 1000)),
                max_depth=None if data.get("max_depth") is None else int(data["max_depth"]),
                min_leaf=int(data.get("min_leaf", 2)),
                max_features=None if data.get("max_features") is None else int(data["max_features"]),
                seed=int(data.get("seed", 0)),
            )
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid forest parameters: {e}")


@dataclass(eq=False)
class ForestModel:
    trees: List[DecisionTreeRegressor]
    n_features: int
    max_depth: Optional[int] = None
    min_leaf: int = 2
    seed: int = 0

    @property
    def n_trees(self) -> int:
        return len(self.trees)


def _fit_tree(X: np.ndarray, y: np.ndarray, weights: Optional[np.ndarray],
              params: ForestParams, index: int) -> DecisionTreeRegressor:
    rng = np.random.default_rng(np.random.SeedSequence((params.seed, index)))
    rows = rng.integers(0, X.shape[0], size=X.shape[0])
    tree = DecisionTreeRegressor(
        criterion="squared_error",
        max_depth=params.max_depth,
        min_samples_leaf=params.min_leaf,
        max_features=params.features_per_split(X.shape[1]),
        random_state=int(rng.integers(0, 2 ** 31 - 1)),
    )
    tree.fit(X[rows], y[rows], sample_weight=None if weights is None else weights[rows])
    return tree


def forest_fit(
        X_stack: np.ndarray,
        y: np.ndarray,
        params: Optional[ForestParams] = None,
        weights: Optional[np.ndarray] = None,
) -> ForestModel:
    """Fit ``params.n_trees`` bootstrap trees on one target column.

    Raises:
        DataError: Empty input, fewer rows than ``min_leaf`` or shape mismatch.
    """
    params = params or ForestParams()
    params.validate()
    X = np.asarray(X_stack, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise DataError(f"Forest input must be a non-empty matrix, got shape {X.shape}")
    if y.size != X.shape[0]:
        raise DataError(f"Forest target has {y.size} rows, input has {X.shape[0]}")
    if X.shape[0] < params.min_leaf:
        raise DataError(f"Forest needs at least min_leaf={params.min_leaf} rows, got {X.shape[0]}")
    if weights is not None:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != y.shape or np.any(weights <= 0):
            raise DataError("Forest sample weights must be positive and match the target")

    if params.threads > 1:
        with ThreadPoolExecutor(max_workers=params.threads) as executor:
            trees = list(executor.map(lambda i: _fit_tree(X, y, weights, params, i), range(params.n_trees)))
    else:
        trees = [_fit_tree(X, y, weights, params, i) for i in range(params.n_trees)]
    return ForestModel(trees=trees, n_features=X.shape[1], max_depth=params.max_depth,
                       min_leaf=params.min_leaf, seed=params.seed)


def forest_predict(model: ForestModel, X_stack: np.ndarray) -> np.ndarray:
    """Mean of the tree outputs."""
    X = np.asarray(X_stack, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DataError(f"Expected a matrix with {model.n_features} columns, got shape {X.shape}")
    if not model.trees:
        raise NumericError("Forest has no trees")
    total = np.zeros(X.shape[0])
    for tree in model.trees:
        total += tree.predict(X)
    return total / len(model.trees)


def merge(*models: ForestModel) -> ForestModel:
    """Pool the trees of several forests over the same inputs."""
    if not models:
        raise DataError("merge needs at least one forest")
    if len({m.n_features for m in models}) != 1:
        raise DataError("Cannot merge forests trained on different input widths")
    first = models[0]
    trees = [t for m in models for t in m.trees]
    return ForestModel(trees=trees, n_features=first.n_features, max_depth=first.max_depth,
                       min_leaf=first.min_leaf, seed=first.seed)


class StackingForest(BaseRegressor):
    """One forest per output label over the concatenated view predictions."""

    def __init__(self, params: Optional[ForestParams] = None):
        self.params = params or ForestParams()
        self.forests_: Optional[List[ForestModel]] = None

    def fit(self, X: np.ndarray, Y: np.ndarray, weights: Optional[np.ndarray] = None) -> StackingForest:
        Y = np.asarray(Y, dtype=np.float64)
        if Y.ndim == 1:
            Y = Y[:, None]
        self.forests_ = []
        for j in range(Y.shape[1]):
            label_params = ForestParams(
                n_trees=self.params.n_trees,
                max_depth=self.params.max_depth,
                min_leaf=self.params.min_leaf,
                max_features=self.params.max_features,
                seed=int(np.random.SeedSequence((self.params.seed, j)).generate_state(1)[0]),
                threads=self.params.threads,
            )
            self.forests_.append(forest_fit(X, Y[:, j], label_params, weights))
        logger.debug(f"Fitted {Y.shape[1]} stacking forest(s) of {self.params.n_trees} trees on {X.shape[1]} inputs")
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.forests_ is None:
            raise NumericError("StackingForest.predict called before fit")
        return np.column_stack([forest_predict(f, X) for f in self.forests_])

    def clone(self) -> StackingForest:
        return StackingForest(self.params)
