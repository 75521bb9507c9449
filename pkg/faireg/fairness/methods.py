"""Training targets and sample weights per mitigation method.

``orig`` and ``adv`` train on the raw labels, ``faireg`` on normalized labels,
``baln`` on raw labels with balancing weights and ``fairegh`` on labels
normalized with weighted global moments plus balancing weights.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..data.dataset import ProtectedAttr
from ..exceptions import ConfigError, NumericError
from ..log import get_logger
from .balance import balance_weights
from .transform import FairLabelTransformer

__all__ = [
    'METHODS',
    'MITIGATIONS',
    'PreparedTargets',
    'prepare_targets',
    'weighted_mse',
]


def __dir__() -> List[str]:
    return sorted(__all__)


logger = get_logger(__name__)


METHODS = ("orig", "faireg", "baln", "fairegh", "adv")
MITIGATIONS = ("faireg", "baln", "fairegh", "adv")


def weighted_mse(Y: np.ndarray, P: np.ndarray, weights: Optional[np.ndarray] = None) -> float:
    """Mean squared error over samples and label columns, optionally sample-weighted."""
    squared = (np.asarray(Y, dtype=np.float64) - np.asarray(P, dtype=np.float64)) ** 2
    if squared.ndim == 1:
        squared = squared[:, None]
    if weights is None:
        return float(np.mean(squared))
    return float(np.mean(np.asarray(weights)[:, None] * squared))


@dataclass(frozen=True, eq=False)
class PreparedTargets:
    """Targets and weights a model trains on, plus what is needed to score other rows alike."""
    method: str
    targets: np.ndarray
    weights: Optional[np.ndarray]
    transformer: Optional[FairLabelTransformer] = None

    @property
    def normalizes(self) -> bool:
        return self.transformer is not None

    @property
    def balances(self) -> bool:
        return self.method in ("baln", "fairegh")

    def evaluation_targets(self, Y: np.ndarray, attr: ProtectedAttr) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        """Targets and weights for held-out rows.

        Labels are normalized with the statistics fitted here; weights come
        from the held-out rows' own category counts.
        """
        Y = _matrix(Y)
        targets = self.transformer.transform(Y, attr) if self.normalizes else Y
        weights = balance_weights(attr.compact()).values if self.balances else None
        return targets, weights

    def score(self, Y: np.ndarray, P: np.ndarray, attr: ProtectedAttr) -> float:
        """Negated method loss on held-out rows (higher is better).

        Rows of a category the training rows never contained have no
        normalization statistics and are left out of the score.

        Raises:
            NumericError: No held-out row belongs to a category seen in training.
        """
        Y, P = _matrix(Y), _matrix(P)
        if self.normalizes:
            keep = self.transformer.seen(attr)
            if not keep.any():
                raise NumericError("No held-out row belongs to a category seen in training")
            if not keep.all():
                logger.debug(f"Scoring {int(keep.sum())} of {keep.size} held-out rows; "
                             f"the rest belong to categories of '{attr.name}' unseen in training")
                rows = np.flatnonzero(keep)
                Y, P, attr = Y[rows], P[rows], attr.take(rows)
        targets, weights = self.evaluation_targets(Y, attr)
        return -weighted_mse(targets, P, weights)


def _matrix(Y: np.ndarray) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.float64)
    return Y[:, None] if Y.ndim == 1 else Y


def prepare_targets(method: str, Y: np.ndarray, attr: ProtectedAttr) -> PreparedTargets:
    """Fit the method's label statistics and weights on training rows only."""
    if method not in METHODS:
        raise ConfigError(f"Unknown method {method!r}; expected one of {METHODS}")
    Y = _matrix(Y)
    attr = attr.compact()
    weights = balance_weights(attr).values if method in ("baln", "fairegh") else None
    if method in ("faireg", "fairegh"):
        transformer = FairLabelTransformer(weights)
        return PreparedTargets(method, transformer.fit_transform(Y, attr), weights, transformer)
    return PreparedTargets(method, Y, weights)
