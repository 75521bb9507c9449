"""Group-disjoint fold assignment and train/test splitting."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterator, List, Sequence, Tuple

import numpy as np

from ..exceptions import ConfigError, DataError

__all__ = [
    'FoldPlan',
    'group_kfold',
    'group_holdout_split',
]


def __dir__() -> List[str]:
    return sorted(__all__)


@dataclass(frozen=True, eq=False)
class FoldPlan:
    """Fold index per sample; every group lives in exactly one fold."""
    k: int
    assignments: np.ndarray

    def validation_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)

    def splits(self) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        for fold in range(self.k):
            yield self.train_indices(fold), self.validation_indices(fold)

    @property
    def fold_sizes(self) -> List[int]:
        return np.bincount(self.assignments, minlength=self.k).tolist()


def group_kfold(group_ids: Sequence[Any], k: int = 6, seed: int = 0) -> FoldPlan:
    """Assign whole groups to ``k`` folds, balancing fold sizes greedily.

    Groups are shuffled with ``seed``, stably sorted by decreasing size and each
    placed in the currently lightest fold (lowest index on ties).

    Raises:
        ConfigError: ``k < 2``.
        DataError: Fewer distinct groups than folds.
    """
    if k < 2:
        raise ConfigError(f"group k-fold needs k >= 2, got {k}")
    group_ids = np.asarray(group_ids).astype(str)
    groups, inverse, sizes = np.unique(group_ids, return_inverse=True, return_counts=True)
    if groups.size < k:
        raise DataError(f"Cannot build {k} folds from {groups.size} distinct groups")

    order = np.random.default_rng(seed).permutation(groups.size)
    order = order[np.argsort(-sizes[order], kind="stable")]
    load = np.zeros(k, dtype=np.int64)
    fold_of_group = np.empty(groups.size, dtype=np.int64)
    for g in order:
        fold = int(np.argmin(load))
        fold_of_group[g] = fold
        load[fold] += sizes[g]
    return FoldPlan(k=k, assignments=fold_of_group[inverse])


def group_holdout_split(group_ids: Sequence[Any], fraction: float = 0.2, seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """Hold out ``fraction`` of the distinct groups; returns sorted (train, test) row indices.

    At least one group lands on each side.
    """
    if not 0 < fraction < 1:
        raise ConfigError(f"Hold-out fraction must lie in (0, 1), got {fraction!r}")
    group_ids = np.asarray(group_ids).astype(str)
    groups, inverse = np.unique(group_ids, return_inverse=True)
    if groups.size < 2:
        raise DataError("A group hold-out split needs at least two distinct groups")
    n_test = min(groups.size - 1, max(1, int(round(fraction * groups.size))))
    test_groups = np.zeros(groups.size, dtype=bool)
    test_groups[np.random.default_rng(seed).permutation(groups.size)[:n_test]] = True
    test_rows = test_groups[inverse]
    return np.flatnonzero(~test_rows), np.flatnonzero(test_rows)
