"""Group k-fold cross-validation and hyperparameter search."""

from typing import List

from .folds import FoldPlan, group_holdout_split, group_kfold
from .search import (
    ParamRange,
    SearchResult,
    SearchSpace,
    SearchTrace,
    holdout_objective,
    out_of_fold_predictions,
    search,
)

__all__ = [
    'FoldPlan',
    'group_holdout_split',
    'group_kfold',
    'ParamRange',
    'SearchResult',
    'SearchSpace',
    'SearchTrace',
    'holdout_objective',
    'out_of_fold_predictions',
    'search',
]


def __dir__() -> List[str]:
    return sorted(__all__)
