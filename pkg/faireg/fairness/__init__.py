"""Bias mitigation on the label side: fair label normalization and balancing weights."""

from typing import List

from .balance import SampleWeights, balance_weights
from .methods import METHODS, MITIGATIONS, PreparedTargets, prepare_targets, weighted_mse
from .transform import (
    SIGMA_FLOOR,
    FairLabels,
    FairLabelTransformer,
    GroupStats,
    fair_loss,
    fit_group_stats,
    normalize,
    unfairness_covariance,
)

__all__ = [
    'SampleWeights',
    'METHODS',
    'MITIGATIONS',
    'PreparedTargets',
    'prepare_targets',
    'weighted_mse',
    'balance_weights',
    'SIGMA_FLOOR',
    'FairLabels',
    'FairLabelTransformer',
    'GroupStats',
    'fair_loss',
    'fit_group_stats',
    'normalize',
    'unfairness_covariance',
]


def __dir__() -> List[str]:
    return sorted(__all__)
