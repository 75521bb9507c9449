"""Regressors: KELM base learner, forest stacker and the adversarial baseline."""

from typing import List

from .adversarial import AdvConfig, AdversarialRegressor, adv_predict, adv_train
from .forest import ForestParams, StackingForest, forest_fit, forest_predict
from .kelm import KelmRegressor, KernelSpec, kelm_fit, kelm_predict, primal_solution

__all__ = [
    'AdvConfig',
    'AdversarialRegressor',
    'adv_predict',
    'adv_train',
    'ForestParams',
    'StackingForest',
    'forest_fit',
    'forest_predict',
    'KelmRegressor',
    'KernelSpec',
    'kelm_fit',
    'kelm_predict',
    'primal_solution',
]


def __dir__() -> List[str]:
    return sorted(__all__)
