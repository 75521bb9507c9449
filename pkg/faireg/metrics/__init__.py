"""Evaluation metrics and fairness reports."""

from typing import List

from .fairness import (
    FairnessReport,
    LabelMetrics,
    PccResult,
    build_report,
    constant_baseline_maa,
    equal_accuracy,
    ground_truth_bias,
    maa,
    most_significant,
    pcc_indicator,
    statistical_parity,
)
from .special import digamma, pearson_p_value

__all__ = [
    'FairnessReport',
    'LabelMetrics',
    'PccResult',
    'build_report',
    'constant_baseline_maa',
    'equal_accuracy',
    'ground_truth_bias',
    'maa',
    'most_significant',
    'pcc_indicator',
    'statistical_parity',
    'digamma',
    'pearson_p_value',
]


def __dir__() -> List[str]:
    return sorted(__all__)
