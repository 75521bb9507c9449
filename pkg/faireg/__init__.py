"""
FaiReg: Fair Regression by Label Normalization
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

Tools for measuring and mitigating bias against protected groups in
continuous-label regression.

Subpackages:
    data: Datasets, CSV ingestion, min-max scaling, synthetic biased data.
    fairness: Label normalization (plain and hybrid), balancing weights.
    models: KELM base learner, random-forest stacker, adversarial baseline.
    metrics: MAA, equal accuracy, indicator PCC with t-test, kNN mutual information.
    tuning: Group k-fold plans, log-uniform hyperparameter search.
    pipeline: Experiment configuration, orchestration, Monte-Carlo skew study, rendering.
    storage: Artifact store for experiment outputs.

Exceptions:
    FairRegError: Base exception; subclasses DataError, CategoryError,
        ConfigError, NumericError and StorageError.

Key Features:
    - Exact population moments, so the loss decomposition holds at finite n
    - Cholesky/LU dense solvers for the (weighted) kernel system
    - Deterministic experiments under one seed, byte-identical reports
    - Parallel folds, candidates and trees with order-independent results
"""

__title__ = "true-faireg"
__version__ = "0.1.0"
__author__ = "alaamer12"
__author_email__ = "ahmedmuhmmed239@gmail.com"
__license__ = "MIT"
__copyright__ = "Copyright 2024 alaamer12"
__description__ = "Fair regression by label normalization, with bias metrics and experiment tooling"
__url__ = "https://github.com/alaamer12/true-faireg"
__keywords__ = [
    "fairness",
    "regression",
    "bias",
    "kernel-methods",
]

__all__ = [
    "__title__",
    "__version__",
    "__author__",
    "__author_email__",
    "__license__",
    "__copyright__",
    "__description__",
    "__url__",
    "__keywords__",
    "get_version",
    "get_author",
    "get_description",
]


def get_version() -> str:
    """Return the version of faireg."""
    return __version__


def get_author() -> str:
    """Return the author of faireg."""
    return __author__


def get_description() -> str:
    """Return the description of faireg."""
    return __description__


def __dir__():
    """Return a sorted list of names in this module."""
    return sorted(__all__)
