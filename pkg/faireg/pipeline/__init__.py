"""Experiment configuration, orchestration, Monte-Carlo studies and rendering."""

from typing import List

from .config import DataSource, EvalConfig, ExperimentConfig, TuningConfig, default_synth, stage_seed
from .experiment import (
    ExperimentResult,
    ScatterPoint,
    competent_region,
    experiment_grid,
    load_dataset,
    run_experiment,
    run_grid,
)
from .skew import mc_skew

__all__ = [
    'DataSource',
    'EvalConfig',
    'ExperimentConfig',
    'TuningConfig',
    'default_synth',
    'stage_seed',
    'ExperimentResult',
    'ScatterPoint',
    'competent_region',
    'experiment_grid',
    'load_dataset',
    'run_experiment',
    'run_grid',
    'mc_skew',
]


def __dir__() -> List[str]:
    return sorted(__all__)
