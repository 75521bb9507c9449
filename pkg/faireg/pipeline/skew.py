"""Monte-Carlo check of how label skewness limits the normalization.

One class draws gamma(k) values, the other normal values with the same mean
and variance. After per-class normalization both share their first two
moments, so any remaining mutual information with the class comes from the
difference in shape. Gamma skewness is ``2 / sqrt(k)``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Sequence

import numpy as np

from ..data.dataset import ProtectedAttr
from ..exceptions import ConfigError
from ..fairness.transform import fit_group_stats, normalize
from ..log import get_logger
from ..metrics.fairness import statistical_parity

__all__ = [
    'skew_trial',
    'mc_skew',
]


def __dir__() -> List[str]:
    return sorted(__all__)


logger = get_logger(__name__)


def skew_trial(shape: float, n: int, seed: int, k: int = 3, normal_only: bool = False) -> float:
    """SP between normalized values and class for one draw of ``n`` samples."""
    rng = np.random.default_rng(seed)
    n_a = n // 2
    if normal_only:
        class_a = rng.normal(shape, math.sqrt(shape), size=n_a)
    else:
        class_a = rng.gamma(shape, 1.0, size=n_a)
    class_b = rng.normal(shape, math.sqrt(shape), size=n - n_a)
    values = np.concatenate([class_a, class_b])
    codes = np.concatenate([np.zeros(n_a, dtype=np.int64), np.ones(n - n_a, dtype=np.int64)])
    attr = ProtectedAttr("class", codes, ("gamma", "normal"))
    fair = normalize(values, attr, fit_group_stats(values, attr)).values
    return statistical_parity(fair, attr, k=k, seed=seed)


def mc_skew(
        shapes: Sequence[float] = (1.0, 10.0, 100.0),
        n: int = 10000,
        trials: int = 50,
        seed: int = 0,
        k: int = 3,
        threads: int = 1,
        normal_only: bool = False,
) -> Dict[float, float]:
    """Mean SP per gamma shape, averaged over ``trials`` independent draws.

    ``normal_only`` replaces the gamma class by a matched normal (control run).
    """
    if not shapes or any(not s > 0 for s in shapes):
        raise ConfigError(f"Gamma shapes must be positive, got {list(shapes)}")
    if n < 2 * (k + 1) or trials < 1:
        raise ConfigError(f"mc_skew needs n >= {2 * (k + 1)} and trials >= 1")

    jobs = [
        (i, float(shape), int(np.random.SeedSequence((seed, i, t)).generate_state(1)[0]))
        for i, shape in enumerate(shapes)
        for t in range(trials)
    ]

    def run(job):
        _, shape, trial_seed = job
        return skew_trial(shape, n, trial_seed, k, normal_only)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            values = list(executor.map(run, jobs))
    else:
        values = [run(job) for job in jobs]

    means: Dict[float, float] = {}
    for i, shape in enumerate(shapes):
        per_shape = [v for (j, _, _), v in zip(jobs, values) if j == i]
        means[float(shape)] = float(np.mean(per_shape))
        logger.info(f"shape {shape:g} (skewness {2 / math.sqrt(shape):.3g}): mean SP {means[float(shape)]:.4g}")
    return means
