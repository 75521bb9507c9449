"""Special functions used by the metrics."""

from typing import List, Union

import numpy as np
from scipy import special

__all__ = [
    'digamma',
    'pearson_p_value',
]


def __dir__() -> List[str]:
    return sorted(__all__)


ArrayLike = Union[float, np.ndarray]


def digamma(x: ArrayLike) -> ArrayLike:
    return special.digamma(x)


def pearson_p_value(r: float, n: int) -> float:
    """Two-sided Student-t p-value of a Pearson correlation ``r`` over ``n`` samples.

    With ``df = n - 2`` and ``t = r * sqrt(df / (1 - r^2))`` the p-value is the
    regularized incomplete beta ``I_{df/(df+t^2)}(df/2, 1/2)``, and
    ``df / (df + t^2) == 1 - r^2``.
    """
    if n < 3 or not np.isfinite(r):
        return float("nan")
    r = min(1.0, abs(float(r)))
    df = n - 2
    return float(special.betainc(0.5 * df, 0.5, 1.0 - r * r))
