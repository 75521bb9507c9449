"""Sample weights that give every protected category the same total mass."""

from dataclasses import dataclass
from typing import Any, Dict, List

import numpy as np

from ..data.dataset import ProtectedAttr
from ..exceptions import CategoryError

__all__ = [
    'SampleWeights',
    'balance_weights',
]


def __dir__() -> List[str]:
    return sorted(__all__)


@dataclass(frozen=True, eq=False)
class SampleWeights:
    values: np.ndarray
    attr_name: str

    def to_dict(self) -> Dict[str, Any]:
        return {"attr_name": self.attr_name, "values": self.values.tolist()}


def balance_weights(attr: ProtectedAttr) -> SampleWeights:
    """``w_i = n / (K * n_{c_i})`` so that each category sums to ``n / K``.

    Raises:
        CategoryError: Some category of ``attr`` has no samples.
    """
    counts = attr.counts
    empty = [attr.categories[i] for i in np.flatnonzero(counts == 0)]
    if empty:
        raise CategoryError(f"Categories {empty} of '{attr.name}' are empty; compact the attribute first")
    per_category = attr.n / (attr.K * counts.astype(np.float64))
    return SampleWeights(values=per_category[attr.codes], attr_name=attr.name)
