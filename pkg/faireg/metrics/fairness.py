"""Accuracy and bias metrics for continuous predictions.

Functions:
    maa: Mean absolute accuracy, ``1 - mean|y - p|``.
    equal_accuracy: Difference of per-group mean absolute errors.
    pcc_indicator: Pearson correlation of predictions with a category indicator,
        with its two-sided t-test p-value.
    statistical_parity: kNN estimate of the mutual information between
        predictions and the protected attribute, in nats.
    build_report: All of the above per label and per protected attribute.
    ground_truth_bias: Correlation and mutual information of the labels
        themselves with each protected attribute.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from sklearn.neighbors import KDTree, NearestNeighbors

from ..data.dataset import ProtectedAttr
from ..exceptions import CategoryError, DataError
from .special import digamma, pearson_p_value

__all__ = [
    'PAIR_SEPARATOR',
    'PccResult',
    'LabelMetrics',
    'FairnessReport',
    'maa',
    'constant_baseline_maa',
    'equal_accuracy',
    'pcc_indicator',
    'most_significant',
    'statistical_parity',
    'build_report',
    'ground_truth_bias',
]


def __dir__() -> List[str]:
    return sorted(__all__)


PAIR_SEPARATOR = "|"


def _vector(values: Any, what: str) -> np.ndarray:
    array = np.asarray(values, dtype=np.float64)
    if array.ndim != 1:
        raise DataError(f"{what} must be one-dimensional, got shape {array.shape}")
    return array


def _pair(y: Any, p: Any) -> Tuple[np.ndarray, np.ndarray]:
    y, p = _vector(y, "y"), _vector(p, "p")
    if y.size != p.size:
        raise DataError(f"y has {y.size} values, p has {p.size}")
    if y.size == 0:
        raise DataError("Metrics need at least one sample")
    return y, p


def maa(y: Any, p: Any) -> float:
    y, p = _pair(y, p)
    return float(1.0 - np.mean(np.abs(y - p)))


def constant_baseline_maa(y_train: Any, y_eval: Any) -> float:
    """MAA of predicting the training mean for every evaluated sample."""
    y_train = _vector(y_train, "y_train")
    y_eval = _vector(y_eval, "y_eval")
    return maa(y_eval, np.full(y_eval.size, y_train.mean()))


def _group_error(y: np.ndarray, p: np.ndarray, attr: ProtectedAttr, category: str) -> float:
    mask = attr.mask(category)
    if not mask.any():
        raise CategoryError(f"Category '{category}' of '{attr.name}' has no samples")
    return float(np.mean(np.abs(y[mask] - p[mask])))


def equal_accuracy(y: Any, p: Any, attr: ProtectedAttr, pair: Tuple[str, str]) -> float:
    """``E[|y - p| | C=a] - E[|y - p| | C=b]``."""
    y, p = _pair(y, p)
    a, b = pair
    return _group_error(y, p, attr, a) - _group_error(y, p, attr, b)


@dataclass(frozen=True)
class PccResult:
    r: float
    p_value: float

    @property
    def defined(self) -> bool:
        return bool(np.isfinite(self.r))

    def to_dict(self) -> Dict[str, Any]:
        return {"r": self.r, "p_value": self.p_value}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> PccResult:
        def number(v):
            return float("nan") if v is None else float(v)
        return cls(r=number(data.get("r")), p_value=number(data.get("p_value")))


def pcc_indicator(p: Any, attr: ProtectedAttr, category: str) -> PccResult:
    """Pearson r of ``p`` with ``1[C = category]`` and its two-sided p-value.

    Zero variance of the predictions or of the indicator gives ``nan`` for both.
    """
    p = _vector(p, "p")
    if p.size != attr.n:
        raise DataError(f"p has {p.size} values, protected attribute '{attr.name}' has {attr.n}")
    indicator = attr.indicator(category)
    centered_p = p - p.mean()
    centered_i = indicator - indicator.mean()
    denominator = np.sqrt(np.sum(centered_p ** 2) * np.sum(centered_i ** 2))
    if not denominator > 0:
        return PccResult(float("nan"), float("nan"))
    r = float(np.clip(np.sum(centered_p * centered_i) / denominator, -1.0, 1.0))
    return PccResult(r=r, p_value=pearson_p_value(r, p.size))


def most_significant(results: Iterable[PccResult]) -> PccResult:
    """The defined correlation with the smallest p-value; ties go to the larger |r|."""
    defined = [r for r in results if r.defined]
    if not defined:
        return PccResult(float("nan"), float("nan"))
    return min(defined, key=lambda r: (r.p_value, -abs(r.r)))


def statistical_parity(p: Any, attr: ProtectedAttr, k: int = 3, seed: int = 0) -> float:
    """Mutual information (nats) between continuous ``p`` and a discrete attribute.

    ``I = psi(n) - <psi(n_c)> + psi(k) - <psi(m_i)>`` where ``d_i`` is the
    distance from sample i to its k-th nearest neighbour of the same category
    and ``m_i`` counts the other samples of any category within ``d_i``
    (boundary included). A seeded jitter of ``1e-10 * std(p)`` separates exact
    duplicates. Negative estimates clamp to 0.

    Raises:
        CategoryError: A present category has ``k`` or fewer samples.
    """
    p = _vector(p, "p")
    if p.size != attr.n:
        raise DataError(f"p has {p.size} values, protected attribute '{attr.name}' has {attr.n}")
    attr = attr.compact()
    if attr.K < 2:
        return 0.0
    counts = attr.counts
    small = [attr.categories[i] for i in np.flatnonzero(counts <= k)]
    if small:
        raise CategoryError(f"Categories {small} of '{attr.name}' need more than k={k} samples")

    spread = p.std()
    if spread > 0:
        p = p + np.random.default_rng(seed).standard_normal(p.size) * (1e-10 * spread)
    points = p[:, None]

    radius = np.empty(p.size)
    for code in range(attr.K):
        rows = np.flatnonzero(attr.codes == code)
        neighbours = NearestNeighbors(n_neighbors=k + 1, metric="chebyshev").fit(points[rows])
        distances, _ = neighbours.kneighbors(points[rows])
        radius[rows] = distances[:, k]

    within = KDTree(points, metric="chebyshev").query_radius(points, r=radius, count_only=True) - 1
    within = np.maximum(within, k)
    n = p.size
    estimate = digamma(n) - np.mean(digamma(counts[attr.codes])) + digamma(k) - np.mean(digamma(within))
    return float(max(0.0, estimate))


@dataclass
class LabelMetrics:
    """Metrics of one label column."""
    maa_global: float
    maa_per_group: Dict[str, Dict[str, float]] = field(default_factory=dict)
    ea_pairs: Dict[str, Dict[str, float]] = field(default_factory=dict)
    ea_aggregate: Dict[str, float] = field(default_factory=dict)
    pcc_per_category: Dict[str, Dict[str, PccResult]] = field(default_factory=dict)
    sp_per_attr: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "maa_global": self.maa_global,
            "maa_per_group": self.maa_per_group,
            "ea_pairs": self.ea_pairs,
            "ea_aggregate": self.ea_aggregate,
            "pcc_per_category": {
                a: {c: r.to_dict() for c, r in per.items()} for a, per in self.pcc_per_category.items()
            },
            "sp_per_attr": self.sp_per_attr,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> LabelMetrics:
        def numbers(mapping):
            return {k: float("nan") if v is None else float(v) for k, v in mapping.items()}
        return cls(
            maa_global=float(data["maa_global"]),
            maa_per_group={a: numbers(v) for a, v in data.get("maa_per_group", {}).items()},
            ea_pairs={a: numbers(v) for a, v in data.get("ea_pairs", {}).items()},
            ea_aggregate=numbers(data.get("ea_aggregate", {})),
            pcc_per_category={
                a: {c: PccResult.from_dict(r) for c, r in per.items()}
                for a, per in data.get("pcc_per_category", {}).items()
            },
            sp_per_attr=numbers(data.get("sp_per_attr", {})),
        )


@dataclass
class FairnessReport:
    """Per-label accuracy and bias metrics for one set of predictions."""
    labels: Dict[str, LabelMetrics]
    n: int
    attributes: Tuple[str, ...]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "attributes": list(self.attributes),
            "labels": {name: m.to_dict() for name, m in self.labels.items()},
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> FairnessReport:
        try:
            return cls(
                labels={name: LabelMetrics.from_dict(m) for name, m in data["labels"].items()},
                n=int(data["n"]),
                attributes=tuple(data["attributes"]),
                metadata=dict(data.get("metadata", {})),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise DataError(f"Invalid fairness report: {e}")

    def flatten_rows(self) -> List[Dict[str, Any]]:
        """One row per (label, metric, attribute, key) for tabular output."""
        rows: List[Dict[str, Any]] = []

        def add(label, metric, attribute, key, value):
            rows.append({"label": label, "metric": metric, "attribute": attribute, "key": key, "value": value})

        for label, m in self.labels.items():
            add(label, "maa", "", "", m.maa_global)
            for attribute in self.attributes:
                for category, value in m.maa_per_group.get(attribute, {}).items():
                    add(label, "maa_group", attribute, category, value)
                for pair, value in m.ea_pairs.get(attribute, {}).items():
                    add(label, "ea", attribute, pair, value)
                if attribute in m.ea_aggregate:
                    add(label, "ea_aggregate", attribute, "", m.ea_aggregate[attribute])
                for category, result in m.pcc_per_category.get(attribute, {}).items():
                    add(label, "pcc_r", attribute, category, result.r)
                    add(label, "pcc_p", attribute, category, result.p_value)
                if attribute in m.sp_per_attr:
                    add(label, "sp", attribute, "", m.sp_per_attr[attribute])
        return rows

    def worst_pcc(self) -> PccResult:
        """The defined correlation with the smallest p-value over labels and categories."""
        return most_significant(
            result
            for m in self.labels.values()
            for per in m.pcc_per_category.values()
            for result in per.values()
        )

    def mean_maa(self) -> float:
        return float(np.mean([m.maa_global for m in self.labels.values()]))


def _columns(values: Any, n_labels: int, what: str) -> np.ndarray:
    array = np.asarray(values, dtype=np.float64)
    if array.ndim == 1:
        array = array[:, None]
    if array.ndim != 2 or array.shape[1] != n_labels:
        raise DataError(f"{what} must have {n_labels} column(s), got shape {array.shape}")
    return array


def build_report(
        y: Any,
        p: Any,
        attrs: Mapping[str, ProtectedAttr],
        labels: Sequence[str],
        k: int = 3,
        seed: int = 0,
        metadata: Optional[Dict[str, Any]] = None,
) -> FairnessReport:
    """Evaluate ``p`` against ``y`` for every label column and protected attribute.

    Only categories present in the evaluated rows contribute.
    """
    labels = list(labels)
    Y = _columns(y, len(labels), "y")
    P = _columns(p, len(labels), "p")
    if Y.shape[0] != P.shape[0]:
        raise DataError(f"y has {Y.shape[0]} rows, p has {P.shape[0]}")
    present = {name: attr.compact() for name, attr in attrs.items()}

    report_labels: Dict[str, LabelMetrics] = {}
    for j, label in enumerate(labels):
        yj, pj = Y[:, j], P[:, j]
        metrics = LabelMetrics(maa_global=maa(yj, pj))
        for name, attr in present.items():
            errors = {c: _group_error(yj, pj, attr, c) for c in attr.categories}
            metrics.maa_per_group[name] = {c: 1.0 - e for c, e in errors.items()}
            pairs = {
                f"{a}{PAIR_SEPARATOR}{b}": errors[a] - errors[b]
                for a, b in itertools.permutations(attr.categories, 2)
            }
            metrics.ea_pairs[name] = pairs
            unordered = [abs(errors[a] - errors[b]) for a, b in itertools.combinations(attr.categories, 2)]
            metrics.ea_aggregate[name] = float(np.mean(unordered)) if unordered else 0.0
            metrics.pcc_per_category[name] = {c: pcc_indicator(pj, attr, c) for c in attr.categories}
            metrics.sp_per_attr[name] = statistical_parity(pj, attr, k=k, seed=seed)
        report_labels[label] = metrics
    return FairnessReport(labels=report_labels, n=int(Y.shape[0]), attributes=tuple(attrs),
                          metadata=dict(metadata or {}))


def ground_truth_bias(
        y: Any,
        attrs: Mapping[str, ProtectedAttr],
        labels: Sequence[str],
        k: int = 3,
        seed: int = 0,
) -> Dict[str, Dict[str, Any]]:
    """PCC and SP of the labels themselves against each protected attribute."""
    labels = list(labels)
    Y = _columns(y, len(labels), "y")
    bias: Dict[str, Dict[str, Any]] = {}
    for j, label in enumerate(labels):
        per_attr: Dict[str, Any] = {}
        for name, attr in attrs.items():
            attr = attr.compact()
            per_attr[name] = {
                "pcc": {c: pcc_indicator(Y[:, j], attr, c).to_dict() for c in attr.categories},
                "sp": statistical_parity(Y[:, j], attr, k=k, seed=seed),
            }
        bias[label] = per_attr
    return bias
