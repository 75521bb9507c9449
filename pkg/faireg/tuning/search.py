"""Hyperparameter search over group folds.

Candidates are drawn up front from a seeded generator (log-uniform for log
ranges), evaluated independently, possibly in parallel, and recorded in
candidate order. The best candidate maximizes the mean hold-out score; the
earliest wins ties.
"""
from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.stats import loguniform

from .. import serialization
from ..base import BaseRegressor
from ..data.dataset import ProtectedAttr
from ..exceptions import ConfigError, DataError, NumericError
from ..fairness.methods import PreparedTargets, prepare_targets
from ..log import get_logger
from .folds import FoldPlan

__all__ = [
    'ParamRange',
    'SearchSpace',
    'TraceEntry',
    'SearchTrace',
    'SearchResult',
    'search',
    'fit_prepared',
    'holdout_objective',
    'out_of_fold_predictions',
]


def __dir__() -> List[str]:
    return sorted(__all__)


logger = get_logger(__name__)

Candidate = Dict[str, float]
Objective = Callable[[Candidate], Sequence[float]]


@dataclass(frozen=True)
class ParamRange:
    low: float
    high: float
    log: bool = True

    def validate(self, name: str) -> None:
        if not self.low < self.high:
            raise ConfigError(f"Range of '{name}' needs low < high, got [{self.low}, {self.high}]")
        if self.log and self.low <= 0:
            raise ConfigError(f"Log-sampled range of '{name}' must be positive")

    def sample(self, rng: np.random.Generator) -> float:
        if self.log:
            return float(loguniform(self.low, self.high).rvs(random_state=rng))
        return float(rng.uniform(self.low, self.high))


@dataclass(frozen=True)
class SearchSpace:
    params: Mapping[str, ParamRange]
    budget: int = 64
    seed: int = 0

    def validate(self) -> None:
        if self.budget < 1:
            raise ConfigError(f"Search budget must be at least 1, got {self.budget}")
        if not self.params:
            raise ConfigError("Search space declares no parameters")
        for name, value_range in self.params.items():
            value_range.validate(name)

    def candidates(self) -> List[Candidate]:
        rng = np.random.default_rng(self.seed)
        names = sorted(self.params)
        return [{name: self.params[name].sample(rng) for name in names} for _ in range(self.budget)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "params": {n: {"low": r.low, "high": r.high, "log": r.log} for n, r in self.params.items()},
            "budget": self.budget,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> SearchSpace:
        try:
            params = {
                str(name): ParamRange(float(r["low"]), float(r["high"]), bool(r.get("log", True)))
                for name, r in data["params"].items()
            }
            return cls(params=params, budget=int(data.get("budget", 64)), seed=int(data.get("seed", 0)))
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"Invalid search space: {e}")


@dataclass(frozen=True)
class TraceEntry:
    index: int
    params: Candidate
    fold_scores: List[float]
    mean: float
    discarded: bool = False


@dataclass
class SearchTrace:
    entries: List[TraceEntry] = field(default_factory=list)

    def to_csv(self) -> str:
        """Candidate index, parameters, per-fold scores, mean and discarded flag."""
        param_names = sorted({n for e in self.entries for n in e.params})
        n_folds = max((len(e.fold_scores) for e in self.entries), default=0)
        rows = []
        for e in self.entries:
            row: Dict[str, Any] = {"candidate": e.index}
            for name in param_names:
                row[name] = serialization.format_number(e.params.get(name, float("nan")))
            for f in range(n_folds):
                score = e.fold_scores[f] if f < len(e.fold_scores) else float("nan")
                row[f"fold_{f}"] = serialization.format_number(score)
            row["mean"] = serialization.format_number(e.mean)
            row["discarded"] = int(e.discarded)
            rows.append(row)
        buffer = io.StringIO()
        pd.DataFrame(rows).to_csv(buffer, index=False, lineterminator="\n")
        return buffer.getvalue()

    def to_dict(self) -> List[Dict[str, Any]]:
        return [
            {"candidate": e.index, "params": e.params, "fold_scores": e.fold_scores,
             "mean": e.mean, "discarded": e.discarded}
            for e in self.entries
        ]


@dataclass
class SearchResult:
    best: Candidate
    best_score: float
    trace: SearchTrace


def _evaluate(objective: Objective, index: int, candidate: Candidate) -> TraceEntry:
    try:
        scores = [float(s) for s in objective(candidate)]
    except NumericError as e:
        logger.warning(f"Discarding candidate {index} {candidate}: {e}")
        return TraceEntry(index, candidate, [], float("nan"), discarded=True)
    mean = float(np.mean(scores)) if scores else float("nan")
    if not np.isfinite(mean):
        logger.warning(f"Discarding candidate {index} {candidate}: non-finite hold-out score")
        return TraceEntry(index, candidate, scores, mean, discarded=True)
    logger.debug(f"Candidate {index} {candidate}: mean score {mean:.6g}")
    return TraceEntry(index, candidate, scores, mean)


def search(objective: Objective, space: SearchSpace, threads: int = 1) -> SearchResult:
    """Evaluate ``space.budget`` sampled candidates and return the best.

    ``objective`` maps a candidate to its per-fold hold-out scores.

    Raises:
        NumericError: Every candidate was discarded.
    """
    space.validate()
    candidates = space.candidates()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            entries = list(executor.map(lambda ic: _evaluate(objective, *ic), enumerate(candidates)))
    else:
        entries = [_evaluate(objective, i, c) for i, c in enumerate(candidates)]

    best: Optional[TraceEntry] = None
    for entry in entries:
        if not entry.discarded and (best is None or entry.mean > best.mean):
            best = entry
    if best is None:
        raise NumericError(f"All {len(entries)} search candidates were discarded")
    logger.info(f"Selected {best.params} (candidate {best.index}, mean score {best.mean:.6g})")
    return SearchResult(best=dict(best.params), best_score=best.mean, trace=SearchTrace(entries))


def fit_prepared(model: BaseRegressor, X: np.ndarray, prepared: PreparedTargets,
                 attr: ProtectedAttr) -> BaseRegressor:
    """Fit ``model`` on prepared targets; the adversarial model also receives the attribute."""
    if prepared.method == "adv":
        return model.fit(X, prepared.targets, protected=attr)
    return model.fit(X, prepared.targets, prepared.weights)


def holdout_objective(
        method: str,
        model_factory: Callable[[Candidate], BaseRegressor],
        X: np.ndarray,
        Y: np.ndarray,
        attr: ProtectedAttr,
        plan: FoldPlan,
) -> Objective:
    """Per-fold negated method loss of a candidate.

    Targets, normalization statistics and weights of each fold come from its
    training rows; validation rows are only predicted and scored.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape[0] != Y.shape[0] or X.shape[0] != attr.n or plan.assignments.size != X.shape[0]:
        raise DataError("X, Y, the protected attribute and the fold plan must cover the same rows")

    def objective(candidate: Candidate) -> List[float]:
        scores = []
        for train, validation in plan.splits():
            train_attr = attr.take(train)
            prepared = prepare_targets(method, Y[train], train_attr)
            model = fit_prepared(model_factory(candidate), X[train], prepared, train_attr)
            scores.append(prepared.score(Y[validation], model.predict(X[validation]), attr.take(validation)))
        return scores

    return objective


def out_of_fold_predictions(
        model_factory: Callable[[], BaseRegressor],
        X: np.ndarray,
        Y: np.ndarray,
        plan: FoldPlan,
        method: str,
        attr: ProtectedAttr,
        threads: int = 1,
) -> np.ndarray:
    """Predictions for every row from a model that never saw that row's fold."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]

    def fold_predictions(fold: int) -> np.ndarray:
        train, validation = plan.train_indices(fold), plan.validation_indices(fold)
        train_attr = attr.take(train)
        prepared = prepare_targets(method, Y[train], train_attr)
        return fit_prepared(model_factory(), X[train], prepared, train_attr).predict(X[validation])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            per_fold = list(executor.map(fold_predictions, range(plan.k)))
    else:
        per_fold = [fold_predictions(f) for f in range(plan.k)]

    out = np.empty((X.shape[0], Y.shape[1]))
    for fold, predictions in enumerate(per_fold):
        out[plan.validation_indices(fold)] = predictions
    return out
