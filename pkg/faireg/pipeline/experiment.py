"""End-to-end experiment orchestration.

Stages run in order: ``data`` (load or synthesize, group hold-out split,
min-max scaling on train rows), ``folds``, then either the stacked KELM path
(``tune:<view>``, ``fit:<view>``, ``stack``) or the adversarial path
(``tune:adv``, ``fit:adv``), then ``evaluate``, ``scatter`` and ``artifacts``.
An error escaping a stage carries the stage name. Every random stream is
derived from ``(seed, stage, index)``.
"""
from __future__ import annotations

import io
import itertools
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .. import serialization
from ..data.dataset import Dataset, ProtectedAttr, load_csv, load_manifest
from ..data.scaling import minmax_fit_transform
from ..data.synth import synthesize
from ..exceptions import FairRegError
from ..fairness.methods import MITIGATIONS, prepare_targets
from ..log import get_logger
from ..metrics.fairness import (
    FairnessReport,
    build_report,
    constant_baseline_maa,
    ground_truth_bias,
    maa,
    most_significant,
    pcc_indicator,
)
from ..models.adversarial import AdversarialRegressor, trace_to_csv
from ..models.forest import StackingForest
from ..models.kelm import KelmRegressor
from ..storage import ArtifactStore
from ..tuning.folds import FoldPlan, group_holdout_split, group_kfold
from ..tuning.search import SearchResult, fit_prepared, holdout_objective, out_of_fold_predictions, search
from .config import ExperimentConfig, stage_seed

__all__ = [
    'ScatterPoint',
    'ExperimentResult',
    'competent_region',
    'experiment_grid',
    'load_dataset',
    'run_experiment',
    'run_grid',
]


def __dir__() -> List[str]:
    return sorted(__all__)


logger = get_logger(__name__)


@contextmanager
def _stage(name: str) -> Iterator[None]:
    logger.debug(f"Entering stage '{name}'")
    try:
        yield
    except FairRegError as e:
        if e.stage is None:
            e.stage = name
        logger.error(f"Stage '{name}' failed: {e.message}")
        raise


def competent_region(maa_value: float, pcc_p_value: float, baseline_maa: float, threshold: float = 1e-3) -> bool:
    """Better than the constant-mean predictor without a significant group correlation."""
    return bool(maa_value > baseline_maa and pcc_p_value > threshold)


def experiment_grid(selectors: Sequence[str] = ("A", "B", "A*B")) -> List[Tuple[str, str]]:
    """``orig`` once, then every mitigation method against every protected selector."""
    selectors = list(selectors)
    return [("orig", selectors[0])] + list(itertools.product(MITIGATIONS, selectors))


@dataclass(frozen=True)
class ScatterPoint:
    """Test-set accuracy and strongest group correlation of one tuning candidate."""
    source: str
    candidate: int
    params: Dict[str, float]
    maa: float
    r: float
    p_value: float
    competent: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "source": self.source,
            "candidate": self.candidate,
            "params": self.params,
            "maa": self.maa,
            "r": self.r,
            "p_value": self.p_value,
            "competent": self.competent,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ScatterPoint:
        def number(v):
            return float("nan") if v is None else float(v)
        return cls(
            source=str(data["source"]),
            candidate=int(data["candidate"]),
            params={k: float(v) for k, v in data.get("params", {}).items()},
            maa=number(data["maa"]),
            r=number(data["r"]),
            p_value=number(data["p_value"]),
            competent=bool(data["competent"]),
        )


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    report: FairnessReport
    ground_truth: Dict[str, Any]
    baseline_maa: float
    selected: Dict[str, Dict[str, float]]
    scatter: List[ScatterPoint] = field(default_factory=list)
    predictions: Optional[np.ndarray] = None
    test_indices: Optional[np.ndarray] = None

    def to_dict(self) -> Dict[str, Any]:
        """Everything but the raw predictions; contains no timestamps."""
        return {
            "config": self.config.to_dict(),
            "report": self.report.to_dict(),
            "ground_truth": self.ground_truth,
            "baseline_maa": self.baseline_maa,
            "selected": self.selected,
            "scatter": [p.to_dict() for p in self.scatter],
        }


def load_dataset(config: ExperimentConfig) -> Dataset:
    if config.synth is not None:
        return synthesize(config.synth)
    return load_csv(config.data.csv, load_manifest(config.data.manifest))


def _scatter_point(source: str, index: int, params: Dict[str, float], predictions: np.ndarray,
                   test: Dataset, attrs: Mapping[str, ProtectedAttr], baseline: float,
                   threshold: float) -> ScatterPoint:
    mean_maa = float(np.mean([maa(test.labels[:, j], predictions[:, j]) for j in range(test.n_labels)]))
    correlations = [
        pcc_indicator(predictions[:, j], attr, category)
        for j in range(test.n_labels)
        for attr in attrs.values()
        for category in attr.categories
    ]
    worst = most_significant(correlations)
    competent = bool(np.isfinite(worst.p_value)) and competent_region(mean_maa, worst.p_value, baseline, threshold)
    return ScatterPoint(source, index, params, mean_maa, worst.r, worst.p_value, competent)


def _stacked_path(config: ExperimentConfig, dataset: Dataset, train: Dataset, X_train: np.ndarray,
                  X_test: np.ndarray, attr_train: ProtectedAttr, plan: FoldPlan, threads: int,
                  store: Optional[ArtifactStore]):
    method = config.method
    oof_blocks, test_blocks = [], []
    selected: Dict[str, Dict[str, float]] = {}
    searches: Dict[str, SearchResult] = {}

    for index, (view, columns) in enumerate(dataset.views.items()):
        columns = list(columns)
        Xv_train, Xv_test = X_train[:, columns], X_test[:, columns]
        with _stage(f"tune:{view}"):
            space = replace(config.tuning.kelm, seed=stage_seed(config.seed, "tune", index))
            objective = holdout_objective(method, lambda c: KelmRegressor(C=c["C"]), Xv_train,
                                          train.labels, attr_train, plan)
            result = search(objective, space, threads)
            selected[view] = result.best
            searches[view] = result
            logger.info(f"View '{view}': selected C={result.best['C']:.4g}")
        with _stage(f"fit:{view}"):
            prepared = prepare_targets(method, train.labels, attr_train)
            C = result.best["C"]
            model = fit_prepared(KelmRegressor(C=C), Xv_train, prepared, attr_train)
            test_blocks.append(model.predict(Xv_test))
            oof_blocks.append(out_of_fold_predictions(lambda: KelmRegressor(C=C), Xv_train, train.labels,
                                                      plan, method, attr_train, threads))
            if store is not None:
                model.save(store, f"models/kelm_{view}.npz")

    with _stage("stack"):
        params = replace(config.stack, seed=stage_seed(config.seed, "stack"), threads=threads)
        stacker = StackingForest(params).fit(np.hstack(oof_blocks), prepared.targets, prepared.weights)
        predictions = stacker.predict(np.hstack(test_blocks))
        if store is not None:
            store.store_object("models/stacker.pkl", stacker)
    return predictions, selected, searches


def _adversarial_path(config: ExperimentConfig, train: Dataset, X_train: np.ndarray, X_test: np.ndarray,
                      attr_train: ProtectedAttr, plan: FoldPlan, threads: int,
                      store: Optional[ArtifactStore]):
    base = config.adv.with_params(seed=stage_seed(config.seed, "adv"))

    def factory(candidate):
        return AdversarialRegressor(base.with_params(**candidate))

    with _stage("tune:adv"):
        space = replace(config.tuning.adv, seed=stage_seed(config.seed, "tune", 0))
        result = search(holdout_objective("adv", factory, X_train, train.labels, attr_train, plan), space, threads)
    with _stage("fit:adv"):
        model = factory(result.best).fit(X_train, train.labels, protected=attr_train)
        predictions = model.predict(X_test)
        if store is not None:
            store.store_text("models/adv_trace.csv", trace_to_csv(model.trace_))
            store.store_arrays("models/adv_params.npz", model.params_.arrays)
    return predictions, {"adv": result.best}, {"adv": result}


def _candidate_predictions(config: ExperimentConfig, dataset: Dataset, train: Dataset, X_train: np.ndarray,
                           X_test: np.ndarray, attr_train: ProtectedAttr,
                           searches: Mapping[str, SearchResult]) -> Iterator[Tuple[str, int, Dict[str, float], np.ndarray]]:
    """Refit every non-discarded candidate on the full training split and predict the test split."""
    prepared = prepare_targets(config.method, train.labels, attr_train)
    for source, result in searches.items():
        for entry in result.trace.entries:
            if entry.discarded:
                continue
            if source == "adv":
                model = AdversarialRegressor(
                    config.adv.with_params(seed=stage_seed(config.seed, "adv"), **entry.params)
                ).fit(X_train, train.labels, protected=attr_train)
                yield source, entry.index, entry.params, model.predict(X_test)
            else:
                columns = list(dataset.views[source])
                model = fit_prepared(KelmRegressor(C=entry.params["C"]), X_train[:, columns], prepared, attr_train)
                yield source, entry.index, entry.params, model.predict(X_test[:, columns])


def run_experiment(
        config: ExperimentConfig,
        store: Optional[ArtifactStore] = None,
        threads: int = 1,
        dataset: Optional[Dataset] = None,
) -> ExperimentResult:
    """Run one experiment; identical configs give byte-identical report JSON.

    ``dataset`` overrides the configured data source.
    """
    config.validate()
    logger.info(f"Running method '{config.method}' protected by '{config.protected}' (seed {config.seed})")

    with _stage("data"):
        if dataset is None:
            dataset = load_dataset(config)
        train_idx, test_idx = group_holdout_split(dataset.group_ids, config.eval.test_fraction,
                                                  stage_seed(config.seed, "split"))
        train, test = dataset.take(train_idx), dataset.take(test_idx)
        X_train, X_test, _ = minmax_fit_transform(train.features, test.features)
        attr_train = train.protected_attr(config.protected)
        logger.info(f"Split {dataset.n} rows into {train.n} train / {test.n} test")

    with _stage("folds"):
        plan = group_kfold(train.group_ids, config.tuning.k, stage_seed(config.seed, "folds"))

    if config.method == "adv":
        predictions, selected, searches = _adversarial_path(config, train, X_train, X_test, attr_train,
                                                            plan, threads, store)
    else:
        predictions, selected, searches = _stacked_path(config, dataset, train, X_train, X_test, attr_train,
                                                        plan, threads, store)

    with _stage("evaluate"):
        attrs = {selector: test.protected_attr(selector) for selector in config.selectors()}
        baseline = float(np.mean([
            constant_baseline_maa(train.labels[:, j], test.labels[:, j]) for j in range(test.n_labels)
        ]))
        sp_seed = stage_seed(config.seed, "sp")
        report = build_report(
            test.labels, predictions, attrs, test.label_names, k=config.eval.k_nn, seed=sp_seed,
            metadata={
                "method": config.method,
                "protected": config.protected,
                "n_train": train.n,
                "n_test": test.n,
                "baseline_maa": baseline,
                "selected": selected,
            },
        )
        ground_truth = ground_truth_bias(test.labels, attrs, test.label_names, k=config.eval.k_nn, seed=sp_seed)

    scatter: List[ScatterPoint] = []
    if config.eval.scatter:
        with _stage("scatter"):
            for source, index, params, candidate_predictions in _candidate_predictions(
                    config, dataset, train, X_train, X_test, attr_train, searches):
                scatter.append(_scatter_point(source, index, params, candidate_predictions, test, attrs,
                                              baseline, config.eval.competent_p))

    result = ExperimentResult(
        config=config,
        report=report,
        ground_truth=ground_truth,
        baseline_maa=baseline,
        selected=selected,
        scatter=scatter,
        predictions=predictions,
        test_indices=test_idx,
    )

    if store is not None:
        with _stage("artifacts"):
            store.store_json("config.json", config.to_dict())
            store.store_json("report.json", result.to_dict())
            store.store_json("split.json", {"train": train.sample_ids.tolist(), "test": test.sample_ids.tolist()})
            for source, search_result in searches.items():
                store.store_text(f"tuning/{source}_trace.csv", search_result.trace.to_csv())
            store.store_text("predictions.csv", _predictions_csv(test, predictions))
    return result


def _predictions_csv(test: Dataset, predictions: np.ndarray) -> str:
    columns: Dict[str, List[str]] = {"id": test.sample_ids.tolist()}
    for j, name in enumerate(test.label_names):
        columns[name] = [serialization.format_number(v) for v in predictions[:, j]]
    buffer = io.StringIO()
    pd.DataFrame(columns).to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


def _summary_rows(method: str, trained_on: str, result: ExperimentResult) -> List[Dict[str, Any]]:
    rows = []
    for selector in result.report.attributes:
        labels = result.report.labels.values()
        correlations = [
            r for m in labels for r in m.pcc_per_category.get(selector, {}).values() if r.defined
        ]
        rows.append({
            "method": method,
            "trained_on": trained_on if method != "orig" else "-",
            "evaluated_on": selector,
            "mean_maa": result.report.mean_maa(),
            "mean_ea": float(np.mean([m.ea_aggregate[selector] for m in labels])),
            "max_abs_pcc": max((abs(r.r) for r in correlations), default=float("nan")),
            "min_pcc_p": min((r.p_value for r in correlations), default=float("nan")),
            "mean_sp": float(np.mean([m.sp_per_attr[selector] for m in labels])),
        })
    return rows


def run_grid(
        config: ExperimentConfig,
        store: Optional[ArtifactStore] = None,
        threads: int = 1,
        selectors: Optional[Sequence[str]] = None,
) -> Dict[Tuple[str, str], ExperimentResult]:
    """Run ``orig`` plus every (mitigation, selector) setup on the same data and split."""
    config.validate()
    selectors = list(selectors or config.selectors())
    with _stage("data"):
        dataset = load_dataset(config)

    results: Dict[Tuple[str, str], ExperimentResult] = {}
    rows: List[Dict[str, Any]] = []
    for method, selector in experiment_grid(selectors):
        setup = config.with_overrides(method=method, protected=selector, evaluate=tuple(selectors))
        sub_store = None
        if store is not None:
            sub_store = ArtifactStore(store.path(f"{method}_{selector.replace('*', 'x')}"))
        result = run_experiment(setup, sub_store, threads, dataset=dataset)
        results[(method, selector)] = result
        rows.extend(_summary_rows(method, selector, result))

    if store is not None:
        with _stage("artifacts"):
            store.store_json("summary.json", rows)
            frame = pd.DataFrame(rows)
            for column in ("mean_maa", "mean_ea", "max_abs_pcc", "min_pcc_p", "mean_sp"):
                frame[column] = [serialization.format_number(v) for v in frame[column]]
            buffer = io.StringIO()
            frame.to_csv(buffer, index=False, lineterminator="\n")
            store.store_text("summary.csv", buffer.getvalue())
    return results
