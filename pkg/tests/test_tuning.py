"""Test suite for group folds, hyperparameter search and out-of-fold stacking inputs."""

import math
import threading
from typing import Generator, List, Optional, Tuple

import numpy as np
import pytest

from faireg.base import BaseRegressor
from faireg.data import ProtectedAttr
from faireg.exceptions import ConfigError, DataError, NumericError
from faireg.models import KelmRegressor
from faireg.tuning import (
    ParamRange,
    SearchSpace,
    group_holdout_split,
    group_kfold,
    holdout_objective,
    out_of_fold_predictions,
    search,
)


class RecordingRegressor(BaseRegressor):
    """Predicts the mean target and remembers which row ids it was fitted on.

    Column 0 of ``X`` carries the row id.
    """

    seen: List[np.ndarray] = []
    lock = threading.Lock()

    def __init__(self, shift: float = 0.0):
        self.shift = shift
        self.mean_: Optional[np.ndarray] = None

    def fit(self, X: np.ndarray, Y: np.ndarray, weights: Optional[np.ndarray] = None) -> 'RecordingRegressor':
        with self.lock:
            RecordingRegressor.seen.append(np.asarray(X[:, 0], dtype=int))
        self.mean_ = np.asarray(Y).mean(axis=0)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.tile(self.mean_ + self.shift, (X.shape[0], 1))

    def clone(self) -> 'RecordingRegressor':
        return RecordingRegressor(self.shift)

# Test fixtures

@pytest.fixture
def grouped() -> Generator[Tuple[np.ndarray, np.ndarray, np.ndarray, ProtectedAttr], None, None]:
    """120 rows in 24 groups of 5 with a row-id feature column."""
    rng = np.random.default_rng(0)
    group_ids = np.repeat([f"g{i:02d}" for i in range(24)], 5)
    codes = np.repeat(rng.integers(0, 2, size=24), 5)
    codes[:10] = [0] * 5 + [1] * 5
    X = np.column_stack([np.arange(120), rng.normal(size=(120, 3))])
    Y = np.column_stack([X[:, 1] + 0.1 * codes, X[:, 2]]) + 0.05 * rng.normal(size=(120, 2))
    yield X, Y, group_ids, ProtectedAttr("A", codes, ("a0", "a1"))


@pytest.fixture(autouse=True)
def reset_recorder() -> Generator[None, None, None]:
    RecordingRegressor.seen = []
    yield
    RecordingRegressor.seen = []

# Test cases

class TestGroupKfold:
    """Test group-disjoint fold plans."""

    def test_one_group_per_fold(self) -> None:
        plan = group_kfold(["a", "b", "c", "d", "e", "f"], k=6)
        assert sorted(plan.assignments.tolist()) == [0, 1, 2, 3, 4, 5]

    def test_greedy_balancing(self) -> None:
        group_ids = ["a"] * 5 + ["b"] * 5 + ["c"] * 5 + ["d", "e", "f"]
        for seed in range(5):
            assert group_kfold(group_ids, k=3, seed=seed).fold_sizes == [6, 6, 6]

    def test_groups_never_straddle_folds(self, grouped) -> None:
        _, _, group_ids, _ = grouped
        plan = group_kfold(group_ids, k=6, seed=3)
        for train, validation in plan.splits():
            assert not set(group_ids[train]) & set(group_ids[validation])
            assert len(train) + len(validation) == 120

    def test_deterministic(self, grouped) -> None:
        _, _, group_ids, _ = grouped
        assert np.array_equal(group_kfold(group_ids, 6, 1).assignments, group_kfold(group_ids, 6, 1).assignments)

    def test_errors(self) -> None:
        with pytest.raises(DataError):
            group_kfold(["a", "b"], k=3)
        with pytest.raises(ConfigError):
            group_kfold(["a", "b"], k=1)


class TestHoldoutSplit:
    """Test the group-disjoint train/test split."""

    def test_fraction_of_groups(self, grouped) -> None:
        _, _, group_ids, _ = grouped
        train, test = group_holdout_split(group_ids, 0.25, seed=2)
        assert len(set(group_ids[test])) == 6
        assert not set(group_ids[train]) & set(group_ids[test])
        assert np.all(np.diff(train) > 0) and np.all(np.diff(test) > 0)
        assert len(train) + len(test) == 120

    def test_both_sides_nonempty(self) -> None:
        train, test = group_holdout_split(["a", "a", "b"], 0.01)
        assert len(train) > 0 and len(test) > 0

    def test_errors(self) -> None:
        with pytest.raises(ConfigError):
            group_holdout_split(["a", "b"], 1.0)
        with pytest.raises(DataError):
            group_holdout_split(["a", "a"], 0.5)


class TestSearch:
    """Test the random log-uniform search."""

    def test_single_candidate(self) -> None:
        space = SearchSpace({"C": ParamRange(1e-7, 1e2)}, budget=1, seed=5)
        result = search(lambda c: [1.0], space)
        assert result.best == space.candidates()[0]
        assert len(result.trace.entries) == 1

    def test_candidates_inside_range(self) -> None:
        candidates = SearchSpace({"C": ParamRange(1e-7, 1e2)}, budget=200).candidates()
        values = np.array([c["C"] for c in candidates])
        assert values.min() >= 1e-7 and values.max() <= 1e2
        # log-uniform: about a third of the draws below 1e-4
        assert 0.2 < np.mean(values < 1e-4) < 0.47

    def test_unimodal_objective(self) -> None:
        """The optimum at C = 1e-3 is found within one decade for every seed."""
        def objective(candidate):
            return [-(math.log10(candidate["C"]) + 3.0) ** 2]

        for seed in range(20):
            result = search(objective, SearchSpace({"C": ParamRange(1e-7, 1e2)}, budget=64, seed=seed))
            assert abs(math.log10(result.best["C"]) + 3.0) <= 1.0

    def test_discarded_candidates(self) -> None:
        def objective(candidate):
            if candidate["C"] > 1.0:
                raise NumericError("ill-conditioned")
            if candidate["C"] < 1e-5:
                return [float("nan")]
            return [candidate["C"], candidate["C"]]

        result = search(objective, SearchSpace({"C": ParamRange(1e-7, 1e2)}, budget=32, seed=1))
        entries = result.trace.entries
        assert [e.index for e in entries] == list(range(32))
        kept = [e for e in entries if not e.discarded]
        assert all(1e-5 <= e.params["C"] <= 1.0 for e in kept)
        assert result.best_score == max(e.mean for e in kept)

    def test_all_discarded(self) -> None:
        with pytest.raises(NumericError):
            search(lambda c: [float("inf")], SearchSpace({"C": ParamRange(1e-3, 1e-1)}, budget=4))

    def test_earliest_wins_ties(self) -> None:
        result = search(lambda c: [0.5], SearchSpace({"C": ParamRange(1e-3, 1e-1)}, budget=8, seed=2))
        assert result.best == result.trace.entries[0].params

    def test_threads_do_not_change_result(self) -> None:
        def objective(candidate):
            return [-abs(math.log10(candidate["C"]) + 2.0)]

        space = SearchSpace({"C": ParamRange(1e-6, 1e1)}, budget=24, seed=3)
        serial = search(objective, space, threads=1)
        parallel = search(objective, space, threads=4)
        assert serial.best == parallel.best
        assert serial.trace.to_csv() == parallel.trace.to_csv()

    def test_trace_csv(self) -> None:
        space = SearchSpace({"C": ParamRange(1e-3, 1e-1)}, budget=3)
        lines = search(lambda c: [1.0, 2.0], space).trace.to_csv().splitlines()
        assert lines[0] == "candidate,C,fold_0,fold_1,mean,discarded"
        assert lines[1].endswith(",1,2,1.5,0")

    def test_invalid_space(self) -> None:
        with pytest.raises(ConfigError):
            SearchSpace({"C": ParamRange(1.0, 0.1)}).validate()
        with pytest.raises(ConfigError):
            SearchSpace({"C": ParamRange(0.0, 1.0)}).validate()
        with pytest.raises(ConfigError):
            SearchSpace({"C": ParamRange(1e-3, 1.0)}, budget=0).validate()

    def test_space_roundtrip(self) -> None:
        space = SearchSpace({"lr": ParamRange(1e-5, 1e-2), "x": ParamRange(0.0, 1.0, log=False)}, budget=9, seed=4)
        assert SearchSpace.from_dict(space.to_dict()) == space


class TestHoldoutObjective:
    """Test per-fold scoring without leakage."""

    @pytest.mark.parametrize("method", ["orig", "faireg", "baln", "fairegh"])
    def test_validation_rows_never_fitted(self, grouped, method: str) -> None:
        X, Y, group_ids, attr = grouped
        plan = group_kfold(group_ids, k=4, seed=0)
        objective = holdout_objective(method, lambda c: RecordingRegressor(c["shift"]), X, Y, attr, plan)
        scores = objective({"shift": 0.0})
        assert len(scores) == 4
        assert all(s <= 0 for s in scores)
        assert len(RecordingRegressor.seen) == 4
        for fold, seen in enumerate(RecordingRegressor.seen):
            assert not set(seen.tolist()) & set(plan.validation_indices(fold).tolist())

    def test_score_prefers_better_candidate(self, grouped) -> None:
        X, Y, group_ids, attr = grouped
        plan = group_kfold(group_ids, k=4, seed=0)
        objective = holdout_objective("orig", lambda c: RecordingRegressor(c["shift"]), X, Y, attr, plan)
        assert np.mean(objective({"shift": 0.0})) > np.mean(objective({"shift": 5.0}))

    def test_kelm_search_end_to_end(self, grouped) -> None:
        X, Y, group_ids, attr = grouped
        plan = group_kfold(group_ids, k=4, seed=0)
        objective = holdout_objective("faireg", lambda c: KelmRegressor(C=c["C"]), X[:, 1:], Y, attr, plan)
        result = search(objective, SearchSpace({"C": ParamRange(1e-4, 1e2)}, budget=8, seed=0))
        assert 1e-4 <= result.best["C"] <= 1e2
        assert np.isfinite(result.best_score)

    @pytest.mark.parametrize("method", ["faireg", "fairegh"])
    def test_category_confined_to_one_group(self, grouped, method: str) -> None:
        """A category living in a single group is unseen by the fold that holds that group out."""
        X, Y, group_ids, attr = grouped
        codes = attr.codes.copy()
        codes[:5] = 2
        rare = ProtectedAttr("A", codes, ("a0", "a1", "r"))
        plan = group_kfold(group_ids, k=4, seed=0)
        objective = holdout_objective(method, lambda c: KelmRegressor(C=c["C"]), X[:, 1:], Y, rare, plan)
        scores = objective({"C": 1.0})
        assert len(scores) == 4
        assert all(np.isfinite(s) for s in scores)
        result = search(objective, SearchSpace({"C": ParamRange(1e-3, 1e1)}, budget=4, seed=0))
        assert not any(entry.discarded for entry in result.trace.entries)

    @pytest.mark.slow
    def test_selected_c_on_wide_features(self) -> None:
        """With many weak features the search lands near the Bayes ridge penalty.

        Coefficient variance 1e-3 against unit noise makes ``C = 1e-3`` optimal
        for the linear kernel.
        """
        rng = np.random.default_rng(7)
        X = rng.normal(size=(1500, 1000))
        Y = (X @ rng.normal(scale=math.sqrt(1e-3), size=1000) + rng.normal(size=1500))[:, None]
        group_ids = np.repeat([f"g{i:03d}" for i in range(300)], 5)
        attr = ProtectedAttr("A", np.repeat(rng.integers(0, 2, size=300), 5), ("a0", "a1"))
        plan = group_kfold(group_ids, k=3, seed=0)
        objective = holdout_objective("orig", lambda c: KelmRegressor(C=c["C"]), X, Y, attr, plan)
        result = search(objective, SearchSpace({"C": ParamRange(1e-7, 1e2)}, budget=32, seed=0))
        assert 1e-4 <= result.best["C"] <= 1e-2

    def test_row_mismatch(self, grouped) -> None:
        X, Y, group_ids, attr = grouped
        plan = group_kfold(group_ids, k=4)
        with pytest.raises(DataError):
            holdout_objective("orig", lambda c: RecordingRegressor(), X[:10], Y, attr, plan)


class TestOutOfFold:
    """Test out-of-fold predictions used to train the stacker."""

    def test_each_row_predicted_by_other_folds(self, grouped) -> None:
        X, Y, group_ids, attr = grouped
        plan = group_kfold(group_ids, k=4, seed=1)
        predictions = out_of_fold_predictions(RecordingRegressor, X, Y, plan, "orig", attr)
        assert predictions.shape == (120, 2)
        for fold in range(4):
            rows = plan.validation_indices(fold)
            expected = Y[plan.train_indices(fold)].mean(axis=0)
            assert np.allclose(predictions[rows], expected)

    def test_threads_match_serial(self, grouped) -> None:
        X, Y, group_ids, attr = grouped
        plan = group_kfold(group_ids, k=4, seed=1)

        def factory():
            return KelmRegressor(C=1e-2)

        serial = out_of_fold_predictions(factory, X[:, 1:], Y, plan, "baln", attr, threads=1)
        parallel = out_of_fold_predictions(factory, X[:, 1:], Y, plan, "baln", attr, threads=3)
        assert np.allclose(serial, parallel, rtol=0, atol=1e-12)
