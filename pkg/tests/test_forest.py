"""Test suite for the random-forest stacker."""

from typing import Generator, Tuple

import numpy as np
import pytest

from faireg.exceptions import ConfigError, DataError, NumericError
from faireg.models import ForestParams, StackingForest, forest_fit, forest_predict
from faireg.models.forest import merge

# Test fixtures

@pytest.fixture
def stack_data() -> Generator[Tuple[np.ndarray, np.ndarray], None, None]:
    """Three stacked inputs with a target equal to the first one."""
    rng = np.random.default_rng(0)
    X = rng.uniform(size=(300, 3))
    yield X, X[:, 0].copy()

# Test cases

class TestForestFit:
    """Test forest fitting and prediction."""

    def test_constant_target(self, stack_data) -> None:
        X, _ = stack_data
        model = forest_fit(X, np.full(300, 0.25), ForestParams(n_trees=10))
        assert np.allclose(forest_predict(model, X), 0.25)

    def test_single_leaf_tree(self, stack_data) -> None:
        """With min_leaf equal to n the tree cannot split and predicts one value."""
        X, y = stack_data
        model = forest_fit(X, y, ForestParams(n_trees=1, min_leaf=300))
        assert model.trees[0].get_n_leaves() == 1
        predictions = forest_predict(model, X)
        assert np.all(predictions == predictions[0])
        assert predictions[0] == pytest.approx(y.mean(), abs=0.05)

    def test_learns_first_column(self, stack_data) -> None:
        X, y = stack_data
        model = forest_fit(X, y, ForestParams(n_trees=50))
        mse = float(np.mean((forest_predict(model, X) - y) ** 2))
        assert mse <= y.var() / 10

    def test_predictions_within_training_range(self, stack_data) -> None:
        X, y = stack_data
        model = forest_fit(X, y, ForestParams(n_trees=20, seed=3))
        predictions = forest_predict(model, np.random.default_rng(1).normal(scale=5.0, size=(100, 3)))
        assert predictions.min() >= y.min() - 1e-12
        assert predictions.max() <= y.max() + 1e-12

    def test_single_tree_equals_tree_output(self, stack_data) -> None:
        X, y = stack_data
        model = forest_fit(X, y, ForestParams(n_trees=1, seed=5))
        assert np.array_equal(forest_predict(model, X), model.trees[0].predict(X))

    def test_merge_averages_forests(self, stack_data) -> None:
        X, y = stack_data
        first = forest_fit(X, y, ForestParams(n_trees=5, seed=1))
        second = forest_fit(X, y, ForestParams(n_trees=5, seed=2))
        merged = merge(first, second)
        assert merged.n_trees == 10
        expected = (forest_predict(first, X) + forest_predict(second, X)) / 2
        assert np.allclose(forest_predict(merged, X), expected, atol=1e-12)

    def test_deterministic_across_threads(self, stack_data) -> None:
        X, y = stack_data
        serial = forest_fit(X, y, ForestParams(n_trees=12, seed=9, threads=1))
        parallel = forest_fit(X, y, ForestParams(n_trees=12, seed=9, threads=3))
        again = forest_fit(X, y, ForestParams(n_trees=12, seed=9, threads=1))
        assert np.array_equal(forest_predict(serial, X), forest_predict(parallel, X))
        assert np.array_equal(forest_predict(serial, X), forest_predict(again, X))

    def test_input_errors(self, stack_data) -> None:
        X, y = stack_data
        with pytest.raises(DataError):
            forest_fit(np.empty((0, 3)), np.empty(0))
        with pytest.raises(DataError):
            forest_fit(X, y[:10])
        with pytest.raises(DataError):
            forest_fit(X[:1], y[:1], ForestParams(n_trees=1, min_leaf=2))
        with pytest.raises(DataError):
            forest_predict(forest_fit(X, y, ForestParams(n_trees=1)), X[:, :2])
        with pytest.raises(ConfigError):
            forest_fit(X, y, ForestParams(n_trees=0))

    def test_features_per_split(self) -> None:
        assert ForestParams().features_per_split(12) == 4
        assert ForestParams().features_per_split(2) == 1
        assert ForestParams(max_features=5).features_per_split(3) == 3

    @pytest.mark.slow
    def test_tree_count_stability(self) -> None:
        """Going from 100 to 1000 trees barely changes the test error."""
        rng = np.random.default_rng(2)
        X = rng.uniform(size=(600, 4))
        y = X[:, 0] + 0.5 * X[:, 1] ** 2 + 0.05 * rng.normal(size=600)
        train, test = slice(0, 400), slice(400, 600)
        errors = []
        for n_trees in (100, 1000):
            model = forest_fit(X[train], y[train], ForestParams(n_trees=n_trees, seed=4))
            errors.append(float(np.mean((forest_predict(model, X[test]) - y[test]) ** 2)))
        assert abs(errors[1] - errors[0]) < 0.05 * errors[0]


class TestStackingForest:
    """Test the per-label stacking estimator."""

    def test_one_forest_per_label(self, stack_data) -> None:
        X, y = stack_data
        Y = np.column_stack([y, X[:, 1]])
        forest = StackingForest(ForestParams(n_trees=10)).fit(X, Y)
        assert len(forest.forests_) == 2
        assert forest.predict(X).shape == (300, 2)
        assert forest.forests_[0].seed != forest.forests_[1].seed

    def test_predict_before_fit(self, stack_data) -> None:
        X, _ = stack_data
        with pytest.raises(NumericError):
            StackingForest().predict(X)

    def test_params_roundtrip(self) -> None:
        params = ForestParams(n_trees=30, max_depth=4, min_leaf=3, max_features=2, seed=7)
        assert ForestParams.from_dict(params.to_dict()) == params
