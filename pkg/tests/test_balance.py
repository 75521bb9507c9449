"""Test suite for balancing sample weights."""

import numpy as np
import pytest

from faireg.data import ProtectedAttr
from faireg.exceptions import CategoryError
from faireg.fairness import balance_weights

# Test cases

class TestBalanceWeights:
    """Test per-category mass equalization."""

    def test_two_category_counts(self) -> None:
        attr = ProtectedAttr("gender", np.array([0] * 4350 + [1] * 3650), ("F", "M"))
        weights = balance_weights(attr)
        assert weights.values[0] == pytest.approx(0.91954, abs=1e-5)
        assert weights.values[-1] == pytest.approx(1.09589, abs=1e-5)
        assert weights.values.sum() == pytest.approx(8000, abs=1e-9)
        assert weights.attr_name == "gender"

    def test_three_category_mass(self) -> None:
        attr = ProtectedAttr("race", np.array([0] * 6870 + [1] * 283 + [2] * 847), ("Cau", "Asi", "Afr"))
        weights = balance_weights(attr).values
        for code in range(3):
            assert weights[attr.codes == code].sum() == pytest.approx(8000 / 3, abs=1e-9)

    def test_random_assignments(self) -> None:
        rng = np.random.default_rng(0)
        for _ in range(50):
            K = int(rng.integers(2, 6))
            codes = np.concatenate([np.arange(K), rng.integers(0, K, size=int(rng.integers(10, 200)))])
            attr = ProtectedAttr("g", codes, tuple(str(i) for i in range(K)))
            weights = balance_weights(attr).values
            assert np.all(weights > 0)
            for code in range(K):
                assert weights[codes == code].sum() == pytest.approx(attr.n / K, abs=1e-9)

    def test_balanced_groups_get_unit_weights(self) -> None:
        attr = ProtectedAttr.from_values("g", ["a", "b"] * 10)
        assert np.all(balance_weights(attr).values == 1.0)

    def test_empty_category(self) -> None:
        attr = ProtectedAttr("g", np.array([0, 0, 1]), ("a", "b", "c"))
        with pytest.raises(CategoryError):
            balance_weights(attr)
        assert balance_weights(attr.compact()).values.sum() == pytest.approx(3.0)
