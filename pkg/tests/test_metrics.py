"""Test suite for accuracy and bias metrics."""

import math
from typing import Generator, Tuple

import numpy as np
import pytest
from scipy import stats

from faireg import serialization
from faireg.data import ProtectedAttr
from faireg.exceptions import CategoryError, DataError
from faireg.metrics import (
    FairnessReport,
    PccResult,
    build_report,
    constant_baseline_maa,
    digamma,
    equal_accuracy,
    ground_truth_bias,
    maa,
    most_significant,
    pcc_indicator,
    pearson_p_value,
    statistical_parity,
)

# Test fixtures

@pytest.fixture
def biased() -> Generator[Tuple[np.ndarray, np.ndarray, ProtectedAttr], None, None]:
    """Two labels and predictions that lean towards category F."""
    rng = np.random.default_rng(0)
    attr = ProtectedAttr("gender", rng.integers(0, 2, size=400), ("F", "M"))
    y = rng.uniform(size=(400, 2))
    p = y + 0.05 * rng.normal(size=(400, 2)) + 0.1 * attr.indicator("F")[:, None]
    yield y, p, attr

# Test cases

class TestAccuracy:
    """Test MAA and equal accuracy."""

    def test_maa_examples(self) -> None:
        assert maa([0.3, 0.7], [0.3, 0.7]) == 1.0
        assert maa([0.0, 1.0], [1.0, 0.0]) == 0.0
        assert maa([0.5, 0.5], [0.6, 0.4]) == pytest.approx(0.9)
        with pytest.raises(DataError):
            maa([], [])

    def test_constant_baseline(self) -> None:
        assert constant_baseline_maa([0.2, 0.4], [0.3, 0.5]) == pytest.approx(0.9)

    def test_equal_accuracy_example(self) -> None:
        attr = ProtectedAttr.from_values("g", ["a", "a", "b", "b"])
        y = np.array([0.5, 0.5, 0.5, 0.5])
        p = np.array([0.6, 0.4, 0.8, 0.2])
        assert equal_accuracy(y, p, attr, ("a", "b")) == pytest.approx(-0.2)

    def test_equal_accuracy_antisymmetric(self, biased) -> None:
        y, p, attr = biased
        forward = equal_accuracy(y[:, 0], p[:, 0], attr, ("F", "M"))
        backward = equal_accuracy(y[:, 0], p[:, 0], attr, ("M", "F"))
        assert forward + backward == pytest.approx(0.0, abs=1e-15)
        assert forward > 0

    def test_equal_accuracy_empty_category(self) -> None:
        attr = ProtectedAttr("g", np.array([0, 0]), ("a", "b"))
        with pytest.raises(CategoryError):
            equal_accuracy([0.1, 0.2], [0.1, 0.2], attr, ("a", "b"))


class TestPcc:
    """Test indicator correlation and its significance."""

    def test_most_significant(self) -> None:
        nan = float("nan")
        results = [PccResult(0.1, 0.2), PccResult(nan, nan), PccResult(-0.3, 1e-4), PccResult(0.4, 1e-4)]
        assert most_significant(results) == PccResult(0.4, 1e-4)
        assert not most_significant([PccResult(nan, nan)]).defined
        assert not most_significant([]).defined

    def test_indicator_itself(self) -> None:
        attr = ProtectedAttr.from_values("g", ["a", "b", "a", "b", "b"])
        result = pcc_indicator(attr.indicator("a"), attr, "a")
        assert result.r == pytest.approx(1.0)
        assert result.p_value == pytest.approx(0.0, abs=1e-12)

    def test_complement_has_opposite_sign(self, biased) -> None:
        _, p, attr = biased
        female = pcc_indicator(p[:, 0], attr, "F")
        male = pcc_indicator(p[:, 0], attr, "M")
        assert female.r == pytest.approx(-male.r, abs=1e-12)
        assert female.p_value == pytest.approx(male.p_value)

    def test_zero_variance_is_undefined(self) -> None:
        attr = ProtectedAttr.from_values("g", ["a", "b", "a"])
        result = pcc_indicator(np.full(3, 0.5), attr, "a")
        assert math.isnan(result.r) and math.isnan(result.p_value)
        assert not result.defined

    def test_independent_predictions(self) -> None:
        rng = np.random.default_rng(1)
        small = 0
        for _ in range(20):
            attr = ProtectedAttr("g", rng.integers(0, 2, size=5000), ("a", "b"))
            small += abs(pcc_indicator(rng.normal(size=5000), attr, "a").r) < 0.05
        assert small >= 19

    def test_significance_of_weak_correlation(self) -> None:
        assert pearson_p_value(0.07, 8000) < 1e-6
        assert math.isnan(pearson_p_value(0.5, 2))

    def test_p_value_matches_student_t(self) -> None:
        rng = np.random.default_rng(2)
        for _ in range(20):
            n = int(rng.integers(5, 10000))
            r = float(rng.uniform(-0.6, 0.6))
            df = n - 2
            t = abs(r) * math.sqrt(df / (1 - r * r))
            expected = 2 * stats.t.sf(t, df)
            assert pearson_p_value(r, n) == pytest.approx(expected, rel=1e-7, abs=1e-9)

    def test_roundtrip_with_nan(self) -> None:
        result = PccResult.from_dict(serialization.loads(serialization.dumps(PccResult(float("nan"), 0.5).to_dict())))
        assert math.isnan(result.r)
        assert result.p_value == 0.5


class TestStatisticalParity:
    """Test the kNN mutual-information estimator."""

    def test_single_category(self) -> None:
        attr = ProtectedAttr.from_values("g", ["a"] * 50)
        assert statistical_parity(np.random.default_rng(3).normal(size=50), attr) == 0.0

    def test_deterministic_class_gives_ln2(self) -> None:
        for seed in range(5):
            rng = np.random.default_rng(seed)
            codes = np.repeat([0, 1], 5000)
            p = rng.uniform(size=10000) + 10.0 * codes
            attr = ProtectedAttr("g", codes, ("a", "b"))
            assert statistical_parity(p, attr, seed=seed) == pytest.approx(math.log(2), abs=0.02)

    def test_identical_distributions(self) -> None:
        for seed in range(5):
            rng = np.random.default_rng(100 + seed)
            attr = ProtectedAttr("g", rng.integers(0, 2, size=10000), ("a", "b"))
            assert statistical_parity(rng.normal(size=10000), attr, seed=seed) <= 0.01

    def test_small_category(self) -> None:
        attr = ProtectedAttr.from_values("g", ["a"] * 20 + ["b"] * 3)
        with pytest.raises(CategoryError):
            statistical_parity(np.random.default_rng(4).normal(size=23), attr, k=3)

    def test_duplicates_stay_finite(self) -> None:
        attr = ProtectedAttr.from_values("g", ["a", "b"] * 50)
        p = np.repeat([0.1, 0.2, 0.3, 0.4], 25)
        value = statistical_parity(p, attr)
        assert np.isfinite(value) and value >= 0.0

    def test_permutation_and_shift(self, biased) -> None:
        _, p, attr = biased
        base = statistical_parity(p[:, 0], attr)
        order = np.random.default_rng(5).permutation(attr.n)
        assert statistical_parity(p[order, 0], attr.take(order)) == pytest.approx(base, abs=1e-6)
        assert statistical_parity(p[:, 0] + 3.0, attr) == pytest.approx(base, abs=1e-6)
        assert base >= 0.0

    def test_digamma_recurrence(self) -> None:
        x = np.linspace(1.0, 1e4, 5000)
        assert np.allclose(digamma(x + 1), digamma(x) + 1 / x, rtol=0, atol=1e-12)
        assert digamma(1.0) == pytest.approx(-0.5772156649015329, abs=1e-15)


class TestReport:
    """Test report assembly and serialization."""

    def test_perfect_predictions(self) -> None:
        attr = ProtectedAttr.from_values("g", ["a", "b"] * 20)
        y = np.random.default_rng(6).uniform(size=(40, 1))
        report = build_report(y, y, {"g": attr}, ["y0"])
        metrics = report.labels["y0"]
        assert metrics.maa_global == 1.0
        assert metrics.ea_pairs["g"] == {"a|b": 0.0, "b|a": 0.0}
        assert metrics.ea_aggregate["g"] == 0.0

    def test_structure(self, biased) -> None:
        y, p, attr = biased
        race = ProtectedAttr("race", np.arange(400) % 3, ("x", "y", "z"))
        report = build_report(y, p, {"gender": attr, "race": race}, ["l0", "l1"], metadata={"method": "orig"})
        assert report.n == 400
        assert report.attributes == ("gender", "race")
        metrics = report.labels["l1"]
        assert len(metrics.ea_pairs["race"]) == 6
        pairs = metrics.ea_pairs["race"]
        expected = np.mean([abs(pairs["x|y"]), abs(pairs["x|z"]), abs(pairs["y|z"])])
        assert metrics.ea_aggregate["race"] == pytest.approx(expected)
        pcc = metrics.pcc_per_category["gender"]
        assert pcc["F"].r == pytest.approx(-pcc["M"].r, abs=1e-12)
        assert pcc["F"].r > 0
        assert report.worst_pcc().p_value <= pcc["F"].p_value
        assert report.mean_maa() == pytest.approx(np.mean([m.maa_global for m in report.labels.values()]))
        metric_names = {row["metric"] for row in report.flatten_rows()}
        assert metric_names == {"maa", "maa_group", "ea", "ea_aggregate", "pcc_r", "pcc_p", "sp"}

    def test_json_roundtrip(self, biased) -> None:
        y, p, attr = biased
        report = build_report(y, p, {"gender": attr}, ["l0", "l1"])
        payload = serialization.dumps(report.to_dict())
        restored = FairnessReport.from_dict(serialization.loads(payload))
        assert serialization.dumps(restored.to_dict()) == payload

    def test_shift_invariance(self, biased) -> None:
        y, p, attr = biased
        base = build_report(y, p, {"gender": attr}, ["l0", "l1"]).labels["l0"]
        shifted = build_report(y, p + 0.5, {"gender": attr}, ["l0", "l1"]).labels["l0"]
        assert shifted.pcc_per_category["gender"]["F"].r == pytest.approx(base.pcc_per_category["gender"]["F"].r)
        assert shifted.sp_per_attr["gender"] == pytest.approx(base.sp_per_attr["gender"], abs=1e-6)
        assert shifted.maa_global != base.maa_global

    def test_shape_mismatch(self, biased) -> None:
        y, p, attr = biased
        with pytest.raises(DataError):
            build_report(y, p[:, :1], {"gender": attr}, ["l0", "l1"])

    def test_ground_truth_bias(self, biased) -> None:
        y, p, attr = biased
        bias = ground_truth_bias(p, {"gender": attr}, ["l0", "l1"])
        entry = bias["l0"]["gender"]
        assert set(entry["pcc"]) == {"F", "M"}
        assert entry["pcc"]["F"]["r"] > 0
        assert entry["sp"] >= 0.0
