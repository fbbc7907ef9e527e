"""Metric functions, run aggregation, and the paired significance test."""

import json
import math

import numpy as np
import pytest
import scipy.stats

from morphbox.evaluate import (
    Metrics,
    RunSummary,
    compute_metrics,
    confusion_matrix,
    dominance_order,
    error_rate,
    f1_score,
    macro_f1,
    paired_t_test,
)

# Frozen against a 50-digit numerical integration of the t CDF for the
# score lists below (dof = 4); scipy.stats agrees to ~1e-13.
TT_A = (0.80, 0.82, 0.81, 0.83, 0.79)
TT_B = (0.75, 0.76, 0.74, 0.77, 0.75)
TT_T = 10.982503567738306
TT_P = 3.9058434951806136e-4


class TestConfusionMatrix:
    def test_hand_counts(self):
        cm = confusion_matrix([1, 1, 2, 2], [1, 2, 2, 2], 2)
        assert cm.tolist() == [[1, 1], [0, 2]]

    def test_row_sums_are_class_supports(self, rng):
        y_true = rng.integers(1, 5, size=200)
        # force every class to appear so labels stay contiguous
        y_true[:4] = [1, 2, 3, 4]
        y_pred = rng.integers(1, 5, size=200)
        cm = confusion_matrix(y_true, y_pred, 4)
        for s in range(1, 5):
            assert cm[s - 1].sum() == (y_true == s).sum()
        assert cm.sum() == 200

    def test_validation(self):
        with pytest.raises(ValueError):
            confusion_matrix([1, 2], [1], 2)
        with pytest.raises(ValueError):
            confusion_matrix([], [], 2)
        with pytest.raises(ValueError):
            confusion_matrix([1, 3], [1, 1], 2)
        with pytest.raises(ValueError):
            confusion_matrix([1, 0], [1, 1], 2)


class TestF1:
    def test_perfect(self):
        assert f1_score([1, 2, 3], [1, 2, 3], 3) == 1.0

    def test_all_wrong(self):
        assert f1_score([1, 1, 2, 2], [2, 2, 1, 1], 2) == 0.0

    def test_hand_example(self):
        # class 1: P=1, R=1/2, F1=2/3; class 2: P=2/3, R=1, F1=4/5
        got = macro_f1((1, 1, 2, 2), (1, 2, 2, 2))
        assert got == pytest.approx((2 / 3 + 4 / 5) / 2, rel=1e-15)

    def test_absent_class_scores_zero(self):
        # class 3 never appears on either side: F1 contribution 0
        assert f1_score([1, 2], [1, 2], 3) == pytest.approx(2 / 3)

    def test_micro_equals_accuracy(self, rng):
        for _ in range(20):
            y_true = rng.integers(1, 4, size=60)
            y_true[:3] = [1, 2, 3]
            y_pred = rng.integers(1, 4, size=60)
            micro = f1_score(y_true, y_pred, 3, average="micro")
            assert micro == pytest.approx((y_true == y_pred).mean())

    def test_average_flag_validated(self):
        with pytest.raises(ValueError):
            f1_score([1, 2], [1, 2], 2, average="weighted")

    def test_joint_permutation_invariance(self, rng):
        y_true = rng.integers(1, 4, size=80)
        y_true[:3] = [1, 2, 3]
        y_pred = rng.integers(1, 4, size=80)
        base_f1 = macro_f1(y_true, y_pred, 3)
        base_err = error_rate(y_true, y_pred)
        for _ in range(10):
            perm = rng.permutation(80)
            assert macro_f1(y_true[perm], y_pred[perm], 3) == pytest.approx(base_f1)
            assert error_rate(y_true[perm], y_pred[perm]) == pytest.approx(base_err)

    def test_relabel_bijection_invariance(self, rng):
        y_true = rng.integers(1, 4, size=80)
        y_true[:3] = [1, 2, 3]
        y_pred = rng.integers(1, 4, size=80)
        base = macro_f1(y_true, y_pred, 3)
        relabel = np.array([0, 3, 1, 2])   # 1->3, 2->1, 3->2
        assert macro_f1(relabel[y_true], relabel[y_pred], 3) == pytest.approx(base)


class TestErrorRate:
    def test_values(self):
        assert error_rate([1, 2, 3], [1, 2, 3]) == 0.0
        assert error_rate([1, 1], [2, 2]) == 100.0
        assert error_rate([1] * 8, [1, 1, 1, 1, 1, 1, 2, 2]) == 25.0

    def test_validation(self):
        with pytest.raises(ValueError):
            error_rate([1, 2], [1])
        with pytest.raises(ValueError):
            error_rate([], [])


class TestMetrics:
    def test_compute_and_serialize(self):
        m = compute_metrics([1, 1, 2, 2], [1, 2, 2, 2], 2, wall_time_seconds=0.5)
        assert m.macro_f1 == pytest.approx(11 / 15)
        assert m.misclassification_rate == 25.0
        assert m.confusion.tolist() == [[1, 1], [0, 2]]
        # error rate must equal 100 * (1 - trace/total)
        trace = np.trace(m.confusion)
        assert m.misclassification_rate == pytest.approx(
            100.0 * (1 - trace / m.confusion.sum()))
        json.dumps(m.to_dict())   # must be JSON-clean


class TestRunSummary:
    def mk(self, f1, err, wall):
        return Metrics(macro_f1=f1, misclassification_rate=err,
                       confusion=np.eye(2, dtype=np.int64), wall_time_seconds=wall)

    def test_mean_and_sample_std(self):
        rs = RunSummary(method="demo")
        rs.add(self.mk(0.8, 20.0, 1.0))
        rs.add(self.mk(0.9, 10.0, 3.0))
        s = rs.summary()
        assert s["method"] == "demo"
        assert s["n_runs"] == 2
        assert not s["single_run"]
        assert s["macro_f1_mean"] == pytest.approx(0.85)
        assert s["macro_f1_std"] == pytest.approx(0.07071067811865475)
        assert s["error_mean"] == pytest.approx(15.0)
        assert s["error_std"] == pytest.approx(7.0710678118654755)
        assert s["wall_mean"] == pytest.approx(2.0)
        assert s["wall_std"] == pytest.approx(math.sqrt(2))

    def test_single_run_flag_and_zero_std(self):
        rs = RunSummary(method="demo")
        rs.add(self.mk(0.7, 30.0, 0.2))
        s = rs.summary()
        assert s["single_run"]
        assert s["macro_f1_std"] == 0.0
        assert s["error_std"] == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            RunSummary(method="demo").summary()


class TestPairedTTest:
    def test_frozen_oracle(self):
        res = paired_t_test(TT_A, TT_B)
        assert res.dof == 4
        assert res.t == pytest.approx(TT_T, rel=1e-12)
        assert res.p_two_sided == pytest.approx(TT_P, rel=1e-10)

    def test_scipy_cross_check(self, rng):
        for _ in range(25):
            m = int(rng.integers(2, 12))
            a = rng.normal(size=m)
            b = a + rng.normal(scale=0.5, size=m)
            res = paired_t_test(a, b)
            ref = scipy.stats.ttest_rel(a, b)
            assert res.t == pytest.approx(float(ref.statistic), rel=1e-10)
            assert res.p_two_sided == pytest.approx(float(ref.pvalue), rel=1e-8)

    def test_identical_lists(self):
        res = paired_t_test([0.5, 0.6, 0.7], [0.5, 0.6, 0.7])
        assert res.t == 0.0
        assert res.p_two_sided == 1.0

    def test_constant_nonzero_difference(self):
        res = paired_t_test([2.0, 3.0, 4.0, 5.0], [1.0, 2.0, 3.0, 4.0])
        assert res.t == math.inf
        assert res.p_two_sided == 0.0
        rev = paired_t_test([1.0, 2.0, 3.0, 4.0], [2.0, 3.0, 4.0, 5.0])
        assert rev.t == -math.inf
        assert rev.p_two_sided == 0.0

    def test_antisymmetry(self, rng):
        for _ in range(15):
            a = rng.normal(size=6)
            b = rng.normal(size=6)
            fwd = paired_t_test(a, b)
            bwd = paired_t_test(b, a)
            assert fwd.t == pytest.approx(-bwd.t, rel=1e-12)
            assert fwd.p_two_sided == pytest.approx(bwd.p_two_sided, rel=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            paired_t_test([1.0], [2.0])
        with pytest.raises(ValueError):
            paired_t_test([1.0, 2.0], [1.0, 2.0, 3.0])


class TestDominanceOrder:
    def test_no_methods_rejected(self):
        with pytest.raises(ValueError):
            dominance_order([], [], alpha=0.01)

    def test_single_method_empty(self):
        assert dominance_order(["only"], [[0.8, 0.9, 0.85]], alpha=0.01) == []

    def test_identical_lists_empty(self):
        s = [0.8, 0.82, 0.81, 0.83]
        assert dominance_order(["a", "b"], [s, list(s)], alpha=0.01) == []

    def test_three_separated_transitive(self):
        a = [0.90, 0.92, 0.91, 0.93, 0.90]
        b = [0.80, 0.81, 0.83, 0.80, 0.82]
        c = [0.70, 0.71, 0.70, 0.72, 0.69]
        edges = dominance_order(["A", "B", "C"], [a, b, c], alpha=0.01)
        assert edges == [("A", "B"), ("A", "C"), ("B", "C")]

    def test_alpha_gates_edges(self):
        # weak overlapping effect: significant only at a permissive alpha
        a = [0.80, 0.84, 0.79, 0.83]
        b = [0.79, 0.82, 0.80, 0.81]
        strict = dominance_order(["a", "b"], [a, b], alpha=1e-6)
        assert strict == []

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            dominance_order(["a", "b"], [[0.8, 0.9], [0.8]], alpha=0.01)
