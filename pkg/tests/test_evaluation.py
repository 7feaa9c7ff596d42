import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import pairwise_auc
from qaboost.evaluation import (
    ConfusionMatrix,
    UndefinedMetricError,
    auc,
    auc_pairwise,
    confusion,
    kfold,
    summarize,
)


class TestAuc:
    def test_perfect(self):
        assert auc([0.1, 0.2, 0.8, 0.9], [-1, -1, 1, 1]) == 1.0

    def test_all_equal(self):
        assert auc([0.3] * 6, [1, -1, 1, -1, 1, -1]) == 0.5

    def test_hand_case(self):
        assert auc([0.1, 0.4, 0.35, 0.8], [-1, -1, 1, 1]) == 0.75

    def test_single_class(self):
        with pytest.raises(UndefinedMetricError):
            auc([0.1, 0.2], [1, 1])

    def test_bad_labels(self):
        with pytest.raises(ValueError):
            auc([0.1, 0.2], [0, 1])

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 5), st.booleans()), min_size=2, max_size=60))
    def test_matches_loop_oracle_with_ties(self, pairs):
        scores = [s / 5 for s, _ in pairs]
        labels = [1 if b else -1 for _, b in pairs]
        if len(set(labels)) < 2:
            return
        assert auc(scores, labels) == pytest.approx(pairwise_auc(scores, labels), abs=1e-12)
        assert auc_pairwise(scores, labels) == pytest.approx(pairwise_auc(scores, labels), abs=1e-12)


class TestKfold:
    def test_singletons(self):
        plan = kfold(10, 10, 0)
        assert sorted(len(plan.test_rows(f)) for f in range(10)) == [1] * 10

    def test_sizes(self):
        plan = kfold(10, 3, 0)
        assert sorted(len(plan.test_rows(f)) for f in range(3)) == [3, 3, 4]

    def test_deterministic_and_partition(self):
        a, b = kfold(57, 5, 9), kfold(57, 5, 9)
        np.testing.assert_array_equal(a.assignments, b.assignments)
        for _, train, test in a.splits():
            assert set(train).isdisjoint(test) and len(train) + len(test) == 57

    @pytest.mark.parametrize("n, k", [(3, 4), (5, 1), (5, 0)])
    def test_invalid(self, n, k):
        with pytest.raises(ValueError):
            kfold(n, k, 0)


class TestConfusion:
    def test_identity(self):
        truth = np.array([1, -1, 1, 1, -1])
        c = confusion(truth, truth)
        assert c.fn == 0 and c.fp == 0 and c.accuracy == 1.0

    def test_inverted(self):
        truth = np.array([1, -1, 1, 1, -1])
        c = confusion(-truth, truth)
        assert c.tp == 0 and c.tn == 0 and c.accuracy == 0.0

    def test_hand_case(self):
        c = confusion([1, 1, -1, -1], [1, -1, 1, -1])
        assert c == ConfusionMatrix(tp=1, fn=1, fp=1, tn=1)
        assert c.as_dict()["tp"] == 1 and c.total == 4

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            confusion([1], [1, -1])


class TestSummarize:
    def test_constant(self):
        s = summarize([2.0] * 5)
        assert s["std"] == 0 and len({v for k, v in s.items() if k != "std"}) == 1

    def test_four(self):
        s = summarize([1, 2, 3, 4])
        assert s["mean"] == 2.5 and s["median"] == 2.5

    def test_quartiles(self):
        s = summarize([1, 2, 3, 4, 5])
        assert s["q1"] == 2 and s["q3"] == 4 and s["min"] == 1 and s["max"] == 5
        assert s["std"] == pytest.approx(np.sqrt(2.5))

    def test_single_value(self):
        assert summarize([0.7])["std"] == 0.0

    def test_empty(self):
        with pytest.raises(ValueError):
            summarize([])
