from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nidspipe.errors import DataError
from nidspipe.evaluate import (ConfusionMatrix, RocCurve, accuracy, auc, confusion,
                               detection_rate, false_positive_rate, metrics_summary, roc_curve)

from oracles import metric_fractions, pairwise_auc


def test_confusion_cells():
    assert confusion([1, 1, 0, 0], [1, 1, 0, 0]).to_dict() == {"tp": 2, "tn": 2, "fp": 0, "fn": 0}
    assert confusion([0, 0, 1, 1], [1, 1, 0, 0]).to_dict() == {"tp": 0, "tn": 0, "fp": 2, "fn": 2}
    assert confusion([1, 0, 1], [1, 1, 0]).to_dict() == {"tp": 1, "tn": 0, "fp": 1, "fn": 1}


def test_confusion_errors():
    with pytest.raises(DataError):
        confusion([1, 0], [1])
    with pytest.raises(DataError):
        confusion([2, 0], [1, 0])


def test_metric_arithmetic():
    cm = ConfusionMatrix(tp=50, tn=40, fp=5, fn=5)
    assert accuracy(cm) == 0.9
    assert accuracy(ConfusionMatrix(3, 4, 0, 0)) == 1.0
    assert detection_rate(ConfusionMatrix(tp=9, tn=0, fp=0, fn=1)) == 0.9
    assert detection_rate(ConfusionMatrix(tp=3, tn=1, fp=1, fn=0)) == 1.0
    assert false_positive_rate(ConfusionMatrix(tp=0, tn=9, fp=1, fn=0)) == 0.1
    assert false_positive_rate(ConfusionMatrix(tp=2, tn=9, fp=0, fn=0)) == 0.0


def test_metric_undefined_denominators():
    with pytest.raises(DataError):
        accuracy(ConfusionMatrix(0, 0, 0, 0))
    with pytest.raises(DataError):
        detection_rate(ConfusionMatrix(0, 5, 1, 0))
    with pytest.raises(DataError):
        false_positive_rate(ConfusionMatrix(5, 0, 0, 1))


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 10**6), st.integers(0, 10**6), st.integers(0, 10**6))
def test_metrics_match_rational_oracle(tp, fp, tn, fn):
    if tp + fp + tn + fn == 0:
        return
    cm = ConfusionMatrix(tp=tp, tn=tn, fp=fp, fn=fn)
    acc, dr, fpr = metric_fractions(tp, fp, tn, fn)
    assert accuracy(cm) == float(acc)
    if dr is not None:
        assert detection_rate(cm) == float(dr)
    if fpr is not None:
        assert false_positive_rate(cm) == float(fpr)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1), st.integers(0, 5)),
                min_size=4, max_size=40), st.randoms(use_true_random=False))
def test_metric_permutation_invariance(rows, rnd):
    actual = [r[0] for r in rows] + [0, 1]
    predicted = [r[1] for r in rows] + [1, 0]
    scores = [float(r[2]) for r in rows] + [1.0, 2.0]
    perm = list(range(len(actual)))
    rnd.shuffle(perm)
    a = metrics_summary(predicted, actual, scores)
    b = metrics_summary([predicted[i] for i in perm], [actual[i] for i in perm],
                        [scores[i] for i in perm])
    assert a == b


# -- ROC / AUC --------------------------------------------------------------


def test_roc_hand_example():
    scores = [0.9, 0.8, 0.8, 0.6, 0.4, 0.2]
    actual = [1, 1, 0, 1, 0, 0]
    third = Fraction(1, 3)
    expected = [(0, 0), (0, third), (third, 2 * third), (third, 1), (2 * third, 1), (1, 1)]
    curve = roc_curve(scores, actual)
    assert curve.points == [(float(f), float(t)) for f, t in expected]
    assert curve.thresholds.tolist() == [np.inf, 0.9, 0.8, 0.6, 0.4, 0.2]
    assert auc(curve) == pytest.approx(5 / 6, abs=1e-12)
    assert pairwise_auc(scores, actual) == pytest.approx(5 / 6, abs=1e-12)


def test_roc_perfect_and_constant():
    curve = roc_curve([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0])
    assert (0.0, 1.0) in curve.points
    assert auc(curve) == 1.0
    flat = roc_curve([0.5] * 6, [1, 0, 1, 0, 0, 1])
    assert flat.points == [(0.0, 0.0), (1.0, 1.0)]
    assert auc(flat) == 0.5


def test_roc_single_class_rejected():
    with pytest.raises(DataError):
        roc_curve([0.1, 0.2], [1, 1])


def test_auc_rejects_malformed():
    bad = RocCurve(np.array([0.0, 0.6, 0.5, 1.0]), np.array([0.0, 0.5, 0.7, 1.0]),
                   np.zeros(4))
    with pytest.raises(DataError):
        auc(bad)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 8), st.integers(0, 1)), min_size=2, max_size=50))
def test_auc_equals_pairwise_with_ties(rows):
    scores = [float(s) for s, _ in rows]
    actual = [a for _, a in rows]
    if len(set(actual)) < 2:
        return
    curve = roc_curve(scores, actual)
    assert np.all(np.diff(curve.fpr) >= 0) and np.all(np.diff(curve.tpr) >= 0)
    assert ((curve.fpr >= 0) & (curve.fpr <= 1) & (curve.tpr >= 0) & (curve.tpr <= 1)).all()
    assert auc(curve) == pytest.approx(pairwise_auc(scores, actual), abs=1e-9)


def test_roc_csv(tmp_path):
    curve = roc_curve([0.3, 0.7, 0.5], [0, 1, 1])
    curve.write_csv(tmp_path / "roc.csv")
    lines = (tmp_path / "roc.csv").read_text().splitlines()
    assert lines[0] == "threshold,fpr,tpr"
    assert len(lines) == len(curve.fpr) + 1


def test_metrics_summary_keys():
    out = metrics_summary([1, 0, 1, 0], [1, 0, 0, 0], [0.9, 0.1, 0.6, 0.2])
    assert set(out) == {"confusion", "accuracy", "detection_rate", "false_positive_rate", "auc"}
    assert out["accuracy"] == 0.75 and out["false_positive_rate"] == pytest.approx(1 / 3)
