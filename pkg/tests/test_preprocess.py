import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nidspipe.data_model import replica_spec, stratified_split, synth_generate
from nidspipe.errors import DataError, SchemaMismatch
from nidspipe.preprocess import (FeatureMatrix, PreprocessPlan, _expand, apply_preprocess,
                                 drop_redundant, fit_preprocess, skewness)

from conftest import make_dataset


def skew_oracle(values):
    """Closed-form adjusted sample skewness with exact central moments."""
    xs = [Fraction(v) for v in values]
    n = len(xs)
    mean = sum(xs) / n
    m2 = sum((x - mean) ** 2 for x in xs) / n
    m3 = sum((x - mean) ** 3 for x in xs) / n
    g1 = float(m3) / float(m2) ** 1.5
    return g1 * math.sqrt(n * (n - 1)) / (n - 2)


# -- drop_redundant ---------------------------------------------------------


def test_drop_constant():
    ds = make_dataset({"a": [1.0, 2.0, 3.0], "c": [7.0, 7.0, 7.0]}, labels=["Benign"] * 3)
    out, dropped = drop_redundant(ds)
    assert dropped == [{"column": "c", "reason": "constant"}]
    assert "c" not in out.columns


def test_drop_duplicate_keeps_first():
    ds = make_dataset({"a": [1.0, 2.0, 3.0], "b": [1.0, 2.0, 3.0]}, labels=["Benign"] * 3)
    out, dropped = drop_redundant(ds)
    assert dropped == [{"column": "b", "reason": "duplicate of a"}]
    assert "a" in out.columns and "b" not in out.columns


def test_drop_identity_case():
    rng = np.random.default_rng(0)
    cols = {f"f{i}": rng.standard_normal(8) for i in range(5)}
    ds = make_dataset(cols, labels=["Benign", "UDPFlood"] * 4)
    out, dropped = drop_redundant(ds)
    assert dropped == []
    assert out.equals(ds)


def test_drop_identifier_like_and_label_kept():
    ds = make_dataset({"a": [1.0, 2.0, 1.0]}, {"id": ["x", "y", "z"]}, labels=["Benign"] * 3)
    out, dropped = drop_redundant(ds)
    assert dropped == [{"column": "id", "reason": "identifier-like"}]
    assert out.label_column == "Label"


def test_drop_all_is_error():
    ds = make_dataset({"c": [1.0, 1.0]}, labels=["Benign", "UDPFlood"])
    with pytest.raises(DataError):
        drop_redundant(ds)


# -- skewness ---------------------------------------------------------------


def test_skew_symmetric_zero():
    assert skewness([-1.0, 0.0, 1.0]) == 0.0


def test_skew_hand_oracle():
    got = skewness([0, 0, 0, 100])
    assert got > 1
    assert got == pytest.approx(skew_oracle([0, 0, 0, 100]), abs=1e-12)
    assert got == pytest.approx(2.0, abs=1e-12)


def test_skew_constant_zero():
    assert skewness([3.0] * 10) == 0.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-1000, 1000), min_size=3, max_size=30))
def test_skew_matches_oracle(values):
    if len(set(values)) == 1:
        return
    assert skewness(values) == pytest.approx(skew_oracle(values), rel=1e-9, abs=1e-9)


# -- fit / apply ------------------------------------------------------------


def test_skewed_column_logged():
    heavy = [0.0] * 30 + [100.0]
    assert skewness(heavy) > 5
    ds = make_dataset({"h": heavy, "s": np.linspace(0, 1, 31)}, labels=["Benign"] * 31)
    plan = fit_preprocess(ds, 1.0)
    assert plan.log_columns == ("h",)
    assert plan.log_minimums["h"] == 0.0


def test_categorical_vocabulary():
    ds = make_dataset({"x": [1.0, 2.0, 3.0]}, {"p": ["b", "a", "b"]}, labels=["Benign"] * 3)
    plan = fit_preprocess(ds)
    assert plan.categorical_vocabularies["p"] == ("a", "b")
    assert plan.feature_names == ("x", "p=a", "p=b")


def test_standardization_hand_values():
    ds = make_dataset({"x": [2.0, 4.0, 6.0]}, labels=["Benign"] * 3)
    plan = fit_preprocess(ds, skew_threshold=10)
    assert plan.means[0] == pytest.approx(4.0)
    assert plan.stds[0] == pytest.approx(1.63299, abs=1e-5)
    out = apply_preprocess(plan, ds).values[:, 0]
    np.testing.assert_allclose(out, np.array([-2.0, 0.0, 2.0]) / math.sqrt(8 / 3), atol=1e-12)


@pytest.fixture(scope="module")
def replica_split():
    ds = synth_generate(replica_spec(total=2000, n_numeric=8, seed=5))
    ds, _ = drop_redundant(ds)
    return stratified_split(ds, 0.2, seed=1)


def test_train_standardized(replica_split):
    train, _ = replica_split
    plan = fit_preprocess(train)
    X = apply_preprocess(plan, train).values
    std = np.asarray(plan.stds)
    live = std != 1.0
    np.testing.assert_allclose(X.mean(axis=0), 0, atol=1e-9)
    np.testing.assert_allclose(X.var(axis=0)[live], 1, atol=1e-6)


def test_unseen_category_zero_block():
    train = make_dataset({"x": [1.0, 2.0, 3.0]}, {"p": ["a", "b", "a"]}, labels=["Benign"] * 3)
    test = make_dataset({"x": [1.0]}, {"p": ["zzz"]}, labels=["Benign"])
    plan = fit_preprocess(train)
    raw = _expand((plan.source_columns, plan.imputation_values, set(plan.log_columns),
                   plan.log_minimums, plan.categorical_vocabularies), test)
    np.testing.assert_array_equal(raw[0, 1:], [0.0, 0.0])
    out = apply_preprocess(plan, test).values
    expected = (0.0 - np.asarray(plan.means[1:])) / np.asarray(plan.stds[1:])
    np.testing.assert_allclose(out[0, 1:], expected)


def test_missing_numeric_gets_train_median():
    train = make_dataset({"x": [1.0, 5.0, 9.0, 100.0]}, labels=["Benign"] * 4)
    plan = fit_preprocess(train, skew_threshold=100)
    assert plan.imputation_values["x"] == pytest.approx(7.0)
    test = make_dataset({"x": [math.nan]}, labels=["Benign"])
    got = apply_preprocess(plan, test).values[0, 0]
    assert got == pytest.approx((7.0 - plan.means[0]) / plan.stds[0])


def test_plan_independent_of_test_rows(replica_split):
    train, test = replica_split
    plan = fit_preprocess(train)
    before = plan.to_dict()
    apply_preprocess(plan, test)
    mutated = test.take(np.arange(test.n_rows)[::-1])
    apply_preprocess(plan, mutated)
    assert plan.to_dict() == before
    assert fit_preprocess(train).to_dict() == before


@settings(max_examples=20, deadline=None)
@given(st.permutations(list(range(12))))
def test_row_permutation_equivariance(perm):
    rng = np.random.default_rng(3)
    ds = make_dataset({"x": rng.exponential(size=12), "y": rng.standard_normal(12)},
                      {"p": list("aabbccaabbcc")}, labels=["Benign"] * 12)
    plan = fit_preprocess(ds)
    full = apply_preprocess(plan, ds).values
    permuted = apply_preprocess(plan, ds.take(np.array(perm))).values
    np.testing.assert_array_equal(permuted, full[perm])


def test_onehot_exactly_one(replica_split):
    train, _ = replica_split
    plan = fit_preprocess(train)
    raw = _expand((plan.source_columns, plan.imputation_values, set(plan.log_columns),
                   plan.log_minimums, plan.categorical_vocabularies), train)
    for name, vocab in plan.categorical_vocabularies.items():
        idx = [plan.feature_names.index(f"{name}={v}") for v in vocab]
        np.testing.assert_array_equal(raw[:, idx].sum(axis=1), 1.0)


def test_log_argument_at_least_one(replica_split):
    train, _ = replica_split
    plan = fit_preprocess(train, skew_threshold=0.0)
    for name in plan.log_columns:
        x = train.column(name)
        x = np.where(np.isnan(x), plan.imputation_values[name], x)
        assert (1 + x - plan.log_minimums[name] >= 1).all()


def test_plan_roundtrip_lossless(tmp_path, replica_split):
    train, _ = replica_split
    plan = fit_preprocess(train)
    path = tmp_path / "plan.json"
    plan.save(path)
    back = PreprocessPlan.load(path)
    assert back == plan
    np.testing.assert_array_equal(apply_preprocess(back, train).values,
                                  apply_preprocess(plan, train).values)


def test_schema_mismatch():
    train = make_dataset({"x": [1.0, 2.0, 3.0]}, labels=["Benign"] * 3)
    plan = fit_preprocess(train)
    with pytest.raises(SchemaMismatch):
        apply_preprocess(plan, make_dataset({"q": [1.0]}, labels=["Benign"]))
    with pytest.raises(SchemaMismatch):
        apply_preprocess(plan, make_dataset(categorical={"x": ["a"]}, labels=["Benign"]))


def test_empty_train_rejected():
    ds = make_dataset({"x": np.array([])}, labels=[])
    with pytest.raises(DataError):
        fit_preprocess(ds)


def test_feature_matrix_select_and_finite():
    fm = FeatureMatrix(np.arange(6.0).reshape(2, 3), ("a", "b", "c"))
    assert fm.select(["c", "a"]).values.tolist() == [[2.0, 0.0], [5.0, 3.0]]
    with pytest.raises(DataError):
        FeatureMatrix(np.array([[np.nan]]), ("a",))
