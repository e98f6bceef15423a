import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import dif_corr_double_sum, pearson_by_hand

from aegan.association import (
    AssociationMatrix,
    association_matrix,
    correlation_ratio,
    cramers_v,
    cramers_v_from_table,
    dif_corr,
    pearson,
)
from aegan.exceptions import SchemaError
from aegan.schema_io import ColumnSpec, RawTable, TableSchema


def test_pearson_values():
    x = np.arange(10.0)
    assert pearson(x, 2 * x + 1) == pytest.approx(1.0)
    assert pearson(x, -x) == pytest.approx(-1.0)
    assert pearson([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-12)
    assert pearson_by_hand([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-12)


def test_pearson_degenerate():
    assert pearson([1, 1, 1], [1, 2, 3]) == 0.0


def test_cramers_v_values():
    a = ["x", "y"] * 50
    assert cramers_v(a, a) == pytest.approx(1.0)
    # exact product table: every (a, b) combination equally often
    a = ["p", "p", "q", "q"] * 5
    b = ["r", "s", "r", "s"] * 5
    assert cramers_v(a, b) == pytest.approx(0.0, abs=1e-15)
    assert cramers_v_from_table([[10, 0], [0, 10]]) == pytest.approx(1.0)
    # chi2 = 4 * (6-5)^2/5 = 0.8, n = 20
    assert cramers_v_from_table([[6, 4], [4, 6]]) == pytest.approx(math.sqrt(0.8 / 20), abs=1e-12)
    assert cramers_v_from_table([[6, 4], [4, 6]]) == pytest.approx(0.2, abs=1e-12)


def test_cramers_v_degenerate():
    assert cramers_v(["a"] * 5, ["x", "y", "x", "y", "x"]) == 0.0


def test_correlation_ratio_values():
    assert correlation_ratio(["A", "A", "B", "B"], [1, 2, 3, 4]) == pytest.approx(math.sqrt(4 / 5), abs=1e-12)
    assert correlation_ratio(["A", "A", "B", "B"], [1, 1, 5, 5]) == pytest.approx(1.0)
    assert correlation_ratio(["A", "B", "A", "B"], [1, 1, 3, 3]) == pytest.approx(0.0, abs=1e-15)
    assert correlation_ratio(["A", "B"], [2, 2]) == 0.0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("abc"), st.sampled_from("xyz")), min_size=4, max_size=40))
def test_label_renaming_invariance(pairs):
    a, b = zip(*pairs)
    ren = {"a": "zz", "b": "q", "c": "aa"}
    assert cramers_v(a, b) == pytest.approx(cramers_v([ren[v] for v in a], b), abs=1e-12)
    num = [ord(v) * 1.5 for v in b]
    assert correlation_ratio(a, num) == pytest.approx(correlation_ratio([ren[v] for v in a], num), abs=1e-12)


def _three(n=200, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=n)
    c = np.where(x + rng.normal(size=n) > 0, "hi", "lo")
    z = 0.3 * x + rng.normal(size=n)
    d = rng.choice(["u", "v", "w"], n)
    schema = TableSchema(
        (ColumnSpec("x", "continuous"), ColumnSpec("c", "categorical", ("hi", "lo")),
         ColumnSpec("z", "continuous"), ColumnSpec("d", "categorical", ("u", "v", "w"))),
        "c",
    )
    return RawTable(schema, pd.DataFrame({"x": x, "c": c, "z": z, "d": d}))


def test_matrix_dispatch_and_composition():
    t = _three()
    m = association_matrix(t)
    f = t.frame
    expected = {
        ("x", "c"): correlation_ratio(f.c, f.x),
        ("x", "z"): pearson(f.x, f.z),
        ("x", "d"): correlation_ratio(f.d, f.x),
        ("c", "z"): correlation_ratio(f.c, f.z),
        ("c", "d"): cramers_v(f.c, f.d),
        ("z", "d"): correlation_ratio(f.d, f.z),
    }
    for (a, b), v in expected.items():
        assert m[a, b] == v and m[b, a] == v
    assert np.allclose(np.diag(m.values), 1.0)
    assert np.all(np.abs(m.values) <= 1 + 1e-9)


def test_duplicate_columns():
    rng = np.random.default_rng(0)
    x = rng.normal(size=50)
    c = rng.choice(["a", "b"], 50)
    schema = TableSchema(
        (ColumnSpec("x", "continuous"), ColumnSpec("x2", "continuous"),
         ColumnSpec("c", "categorical", ("a", "b")), ColumnSpec("c2", "categorical", ("a", "b"))),
        "c",
    )
    m = association_matrix(RawTable(schema, pd.DataFrame({"x": x, "x2": x, "c": c, "c2": c})))
    assert m["x", "x2"] == pytest.approx(1.0)
    assert m["c", "c2"] == pytest.approx(1.0)


def test_matrix_row_order_invariance():
    t = _three()
    perm = np.random.default_rng(1).permutation(len(t))
    a = association_matrix(t).values
    b = association_matrix(t.take(perm)).values
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_matrix_column_permutation_equivariance():
    t = _three()
    order = ["d", "x", "z", "c"]
    a = association_matrix(t).reorder(order).values
    b = association_matrix(t.reorder(order)).values
    np.testing.assert_allclose(a, b, atol=1e-15)


def test_degenerate_pairs_are_flagged():
    schema = TableSchema((ColumnSpec("k", "continuous"), ColumnSpec("c", "categorical", ("a", "b"))), "c")
    t = RawTable(schema, pd.DataFrame({"k": [1.0] * 4, "c": ["a", "b", "a", "b"]}))
    m = association_matrix(t)
    assert m["k", "c"] == 0.0 and ("k", "c") in m.degenerate


def _mat(values, labels=("a", "b")):
    return AssociationMatrix(np.asarray(values, float), list(labels), ["continuous"] * len(labels))


def test_dif_corr_values():
    r = _mat([[1, 0.2], [0.2, 1]])
    assert dif_corr(r, r) == 0.0
    s = _mat([[1, 0.7], [0.7, 1]])
    assert dif_corr(r, s) == pytest.approx(math.sqrt(0.5**2 + 0.5**2))
    assert dif_corr(r, s) == pytest.approx(0.7071, abs=1e-4)


def test_dif_corr_label_mismatch():
    with pytest.raises(SchemaError):
        dif_corr(_mat(np.eye(2)), _mat(np.eye(2), ("a", "c")))


@settings(max_examples=30, deadline=None)
@given(f=st.integers(1, 8), seed=st.integers(0, 10_000))
def test_dif_corr_oracle_and_permutation(f, seed):
    rng = np.random.default_rng(seed)
    labels = [f"f{i}" for i in range(f)]
    R, F = rng.uniform(-1, 1, (f, f)), rng.uniform(-1, 1, (f, f))
    R, F = (R + R.T) / 2, (F + F.T) / 2
    a, b = _mat(R, labels), _mat(F, labels)
    assert dif_corr(a, b) == pytest.approx(dif_corr_double_sum(R, F), abs=1e-12)
    perm = list(rng.permutation(labels))
    assert dif_corr(a.reorder(perm), b.reorder(perm)) == pytest.approx(dif_corr(a, b), abs=1e-12)
    assert dif_corr(a, b) >= 0


def test_matrix_csv_export(tmp_path):
    m = association_matrix(_three())
    p = tmp_path / "m.csv"
    m.to_csv(str(p))
    grid = pd.read_csv(p, index_col=0)
    np.testing.assert_allclose(grid.to_numpy(), m.values, rtol=1e-15)
