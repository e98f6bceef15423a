import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from conftest import loan_shaped

from aegan.association import AssociationMatrix, association_matrix
from aegan.encoding import EncoderState, GmmParams, ModeSpecific, OneHot, fit_encoder
from aegan.exceptions import SchemaError
from aegan.schema_io import ColumnSpec, RawTable, TableSchema
from aegan.sorting import (
    FeatureSorter,
    feature_sort,
    order_by_correlation,
    order_by_type,
    sort_features,
    sparsity_report,
    square_layout,
)


def _schema(names, kinds=None):
    kinds = kinds or ["continuous"] * len(names)
    cols = [
        ColumnSpec(n, k) if k == "continuous" else ColumnSpec(n, k, ("a", "b"))
        for n, k in zip(names, kinds)
    ]
    cols.append(ColumnSpec("target", "categorical", ("0", "1")))
    return TableSchema(tuple(cols), "target")


def _two_feature_schema():
    return TableSchema((ColumnSpec("A", "continuous"), ColumnSpec("B", "categorical", ("x", "y"))), "B")


def test_single_pair():
    schema = _two_feature_schema()
    assoc = AssociationMatrix(np.array([[1, 0.3], [0.3, 1]]), ["A", "B"], ["continuous", "categorical"])
    assert sort_features(schema, assoc, {"A": 1, "B": 1}).order == ("A", "B")


def _four():
    schema = TableSchema(tuple(ColumnSpec(n, "continuous") for n in "ABC") + (ColumnSpec("D", "categorical", ("p", "q")),), "D")
    assoc = AssociationMatrix(np.eye(4), list("ABCD"), ["continuous"] * 4)
    return schema, assoc


def test_hand_trace_two_pairs():
    schema, assoc = _four()
    assoc.values[0, 1] = assoc.values[1, 0] = 0.9
    assoc.values[2, 3] = assoc.values[3, 2] = 0.8
    trace = feature_sort(schema, assoc, dict.fromkeys("ABCD", 1))
    assert trace.order == ["C", "D", "A", "B"]
    assert (trace.c_left, trace.c_right) == (2, 0)


def test_hand_trace_width_balancing():
    names = list("ABEF")
    schema = TableSchema(tuple(ColumnSpec(n, "continuous") for n in "ABE") + (ColumnSpec("F", "categorical", ("p", "q")),), "F")
    m = np.eye(4)
    for (a, b), v in {("A", "B"): 0.9, ("A", "E"): 0.8, ("B", "F"): 0.7}.items():
        i, j = names.index(a), names.index(b)
        m[i, j] = m[j, i] = v
    assoc = AssociationMatrix(m, names, ["continuous"] * 4)
    trace = feature_sort(schema, assoc, {"A": 1, "B": 1, "E": 4, "F": 1})
    assert trace.order == ["E", "A", "B", "F"]
    assert (trace.c_left, trace.c_right) == (4, 1)


def test_ties_broken_lexicographically():
    names = ["c", "a", "b", "d"]
    schema = TableSchema(tuple(ColumnSpec(n, "continuous") for n in names[:3]) + (ColumnSpec("d", "categorical", ("p", "q")),), "d")
    m = np.full((4, 4), 0.5)
    np.fill_diagonal(m, 1.0)
    assoc = AssociationMatrix(m, names, ["continuous"] * 4)
    # all pairs tie, so ("a","b") is picked first and seeded in schema order
    trace = feature_sort(schema, assoc, dict.fromkeys(names, 1))
    assert trace.seed_pair == ("a", "b")


def test_missing_width():
    schema = _two_feature_schema()
    assoc = AssociationMatrix(np.eye(2), ["A", "B"], ["continuous", "categorical"])
    with pytest.raises(SchemaError):
        sort_features(schema, assoc, {"A": 1})


def _random_case(rng, f):
    names = [f"f{i}" for i in range(f)]
    kinds = ["continuous"] * (f - 1) + ["categorical"]
    cols = tuple(ColumnSpec(n, k) if k == "continuous" else ColumnSpec(n, k, ("a", "b")) for n, k in zip(names, kinds))
    schema = TableSchema(cols, names[-1])
    m = rng.uniform(-1, 1, (f, f))
    m = (m + m.T) / 2
    np.fill_diagonal(m, 1.0)
    assoc = AssociationMatrix(m, names, kinds)
    widths = {n: int(rng.integers(1, 12)) for n in names}
    return schema, assoc, widths


@settings(max_examples=100, deadline=None)
@given(f=st.integers(2, 15), seed=st.integers(0, 100_000))
def test_bijection_and_greedy_balance(f, seed):
    schema, assoc, widths = _random_case(np.random.default_rng(seed), f)
    trace = feature_sort(schema, assoc, widths)
    assert sorted(trace.order) == sorted(schema.names)
    assert len(set(trace.order)) == f
    # each insertion goes to the lighter side, so the final imbalance never
    # exceeds the largest single insertion
    biggest = max([c for _, _, c in trace.insertions], default=0)
    assert abs(trace.c_left - trace.c_right) <= biggest
    assert trace.c_left + trace.c_right + sum(widths[n] for n in trace.seed_pair) == sum(widths.values())


def test_sort_invariant_to_row_order(mixed):
    widths = fit_encoder(mixed).widths
    perm = np.random.default_rng(0).permutation(len(mixed))
    a = sort_features(mixed.schema, association_matrix(mixed), widths)
    b = sort_features(mixed.schema, association_matrix(mixed.take(perm)), widths)
    assert a.order == b.order


def test_order_by_type():
    schema = _schema(["a", "b", "c", "d"], ["categorical", "continuous", "categorical", "continuous"])
    assert order_by_type(schema).order == ("b", "d", "a", "c", "target")
    only_cont = TableSchema((ColumnSpec("p", "continuous"), ColumnSpec("q", "continuous"),
                             ColumnSpec("t", "categorical", ("0", "1"))), "t")
    assert order_by_type(only_cont).order == ("p", "q", "t")


def test_order_by_type_loan_shaped():
    table, _ = loan_shaped(n=50)
    order = order_by_type(table.schema).order
    assert order[:5] == ("age", "experience", "income", "ccavg", "mortgage")


def test_order_by_correlation():
    schema = TableSchema((ColumnSpec("A", "continuous"), ColumnSpec("B", "continuous"),
                          ColumnSpec("C", "categorical", ("0", "1"))), "C")
    m = np.eye(3)
    m[0, 1] = m[1, 0] = 0.9
    assoc = AssociationMatrix(m, ["A", "B", "C"], ["continuous"] * 3)
    assert order_by_correlation(schema, assoc).order == ("A", "B", "C")
    flat = AssociationMatrix(np.full((3, 3), 0.4), ["A", "B", "C"], ["continuous"] * 3)
    assert order_by_correlation(schema, flat).order == ("A", "B", "C")


def test_order_by_correlation_score_driven():
    names = ["A", "B", "C", "D"]
    m = np.eye(4)
    for (i, j), v in {(0, 1): 0.9, (2, 3): 0.5, (0, 2): 0.7}.items():
        m[i, j] = m[j, i] = v
    assoc = AssociationMatrix(m, names, ["continuous"] * 4)
    fwd = TableSchema(tuple(ColumnSpec(n, "continuous") for n in names[:3]) + (ColumnSpec("D", "categorical", ("0", "1")),), "D")
    rev = TableSchema(tuple(reversed(fwd.columns)), "D")
    # scores A=.9 B=.9 C=.7 D=.5: A/B tie, so compare only the score-distinct part
    a = order_by_correlation(fwd, assoc).order
    b = order_by_correlation(rev, assoc).order
    assert a[2:] == b[2:] == ("C", "D")


def test_orders_idempotent(mixed):
    assoc = association_matrix(mixed)
    for fn in (order_by_type, lambda s: order_by_correlation(s, assoc)):
        once = fn(mixed.schema).order
        twice = fn(mixed.schema.reorder(once)).order
        assert once == twice


@pytest.mark.parametrize("width,side,pad", [(16, 4, 0), (151, 13, 18), (1, 1, 0), (55, 8, 9), (17, 5, 8)])
def test_square_layout(width, side, pad):
    lay = square_layout(width)
    assert (lay.side, lay.pad_count) == (side, pad)
    assert lay.side == math.ceil(math.sqrt(width))
    assert lay.cell_of_feature[-1] == divmod(width - 1, side)


def _adult_shaped_state():
    cols, transforms = [], []
    for i in range(5):
        cols.append(ColumnSpec(f"c{i}", "continuous"))
        transforms.append(ModeSpecific(GmmParams([0.5, 0.5], [0.0, 1.0], [1.0, 1.0])))
    for i in range(9):
        cols.append(ColumnSpec(f"k{i}", "categorical", tuple("abcdefgh")))
        transforms.append(OneHot(tuple("abcdefgh")))
    return EncoderState(TableSchema(tuple(cols), "k0"), "full", tuple(transforms))


def test_sparsity_adult_shaped():
    state = _adult_shaped_state()
    rep = sparsity_report(state, square_layout(state.total_width, side=24))
    assert rep["nonzeros_per_row"] == 19
    assert rep["zero_fraction"] == pytest.approx(1 - 19 / 576)
    rep13 = sparsity_report(state, square_layout(state.total_width, side=13))
    assert rep13["zero_fraction"] == pytest.approx(1 - 19 / 169)
    assert rep13["zero_fraction"] == pytest.approx(0.888, abs=1e-3)


def test_sparsity_plain_mode_perfect_square():
    rng = np.random.default_rng(0)
    cols = tuple(ColumnSpec(f"c{i}", "continuous") for i in range(8)) + (ColumnSpec("t", "categorical", ("a", "b")),)
    frame = pd.DataFrame({f"c{i}": rng.normal(size=30) for i in range(8)})
    frame["t"] = rng.choice(["a", "b"], 30)
    state = fit_encoder(RawTable(TableSchema(cols, "t"), frame), "plain")
    rep = sparsity_report(state, square_layout(state.total_width))
    assert rep["side"] == 3 and rep["zero_fraction"] == 0.0


def test_feature_sorter_estimator(mixed):
    s = FeatureSorter(schema=mixed.schema, method="algorithm1").fit(mixed.frame)
    out = s.transform(mixed.frame)
    assert list(out.columns) == list(s.order_.order)
    assert sorted(out.columns) == sorted(mixed.schema.names)
    assert FeatureSorter(method="by_type").fit(mixed).transform(mixed).schema.names[:2] == ["age", "income"]
