"""Column orders: correlation-centred feature sorting, by-type and by-correlation orders.

Also computes the square layout a CNN-style synthesizer would reshape an
encoded row into, and how sparse that square is.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .association import AssociationMatrix, association_matrix
from .encoding import EncoderState, fit_encoder
from .exceptions import SchemaError
from .schema_io import RawTable, TableSchema

METHODS = ("original", "by_type", "by_correlation", "algorithm1")


@dataclass(frozen=True)
class ColumnOrder:
    order: tuple[str, ...]
    method: str
    provenance: str = ""

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(self.order))
        if len(set(self.order)) != len(self.order):
            raise SchemaError("column order contains duplicates")

    def __iter__(self):
        return iter(self.order)

    def __len__(self):
        return len(self.order)

    def apply(self, table: RawTable) -> RawTable:
        return table.reorder(self.order)


@dataclass
class SortTrace:
    """Bookkeeping from one run of the feature sorting algorithm."""

    order: list[str]
    c_left: int = 0
    c_right: int = 0
    seed_pair: tuple[str, str] | None = None
    insertions: list[tuple[str, tuple[str, ...], int]] = field(default_factory=list)


def assoc_digest(assoc: AssociationMatrix) -> str:
    h = hashlib.sha256()
    h.update("\x1f".join(assoc.labels).encode())
    h.update(np.round(np.asarray(assoc.values, dtype=float), 12).tobytes())
    return h.hexdigest()[:16]


def _check_cover(schema: TableSchema, assoc: AssociationMatrix):
    missing = [n for n in schema.names if n not in assoc.labels]
    if missing:
        raise SchemaError(f"association matrix lacks features {missing}")


def feature_sort(schema: TableSchema, assoc: AssociationMatrix, widths: Mapping[str, int]) -> SortTrace:
    _check_cover(schema, assoc)
    names = schema.names
    missing = [n for n in names if n not in widths]
    if missing:
        raise SchemaError(f"encoded width missing for features {missing}")
    if any(widths[n] <= 0 for n in names):
        raise SchemaError("encoded widths must be positive")
    if len(names) == 1:
        return SortTrace(list(names))

    pos = {n: i for i, n in enumerate(names)}
    pairs = []
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            v = abs(assoc[a, b])
            pairs.append((-v, tuple(sorted((a, b))), (a, b)))
    # largest |association| first; equal values by lexicographic pair names
    pairs.sort(key=lambda p: (p[0], p[1]))

    trace = SortTrace([])
    placed: set[str] = set()
    for _, _, (x, y) in pairs:
        if len(placed) == len(names):
            break
        new = tuple(f for f in (x, y) if f not in placed)
        c = sum(widths[f] for f in new)
        if not placed:
            trace.order = [x, y]
            trace.seed_pair = (x, y)
        elif not new:
            continue
        elif trace.c_right < trace.c_left:
            trace.order.extend(new)
            trace.c_right += c
            trace.insertions.append(("right", new, c))
        else:
            trace.order[:0] = new
            trace.c_left += c
            trace.insertions.append(("left", new, c))
        placed.update(new)
    assert sorted(trace.order, key=pos.get) == names
    return trace


def sort_features(schema: TableSchema, assoc: AssociationMatrix, widths: Mapping[str, int]) -> ColumnOrder:
    """Group strongly associated features in the middle of the encoded row.

    The strongest pair seeds the order; each later pair's unplaced members go
    to whichever side currently holds fewer encoded columns (the left side on
    a tie), so the seed stays centred after encoding.
    """
    trace = feature_sort(schema, assoc, widths)
    return ColumnOrder(trace.order, "algorithm1", assoc_digest(assoc))


def original_order(schema: TableSchema) -> ColumnOrder:
    return ColumnOrder(schema.names, "original")


def order_by_type(schema: TableSchema) -> ColumnOrder:
    cont = [c.name for c in schema.columns if c.is_continuous]
    cat = [c.name for c in schema.columns if not c.is_continuous]
    return ColumnOrder(cont + cat, "by_type")


def order_by_correlation(schema: TableSchema, assoc: AssociationMatrix) -> ColumnOrder:
    """Descending by each feature's strongest |association| with any other feature."""
    _check_cover(schema, assoc)
    names = schema.names
    a = np.abs(assoc.reorder(names).values).astype(float)
    np.fill_diagonal(a, -np.inf)
    score = a.max(axis=1) if len(names) > 1 else np.zeros(1)
    idx = sorted(range(len(names)), key=lambda i: (-score[i], i))
    return ColumnOrder([names[i] for i in idx], "by_correlation", assoc_digest(assoc))


def make_order(method: str, table: RawTable, widths: Mapping[str, int] | None = None,
               assoc: AssociationMatrix | None = None, encoding: str = "full", seed: int = 0) -> ColumnOrder:
    """Build any of the supported orders for ``table``."""
    schema = table.schema
    if method == "original":
        return original_order(schema)
    if method in ("by_type", "type"):
        return order_by_type(schema)
    if assoc is None:
        assoc = association_matrix(table)
    if method in ("by_correlation", "correlation"):
        return order_by_correlation(schema, assoc)
    if method == "algorithm1":
        if widths is None:
            widths = fit_encoder(table, encoding, seed=seed).widths
        return sort_features(schema, assoc, widths)
    raise ValueError(f"unknown order method {method!r}; expected one of {METHODS}")


@dataclass(frozen=True)
class SquareLayout:
    side: int
    cell_of_feature: tuple[tuple[int, int], ...]
    pad_count: int


def square_layout(total_width: int, side: int | None = None) -> SquareLayout:
    """Row-major placement of an encoded row in the smallest square that fits it.

    ``side`` may force a larger square, e.g. to match a fixed network input.
    """
    if total_width < 1:
        raise ValueError("total_width must be >= 1")
    min_side = math.isqrt(total_width - 1) + 1
    if side is None:
        side = min_side
    elif side < min_side:
        raise ValueError(f"side {side} too small for width {total_width}")
    cells = tuple(divmod(i, side) for i in range(total_width))
    return SquareLayout(side, cells, side * side - total_width)


def nonzeros_per_row(state: EncoderState) -> int:
    return sum(2 if t.kind == "msn" else 1 for t in state.transforms)


def sparsity_report(state: EncoderState, layout: SquareLayout) -> dict:
    nnz = nonzeros_per_row(state)
    cells = layout.side * layout.side
    kinds = [t.kind for t in state.transforms]
    return {
        "total_width": state.total_width,
        "side": layout.side,
        "pad_count": layout.pad_count,
        "cells": cells,
        "nonzeros_per_row": nnz,
        "zero_fraction": 1.0 - nnz / cells,
        "n_msn": kinds.count("msn"),
        "n_onehot": kinds.count("onehot"),
        "n_scalar": kinds.count("minmax") + kinds.count("label"),
    }


class FeatureSorter(TransformerMixin, BaseEstimator):
    """Learns a column order from data and reorders DataFrames to it.

    ``method`` is one of ``original``, ``by_type``, ``by_correlation`` or
    ``algorithm1``. For ``algorithm1`` the per-feature encoded widths come from
    fitting an encoder with ``encoding`` on the same data.
    """

    def __init__(self, schema=None, method="algorithm1", encoding="full", seed=0):
        self.schema = schema
        self.method = method
        self.encoding = encoding
        self.seed = seed

    def fit(self, X, y=None):
        table = X if isinstance(X, RawTable) else RawTable(self.schema, pd.DataFrame(X))
        self.order_ = make_order(self.method, table, encoding=self.encoding, seed=self.seed)
        self.n_features_in_ = len(table.schema)
        return self

    def transform(self, X):
        check_is_fitted(self, "order_")
        if isinstance(X, RawTable):
            return X.reorder(self.order_.order)
        return pd.DataFrame(X)[list(self.order_.order)]

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "order_")
        return np.asarray(self.order_.order, dtype=object)
