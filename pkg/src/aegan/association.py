"""Mixed-type pairwise association and the correlation-matrix difference score.

The measure used for a pair depends on the column kinds: Pearson's r for two
continuous columns, Cramér's V for two categorical ones and the correlation
ratio (eta) for a mixed pair. Degenerate inputs (a constant column, a single
observed level) score 0 and are reported in ``AssociationMatrix.degenerate``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .exceptions import SchemaError
from .schema_io import CONTINUOUS, RawTable


def _pearson(x, y) -> tuple[float, bool]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("pearson needs two equal-length samples of size >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = dx @ dx
    syy = dy @ dy
    if sxx == 0.0 or syy == 0.0:
        return 0.0, True
    r = (dx @ dy) / np.sqrt(sxx * syy)
    return float(np.clip(r, -1.0, 1.0)), False


def pearson(x, y) -> float:
    """Sample Pearson correlation; 0 when either sample is constant."""
    return _pearson(x, y)[0]


def contingency(a, b) -> np.ndarray:
    return pd.crosstab(pd.Series(np.asarray(a, dtype=object)), pd.Series(np.asarray(b, dtype=object))).to_numpy(float)


def _cramers_v_table(table) -> tuple[float, bool]:
    table = np.asarray(table, dtype=float)
    table = table[table.sum(axis=1) > 0][:, table.sum(axis=0) > 0]
    r, c = table.shape
    if min(r, c) < 2:
        return 0.0, True
    n = table.sum()
    expected = np.outer(table.sum(axis=1), table.sum(axis=0)) / n
    chi2 = ((table - expected) ** 2 / expected).sum()
    v = np.sqrt(chi2 / (n * (min(r, c) - 1)))
    return float(min(v, 1.0)), False


def cramers_v_from_table(table) -> float:
    """Cramér's V of an r x c contingency table (no bias or continuity correction)."""
    return _cramers_v_table(table)[0]


def _cramers_v(a, b) -> tuple[float, bool]:
    if len(a) != len(b):
        raise ValueError("cramers_v needs equal-length samples")
    return _cramers_v_table(contingency(a, b))


def cramers_v(a, b) -> float:
    return _cramers_v(a, b)[0]


def _correlation_ratio(cat, num) -> tuple[float, bool]:
    cat = np.asarray(cat, dtype=object)
    y = np.asarray(num, dtype=float)
    if cat.shape != y.shape:
        raise ValueError("correlation_ratio needs equal-length samples")
    _, codes = np.unique(cat.astype(str), return_inverse=True)
    total = ((y - y.mean()) ** 2).sum()
    if total == 0.0 or codes.max(initial=0) < 1:
        return 0.0, True
    counts = np.bincount(codes)
    means = np.bincount(codes, weights=y) / counts
    between = (counts * (means - y.mean()) ** 2).sum()
    return float(np.sqrt(min(between / total, 1.0))), False


def correlation_ratio(cat, num) -> float:
    """Correlation ratio eta of a numeric sample given a categorical grouping."""
    return _correlation_ratio(cat, num)[0]


@dataclass
class AssociationMatrix:
    values: np.ndarray
    labels: list[str]
    kinds: list[str]
    degenerate: list[tuple[str, str]] = field(default_factory=list)

    def __getitem__(self, pair):
        i, j = (self.labels.index(p) for p in pair)
        return float(self.values[i, j])

    def reorder(self, order) -> "AssociationMatrix":
        idx = [self.labels.index(n) for n in order]
        return AssociationMatrix(
            self.values[np.ix_(idx, idx)], list(order), [self.kinds[i] for i in idx], list(self.degenerate)
        )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([""] + self.labels)
            for name, row in zip(self.labels, self.values):
                w.writerow([name] + [repr(float(v)) for v in row])


def pair_association(a, b, kind_a: str, kind_b: str) -> tuple[float, bool]:
    if kind_a == CONTINUOUS and kind_b == CONTINUOUS:
        return _pearson(a, b)
    if kind_a != CONTINUOUS and kind_b != CONTINUOUS:
        return _cramers_v(a, b)
    if kind_a == CONTINUOUS:
        return _correlation_ratio(b, a)
    return _correlation_ratio(a, b)


def association_matrix(table: RawTable) -> AssociationMatrix:
    if len(table) < 2:
        raise ValueError("association_matrix needs at least 2 rows")
    names = table.schema.names
    kinds = [c.kind for c in table.schema.columns]
    f = len(names)
    values = np.eye(f)
    degenerate = []
    cols = [table.frame[n].to_numpy() for n in names]
    for i in range(f):
        for j in range(i + 1, f):
            v, flag = pair_association(cols[i], cols[j], kinds[i], kinds[j])
            values[i, j] = values[j, i] = v
            if flag:
                degenerate.append((names[i], names[j]))
    return AssociationMatrix(values, list(names), kinds, degenerate)


def dif_corr(real: AssociationMatrix, synth: AssociationMatrix) -> float:
    """Frobenius distance over every ordered pair (i, j), both triangles included."""
    if real.labels != synth.labels or real.kinds != synth.kinds:
        raise SchemaError("association matrices have different labels or kinds")
    diff = np.asarray(real.values) - np.asarray(synth.values)
    return float(np.sqrt(np.sum(diff * diff)))
