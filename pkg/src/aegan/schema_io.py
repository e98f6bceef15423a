"""CSV ingestion, schema declaration/inference, stratified splitting and JSON persistence."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from .exceptions import (
    DataError,
    DegenerateColumnError,
    SchemaError,
    StratificationError,
    UnknownCategoryError,
)

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"
KINDS = (CONTINUOUS, CATEGORICAL)

DEFAULT_CATEGORICAL_THRESHOLD = 20


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str
    categories: tuple[str, ...] | None = None

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise SchemaError("column names must be non-empty strings")
        if self.kind not in KINDS:
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == CATEGORICAL:
            if self.categories is None:
                raise SchemaError(f"categorical column {self.name!r} needs categories")
            cats = tuple(str(c) for c in self.categories)
            if len(set(cats)) != len(cats):
                raise SchemaError(f"column {self.name!r}: duplicate categories")
            if len(cats) < 2:
                raise DegenerateColumnError(
                    f"categorical column {self.name!r} has fewer than 2 categories"
                )
            object.__setattr__(self, "categories", cats)
        elif self.categories is not None:
            raise SchemaError(f"continuous column {self.name!r} cannot have categories")

    @property
    def is_continuous(self) -> bool:
        return self.kind == CONTINUOUS

    def to_dict(self) -> dict:
        d = {"name": self.name, "kind": self.kind}
        if self.categories is not None:
            d["categories"] = list(self.categories)
        return d


@dataclass(frozen=True)
class TableSchema:
    columns: tuple[ColumnSpec, ...]
    target: str

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("column names must be unique")
        if self.target not in names:
            raise SchemaError(f"target {self.target!r} is not a column")
        if self[self.target].kind != CATEGORICAL:
            raise SchemaError(f"target {self.target!r} must be categorical")

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def __getitem__(self, name: str) -> ColumnSpec:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    def __len__(self):
        return len(self.columns)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def reorder(self, order: Sequence[str]) -> "TableSchema":
        """Return the same schema with columns permuted to ``order``."""
        if sorted(order) != sorted(self.names) or len(set(order)) != len(order):
            raise SchemaError("order must be a permutation of the schema columns")
        return TableSchema(tuple(self[n] for n in order), self.target)

    def to_dict(self) -> dict:
        return {"columns": [c.to_dict() for c in self.columns], "target": self.target}

    @classmethod
    def from_dict(cls, d: dict) -> "TableSchema":
        try:
            cols = tuple(
                ColumnSpec(c["name"], c["kind"], tuple(c["categories"]) if "categories" in c else None)
                for c in d["columns"]
            )
            return cls(cols, d["target"])
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed schema document: {exc}") from exc


@dataclass
class RawTable:
    """A validated table: continuous columns as float64, categoricals as str.

    ``frame`` always has exactly the schema's columns, in schema order.
    """

    schema: TableSchema
    frame: pd.DataFrame = field(repr=False)

    def __post_init__(self):
        self.frame = validate_frame(self.frame, self.schema)

    @classmethod
    def from_rows(cls, schema: TableSchema, rows: Iterable[Sequence]) -> "RawTable":
        rows = [list(r) for r in rows]
        for i, r in enumerate(rows):
            if len(r) != len(schema):
                raise DataError(f"row {i} has {len(r)} cells, expected {len(schema)}", row=i)
        frame = pd.DataFrame(rows, columns=schema.names) if rows else pd.DataFrame(columns=schema.names)
        return cls(schema, frame)

    @property
    def rows(self) -> list[list]:
        return self.frame.values.tolist()

    def __len__(self):
        return len(self.frame)

    def reorder(self, order: Sequence[str]) -> "RawTable":
        return RawTable(self.schema.reorder(order), self.frame[list(order)])

    def take(self, indices) -> "RawTable":
        return RawTable(self.schema, self.frame.iloc[np.asarray(indices, dtype=int)].reset_index(drop=True))


def validate_frame(frame: pd.DataFrame, schema: TableSchema) -> pd.DataFrame:
    """Coerce ``frame`` to schema order and dtypes, raising on any violation."""
    missing = [n for n in schema.names if n not in frame.columns]
    if missing:
        raise DataError(f"missing columns: {missing}")
    out = {}
    for spec in schema.columns:
        col = frame[spec.name]
        if spec.is_continuous:
            values = pd.to_numeric(col, errors="coerce").to_numpy(dtype=float)
            bad = np.flatnonzero(~np.isfinite(values))
            if bad.size:
                i = int(bad[0])
                raise DataError(
                    f"column {spec.name!r} row {i}: non-numeric or missing value {col.iloc[i]!r}",
                    column=spec.name,
                    row=i,
                )
            out[spec.name] = values
        else:
            if col.isna().any():
                i = int(np.flatnonzero(col.isna().to_numpy())[0])
                raise DataError(f"column {spec.name!r} row {i}: missing value", column=spec.name, row=i)
            tokens = col.map(_token)
            vocab = set(spec.categories)
            unknown = ~tokens.isin(vocab)
            if unknown.any():
                i = int(np.flatnonzero(unknown.to_numpy())[0])
                raise UnknownCategoryError(
                    f"column {spec.name!r} row {i}: unknown category {tokens.iloc[i]!r}",
                    column=spec.name,
                    row=i,
                )
            out[spec.name] = tokens.to_numpy(dtype=object)
    return pd.DataFrame(out, columns=schema.names)


def _token(value) -> str:
    # integral floats coming from pandas must match vocabulary tokens like "1"
    if isinstance(value, (float, np.floating)) and float(value).is_integer():
        return str(int(value))
    return str(value)


def _read_cells(path) -> tuple[list[str], list[list[str]]]:
    if not os.path.exists(path):
        raise DataError(f"file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = [r for r in reader if r]
    for i, r in enumerate(rows):
        if len(r) != len(header):
            raise DataError(f"{path}: row {i} has {len(r)} cells, expected {len(header)}", row=i)
    return header, rows


def load_csv(path, schema: TableSchema) -> RawTable:
    header, rows = _read_cells(path)
    if sorted(header) != sorted(schema.names) or len(set(header)) != len(header):
        raise DataError(f"{path}: header {header} does not match schema columns {schema.names}")
    if not rows:
        raise DataError(f"{path}: table has no rows")
    frame = pd.DataFrame(rows, columns=header)
    for spec in schema.columns:
        if spec.is_continuous:
            continue
        blank = frame[spec.name] == ""
        if blank.any():
            i = int(np.flatnonzero(blank.to_numpy())[0])
            raise DataError(f"column {spec.name!r} row {i}: missing value", column=spec.name, row=i)
    return RawTable(schema, frame[schema.names])


def write_csv(table: RawTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(table.schema.names)
        cont = [s.is_continuous for s in table.schema.columns]
        for row in table.frame.itertuples(index=False):
            writer.writerow([repr(float(v)) if c else v for v, c in zip(row, cont)])


def _is_number(token: str) -> bool:
    try:
        return math.isfinite(float(token))
    except ValueError:
        return False


def infer_schema(path, target: str, categorical_threshold: int = DEFAULT_CATEGORICAL_THRESHOLD) -> TableSchema:
    """Guess column kinds from a CSV file.

    A column is continuous when every cell parses as a finite number and it has
    more than ``categorical_threshold`` distinct values. Everything else is
    categorical with its vocabulary in first-appearance order. The target is
    always categorical.
    """
    header, rows = _read_cells(path)
    if target not in header:
        raise SchemaError(f"target {target!r} not found in {header}")
    specs = []
    for j, name in enumerate(header):
        cells = [r[j] for r in rows]
        distinct = list(dict.fromkeys(cells))
        if len(distinct) < 2:
            raise DegenerateColumnError(f"column {name!r} has a single distinct value")
        if "" in distinct:
            raise DataError(f"column {name!r}: missing values are not supported", column=name)
        numeric = all(_is_number(c) for c in distinct)
        if name != target and numeric and len(distinct) > categorical_threshold:
            specs.append(ColumnSpec(name, CONTINUOUS))
        else:
            specs.append(ColumnSpec(name, CATEGORICAL, tuple(distinct)))
    return TableSchema(tuple(specs), target)


def split(table: RawTable, test_fraction: float, seed: int) -> tuple[RawTable, RawTable]:
    """Stratified train/test split.

    The training part has ``ceil(n * (1 - test_fraction))`` rows. Each target
    class contributes ``floor(n_c * f)`` test rows, and the leftover test slots
    go to the classes with the largest fractional remainders.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    n = len(table)
    if n == 0:
        raise DataError("cannot split an empty table")
    labels = table.frame[table.schema.target].to_numpy()
    classes = [c for c in table.schema[table.schema.target].categories if (labels == c).any()]
    groups = {c: np.flatnonzero(labels == c) for c in classes}
    singletons = [c for c, idx in groups.items() if len(idx) < 2]
    if singletons:
        raise StratificationError(f"target classes with a single row cannot be stratified: {singletons}")

    n_test = n - math.ceil(n * (1.0 - test_fraction) - 1e-9)
    exact = {c: len(idx) * test_fraction for c, idx in groups.items()}
    take = {c: math.floor(v + 1e-9) for c, v in exact.items()}
    leftover = n_test - sum(take.values())
    by_remainder = sorted(classes, key=lambda c: (-(exact[c] - take[c]), classes.index(c)))
    for c in by_remainder[: max(leftover, 0)]:
        take[c] += 1

    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for c in classes:
        idx = rng.permutation(groups[c])
        test_idx.append(idx[: take[c]])
        train_idx.append(idx[take[c]:])
    train_idx = np.sort(np.concatenate(train_idx))
    test_idx = np.sort(np.concatenate(test_idx))
    return table.take(train_idx), table.take(test_idx)


def save_schema(schema: TableSchema, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schema.to_dict(), fh, indent=2)
        fh.write("\n")


def load_schema(path) -> TableSchema:
    if not os.path.exists(path):
        raise SchemaError(f"schema file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        return TableSchema.from_dict(json.load(fh))


def save_report(report, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(report.to_json())


def load_report(path):
    from .report import EvalReport

    with open(path, encoding="utf-8") as fh:
        return EvalReport.from_json(fh.read())


def save_order(order: Sequence[str], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(order) + "\n")


def load_order(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]
