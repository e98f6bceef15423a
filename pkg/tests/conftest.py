import os
import sys

import numpy as np
import pandas as pd
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from aegan.schema_io import CATEGORICAL, CONTINUOUS, ColumnSpec, RawTable, TableSchema  # noqa: E402


def toy_table(n=2000, seed=0) -> RawTable:
    """Bimodal column at +-5, a column correlated with it, and a binary target driven by the first."""
    rng = np.random.default_rng(seed)
    x1 = np.where(rng.random(n) < 0.5, -5.0, 5.0) + rng.normal(0, 1, n)
    x2 = 0.5 * x1 + rng.normal(0, 1, n)
    y = np.where(x1 + rng.normal(0, 1, n) > 0, "1", "0")
    schema = TableSchema(
        (ColumnSpec("x1", CONTINUOUS), ColumnSpec("x2", CONTINUOUS), ColumnSpec("y", CATEGORICAL, ("0", "1"))),
        "y",
    )
    return RawTable(schema, pd.DataFrame({"x1": x1, "x2": x2, "y": y}))


def mixed_table(n=500, seed=0) -> RawTable:
    rng = np.random.default_rng(seed)
    age = rng.normal(40, 10, n)
    income = np.exp(rng.normal(10, 0.5, n))
    job = rng.choice(["admin", "tech", "sales"], n)
    city = rng.choice(["a", "b", "c", "d"], n)
    y = np.where(age + rng.normal(0, 5, n) > 40, "yes", "no")
    schema = TableSchema(
        (
            ColumnSpec("age", CONTINUOUS),
            ColumnSpec("job", CATEGORICAL, ("admin", "tech", "sales")),
            ColumnSpec("income", CONTINUOUS),
            ColumnSpec("city", CATEGORICAL, ("a", "b", "c", "d")),
            ColumnSpec("y", CATEGORICAL, ("no", "yes")),
        ),
        "y",
    )
    return RawTable(schema, pd.DataFrame({"age": age, "job": job, "income": income, "city": city, "y": y}))


def loan_shaped(n=3000, seed=0):
    """5 continuous and 8 categorical columns with known cardinalities."""
    rng = np.random.default_rng(seed)
    cards = {"family": 4, "education": 3, "securities": 2, "cd": 2, "online": 2, "card": 2, "zip_region": 7, "loan": 2}
    cols = [ColumnSpec(c, "continuous") for c in ("age", "experience", "income", "ccavg", "mortgage")]
    data = {
        "age": rng.normal(45, 11, n),
        "experience": rng.normal(20, 11, n),
        "income": rng.gamma(2.0, 35.0, n),
        "ccavg": rng.gamma(1.5, 1.2, n),
        "mortgage": np.where(rng.random(n) < 0.7, rng.normal(0, 1, n), rng.normal(150, 40, n)),
    }
    for name, k in cards.items():
        vocab = tuple(f"{name}{i}" for i in range(k))
        cols.append(ColumnSpec(name, "categorical", vocab))
        data[name] = rng.choice(vocab, n)
    return RawTable(TableSchema(tuple(cols), "loan"), pd.DataFrame(data)), sum(cards.values())


@pytest.fixture
def toy():
    return toy_table()


@pytest.fixture
def mixed():
    return mixed_table()


# One PASS/FAIL line per acceptance criterion, printed after the run even when
# output capture is on. Tests in test_acceptance.py record into this dict.
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_acceptance(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (passed, detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")
