"""Reversible row encoding: one-hot, mode-specific normalization, min-max and label codes.

Mode-specific normalization represents a continuous value ``x`` by the mixture
component ``k`` with the highest posterior and the scaled offset
``alpha = clip((x - mu_k) / (4 sigma_k), -1, 1)``; the encoded span is
``[alpha, onehot(k)]``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd
from scipy.special import logsumexp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import DataError, DegenerateColumnError, SchemaError, UnknownCategoryError
from .schema_io import RawTable, TableSchema

MODES = ("full", "no_msn", "plain")
DEFAULT_MAX_MODES = 10
DEFAULT_WEIGHT_THRESHOLD = 0.005
EM_TOL = 1e-4
EM_MAX_ITER = 100
EM_MAX_SAMPLES = 20_000
SCALE = 4.0


# ---------------------------------------------------------------------------
# 1-D Gaussian mixture
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GmmParams:
    weights: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    std_floor: float = 0.0

    def __post_init__(self):
        for name in ("weights", "means", "stds"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))

    @property
    def active_modes(self) -> int:
        return len(self.weights)

    def log_joint(self, x: np.ndarray) -> np.ndarray:
        """log(w_k) + log N(x | mu_k, sigma_k), shape (n, k)."""
        x = np.asarray(x, dtype=float)[:, None]
        z = (x - self.means) / self.stds
        return np.log(self.weights) - np.log(self.stds) - 0.5 * np.log(2 * np.pi) - 0.5 * z * z

    def log_likelihood(self, x) -> float:
        return float(np.mean(logsumexp(self.log_joint(x), axis=1)))

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "stds": self.stds.tolist(),
            "std_floor": self.std_floor,
        }

    @classmethod
    def from_dict(cls, d) -> "GmmParams":
        return cls(d["weights"], d["means"], d["stds"], d["std_floor"])


def _em(x: np.ndarray, k: int, floor: float, tol: float = EM_TOL, max_iter: int = EM_MAX_ITER):
    """Plain maximum-likelihood EM with quantile initialization.

    Returns ``(weights, means, stds, trace)`` where ``trace`` holds the mean
    log-likelihood before each update and after the last one.
    """
    n = len(x)
    means = np.quantile(x, (np.arange(k) + 0.5) / k)
    stds = np.full(k, max(x.std(), floor))
    weights = np.full(k, 1.0 / k)
    trace = []
    for _ in range(max_iter):
        params = GmmParams(weights, means, stds)
        lj = params.log_joint(x)
        lse = logsumexp(lj, axis=1)
        trace.append(float(lse.mean()))
        if len(trace) > 1 and trace[-1] - trace[-2] < tol:
            break
        resp = np.exp(lj - lse[:, None])
        nk = resp.sum(axis=0) + 1e-300
        weights = nk / n
        means = resp.T @ x / nk
        var = (resp * (x[:, None] - means) ** 2).sum(axis=0) / nk
        stds = np.maximum(np.sqrt(var), floor)
    else:
        trace.append(GmmParams(weights, means, stds).log_likelihood(x))
    return weights, means, stds, trace


def em_fit_1d(
    samples,
    max_modes: int = DEFAULT_MAX_MODES,
    seed: int = 0,
    weight_threshold: float = DEFAULT_WEIGHT_THRESHOLD,
    max_samples: int = EM_MAX_SAMPLES,
) -> GmmParams:
    """Fit a 1-D Gaussian mixture with at most ``max_modes`` components.

    Every component count from 1 to ``max_modes`` is fitted by EM and the one
    with the lowest BIC is kept; components lighter than ``weight_threshold``
    are then dropped and the weights renormalized. ``seed`` only drives the
    subsample used when there are more than ``max_samples`` points.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0 or not np.all(np.isfinite(x)):
        raise DataError("em_fit_1d needs finite, non-empty samples")
    if np.unique(x).size < 2:
        raise DegenerateColumnError("cannot fit a mixture to all-equal samples")
    if x.size > max_samples:
        x = np.random.default_rng(seed).choice(x, size=max_samples, replace=False)
    floor = 1e-4 * (x.std() + 1e-12)
    n = x.size

    best = None
    for k in range(1, max_modes + 1):
        w, m, s, trace = _em(x, k, floor)
        bic = -2.0 * n * trace[-1] + (3 * k - 1) * np.log(n)
        if best is None or bic < best[0]:
            best = (bic, w, m, s)
    _, w, m, s = best
    keep = w >= weight_threshold
    w = w[keep] / w[keep].sum()
    return GmmParams(w, m[keep], s[keep], floor)


# ---------------------------------------------------------------------------
# Column transforms
# ---------------------------------------------------------------------------


def _check_finite(block: np.ndarray, name: str):
    if not np.all(np.isfinite(block)):
        raise DataError(f"non-finite encoded values for column {name!r}", column=name)


@dataclass(frozen=True)
class OneHot:
    vocabulary: tuple[str, ...]
    kind = "onehot"

    @property
    def width(self) -> int:
        return len(self.vocabulary)

    def encode(self, values, name) -> np.ndarray:
        lookup = {v: i for i, v in enumerate(self.vocabulary)}
        idx = _indices(values, lookup, name)
        out = np.zeros((len(idx), self.width))
        out[np.arange(len(idx)), idx] = 1.0
        return out

    def decode(self, block, name) -> np.ndarray:
        _check_finite(block, name)
        return np.asarray(self.vocabulary, dtype=object)[np.argmax(block, axis=1)]

    def to_dict(self):
        return {"kind": self.kind, "vocabulary": list(self.vocabulary)}


@dataclass(frozen=True)
class Label:
    vocabulary: tuple[str, ...]
    kind = "label"
    width = 1

    def encode(self, values, name) -> np.ndarray:
        lookup = {v: i for i, v in enumerate(self.vocabulary)}
        idx = _indices(values, lookup, name)
        return (2.0 * idx / (len(self.vocabulary) - 1) - 1.0)[:, None]

    def decode(self, block, name) -> np.ndarray:
        _check_finite(block, name)
        v = np.clip(block[:, 0], -1.0, 1.0)
        idx = np.rint((v + 1.0) / 2.0 * (len(self.vocabulary) - 1)).astype(int)
        return np.asarray(self.vocabulary, dtype=object)[idx]

    def to_dict(self):
        return {"kind": self.kind, "vocabulary": list(self.vocabulary)}


@dataclass(frozen=True)
class MinMax:
    lo: float
    hi: float
    kind = "minmax"
    width = 1

    def encode(self, values, name) -> np.ndarray:
        x = np.asarray(values, dtype=float)
        if self.hi == self.lo:
            return np.zeros((len(x), 1))
        return np.clip(2.0 * (x - self.lo) / (self.hi - self.lo) - 1.0, -1.0, 1.0)[:, None]

    def decode(self, block, name) -> np.ndarray:
        _check_finite(block, name)
        v = np.clip(block[:, 0], -1.0, 1.0)
        return (v + 1.0) / 2.0 * (self.hi - self.lo) + self.lo

    def to_dict(self):
        return {"kind": self.kind, "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class ModeSpecific:
    gmm: GmmParams
    kind = "msn"

    @property
    def width(self) -> int:
        return 1 + self.gmm.active_modes

    def select_mode(self, x) -> np.ndarray:
        return np.argmax(self.gmm.log_joint(x), axis=1)

    def encode(self, values, name) -> np.ndarray:
        x = np.asarray(values, dtype=float)
        k = self.select_mode(x)
        alpha = np.clip((x - self.gmm.means[k]) / (SCALE * self.gmm.stds[k]), -1.0, 1.0)
        out = np.zeros((len(x), self.width))
        out[:, 0] = alpha
        out[np.arange(len(x)), 1 + k] = 1.0
        return out

    def decode(self, block, name) -> np.ndarray:
        _check_finite(block, name)
        k = np.argmax(block[:, 1:], axis=1)
        alpha = np.clip(block[:, 0], -1.0, 1.0)
        return alpha * SCALE * self.gmm.stds[k] + self.gmm.means[k]

    def to_dict(self):
        return {"kind": self.kind, "gmm": self.gmm.to_dict()}


def _indices(values, lookup, name) -> np.ndarray:
    out = np.empty(len(values), dtype=int)
    for i, v in enumerate(values):
        try:
            out[i] = lookup[v]
        except KeyError:
            raise UnknownCategoryError(f"column {name!r}: unknown category {v!r}", column=name, row=i) from None
    return out


def transform_from_dict(d):
    kind = d["kind"]
    if kind == "onehot":
        return OneHot(tuple(d["vocabulary"]))
    if kind == "label":
        return Label(tuple(d["vocabulary"]))
    if kind == "minmax":
        return MinMax(float(d["lo"]), float(d["hi"]))
    if kind == "msn":
        return ModeSpecific(GmmParams.from_dict(d["gmm"]))
    raise ValueError(f"unknown transform kind {kind!r}")


# ---------------------------------------------------------------------------
# Encoder state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EncoderState:
    schema: TableSchema
    mode: str
    transforms: tuple
    warnings: tuple[str, ...] = ()
    spans: tuple[tuple[int, int], ...] = field(init=False)

    def __post_init__(self):
        spans, offset = [], 0
        for t in self.transforms:
            spans.append((offset, t.width))
            offset += t.width
        object.__setattr__(self, "spans", tuple(spans))

    @property
    def total_width(self) -> int:
        return sum(t.width for t in self.transforms)

    @property
    def widths(self) -> dict[str, int]:
        return {c.name: t.width for c, t in zip(self.schema.columns, self.transforms)}

    def span_of(self, name: str) -> slice:
        offset, width = self.spans[self.schema.index(name)]
        return slice(offset, offset + width)

    def transform_of(self, name: str):
        return self.transforms[self.schema.index(name)]

    def feature_names(self) -> list[str]:
        out = []
        for col, t in zip(self.schema.columns, self.transforms):
            if t.kind == "msn":
                out.append(f"{col.name}.alpha")
                out.extend(f"{col.name}.mode{k}" for k in range(t.gmm.active_modes))
            elif t.kind == "onehot":
                out.extend(f"{col.name}={v}" for v in t.vocabulary)
            else:
                out.append(col.name)
        return out

    def to_dict(self) -> dict:
        return {
            "schema": self.schema.to_dict(),
            "mode": self.mode,
            "transforms": [t.to_dict() for t in self.transforms],
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, d) -> "EncoderState":
        return cls(
            TableSchema.from_dict(d["schema"]),
            d["mode"],
            tuple(transform_from_dict(t) for t in d["transforms"]),
            tuple(d.get("warnings", ())),
        )

    def to_json(self) -> str:
        # json emits repr(float), the shortest string that round-trips exactly
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "EncoderState":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class EncodedMatrix:
    values: np.ndarray
    state: EncoderState

    @property
    def shape(self):
        return self.values.shape


def fit_encoder(
    table: RawTable,
    mode: str = "full",
    max_modes: int = DEFAULT_MAX_MODES,
    seed: int = 0,
    weight_threshold: float = DEFAULT_WEIGHT_THRESHOLD,
) -> EncoderState:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if len(table) == 0:
        raise DataError("cannot fit an encoder on an empty table")
    transforms, notes = [], []
    for spec in table.schema.columns:
        col = table.frame[spec.name].to_numpy()
        if not spec.is_continuous:
            if len(spec.categories) < 2:
                raise SchemaError(f"column {spec.name!r} has a single category")
            vocab = tuple(spec.categories)
            transforms.append(Label(vocab) if mode == "plain" else OneHot(vocab))
            continue
        x = col.astype(float)
        lo, hi = float(x.min()), float(x.max())
        if mode == "full" and lo == hi:
            msg = f"column {spec.name!r} has zero variance; encoded with min-max instead of mode-specific normalization"
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            notes.append(msg)
            transforms.append(MinMax(lo, hi))
        elif mode == "full":
            transforms.append(ModeSpecific(em_fit_1d(x, max_modes, seed, weight_threshold)))
        else:
            transforms.append(MinMax(lo, hi))
    return EncoderState(table.schema, mode, tuple(transforms), tuple(notes))


def encode_table(table: RawTable, state: EncoderState) -> EncodedMatrix:
    frame = table.frame if isinstance(table, RawTable) else table
    blocks = [
        t.encode(frame[c.name].to_numpy(), c.name) for c, t in zip(state.schema.columns, state.transforms)
    ]
    values = np.hstack(blocks) if blocks else np.zeros((len(frame), 0))
    return EncodedMatrix(values, state)


def decode_table(matrix, state: EncoderState) -> RawTable:
    values = matrix.values if isinstance(matrix, EncodedMatrix) else np.asarray(matrix, dtype=float)
    if values.ndim != 2 or values.shape[1] != state.total_width:
        raise DataError(f"expected a (n, {state.total_width}) matrix, got {values.shape}")
    data = {}
    for c, t, (off, w) in zip(state.schema.columns, state.transforms, state.spans):
        data[c.name] = t.decode(values[:, off:off + w], c.name)
    return RawTable(state.schema, pd.DataFrame(data, columns=state.schema.names))


def encode_row(row: Sequence, state: EncoderState) -> np.ndarray:
    table = RawTable.from_rows(state.schema, [row])
    return encode_table(table, state).values[0]


def decode_row(vector, state: EncoderState) -> list:
    vector = np.asarray(vector, dtype=float)
    if vector.shape != (state.total_width,):
        raise DataError(f"expected a vector of length {state.total_width}, got shape {vector.shape}")
    return decode_table(vector[None, :], state).rows[0]


# ---------------------------------------------------------------------------
# Estimator facade
# ---------------------------------------------------------------------------


class TableEncoder(TransformerMixin, BaseEstimator):
    """scikit-learn transformer wrapping :func:`fit_encoder`.

    ``fit`` accepts a :class:`RawTable` or a DataFrame (then ``schema`` is
    required). ``transform`` returns the dense encoded matrix and
    ``inverse_transform`` maps it back to a DataFrame in schema order.
    """

    def __init__(self, schema=None, mode="full", max_modes=DEFAULT_MAX_MODES,
                 weight_threshold=DEFAULT_WEIGHT_THRESHOLD, seed=0):
        self.schema = schema
        self.mode = mode
        self.max_modes = max_modes
        self.weight_threshold = weight_threshold
        self.seed = seed

    def _as_table(self, X) -> RawTable:
        if isinstance(X, RawTable):
            return X
        if self.schema is None:
            raise SchemaError("a schema is required to encode a DataFrame")
        return RawTable(self.schema, pd.DataFrame(X))

    def fit(self, X, y=None):
        table = self._as_table(X)
        self.state_ = fit_encoder(table, self.mode, self.max_modes, self.seed, self.weight_threshold)
        self.n_features_in_ = len(table.schema)
        return self

    def transform(self, X):
        check_is_fitted(self, "state_")
        table = X if isinstance(X, RawTable) else RawTable(self.state_.schema, pd.DataFrame(X))
        return encode_table(table, self.state_).values

    def inverse_transform(self, X):
        check_is_fitted(self, "state_")
        return decode_table(X, self.state_).frame

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "state_")
        return np.asarray(self.state_.feature_names(), dtype=object)
