"""Similarity and utility metrics between real and synthetic tables, and the column-order sensitivity protocol."""

from __future__ import annotations

import logging
from collections import Counter
from typing import Sequence

import numpy as np
from sklearn.tree import DecisionTreeClassifier

from .association import association_matrix, dif_corr
from .encoding import DEFAULT_MAX_MODES, encode_table, fit_encoder
from .exceptions import AeganError, SchemaError
from .report import EvalReport
from .schema_io import CONTINUOUS, RawTable, TableSchema, split
from .sorting import ColumnOrder

log = logging.getLogger(__name__)

LEARNERS = ("logreg", "tree")


# ---------------------------------------------------------------------------
# Wasserstein-1
# ---------------------------------------------------------------------------


def wd_1d(a, b, kind: str = CONTINUOUS) -> float:
    """Wasserstein-1 distance between two empirical distributions.

    Continuous samples use the L1 distance between quantile functions.
    Categorical samples use total variation, i.e. optimal transport with a 0/1
    ground metric; a category seen in only one sample keeps its own mass.
    """
    if len(a) == 0 or len(b) == 0:
        raise ValueError("wd_1d needs non-empty samples")
    if kind != CONTINUOUS:
        fa, fb = Counter(map(str, a)), Counter(map(str, b))
        na, nb = len(a), len(b)
        return 0.5 * sum(abs(fa[k] / na - fb[k] / nb) for k in fa.keys() | fb.keys())

    xa = np.sort(np.asarray(a, dtype=float))
    xb = np.sort(np.asarray(b, dtype=float))
    n, m = len(xa), len(xb)
    if n == m:
        return float(np.mean(np.abs(xa - xb)))
    grid = np.union1d(np.arange(1, n + 1) / n, np.arange(1, m + 1) / m)
    grid[-1] = 1.0
    lower = np.concatenate(([0.0], grid[:-1]))
    mid = 0.5 * (lower + grid)
    qa = xa[np.minimum((mid * n).astype(int), n - 1)]
    qb = xb[np.minimum((mid * m).astype(int), m - 1)]
    return float(np.sum(np.abs(qa - qb) * (grid - lower)))


def _aligned(real: RawTable, synth: RawTable) -> RawTable:
    if synth.schema == real.schema:
        return synth
    if set(synth.schema.names) == set(real.schema.names):
        reordered = synth.reorder(real.schema.names)
        if reordered.schema == real.schema:
            return reordered
    raise SchemaError("real and synthetic tables have different schemas")


def table_wd(real: RawTable, synth: RawTable) -> tuple[dict[str, float], float]:
    """Per-column WD on the raw (unencoded) values and their arithmetic mean."""
    synth = _aligned(real, synth)
    per = {
        c.name: wd_1d(real.frame[c.name].to_numpy(), synth.frame[c.name].to_numpy(), c.kind)
        for c in real.schema.columns
    }
    return per, float(np.mean(list(per.values())))


# ---------------------------------------------------------------------------
# ML utility
# ---------------------------------------------------------------------------


class _Features:
    """One-hot categoricals plus standardized continuous columns, fitted on the real training set."""

    def __init__(self, schema: TableSchema, train: RawTable):
        self.schema = schema
        self.cols = [c for c in schema.columns if c.name != schema.target]
        self.stats = {}
        for c in self.cols:
            if c.is_continuous:
                x = train.frame[c.name].to_numpy(dtype=float)
                sd = x.std()
                self.stats[c.name] = (x.mean(), sd if sd > 0 else 1.0)

    def __call__(self, table: RawTable) -> np.ndarray:
        blocks = []
        for c in self.cols:
            v = table.frame[c.name].to_numpy()
            if c.is_continuous:
                mu, sd = self.stats[c.name]
                blocks.append(((v.astype(float) - mu) / sd)[:, None])
            else:
                blocks.append((v[:, None] == np.asarray(c.categories, dtype=object)[None, :]).astype(float))
        return np.hstack(blocks) if blocks else np.zeros((len(table), 0))

    def labels(self, table: RawTable) -> np.ndarray:
        vocab = {v: i for i, v in enumerate(self.schema[self.schema.target].categories)}
        return np.array([vocab[v] for v in table.frame[self.schema.target]], dtype=int)


class SoftmaxRegression:
    """Multinomial logistic regression by full-batch gradient descent from zero weights."""

    def __init__(self, n_classes: int, iterations: int = 500, lr: float = 0.5, l2: float = 1e-3):
        self.n_classes = n_classes
        self.iterations = iterations
        self.lr = lr
        self.l2 = l2

    def fit(self, X, y):
        n, d = X.shape
        Xb = np.hstack([X, np.ones((n, 1))])
        Y = np.eye(self.n_classes)[y]
        W = np.zeros((d + 1, self.n_classes))
        for _ in range(self.iterations):
            z = Xb @ W
            z -= z.max(axis=1, keepdims=True)
            p = np.exp(z)
            p /= p.sum(axis=1, keepdims=True)
            grad = Xb.T @ (p - Y) / n
            grad[:-1] += self.l2 * W[:-1]
            W -= self.lr * grad
        self.coef_ = W
        return self

    def predict(self, X):
        return np.argmax(np.hstack([X, np.ones((len(X), 1))]) @ self.coef_, axis=1)


def _make_learner(name: str, n_classes: int, seed: int):
    if name == "logreg":
        return SoftmaxRegression(n_classes)
    if name == "tree":
        return DecisionTreeClassifier(criterion="entropy", max_depth=4, random_state=seed)
    raise ValueError(f"unknown learner {name!r}")


def _match_size(synth: RawTable, n: int, seed: int) -> RawTable:
    if len(synth) == n:
        return synth
    if not n / 2 <= len(synth) <= 2 * n:
        raise ValueError(f"synthetic table has {len(synth)} rows; expected within x2 of {n}")
    rng = np.random.default_rng(seed)
    return synth.take(rng.choice(len(synth), size=n, replace=len(synth) < n))


def ml_utility_diff(real_train: RawTable, real_test: RawTable, synth: RawTable, seed: int = 0,
                    learners: Sequence[str] = LEARNERS) -> dict:
    """Train each learner on real and on synthetic rows, score both on ``real_test``.

    ``utility_diff`` is the mean over learners of ``|acc_real - acc_synth|``;
    it is ``None`` when every learner had to be skipped.
    """
    schema = real_train.schema
    synth = _match_size(_aligned(real_train, synth), len(real_train), seed)
    real_test = _aligned(real_train, real_test)
    feats = _Features(schema, real_train)
    n_classes = len(schema[schema.target].categories)
    X_real, y_real = feats(real_train), feats.labels(real_train)
    X_syn, y_syn = feats(synth), feats.labels(synth)
    X_test, y_test = feats(real_test), feats.labels(real_test)

    missing = sorted(set(y_real) - set(y_syn))
    results, flags = {}, []
    for name in learners:
        if missing:
            vocab = schema[schema.target].categories
            reason = f"target classes {[vocab[i] for i in missing]} absent from synthetic training set"
            results[name] = {"skipped": reason}
            flags.append(f"{name}: {reason}")
            continue
        acc = {}
        for side, X, y in (("real", X_real, y_real), ("synth", X_syn, y_syn)):
            model = _make_learner(name, n_classes, seed).fit(X, y)
            acc[side] = float(np.mean(model.predict(X_test) == y_test))
        results[name] = {"acc_real": acc["real"], "acc_synth": acc["synth"],
                         "diff": abs(acc["real"] - acc["synth"])}
    diffs = [r["diff"] for r in results.values() if "diff" in r]
    return {
        "learners": results,
        "utility_diff": float(np.mean(diffs)) if diffs else None,
        "flags": flags,
        "seed": seed,
    }


# ---------------------------------------------------------------------------
# Column-order sensitivity
# ---------------------------------------------------------------------------


def max_diff_percent(values: Sequence[float]) -> float:
    """Relative spread ``100 * (max - min) / min`` of a metric across column orders."""
    values = [float(v) for v in values]
    if not values:
        raise ValueError("need at least one value")
    lo, hi = min(values), max(values)
    if hi == lo:
        return 0.0
    if lo <= 0:
        return float("inf")
    return 100.0 * (hi - lo) / lo


def run_pipeline(table: RawTable, cfg, encoding: str = "full", max_modes: int = DEFAULT_MAX_MODES,
                 n_synth: int | None = None) -> float:
    """Fit, encode, train and synthesize on ``table``; return the mean table WD to it."""
    from .synthesis import NetSpec, synthesize, train

    state = fit_encoder(table, encoding, max_modes, cfg.seed)
    model = train(encode_table(table, state), cfg, NetSpec.from_state(state))
    synth = synthesize(model, n_synth or len(table), cfg.seed)
    return table_wd(table, synth)[1]


def sensitivity_experiment(table: RawTable, orders: Sequence[ColumnOrder], train_cfg, repeats: int = 1,
                           seed: int = 0, encoding: str = "full", max_modes: int = DEFAULT_MAX_MODES,
                           runner=run_pipeline) -> dict:
    """Mean table WD per column order over ``repeats`` runs, and the max-diff percentage.

    Repeat ``r`` uses seed ``seed + r`` for every order, so orders differ only
    in the column permutation. A failed run is recorded and skipped; the
    spread is reported only when every order has at least one success.
    """
    if len(orders) < 2:
        raise ValueError("sensitivity needs at least two column orders")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    entries = []
    for order in orders:
        permuted = order.apply(table)
        runs = []
        for r in range(repeats):
            run_seed = seed + r
            try:
                wd = runner(permuted, train_cfg.replace(seed=run_seed), encoding=encoding, max_modes=max_modes)
                runs.append({"seed": run_seed, "mean_wd": wd})
                log.info("order %s repeat %d: mean WD %.4f", order.method, r, wd)
            except AeganError as exc:
                runs.append({"seed": run_seed, "failed": str(exc)})
                log.warning("order %s repeat %d failed: %s", order.method, r, exc)
        ok = [x["mean_wd"] for x in runs if "mean_wd" in x]
        entries.append({
            "method": order.method,
            "order": list(order.order),
            "runs": runs,
            "mean_wd": float(np.mean(ok)) if ok else None,
        })
    means = [e["mean_wd"] for e in entries]
    spread = None if any(m is None for m in means) else max_diff_percent(means)
    return {"orders": entries, "max_diff_percent": spread, "repeats": repeats, "seed": seed}


def evaluate(real: RawTable, synth: RawTable, seed: int = 0, real_test: RawTable | None = None,
             test_fraction: float = 0.2) -> EvalReport:
    """WD, Dif. Corr. and ML utility of ``synth`` against ``real``.

    Without ``real_test`` the real table is split (stratified) and utility is
    measured against its held-out part.
    """
    per, mean = table_wd(real, synth)
    dc = dif_corr(association_matrix(real), association_matrix(_aligned(real, synth)))
    if real_test is None:
        real_train, real_test = split(real, test_fraction, seed)
    else:
        real_train = real
    utility = ml_utility_diff(real_train, real_test, synth, seed)
    return EvalReport(per_column_wd=per, mean_wd=mean, dif_corr=dc, ml_utility=utility,
                      seeds={"evaluation": seed})
