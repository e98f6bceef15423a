"""Command-line interface: ``aegan <command> [options]``.

Commands: schema, sort, train, synthesize, evaluate, sensitivity, sparsity.
Artifacts go to ``--out``; progress is logged to stderr. A failure prints one
JSON line ``{"error": <code>, "message": ..., "problems": [...]}`` to stderr
and exits non-zero.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field, fields

from .encoding import MODES, fit_encoder
from .evaluation import evaluate, sensitivity_experiment
from .exceptions import AeganError, ConfigError
from .report import EvalReport
from .schema_io import (
    TableSchema,
    infer_schema,
    load_csv,
    load_order,
    load_schema,
    save_order,
    save_report,
    save_schema,
    write_csv,
)
from .sorting import ColumnOrder, make_order, sparsity_report, square_layout

log = logging.getLogger("aegan")

ORDER_CHOICES = ("original", "type", "correlation", "algorithm1")
_ORDER_METHOD = {"original": "original", "type": "by_type", "correlation": "by_correlation",
                 "algorithm1": "algorithm1"}
_TRAIN_KEYS = ("ae_epochs", "gan_epochs", "batch_size", "ae_lr", "gan_lr", "betas", "n_critic",
               "gp_lambda", "patience", "min_delta", "pretrain_epochs", "deterministic")


@dataclass
class RunConfig:
    data: str | None = None
    schema: str | None = None
    encoding: str | None = None
    order: str = "original"
    order_file: str | None = None
    orders: list[str] = field(default_factory=lambda: ["original", "type", "correlation"])
    net_overrides: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)
    seed: int = 0
    repeats: int = 1
    out: str | None = None
    no_msn: bool = False
    no_onehot: bool = False
    no_classifier: bool = False
    joint: bool = False

    @property
    def encoding_mode(self) -> str:
        if self.encoding:
            return self.encoding
        if self.no_onehot:
            return "plain"
        if self.no_msn:
            return "no_msn"
        return "full"

    def problems(self, need=("data", "schema", "out")) -> list[str]:
        out = []
        for name in need:
            if not getattr(self, name):
                out.append(f"{name}: required")
        for name in ("data", "schema", "order_file"):
            path = getattr(self, name)
            if path and not os.path.exists(path):
                out.append(f"{name}: file not found: {path}")
        if self.encoding is not None and self.encoding not in MODES:
            out.append(f"encoding: must be one of {list(MODES)}")
        if self.no_onehot and self.encoding not in (None, "plain"):
            out.append("no_onehot: requires encoding 'plain'")
        elif self.no_msn and self.encoding not in (None, "no_msn", "plain"):
            out.append("no_msn: conflicts with encoding 'full'")
        for o in [self.order, *self.orders]:
            if o not in ORDER_CHOICES:
                out.append(f"order: {o!r} not in {list(ORDER_CHOICES)}")
        unknown = sorted(set(self.train) - set(_TRAIN_KEYS))
        if unknown:
            out.append(f"train: unknown keys {unknown}")
        if self.repeats < 1:
            out.append("repeats: must be >= 1")
        return out

    def train_config(self):
        from .synthesis import TrainConfig

        return TrainConfig(**self.train, use_classifier=not self.no_classifier, joint=self.joint, seed=self.seed)

    def echo(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["encoding"] = self.encoding_mode
        return d


def _load_config(path) -> dict:
    if not path:
        return {}
    if not os.path.exists(path):
        raise ConfigError([f"config: file not found: {path}"])
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError([f"config: unknown fields {unknown}"])
    return data


def build_config(args, need=("data", "schema", "out")) -> RunConfig:
    """Merge the config file with command-line flags (flags win) and validate."""
    base = _load_config(getattr(args, "config", None))
    base["train"] = dict(base.get("train", {}))
    for key in ("data", "schema", "encoding", "order", "order_file", "seed", "repeats", "out"):
        value = getattr(args, key, None)
        if value is not None:
            base[key] = value
    if getattr(args, "orders", None):
        base["orders"] = [o for o in args.orders.split(",") if o]
    for flag in ("no_msn", "no_onehot", "no_classifier", "joint"):
        if getattr(args, flag, False):
            base[flag] = True
    for flag, key in (("epochs", "gan_epochs"), ("ae_epochs", "ae_epochs"), ("batch", "batch_size"),
                      ("lr", "gan_lr"), ("pretrain_epochs", "pretrain_epochs")):
        value = getattr(args, flag, None)
        if value is not None:
            base["train"][key] = value
    if getattr(args, "fast", False):
        base["train"]["deterministic"] = False
    cfg = RunConfig(**base)
    problems = cfg.problems(need)
    if set(cfg.train) <= set(_TRAIN_KEYS):
        try:
            cfg.train_config()
        except ConfigError as exc:
            problems.extend(f"train: {p}" for p in exc.problems)
        except TypeError as exc:
            problems.append(f"train: {exc}")
    if problems:
        raise ConfigError(problems)
    return cfg


def _table(cfg: RunConfig):
    schema = load_schema(cfg.schema)
    return load_csv(cfg.data, schema)


def _order_for(method: str, table, cfg: RunConfig) -> ColumnOrder:
    return make_order(_ORDER_METHOD[method], table, encoding=cfg.encoding_mode, seed=cfg.seed)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_schema(args):
    schema = infer_schema(args.data, args.target, args.threshold)
    save_schema(schema, args.out)
    log.info("wrote schema with %d columns to %s", len(schema), args.out)


def cmd_sort(args):
    cfg = build_config(args)
    table = _table(cfg)
    order = _order_for(cfg.order, table, cfg)
    save_order(order.order, cfg.out)
    log.info("%s order: %s", order.method, " ".join(order.order))


def cmd_train(args):
    from .synthesis import NetSpec, save_checkpoint, train
    from .encoding import encode_table

    cfg = build_config(args)
    table = _table(cfg)
    if cfg.order_file:
        order = ColumnOrder(load_order(cfg.order_file), "file")
    else:
        order = _order_for(cfg.order, table, cfg)
    permuted = order.apply(table)
    state = fit_encoder(permuted, cfg.encoding_mode, seed=cfg.seed)
    spec = NetSpec.from_state(state, **cfg.net_overrides)
    log.info("encoded width %d, latent %d", state.total_width, spec.latent_len)
    model = train(encode_table(permuted, state), cfg.train_config(), spec)
    save_checkpoint(model, cfg.out, extra={"schema": table.schema.to_dict(), "order": list(order.order),
                                           "run_config": cfg.echo()})
    log.info("wrote checkpoint to %s", cfg.out)


def cmd_synthesize(args):
    from .synthesis import load_checkpoint, synthesize

    problems = []
    if not os.path.isdir(args.checkpoint):
        problems.append(f"checkpoint: not a directory: {args.checkpoint}")
    if args.n < 1:
        problems.append("n: must be >= 1")
    if problems:
        raise ConfigError(problems)
    model, extra = load_checkpoint(args.checkpoint)
    table = synthesize(model, args.n, args.seed)
    if "schema" in extra:
        table = table.reorder(TableSchema.from_dict(extra["schema"]).names)
    write_csv(table, args.out)
    log.info("wrote %d synthetic rows to %s", args.n, args.out)


def cmd_evaluate(args):
    cfg = build_config(args)
    problems = [] if os.path.exists(args.synth) else [f"synth: file not found: {args.synth}"]
    if args.test and not os.path.exists(args.test):
        problems.append(f"test: file not found: {args.test}")
    if problems:
        raise ConfigError(problems)
    schema = load_schema(cfg.schema)
    real = load_csv(cfg.data, schema)
    synth = load_csv(args.synth, schema)
    test = load_csv(args.test, schema) if args.test else None
    report = evaluate(real, synth, seed=cfg.seed, real_test=test)
    report.config = {"data": cfg.data, "synth": args.synth, "schema": cfg.schema, "test": args.test}
    save_report(report, cfg.out)
    if args.wd_csv:
        with open(args.wd_csv, "w", encoding="utf-8") as fh:
            fh.write("column,wd\n")
            for name, v in report.per_column_wd.items():
                fh.write(f"{name},{v!r}\n")
    util = report.ml_utility["utility_diff"]
    log.info("mean WD %.4f  Dif. Corr. %.4f  ML utility diff %s", report.mean_wd, report.dif_corr,
             "n/a" if util is None else f"{util:.4f}")


def summarize_sensitivity(record: dict) -> str:
    parts = [f"{e['method']}={e['mean_wd']:.6g}" if e["mean_wd"] is not None else f"{e['method']}=failed"
             for e in record["orders"]]
    spread = record["max_diff_percent"]
    parts.append("max_diff=" + ("n/a" if spread is None else f"{spread:.6g}%"))
    return "sensitivity: " + " ".join(parts)


def cmd_sensitivity(args):
    cfg = build_config(args)
    table = _table(cfg)
    orders = [_order_for(o, table, cfg) for o in cfg.orders]
    record = sensitivity_experiment(table, orders, cfg.train_config(), cfg.repeats, seed=cfg.seed,
                                    encoding=cfg.encoding_mode)
    report = EvalReport(sensitivity=record, config=cfg.echo(), seeds={"base": cfg.seed, "repeats": cfg.repeats})
    save_report(report, cfg.out)
    log.info("%s", summarize_sensitivity(record))


def cmd_sparsity(args):
    cfg = build_config(args)
    table = _table(cfg)
    state = fit_encoder(table, cfg.encoding_mode, seed=cfg.seed)
    report = sparsity_report(state, square_layout(state.total_width, args.side))
    with open(cfg.out, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("width %d -> %dx%d square, %.1f%% zeros", report["total_width"], report["side"], report["side"],
             100 * report["zero_fraction"])


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _common(p, data=True):
    if data:
        p.add_argument("--data", help="input CSV")
    p.add_argument("--schema", help="schema JSON")
    p.add_argument("--config", help="JSON run config; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")


def _encoding(p):
    p.add_argument("--encoding", choices=MODES)
    p.add_argument("--no-msn", action="store_true", help="min-max instead of mode-specific normalization")
    p.add_argument("--no-onehot", action="store_true", help="label + min-max encoding throughout")


def _training(p):
    p.add_argument("--epochs", type=int, help="GAN epochs")
    p.add_argument("--ae-epochs", type=int, help="maximum autoencoder epochs")
    p.add_argument("--pretrain-epochs", type=int, help="autoencoder-only epochs in joint mode")
    p.add_argument("--batch", type=int)
    p.add_argument("--lr", type=float, help="GAN learning rate")
    p.add_argument("--no-classifier", action="store_true")
    p.add_argument("--joint", action="store_true", help="co-train the autoencoder with the GAN")
    p.add_argument("--fast", action="store_true", help="multi-threaded, non-deterministic kernels")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aegan", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("schema", help="infer a schema from a CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--threshold", type=int, default=20, help="max distinct values of a categorical number column")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_schema)

    p = sub.add_parser("sort", help="compute a column order")
    _common(p)
    _encoding(p)
    p.add_argument("--order", choices=ORDER_CHOICES)
    p.set_defaults(func=cmd_sort)

    p = sub.add_parser("train", help="train a synthesizer and write a checkpoint directory")
    _common(p)
    _encoding(p)
    _training(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--order", choices=ORDER_CHOICES)
    g.add_argument("--order-file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("synthesize", help="sample rows from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("-n", "--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("evaluate", help="compare a synthetic CSV with the real one")
    _common(p)
    p.add_argument("--synth", required=True)
    p.add_argument("--test", help="held-out real CSV; otherwise --data is split 80/20")
    p.add_argument("--wd-csv", help="also write per-column WD as CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sensitivity", help="column-order sensitivity experiment")
    _common(p)
    _encoding(p)
    _training(p)
    p.add_argument("--orders", help="comma-separated subset of " + ",".join(ORDER_CHOICES))
    p.add_argument("--repeats", type=int)
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("sparsity", help="zero fraction of the encoded row reshaped to a square")
    _common(p)
    _encoding(p)
    p.add_argument("--side", type=int, help="force the square side (default: smallest that fits)")
    p.set_defaults(func=cmd_sparsity)
    return parser


def _fail(exc: Exception, code: str) -> int:
    payload = {"error": code, "message": str(exc)}
    if isinstance(exc, ConfigError):
        payload["problems"] = exc.problems
    print(json.dumps(payload), file=sys.stderr)
    return 2 if isinstance(exc, ConfigError) else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except AeganError as exc:
        return _fail(exc, exc.code)
    except (OSError, ValueError) as exc:
        return _fail(exc, type(exc).__name__)
    return 0


if __name__ == "__main__":
    sys.exit(main())
