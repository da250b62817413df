"""Command-line entry points.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import socket
import sys
from pathlib import Path

from . import bench as bm
from . import model_io
from .cells import KINDS, SOLVERS, CellConfig
from .cells.config import INPUT_MAPPINGS, ConfigError
from .data import DataError, TaskData, get_task, load_task, prepare, synth_fixture
from .numerics import ACTIVATIONS, NumericError
from .plotting import bar_chart_svg, curves_svg
from .training import TrainConfig, evaluate, repeat_runs

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
SENTINEL = "INCOMPLETE"

log = logging.getLogger("ltcse")


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _Exit(EXIT_CONFIG, f"{self.prog}: error: {message}")


class _Exit(Exception):
    def __init__(self, code: int, message: str = ""):
        super().__init__(message)
        self.code = code


def _block_network() -> None:
    def refuse(*args, **kwargs):
        raise OSError("network access disabled by --offline")

    socket.socket.connect = refuse  # type: ignore[method-assign]
    socket.create_connection = refuse  # type: ignore[assignment]


# --------------------------------------------------------------------------
# data

def _task_name(task: str) -> tuple[str, bool]:
    if task.startswith("synth:"):
        return task.split(":", 1)[1], True
    return task, False


def load_task_data(task: str, bptt: int, rows: int = 10_000, data_seed: int = 0,
                   offline: bool = False, cache=None) -> TaskData:
    name, synthetic = _task_name(task)
    try:
        spec = get_task(name)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None
    table = synth_fixture(spec, data_seed, rows) if synthetic else load_task(name, cache, offline=offline)
    return prepare(table, spec, T=bptt)


# --------------------------------------------------------------------------
# train

_TRAIN_FLAGS = {"hidden": "hidden_units", "batch": "minibatch", "lr": "learning_rate", "epochs": "epochs",
                "bptt": "bptt_len", "seed": "seed", "repeats": "repeats", "test_weights": "test_weights",
                "lr_override": "lr_override", "eval_every": "eval_every"}
_CELL_FLAGS = {"solver": "solver", "unfolds": "ode_unfolds", "input_mapping": "input_mapping",
               "activation": "activation", "ctgru_scales": "ctgru_scales"}


def resolve_configs(args, spec) -> tuple[CellConfig, TrainConfig]:
    """Built-in defaults < --config file < command-line flags."""
    cell_kw: dict = {}
    train_kw: dict = {}
    if args.config:
        try:
            cmap = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}") from None
        for key, value in cmap.items():
            prefix, _, name = key.partition(".")
            if prefix == "cell":
                cell_kw[name] = value
            elif prefix == "train":
                train_kw[name] = value
            else:
                raise ConfigError(f"unknown config key {key!r}")
    for flag, name in _TRAIN_FLAGS.items():
        value = getattr(args, flag)
        if value is not None:
            train_kw[name] = value
    for flag, name in _CELL_FLAGS.items():
        value = getattr(args, flag)
        if value is not None:
            cell_kw[name] = value
    if args.model:
        cell_kw["kind"] = args.model
    if "kind" not in cell_kw:
        raise ConfigError("--model is required")
    hidden = train_kw.get("hidden_units", TrainConfig.hidden_units)
    cell_kw.update(hidden_size=hidden, input_size=spec.input_size, output_size=spec.output_size)
    cmap = {f"cell.{k}": v for k, v in cell_kw.items()} | {f"train.{k}": v for k, v in train_kw.items()}
    cell, train = model_io.from_config(cmap)
    return cell, train


def cmd_train(args) -> int:
    name, _ = _task_name(args.task)
    try:
        spec = get_task(name)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None
    cell, train = resolve_configs(args, spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / SENTINEL).write_text("run in progress or aborted\n")
    handler = logging.FileHandler(out / "log.txt", mode="w")
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("ltcse")
    root.addHandler(handler)
    root.setLevel(logging.INFO)
    try:
        data = load_task_data(args.task, train.bptt_len, args.rows, args.data_seed, args.offline, args.cache)
        cmap = model_io.to_config(cell, train)
        (out / "config.json").write_text(json.dumps(cmap, sort_keys=True, indent=2) + "\n")
        results, summary = repeat_runs(data, cell, train, jobs=args.jobs)
        records = []
        for record, params in results:
            records.append(record)
            metrics = {"task": args.task, "rows": args.rows, "data_seed": args.data_seed,
                       "metric": record.metric, "test_metric": record.test_metric,
                       "epoch_of_best_valid": record.epoch_of_best_valid,
                       "test_weights": train.test_weights}
            model_io.save(params, cell, train, out / f"model_{record.seed}.ckpt", seed=record.seed,
                          metrics=metrics)
            log.info("seed %d test %s %.6f (%.1fs)", record.seed, record.metric, record.test_metric,
                     record.wall_seconds)
        model_io.export_metrics(records, out)
        write_curves(out, [out])
        for metric, (mean, std) in summary.items():
            print(f"{args.task} {cell.kind} {metric}: mean {mean:.6f} std {std:.6f} "
                  f"over {len(records)} seed(s)")
    finally:
        root.removeHandler(handler)
        handler.close()
    (out / SENTINEL).unlink()
    return EXIT_OK


# --------------------------------------------------------------------------
# eval

def cmd_eval(args) -> int:
    try:
        ckpt = model_io.load(args.checkpoint)
    except (OSError, model_io.CheckpointError) as exc:
        raise DataError(f"cannot load checkpoint {args.checkpoint}: {exc}") from None
    task = args.task or ckpt.metrics.get("task")
    if task is None:
        raise ConfigError("--task is required (checkpoint does not record one)")
    name, _ = _task_name(task)
    try:
        spec = get_task(name)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None
    if spec.input_size != ckpt.cell.input_size:
        raise ConfigError(f"checkpoint expects K={ckpt.cell.input_size} inputs but task {name} "
                          f"provides K={spec.input_size}")
    if spec.output_size != ckpt.cell.output_size:
        raise ConfigError(f"checkpoint has {ckpt.cell.output_size} outputs but task {name} "
                          f"needs {spec.output_size}")
    rows = args.rows if args.rows is not None else ckpt.metrics.get("rows", 10_000)
    data_seed = args.data_seed if args.data_seed is not None else ckpt.metrics.get("data_seed", 0)
    data = load_task_data(task, ckpt.train.bptt_len, rows, data_seed, args.offline, args.cache)
    value = evaluate(ckpt.cell, ckpt.params, getattr(data, args.split))
    print(format(value, ".17g"))
    summary = Path(args.summary) if args.summary else Path(args.checkpoint).parent / "summary.csv"
    row = [name if not task.startswith("synth:") else task, ckpt.cell.kind, f"{args.split}_{spec.metric}",
           format(value, ".17g"), "0", str(ckpt.seed)]
    new = not summary.exists() or summary.stat().st_size == 0
    with open(summary, "a", newline="") as fh:
        if new:
            fh.write(",".join(model_io.SUMMARY_HEADER) + "\n")
        fh.write(",".join(row) + "\n")
    return EXIT_OK


# --------------------------------------------------------------------------
# bench

def cmd_bench(args) -> int:
    kinds = args.model or list(bm.TABLE1_PRINTED)
    rows = []
    for kind in kinds:
        try:
            ck = bm.canonical_kind(kind)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        m = args.m
        if ck == "ct-gru" and m is None:
            if args.model:
                raise ConfigError("ct-gru needs --m")
            m = args.n
        if args.n < 1 or args.k < 1:
            raise ConfigError("--n and --k must be positive")
        rows.append(bm.bench_row(ck, args.n, args.k, m, batch=args.batch, T=args.T,
                                 ode_unfolds=args.unfolds))
    if args.what == "memory":
        rows.sort(key=lambda r: -r.total_bytes)
    text = bm.format_bench_csv(rows)
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text)
    for r in rows:
        if r.discrepancy:
            print(f"note: {r.kind}: reference count {r.table1_printed} differs from formula "
                  f"{bm.FORMULA_TEXT[r.kind]} = {r.formula_count}", file=sys.stderr)
    return EXIT_OK


# --------------------------------------------------------------------------
# plot

def _run_series(run_dir: Path, prefix: bool):
    loss, metric = [], []
    for path in sorted(run_dir.glob("run_*.csv"), key=lambda p: int(p.stem.split("_")[1])):
        rows = model_io.read_run_csv(path)
        label = f"{run_dir.name}/{path.stem}" if prefix else path.stem
        xs = [r[0] for r in rows]
        loss.append((label, xs, [r[1] for r in rows]))
        metric.append((label, xs, [r[2] for r in rows]))
    return loss, metric


def write_curves(out: Path, run_dirs: list[Path]) -> Path:
    loss, metric = [], []
    for d in run_dirs:
        # directory names only disambiguate; a single run plots the same wherever it lives
        a, b = _run_series(Path(d), prefix=len(run_dirs) > 1)
        loss += a
        metric += b
    plots = out / "plots"
    plots.mkdir(parents=True, exist_ok=True)
    path = plots / "curves.svg"
    path.write_text(curves_svg([("train loss", loss), ("validation metric", metric)]))
    return path


def cmd_plot(args) -> int:
    out = Path(args.out)
    run_dirs = [Path(d) for d in (args.runs or [])]
    for d in run_dirs:
        if not d.is_dir():
            raise DataError(f"{d}: not a run directory")
    if run_dirs:
        write_curves(out, run_dirs)
    if args.bench:
        import csv

        with open(args.bench, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows or "total_bytes" not in rows[0]:
            raise DataError(f"{args.bench}: not a bench CSV")
        items = [(f"{r['kind']} n={r['n']} k={r['k']}", float(r["total_bytes"])) for r in rows]
        (out / "plots").mkdir(parents=True, exist_ok=True)
        (out / "plots" / "bench.svg").write_text(bar_chart_svg("total bytes per BPTT window", items))
    if not run_dirs and not args.bench:
        raise ConfigError("nothing to plot: pass --runs and/or --bench")
    return EXIT_OK


# --------------------------------------------------------------------------
# data

def cmd_data(args) -> int:
    from .data import fetch, write_csv
    from .data.raw import convert

    spec = get_task(args.task)
    if args.action == "fetch":
        print(fetch(args.task, args.cache, offline=args.offline))
    elif args.action == "convert":
        if not args.archive or not args.out:
            raise ConfigError("convert needs --archive and --out")
        table = convert(args.task, Path(args.archive), Path(args.out))
        print(f"{len(table)} rows -> {args.out}")
    elif args.action == "synth":
        if not args.out:
            raise ConfigError("synth needs --out")
        write_csv(synth_fixture(spec, args.seed, args.rows), args.out, spec)
    return EXIT_OK


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _ArgumentParser(prog="ltcse", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    def common(sp):
        sp.add_argument("--offline", action="store_true", help="forbid all network access")
        sp.add_argument("--cache", default=None, help="dataset cache directory (default $LTCSE_CACHE)")

    t = sub.add_parser("train", help="train and test a model, repeated over seeds")
    t.add_argument("--task", required=True, help="occupancy|har|traffic|power|ozone or synth:<task>")
    t.add_argument("--model", choices=KINDS)
    t.add_argument("--solver", choices=SOLVERS)
    t.add_argument("--unfolds", type=int)
    t.add_argument("--input-mapping", dest="input_mapping", choices=INPUT_MAPPINGS)
    t.add_argument("--activation", choices=ACTIVATIONS)
    t.add_argument("--ctgru-scales", dest="ctgru_scales", type=int)
    t.add_argument("--hidden", type=int)
    t.add_argument("--batch", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--lr-override", dest="lr_override", action="store_const", const=True)
    t.add_argument("--epochs", type=int)
    t.add_argument("--eval-every", dest="eval_every", type=int)
    t.add_argument("--bptt", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--repeats", type=int)
    t.add_argument("--test-weights", dest="test_weights", choices=("best-valid", "final"))
    t.add_argument("--config", help="JSON config map (cell.* / train.* keys)")
    t.add_argument("--rows", type=int, default=10_000, help="rows of a synth:<task> fixture")
    t.add_argument("--data-seed", dest="data_seed", type=int, default=0)
    t.add_argument("--jobs", type=int, default=1)
    t.add_argument("--out", required=True)
    common(t)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="score a checkpoint on one split")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--task")
    e.add_argument("--split", choices=("train", "valid", "test"), default="test")
    e.add_argument("--rows", type=int)
    e.add_argument("--data-seed", dest="data_seed", type=int)
    e.add_argument("--summary", help="summary CSV to append to (default: next to the checkpoint)")
    common(e)
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("bench", help="parameter / op / memory accounting as CSV")
    b.add_argument("what", choices=("params", "flops", "memory"))
    b.add_argument("--model", action="append")
    b.add_argument("--n", type=int, default=bm.TABLE1_DIMS["n"])
    b.add_argument("--k", type=int, default=bm.TABLE1_DIMS["k"])
    b.add_argument("--m", type=int)
    b.add_argument("--batch", type=int, default=16)
    b.add_argument("--T", type=int, default=32)
    b.add_argument("--unfolds", type=int, default=6)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)

    pl = sub.add_parser("plot", help="SVG curves from run directories and bars from a bench CSV")
    pl.add_argument("--runs", nargs="+")
    pl.add_argument("--bench")
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=cmd_plot)

    d = sub.add_parser("data", help="fetch, convert or synthesize task CSVs")
    d.add_argument("action", choices=("fetch", "convert", "synth"))
    d.add_argument("--task", required=True, choices=sorted(__import__("ltcse.data", fromlist=["TASKS"]).TASKS))
    d.add_argument("--archive")
    d.add_argument("--out")
    d.add_argument("--rows", type=int, default=10_000)
    d.add_argument("--seed", type=int, default=0)
    common(d)
    d.set_defaults(func=cmd_data)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "offline", False):
            _block_network()
        return args.func(args)
    except _Exit as exc:
        print(exc, file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
