"""Configuration maps, checkpoint container and metric CSVs.

Checkpoint layout (all integers little-endian)::

    b"LTCSE1\\n"                  7-byte magic
    uint32                        manifest length in bytes
    manifest                      UTF-8 JSON, sorted keys, compact separators
    blob                          tensors as raw IEEE-754 values, directory order

The manifest's tensor directory lists (name, shape, dtype, byte_offset,
byte_length) with offsets relative to the start of the blob.  Offsets are
authoritative on load; saves always write tensors sorted by name.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cells import CellConfig, CellParams
from .cells.config import ConfigError
from .numerics import Tensor
from .training import RunRecord, TrainConfig, summarize

MAGIC = b"LTCSE1\n"
FORMAT_VERSION = 1
DTYPES = {"float64": "<f8", "float32": "<f4"}

RUN_HEADER = ["epoch", "train_loss", "valid_metric"]
SUMMARY_HEADER = ["task", "model", "metric", "mean", "std", "seeds"]


class CheckpointError(ValueError):
    pass


# --------------------------------------------------------------------------
# config maps

def _fields(cls) -> dict[str, dataclasses.Field]:
    return {f.name: f for f in dataclasses.fields(cls)}


def to_config(cell: CellConfig, train: TrainConfig | None = None) -> dict:
    """Flatten both configs into one map with ``cell.`` / ``train.`` prefixed keys."""
    out = {f"cell.{k}": v for k, v in dataclasses.asdict(cell).items()}
    if train is not None:
        out.update({f"train.{k}": v for k, v in dataclasses.asdict(train).items()})
    return out


def _coerce(name: str, value, f: dataclasses.Field):
    kind = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", str(f.type))
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name} must be an integer, got {value!r}")
        return value
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name} must be a number, got {value!r}")
        return float(value)
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be true or false, got {value!r}")
        return value
    if value is not None and not isinstance(value, str):
        raise ConfigError(f"{name} must be a string, got {value!r}")
    return value


def from_config(cmap: dict) -> tuple[CellConfig, TrainConfig]:
    """Inverse of :func:`to_config`; unknown keys are rejected by name."""
    cell_fields, train_fields = _fields(CellConfig), _fields(TrainConfig)
    cell_kw, train_kw = {}, {}
    for key, value in cmap.items():
        prefix, _, name = key.partition(".")
        if prefix == "cell" and name in cell_fields:
            cell_kw[name] = _coerce(key, value, cell_fields[name])
        elif prefix == "train" and name in train_fields:
            train_kw[name] = _coerce(key, value, train_fields[name])
        else:
            raise ConfigError(f"unknown config key {key!r}")
    if "kind" not in cell_kw or "hidden_size" not in cell_kw or "input_size" not in cell_kw:
        raise ConfigError("config must define cell.kind, cell.hidden_size and cell.input_size")
    try:
        return CellConfig(**cell_kw), TrainConfig(**train_kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


# --------------------------------------------------------------------------
# checkpoints

@dataclass
class Checkpoint:
    params: CellParams
    cell: CellConfig
    train: TrainConfig
    seed: int = 0
    metrics: dict = field(default_factory=dict)
    precision: str = "float64"


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def encode(ckpt: Checkpoint) -> bytes:
    if ckpt.precision not in DTYPES:
        raise CheckpointError(f"unknown precision {ckpt.precision!r}")
    dtype = DTYPES[ckpt.precision]
    directory, chunks, offset = [], [], 0
    for name in sorted(ckpt.params):
        raw = np.ascontiguousarray(ckpt.params[name].data, dtype=dtype).tobytes()
        directory.append({"name": name, "shape": list(ckpt.params[name].shape), "dtype": ckpt.precision,
                          "byte_offset": offset, "byte_length": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    manifest = {
        "format_version": FORMAT_VERSION,
        "config": to_config(ckpt.cell, ckpt.train),
        "tensors": directory,
        "seed": int(ckpt.seed),
        "metrics": _json_safe(ckpt.metrics),
        "precision": ckpt.precision,
        "lossy": ckpt.precision != "float64",
    }
    head = json.dumps(manifest, sort_keys=True, separators=(",", ":"), allow_nan=False).encode("utf-8")
    return MAGIC + struct.pack("<I", len(head)) + head + b"".join(chunks)


def save(params: CellParams, cell: CellConfig, train: TrainConfig, path, seed: int = 0,
         metrics: dict | None = None, precision: str = "float64") -> None:
    save_checkpoint(Checkpoint(dict(params), cell, train, seed, metrics or {}, precision), path)


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    data = encode(ckpt)
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def decode(data: bytes) -> Checkpoint:
    if data[:len(MAGIC)] != MAGIC:
        raise CheckpointError("bad magic: not an LTCSE1 checkpoint")
    pos = len(MAGIC)
    if len(data) < pos + 4:
        raise CheckpointError(f"length mismatch: header needs {pos + 4} bytes, file has {len(data)}")
    (mlen,) = struct.unpack_from("<I", data, pos)
    pos += 4
    if len(data) < pos + mlen:
        raise CheckpointError(f"length mismatch: manifest needs {mlen} bytes, {len(data) - pos} available")
    try:
        manifest = json.loads(data[pos:pos + mlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"unreadable manifest: {exc}") from None
    if manifest.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"unknown format_version {manifest.get('format_version')!r}")
    blob = data[pos + mlen:]
    entries = sorted(manifest["tensors"], key=lambda e: e["byte_offset"])
    expected = sum(e["byte_length"] for e in entries)
    if len(blob) != expected:
        raise CheckpointError(f"length mismatch: blob should hold {expected} bytes, found {len(blob)}")
    params, end = {}, 0
    for e in entries:
        if e["byte_offset"] < end:
            raise CheckpointError(f"tensor {e['name']!r} overlaps the previous tensor")
        dtype = DTYPES.get(e["dtype"])
        if dtype is None:
            raise CheckpointError(f"tensor {e['name']!r} has unknown dtype {e['dtype']!r}")
        count = int(np.prod(e["shape"], dtype=np.int64))
        if count * np.dtype(dtype).itemsize != e["byte_length"]:
            raise CheckpointError(f"tensor {e['name']!r}: shape {e['shape']} does not match "
                                  f"byte_length {e['byte_length']}")
        raw = blob[e["byte_offset"]:e["byte_offset"] + e["byte_length"]]
        native = np.float64 if e["dtype"] == "float64" else np.float32
        arr = np.frombuffer(raw, dtype=dtype).reshape(e["shape"]).astype(native)
        params[e["name"]] = Tensor(arr, dtype=arr.dtype, name=e["name"])
        end = e["byte_offset"] + e["byte_length"]
    cell, train = from_config(manifest["config"])
    return Checkpoint(params, cell, train, manifest.get("seed", 0), manifest.get("metrics", {}),
                      manifest.get("precision", "float64"))


def load(path) -> Checkpoint:
    with open(path, "rb") as fh:
        return decode(fh.read())


# --------------------------------------------------------------------------
# metric CSVs

def _fmt(x: float) -> str:
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else format(float(x), ".17g")


def write_run_csv(record: RunRecord, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RUN_HEADER)
        for i, (loss, valid) in enumerate(record.epochs, start=1):
            w.writerow([i, _fmt(loss), _fmt(valid)])


def read_run_csv(path) -> list[tuple[int, float, float]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != RUN_HEADER:
        raise ValueError(f"{path}: not a run CSV")
    return [(int(r[0]), float(r[1]), float(r[2])) for r in rows[1:]]


def summary_rows(records: list[RunRecord]) -> list[list[str]]:
    groups: dict[tuple[str, str, str], list[RunRecord]] = {}
    for r in records:
        groups.setdefault((r.task, r.model, r.metric), []).append(r)
    rows = []
    for (task, model, metric), recs in groups.items():
        mean, std = summarize([r.test_metric for r in recs])
        rows.append([task, model, metric, _fmt(mean), _fmt(std), ";".join(str(r.seed) for r in recs)])
    return rows


def write_summary_csv(records: list[RunRecord], path, append: bool = False) -> None:
    exists = append and Path(path).exists() and Path(path).stat().st_size > 0
    with open(path, "a" if append else "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if not exists:
            w.writerow(SUMMARY_HEADER)
        w.writerows(summary_rows(records))


def read_summary_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SUMMARY_HEADER:
            raise ValueError(f"{path}: not a summary CSV")
        return [{**row, "mean": float(row["mean"]), "std": float(row["std"])} for row in reader]


def export_metrics(records: list[RunRecord], out_dir) -> list[Path]:
    """Write run_<seed>.csv per record and one summary.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for r in records:
        p = out / f"run_{r.seed}.csv"
        write_run_csv(r, p)
        written.append(p)
    write_summary_csv(records, out / "summary.csv")
    written.append(out / "summary.csv")
    return written
