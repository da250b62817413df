from __future__ import annotations

import io
import os
import warnings
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd

from .tasks import CLASSIFICATION, TaskSpec


class DataError(Exception):
    """Input data is missing, malformed, or inconsistent with its schema."""


class SchemaError(DataError):
    pass


@dataclass(frozen=True)
class SeriesTable:
    task: str
    timestamps: np.ndarray
    features: np.ndarray  # [rows, K]
    target: np.ndarray  # class ids (int64) or reals
    kind: str
    period: str

    def __len__(self) -> int:
        return self.features.shape[0]

    def rows(self, start: int, stop: int) -> "SeriesTable":
        return replace(self, timestamps=self.timestamps[start:stop],
                       features=self.features[start:stop], target=self.target[start:stop])


@dataclass(frozen=True)
class SequenceBatch:
    inputs: np.ndarray  # [B, T, K]
    targets: np.ndarray  # [B, T] per step, or [B] per sequence
    kind: str

    def __len__(self) -> int:
        return self.inputs.shape[0]


def _parse_times(col: pd.Series, spec: TaskSpec) -> np.ndarray:
    if spec.time_format == "index":
        return pd.to_numeric(col, errors="raise").to_numpy(dtype=np.int64)
    return pd.to_datetime(col, format="ISO8601").to_numpy(dtype="datetime64[s]")


def _to_float(col: pd.Series) -> pd.Series:
    # python float() round-trips repr output exactly; unparseable cells become NaN
    def conv(v):
        try:
            return float(v)
        except (TypeError, ValueError):
            return np.nan
    return col.map(conv).astype(np.float64)


def load_csv(path, spec: TaskSpec) -> SeriesTable:
    """Read a task CSV, forward-filling missing values.

    Rows before the first complete row are dropped.  '?' counts as missing.
    """
    if not os.path.exists(path):
        raise DataError(f"{path}: file not found")
    if os.path.getsize(path) == 0:
        raise DataError(f"{path}: empty file")
    try:
        frame = pd.read_csv(path, na_values=["?"], keep_default_na=True, dtype=str)
    except pd.errors.EmptyDataError:
        raise DataError(f"{path}: empty file") from None
    missing = [c for c in spec.columns if c not in frame.columns]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)} for task {spec.name}")
    if frame.empty:
        raise DataError(f"{path}: no data rows")
    values = frame[list(spec.features) + [spec.target]].apply(_to_float)
    values = values.ffill()
    complete = values.notna().all(axis=1).to_numpy()
    if not complete.any():
        raise DataError(f"{path}: no complete rows")
    first = int(np.argmax(complete))
    values = values.iloc[first:]
    times = _parse_times(frame[spec.time_column].iloc[first:], spec)
    if len(times) > 1 and not np.all(times[1:] > times[:-1]):
        raise DataError(f"{path}: timestamps are not strictly increasing")
    target = values[spec.target].to_numpy(dtype=np.float64)
    if spec.kind == CLASSIFICATION:
        if np.any(target != np.round(target)) or target.min() < 0 or target.max() >= spec.n_classes:
            raise DataError(f"{path}: {spec.target} must hold class ids in 0..{spec.n_classes - 1}")
        target = target.astype(np.int64)
    return SeriesTable(spec.name, times, values[list(spec.features)].to_numpy(dtype=np.float64),
                       target, spec.kind, spec.period)


def write_csv(table: SeriesTable, path, spec: TaskSpec) -> None:
    """Write a table in the task schema; reals use round-trip repr formatting."""
    buf = io.StringIO()
    buf.write(",".join(spec.columns) + "\n")
    if spec.time_format == "index":
        stamps = [str(int(t)) for t in table.timestamps]
    else:
        stamps = [str(t) for t in table.timestamps.astype("datetime64[s]")]
    for i, stamp in enumerate(stamps):
        feats = ",".join(repr(float(v)) for v in table.features[i])
        tgt = table.target[i]
        tgt_s = str(int(tgt)) if spec.kind == CLASSIFICATION else repr(float(tgt))
        buf.write(f"{stamp},{feats},{tgt_s}\n")
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


@dataclass(frozen=True)
class Normalizer:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, table: SeriesTable) -> SeriesTable:
        return replace(table, features=apply_normalizer(self, table.features))


def fit_normalizer(train: SeriesTable | np.ndarray) -> Normalizer:
    x = train.features if isinstance(train, SeriesTable) else np.asarray(train, dtype=np.float64)
    return Normalizer(x.mean(axis=0), x.std(axis=0))


def apply_normalizer(norm: Normalizer, x: np.ndarray) -> np.ndarray:
    degenerate = norm.std < 1e-12
    scale = np.where(degenerate, 1.0, norm.std)
    out = (x - norm.mean) / scale
    out[:, degenerate] = 0.0
    return out


def window(series, T: int = 32, stride: int = 32) -> np.ndarray:
    """Stack windows starting at 0, stride, 2*stride, ...; the tail remainder is dropped."""
    arr = np.asarray(series)
    if T < 1 or stride < 1:
        raise ValueError("window length and stride must be positive")
    n = arr.shape[0]
    if T > n:
        warnings.warn(f"window length {T} exceeds series length {n}; no windows produced", stacklevel=2)
        return np.empty((0, T) + arr.shape[1:], dtype=arr.dtype)
    starts = np.arange(0, n - T + 1, stride)
    return np.stack([arr[s:s + T] for s in starts])


SPLIT_FRACTIONS = (0.70, 0.15, 0.15)


def split_points(n: int) -> tuple[int, int]:
    n_train = int(n * SPLIT_FRACTIONS[0])
    n_valid = int(n * SPLIT_FRACTIONS[1])
    return n_train, n_train + n_valid


def split(table: SeriesTable) -> tuple[SeriesTable, SeriesTable, SeriesTable]:
    """Chronological 70/15/15 split of raw rows (no shuffling)."""
    a, b = split_points(len(table))
    return table.rows(0, a), table.rows(a, b), table.rows(b, len(table))


def to_windows(table: SeriesTable, T: int = 32, stride: int = 32) -> SequenceBatch:
    return SequenceBatch(window(table.features, T, stride), window(table.target, T, stride), table.kind)


@dataclass(frozen=True)
class TaskData:
    spec: TaskSpec
    train: SequenceBatch
    valid: SequenceBatch
    test: SequenceBatch
    normalizer: Normalizer
    target_scale: tuple[float, float] = (0.0, 1.0)


def prepare(table: SeriesTable, spec: TaskSpec, T: int = 32, stride: int | None = None) -> TaskData:
    """Split, normalise with train statistics, and window each split separately.

    Regression targets are z-scored with train statistics as well.
    """
    stride = spec.stride if stride is None else stride
    train, valid, test = split(table)
    if len(train) < T:
        raise DataError(f"train split has {len(train)} rows, fewer than window length {T}")
    norm = fit_normalizer(train)
    train, valid, test = (norm.apply(t) for t in (train, valid, test))
    scale = (0.0, 1.0)
    if spec.kind != CLASSIFICATION:
        mu, sd = float(train.target.mean()), float(train.target.std())
        sd = sd if sd > 1e-12 else 1.0
        scale = (mu, sd)
        train, valid, test = (replace(t, target=(t.target - mu) / sd) for t in (train, valid, test))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        batches = [to_windows(t, T, stride) for t in (train, valid, test)]
    return TaskData(spec, *batches, normalizer=norm, target_scale=scale)
