"""Convert the raw UCI downloads into the per-task CSV layout."""
from __future__ import annotations

import gzip
import io
import zipfile
from pathlib import Path

import numpy as np
import pandas as pd

from .table import DataError, SeriesTable, write_csv
from .tasks import CLASSIFICATION, TASKS


def _member(zf: zipfile.ZipFile, suffix: str) -> bytes:
    for name in zf.namelist():
        if name.endswith(suffix):
            return zf.read(name)
    raise DataError(f"archive has no member ending in {suffix!r}")


def _table(task: str, stamps, x: np.ndarray, y: np.ndarray) -> SeriesTable:
    spec = TASKS[task]
    y = y.astype(np.int64) if spec.kind == CLASSIFICATION else y.astype(np.float64)
    return SeriesTable(task, np.asarray(stamps), np.ascontiguousarray(x, dtype=np.float64), y,
                       spec.kind, spec.period)


def occupancy_from_frames(frames: list[pd.DataFrame]) -> SeriesTable:
    spec = TASKS["occupancy"]
    df = pd.concat(frames, ignore_index=True)
    df["date"] = pd.to_datetime(df["date"])
    df = df.sort_values("date").drop_duplicates("date").reset_index(drop=True)
    return _table("occupancy", df["date"].to_numpy(dtype="datetime64[s]"),
                  df[list(spec.features)].to_numpy(float), df["Occupancy"].to_numpy())


def convert_occupancy(archive: Path) -> SeriesTable:
    with zipfile.ZipFile(archive) as zf:
        frames = [pd.read_csv(io.BytesIO(_member(zf, name)))
                  for name in ("datatraining.txt", "datatest.txt", "datatest2.txt")]
    return occupancy_from_frames(frames)


def har_from_arrays(x: np.ndarray, labels: np.ndarray) -> SeriesTable:
    # UCI labels are 1..6
    return _table("har", np.arange(len(labels), dtype=np.int64), x, labels - 1)


def convert_har(archive: Path) -> SeriesTable:
    with zipfile.ZipFile(archive) as zf:
        names = zf.namelist()
        inner = next((n for n in names if n.endswith("UCI HAR Dataset.zip")), None)
        if inner is not None:
            zf = zipfile.ZipFile(io.BytesIO(zf.read(inner)))
        parts = []
        for split in ("train", "test"):
            x = np.loadtxt(io.BytesIO(_member(zf, f"{split}/X_{split}.txt")))
            y = np.loadtxt(io.BytesIO(_member(zf, f"{split}/y_{split}.txt")), dtype=np.int64)
            parts.append((x, y))
    return har_from_arrays(np.vstack([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))


def traffic_from_frame(df: pd.DataFrame) -> SeriesTable:
    df = df.copy()
    df["date_time"] = pd.to_datetime(df["date_time"])
    df = df.sort_values("date_time").drop_duplicates("date_time", keep="first").reset_index(drop=True)
    holiday = df["holiday"].fillna("None").astype(str)
    # the raw file only tags the first hour of a holiday; spread the flag over its day
    day = df["date_time"].dt.normalize()
    holiday_days = set(day[holiday != "None"])
    x = np.column_stack([
        df["temp"].to_numpy(float), df["rain_1h"].to_numpy(float), df["snow_1h"].to_numpy(float),
        df["clouds_all"].to_numpy(float), df["date_time"].dt.hour.to_numpy(float),
        (df["date_time"].dt.dayofweek >= 5).to_numpy(float), day.isin(holiday_days).to_numpy(float),
    ])
    return _table("traffic", df["date_time"].to_numpy(dtype="datetime64[s]"), x,
                  df["traffic_volume"].to_numpy(float))


def convert_traffic(archive: Path) -> SeriesTable:
    with zipfile.ZipFile(archive) as zf:
        data = _member(zf, "Metro_Interstate_Traffic_Volume.csv.gz")
    return traffic_from_frame(pd.read_csv(io.BytesIO(gzip.decompress(data))))


def power_from_frame(df: pd.DataFrame) -> SeriesTable:
    """Minute readings -> hourly means; hours with no readings are dropped."""
    spec = TASKS["power"]
    stamp = pd.to_datetime(df["Date"] + " " + df["Time"], format="%d/%m/%Y %H:%M:%S")
    cols = list(spec.features) + [spec.target]
    vals = df[cols].apply(pd.to_numeric, errors="coerce")
    vals.index = stamp
    hourly = vals.resample("1h").mean().dropna(how="all")
    return _table("power", hourly.index.to_numpy(dtype="datetime64[s]"),
                  hourly[list(spec.features)].to_numpy(float), hourly[spec.target].to_numpy(float))


def convert_power(archive: Path) -> SeriesTable:
    with zipfile.ZipFile(archive) as zf:
        data = _member(zf, "household_power_consumption.txt")
    df = pd.read_csv(io.BytesIO(data), sep=";", na_values=["?"], dtype=str, low_memory=False)
    return power_from_frame(df)


def ozone_from_frame(df: pd.DataFrame) -> SeriesTable:
    spec = TASKS["ozone"]
    stamps = pd.to_datetime(df.iloc[:, 0], format="%m/%d/%Y").to_numpy(dtype="datetime64[s]")
    x = df.iloc[:, 1:1 + spec.input_size].apply(pd.to_numeric, errors="coerce").to_numpy(float)
    y = pd.to_numeric(df.iloc[:, -1], errors="coerce").to_numpy(float)
    # rows without a label cannot be forward-filled meaningfully; load_csv handles feature gaps
    keep = ~np.isnan(y)
    return _table("ozone", stamps[keep], x[keep], y[keep])


def convert_ozone(archive: Path) -> SeriesTable:
    with zipfile.ZipFile(archive) as zf:
        data = _member(zf, "eighthr.data")
    df = pd.read_csv(io.BytesIO(data), header=None, na_values=["?"], dtype=str)
    return ozone_from_frame(df)


CONVERTERS = {"occupancy": convert_occupancy, "har": convert_har, "traffic": convert_traffic,
              "power": convert_power, "ozone": convert_ozone}


def convert(task: str, archive: Path, out_csv: Path) -> SeriesTable:
    table = CONVERTERS[task](Path(archive))
    write_csv(table, out_csv, TASKS[task])
    return table
