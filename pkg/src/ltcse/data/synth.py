"""Deterministic offline stand-ins that follow each task's CSV schema."""
from __future__ import annotations

import numpy as np

from .. import rng
from .table import SeriesTable
from .tasks import CLASSIFICATION, TaskSpec, get_task

# occupancy: label = [weights . z > threshold] on standardized AR(1) channels
OCC_WEIGHTS = np.array([0.8, -0.3, 1.2, 0.9, 0.2])
OCC_THRESHOLD = 0.6
OCC_PHI = 0.9
# rows are pushed this far (in score units) away from the decision boundary
OCC_MARGIN = 0.15
LABEL_NOISE = 0.02

# (offset, scale) turning a standard channel into sensor-like units
_OCC_UNITS = [(21.0, 1.0), (27.0, 5.0), (120.0, 200.0), (600.0, 300.0), (0.0042, 0.0005)]


def _ar1(g: np.random.Generator, rows: int, channels: int, phi: float) -> np.ndarray:
    eps = g.standard_normal((rows, channels))
    out = np.empty_like(eps)
    out[0] = eps[0]
    c = np.sqrt(1.0 - phi * phi)
    for t in range(1, rows):
        out[t] = phi * out[t - 1] + c * eps[t]
    return out


def _stamps(start: str, rows: int, step: str) -> np.ndarray:
    return np.datetime64(start, "s") + np.arange(rows) * np.timedelta64(1, step).astype("timedelta64[s]")


def occupancy_latent(seed: int, rows: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Standardized channels, noise-free labels and observed (noisy) labels."""
    g = rng.stream(seed, "synth/occupancy")
    z = _ar1(g, rows, 5, OCC_PHI)
    side = np.where(z @ OCC_WEIGHTS > OCC_THRESHOLD, 1.0, -1.0)
    z = z + np.outer(side * OCC_MARGIN, OCC_WEIGHTS / (OCC_WEIGHTS @ OCC_WEIGHTS))
    clean = (side > 0).astype(np.int64)
    flip = g.random(rows) < LABEL_NOISE
    return z, clean, np.where(flip, 1 - clean, clean)


def _occupancy(spec, seed, rows):
    z, _, y = occupancy_latent(seed, rows)
    x = np.column_stack([off + sc * z[:, i] for i, (off, sc) in enumerate(_OCC_UNITS)])
    return _stamps("2015-02-04T17:51:00", rows, "m"), x, y


def _har(spec, seed, rows):
    g = rng.stream(seed, "synth/har")
    means = g.uniform(-0.6, 0.6, size=(spec.n_classes, spec.input_size))
    y = np.empty(rows, dtype=np.int64)
    t = 0
    while t < rows:
        length = int(g.integers(20, 200))
        y[t:t + length] = g.integers(0, spec.n_classes)
        t += length
    x = np.clip(means[y] + 0.3 * g.standard_normal((rows, spec.input_size)), -1.0, 1.0)
    return np.arange(rows, dtype=np.int64), x, y


def _traffic(spec, seed, rows):
    g = rng.stream(seed, "synth/traffic")
    stamps = _stamps("2012-10-02T09:00:00", rows, "h")
    hours = (np.arange(rows) + 9) % 24
    day = (np.arange(rows) + 9) // 24
    weekend = ((day + 1) % 7 >= 5).astype(float)
    holiday = (g.random(day.max() + 1) < 0.03)[day].astype(float)
    temp = 281.0 + 12.0 * np.sin(2 * np.pi * day / 365.0) + 2.0 * g.standard_normal(rows)
    rain = np.where(g.random(rows) < 0.1, g.exponential(1.0, rows), 0.0)
    snow = np.where(g.random(rows) < 0.02, g.exponential(0.2, rows), 0.0)
    clouds = np.round(g.uniform(0, 100, rows))
    profile = np.exp(-0.5 * ((hours - 8) / 2.0) ** 2) + np.exp(-0.5 * ((hours - 17) / 2.5) ** 2)
    volume = 600 + 4500 * profile * (1 - 0.45 * np.maximum(weekend, holiday)) - 80 * rain
    volume = np.round(np.maximum(volume + 150 * g.standard_normal(rows), 0.0))
    x = np.column_stack([temp, rain, snow, clouds, hours.astype(float), weekend, holiday])
    return stamps, x, volume


def _power(spec, seed, rows):
    g = rng.stream(seed, "synth/power")
    stamps = _stamps("2006-12-16T17:00:00", rows, "h")
    hours = (np.arange(rows) + 17) % 24
    base = 0.6 + 0.8 * np.exp(-0.5 * ((hours - 19) / 2.5) ** 2)
    z = _ar1(g, rows, 4, 0.7)
    sub1 = np.maximum(0.0, 1.2 * z[:, 0] + 0.5)
    sub2 = np.maximum(0.0, 1.0 * z[:, 1] + 0.8)
    sub3 = np.maximum(0.0, 6.0 + 3.0 * z[:, 2] + 4.0 * base)
    active = base + 0.06 * (sub1 + sub2 + sub3) + 0.05 * g.standard_normal(rows)
    voltage = 240.5 - 1.5 * active + 0.8 * z[:, 3]
    intensity = active * 1000.0 / voltage * 4.2 / 1.0
    reactive = np.abs(0.1 + 0.05 * z[:, 3])
    x = np.column_stack([reactive, voltage, intensity, sub1, sub2, sub3])
    return stamps, x, active


def _ozone(spec, seed, rows):
    g = rng.stream(seed, "synth/ozone")
    z = _ar1(g, rows, spec.input_size, 0.8)
    w = g.standard_normal(spec.input_size) / np.sqrt(spec.input_size)
    score = z @ w
    y = (score > np.quantile(score, 0.85)).astype(np.int64)
    return _stamps("1998-01-01T00:00:00", rows, "D"), z, y


_MAKERS = {"occupancy": _occupancy, "har": _har, "traffic": _traffic, "power": _power, "ozone": _ozone}


def synth_fixture(task: TaskSpec | str, seed: int = 0, rows: int = 10_000) -> SeriesTable:
    spec = get_task(task) if isinstance(task, str) else task
    if rows < 1:
        raise ValueError("rows must be positive")
    stamps, x, y = _MAKERS[spec.name](spec, seed, rows)
    y = y.astype(np.int64) if spec.kind == CLASSIFICATION else y.astype(np.float64)
    return SeriesTable(spec.name, stamps, np.ascontiguousarray(x, dtype=np.float64), y, spec.kind, spec.period)
