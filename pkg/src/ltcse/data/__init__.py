"""Dataset schemas, loading, normalisation, windowing and synthetic fixtures."""
from .fetch import FetchError, IntegrityError, cache_root, fetch, load_task
from .synth import synth_fixture
from .table import (DataError, Normalizer, SchemaError, SequenceBatch, SeriesTable, TaskData,
                    apply_normalizer, fit_normalizer, load_csv, prepare, split, split_points,
                    to_windows, window, write_csv)
from .tasks import CLASSIFICATION, REGRESSION, TASKS, TaskSpec, get_task

__all__ = [
    "TASKS", "TaskSpec", "get_task", "CLASSIFICATION", "REGRESSION",
    "SeriesTable", "SequenceBatch", "TaskData", "Normalizer",
    "DataError", "SchemaError", "FetchError", "IntegrityError",
    "load_csv", "write_csv", "fit_normalizer", "apply_normalizer", "window", "split", "split_points",
    "to_windows", "prepare", "synth_fixture", "fetch", "load_task", "cache_root",
]
