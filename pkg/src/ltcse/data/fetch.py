"""Download cache for the UCI archives.

The cache lives in ``$LTCSE_CACHE`` (default ``~/.cache/ltcse``), one
directory per task.  Archives are checked against the sha-256 in the packaged
manifest; when the manifest has no hash yet, the first download's hash is
pinned in ``<task>/pinned.json`` and enforced from then on.
"""
from __future__ import annotations

import hashlib
import json
import os
import shutil
import tempfile
import urllib.error
import urllib.request
from importlib import resources
from pathlib import Path

from filelock import FileLock

from .table import DataError, SeriesTable, load_csv
from .tasks import get_task


class FetchError(DataError):
    pass


class IntegrityError(DataError):
    pass


def cache_root(cache_dir=None) -> Path:
    if cache_dir is not None:
        return Path(cache_dir)
    env = os.environ.get("LTCSE_CACHE")
    return Path(env) if env else Path.home() / ".cache" / "ltcse"


def load_manifest() -> dict:
    return json.loads(resources.files(__package__).joinpath("manifest.json").read_text())


def sha256_of(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _instructions(task: str, entry: dict, task_dir: Path) -> str:
    return (f"download {entry['url']} manually and place it at {task_dir / entry['archive']} "
            f"(or set LTCSE_CACHE to a directory that already holds it)")


def _expected(entry: dict, task_dir: Path) -> str | None:
    if entry.get("sha256"):
        return entry["sha256"]
    pinned = task_dir / "pinned.json"
    if pinned.exists():
        return json.loads(pinned.read_text())["sha256"]
    return None


def fetch(task: str, cache_dir=None, offline: bool = False, manifest: dict | None = None) -> Path:
    """Return the path of the verified raw archive, downloading it if needed."""
    get_task(task)
    entry = (manifest or load_manifest())[task]
    task_dir = cache_root(cache_dir) / task
    task_dir.mkdir(parents=True, exist_ok=True)
    target = task_dir / entry["archive"]
    with FileLock(str(task_dir / ".lock")):
        if not target.exists():
            if offline:
                raise FetchError(f"{task}: no cached archive and --offline is set; "
                                 + _instructions(task, entry, task_dir))
            _download(entry, target, task, task_dir)
        actual = sha256_of(target)
        expected = _expected(entry, task_dir)
        if expected is None:
            (task_dir / "pinned.json").write_text(
                json.dumps({"sha256": actual, "bytes": target.stat().st_size}, sort_keys=True))
        elif actual != expected:
            raise IntegrityError(f"{task}: hash mismatch for {target}: expected {expected}, got {actual}")
    return target


def _download(entry: dict, target: Path, task: str, task_dir: Path) -> None:
    fd, tmp = tempfile.mkstemp(dir=task_dir, suffix=".part")
    try:
        with os.fdopen(fd, "wb") as out, urllib.request.urlopen(entry["url"], timeout=60) as resp:
            shutil.copyfileobj(resp, out)
        os.replace(tmp, target)
    except (urllib.error.URLError, OSError) as exc:
        raise FetchError(f"{task}: download failed ({exc}); " + _instructions(task, entry, task_dir)) from exc
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def load_task(task: str, cache_dir=None, offline: bool = False) -> SeriesTable:
    """Load the converted CSV from the cache, fetching and converting on first use."""
    from .raw import convert

    spec = get_task(task)
    csv_path = cache_root(cache_dir) / task / f"{task}.csv"
    if not csv_path.exists():
        archive = fetch(task, cache_dir, offline=offline)
        convert(task, archive, csv_path)
    return load_csv(csv_path, spec)
