"""Per-task result files, crash-resumable fan-out and CSV/JSON writers.

Each unit of work writes one JSON file under ``<out>/tasks/<stage>/``,
stamped with a hash of the task function and its parameters. Tasks whose
file exists with a matching stamp are skipped unless ``force`` is set, so an
interrupted batch resumes where it stopped, while a changed config (say a
tighter tolerance) recomputes the affected tasks. Merged tables are rebuilt from
the task files in sorted task-id order, which makes them independent of
scheduling and of the number of workers.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import tempfile
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .. import operators

log = logging.getLogger("chaoticqa")


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings, tuples become lists."""
    if isinstance(obj, float):
        if math.isfinite(obj):
            return obj
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return _clean(obj.item())
    return obj


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: Path, obj, indent: int | None = 1) -> None:
    write_atomic(path, json.dumps(_clean(obj), indent=indent, sort_keys=True) + "\n")


def read_json(path: Path):
    return json.loads(Path(path).read_text())


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in columns])
    write_atomic(path, buf.getvalue())


def read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@dataclass(frozen=True)
class Task:
    stage: str
    task_id: str
    fn: Callable
    params: dict

    def path(self, out: Path) -> Path:
        return Path(out) / "tasks" / self.stage / f"{self.task_id}.json"

    def key(self) -> str:
        fn = f"{self.fn.__module__}.{self.fn.__qualname__}"
        blob = json.dumps(_clean({"fn": fn, "params": self.params}), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def load(self, out: Path):
        """Stored result, or None when missing, unreadable or stale."""
        p = self.path(out)
        if not p.exists():
            return None
        try:
            stored = read_json(p)
        except (OSError, ValueError):
            return None
        if not isinstance(stored, dict) or stored.get("key") != self.key():
            return None
        return stored["result"]


@dataclass
class BatchOutcome:
    results: dict
    failures: dict
    skipped: int = 0
    ran: int = 0

    @property
    def ok(self) -> bool:
        return not self.failures


def _execute(fn, params, large):
    operators.allow_large_systems(large)
    try:
        return True, fn(**params)
    except Exception as exc:  # reported per task, the batch continues
        return False, f"{type(exc).__name__}: {exc}\n{traceback.format_exc(limit=3)}"


def run_tasks(tasks: list[Task], out: Path, jobs: int = 1, force: bool = False) -> BatchOutcome:
    """Run tasks (skipping finished ones) and return results keyed by task id."""
    ids = [t.task_id for t in tasks]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate task ids")
    pending = [t for t in tasks if force or t.load(out) is None]
    skipped = len(tasks) - len(pending)
    failures = {}
    large = operators.large_systems_allowed()

    def record(task, ok, value):
        if ok:
            write_json(task.path(out), {"key": task.key(), "result": value})
        else:
            failures[task.task_id] = value
            log.warning("task %s/%s failed: %s", task.stage, task.task_id, value.splitlines()[0])

    if jobs <= 1 or len(pending) <= 1:
        for task in pending:
            record(task, *_execute(task.fn, task.params, large))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [(t, pool.submit(_execute, t.fn, t.params, large)) for t in pending]
            for task, fut in futures:
                try:
                    ok, value = fut.result()
                except Exception as exc:  # worker crash
                    ok, value = False, f"{type(exc).__name__}: {exc}"
                record(task, ok, value)
    results = {}
    for task in sorted(tasks, key=lambda t: t.task_id):
        value = task.load(out)
        if value is not None:
            results[task.task_id] = value
    return BatchOutcome(results=results, failures=failures, skipped=skipped, ran=len(pending))
