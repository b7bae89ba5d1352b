"""Sample logs on disk: newline-delimited JSON and CSV."""
from __future__ import annotations

import csv
import json
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Iterable, Iterator

from .engine import SampleRecord
from .errors import InvalidArgument

CSV_COLUMNS = ("time", "x", "y", "serving_node", "rsrp", "rtt", "one_way_latency",
               "link_state", "hop_count", "trace")


def dumps_record(record: SampleRecord) -> str:
    return json.dumps(record.to_dict(), sort_keys=True, separators=(",", ":"))


@contextmanager
def atomic_output(path):
    """Yield a temp file path that replaces ``path`` only if the block succeeds."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        yield tmp
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_ndjson(records: Iterable[SampleRecord], path) -> int:
    n = 0
    with atomic_output(path) as tmp, open(tmp, "w") as fh:
        for rec in records:
            fh.write(dumps_record(rec))
            fh.write("\n")
            n += 1
    return n


def write_csv(records: Iterable[SampleRecord], path) -> int:
    def cell(v):
        return "" if v is None else (repr(v) if isinstance(v, float) else str(v))

    n = 0
    with atomic_output(path) as tmp, open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for rec in records:
            w.writerow([cell(rec.time), cell(rec.position[0]), cell(rec.position[1]),
                        cell(rec.serving_node), cell(rec.rsrp), cell(rec.rtt),
                        cell(rec.one_way_latency), rec.link_state, rec.hop_count,
                        cell(rec.trace)])
            n += 1
    return n


def _iter_ndjson(path) -> Iterator[SampleRecord]:
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield SampleRecord.from_dict(json.loads(line))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise InvalidArgument(f"{path}:{lineno}: bad sample record ({exc})") from None


def _iter_csv(path) -> Iterator[SampleRecord]:
    def num(v, cast=float):
        return None if v == "" else cast(v)

    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise InvalidArgument(f"{path}: unexpected CSV header")
        for lineno, row in enumerate(reader, 2):
            try:
                yield SampleRecord(
                    time=float(row["time"]), position=(float(row["x"]), float(row["y"])),
                    serving_node=row["serving_node"] or None, rsrp=num(row["rsrp"]),
                    rtt=num(row["rtt"]), one_way_latency=num(row["one_way_latency"]),
                    link_state=row["link_state"], hop_count=int(row["hop_count"]),
                    trace=num(row["trace"], int))
            except ValueError as exc:
                raise InvalidArgument(f"{path}:{lineno}: bad sample row ({exc})") from None


def read_log(path) -> list[SampleRecord]:
    """Read a log written by ``write_ndjson`` or ``write_csv`` (by extension)."""
    if str(path).endswith(".csv"):
        return list(_iter_csv(path))
    return list(_iter_ndjson(path))
