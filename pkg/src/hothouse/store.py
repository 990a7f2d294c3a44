"""Append-only time-series persistence with range queries and bucket aggregation.

One self-describing JSON record per line, in append (arrival) order, with an
in-memory index rebuilt on load. No record is ever mutated or deleted. A
truncated final line is recovered by dropping it; corruption anywhere else
aborts the load and names the offending line.
"""

from __future__ import annotations

import bisect
import json
import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator

from .envmodel import Channel
from .gateway import Reading

logger = logging.getLogger(__name__)


class QueryError(ValueError):
    """Malformed query parameters."""


class StoreLoadError(Exception):
    """Log file is corrupt before its final line."""

    def __init__(self, path: str, line_no: int, message: str) -> None:
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class StoreWriteError(Exception):
    """Appending or flushing the log failed; data may not be durable."""


@dataclass(frozen=True)
class SeriesKey:
    node_id: int
    channel: Channel

    def sort_key(self) -> tuple[int, int]:
        return (self.node_id, self.channel.code)


@dataclass(frozen=True)
class Bucket:
    start_t: float
    end_t: float
    count: int
    min: float | None = None
    max: float | None = None
    avg: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "start_t": self.start_t,
            "end_t": self.end_t,
            "count": self.count,
            "min": self.min,
            "max": self.max,
            "avg": self.avg,
        }


class ReadingStore:
    """Reading log plus per-series index ordered by (sample_t, record_id).

    path=None keeps everything in memory (handy for tests and replays);
    otherwise records are appended to a JSONL file and reloaded on open.
    """

    def __init__(self, path: str | os.PathLike[str] | None = None) -> None:
        self.path = str(path) if path is not None else None
        self._next_id = 1
        self._series: dict[SeriesKey, list[tuple[float, int, Reading]]] = {}
        self._latest: dict[SeriesKey, tuple[float, int, Reading]] = {}
        self._count = 0
        self.recovered_tail_records = 0
        self._file = None
        if self.path is not None:
            self._load(self.path)
            Path(self.path).parent.mkdir(parents=True, exist_ok=True)
            self._file = open(self.path, "ab")

    # -- persistence ----------------------------------------------------

    def _load(self, path: str) -> None:
        p = Path(path)
        if not p.exists():
            return
        raw = p.read_bytes()
        if not raw:
            return
        lines = raw.split(b"\n")
        # a well-formed file ends with a newline, leaving one empty trailer
        if lines and lines[-1] == b"":
            lines.pop()
        for idx, line in enumerate(lines):
            try:
                record = json.loads(line)
                record_id = int(record["record_id"])
                reading = Reading.from_dict(record)
            except (ValueError, KeyError, TypeError) as exc:
                if idx == len(lines) - 1:
                    self.recovered_tail_records += 1
                    logger.warning(
                        "%s: dropped truncated final record at line %d", path, idx + 1
                    )
                    break
                raise StoreLoadError(path, idx + 1, f"bad record: {exc}") from exc
            self._index(record_id, reading)
            self._next_id = max(self._next_id, record_id + 1)

    def append(self, reading: Reading) -> int:
        """Persist one reading; returns its record_id (append order)."""
        record_id = self._next_id
        self._next_id += 1
        if self._file is not None:
            line = json.dumps(
                {"record_id": record_id, **reading.to_dict()}, separators=(",", ":")
            )
            try:
                self._file.write(line.encode() + b"\n")
            except OSError as exc:
                raise StoreWriteError(f"append failed: {exc}") from exc
        self._index(record_id, reading)
        return record_id

    def _index(self, record_id: int, reading: Reading) -> None:
        key = SeriesKey(reading.node_id, reading.channel)
        entry = (reading.sample_t, record_id, reading)
        series = self._series.get(key)
        if series is None:
            series = self._series[key] = []
        if series and entry[:2] < series[-1][:2]:
            bisect.insort(series, entry[:2] + (reading,))
        else:
            series.append(entry)
        latest = self._latest.get(key)
        if latest is None or entry[:2] > latest[:2]:
            self._latest[key] = entry
        self._count += 1

    def flush(self) -> None:
        if self._file is None:
            return
        try:
            self._file.flush()
            os.fsync(self._file.fileno())
        except OSError as exc:
            raise StoreWriteError(f"flush failed: {exc}") from exc

    def close(self) -> None:
        if self._file is not None:
            self.flush()
            self._file.close()
            self._file = None

    # -- queries ---------------------------------------------------------

    def keys(self) -> list[SeriesKey]:
        return sorted(self._series, key=SeriesKey.sort_key)

    @property
    def count(self) -> int:
        return self._count

    def query_range(self, key: SeriesKey, t0: float, t1: float) -> list[Reading]:
        """Readings with t0 <= sample_t < t1, ordered by (sample_t, record_id)."""
        if t0 > t1:
            raise QueryError(f"t0 must be <= t1 (got {t0} > {t1})")
        series = self._series.get(key, [])
        lo = bisect.bisect_left(series, (t0,))
        hi = bisect.bisect_left(series, (t1,))
        return [entry[2] for entry in series[lo:hi]]

    def aggregate(
        self, key: SeriesKey, t0: float, t1: float, bucket_s: float
    ) -> list[Bucket]:
        """Partition [t0, t1) into half-open buckets of width bucket_s."""
        if bucket_s <= 0:
            raise QueryError(f"bucket_s must be > 0 (got {bucket_s})")
        if t0 > t1:
            raise QueryError(f"t0 must be <= t1 (got {t0} > {t1})")
        n = math.ceil((t1 - t0) / bucket_s)
        mins: list[float | None] = [None] * n
        maxs: list[float | None] = [None] * n
        sums = [0.0] * n
        counts = [0] * n
        for reading in self.query_range(key, t0, t1):
            idx = int((reading.sample_t - t0) // bucket_s)
            if idx >= n:  # float edge at the top boundary
                idx = n - 1
            v = reading.value
            if counts[idx] == 0:
                mins[idx] = v
                maxs[idx] = v
            else:
                if v < mins[idx]:  # type: ignore[operator]
                    mins[idx] = v
                if v > maxs[idx]:  # type: ignore[operator]
                    maxs[idx] = v
            sums[idx] += v
            counts[idx] += 1
        buckets = []
        for i in range(n):
            start = t0 + i * bucket_s
            end = min(start + bucket_s, t1)
            if counts[i] == 0:
                buckets.append(Bucket(start, end, 0))
            else:
                buckets.append(
                    Bucket(start, end, counts[i], mins[i], maxs[i], sums[i] / counts[i])
                )
        return buckets

    def latest(self, key: SeriesKey) -> Reading | None:
        """Reading with max sample_t, ties broken by max record_id."""
        entry = self._latest.get(key)
        return entry[2] if entry is not None else None

    def latest_all(self) -> Iterator[tuple[SeriesKey, Reading]]:
        for key in self.keys():
            entry = self._latest.get(key)
            if entry is not None:
                yield key, entry[2]
