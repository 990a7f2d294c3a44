"""Replayable packet-trace files.

Layout: an 8-byte magic, one length-prefixed JSON header (the scenario
config that produced the trace, so `replay <trace>` needs no second
argument), then one record per transmitted packet:

    [8-byte BE float64 transmit_t][2-byte BE length][payload bytes]

Quarantine files reuse the bare record framing with arrival times and no
magic/header.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Any, BinaryIO, Iterator

MAGIC = b"GHTRACE1"

_HEADER_LEN = struct.Struct(">I")
_RECORD = struct.Struct(">dH")


class TraceError(Exception):
    """Trace file is malformed."""


def write_header(f: BinaryIO, config: dict[str, Any]) -> None:
    payload = json.dumps(config, separators=(",", ":")).encode()
    f.write(MAGIC)
    f.write(_HEADER_LEN.pack(len(payload)))
    f.write(payload)


def append_record(f: BinaryIO, t: float, payload: bytes) -> None:
    f.write(_RECORD.pack(t, len(payload)))
    f.write(payload)


def read_trace(path: str | Path) -> tuple[dict[str, Any], list[tuple[float, bytes]]]:
    """Load header config and all (transmit_t, packet_bytes) records."""
    raw = Path(path).read_bytes()
    if not raw.startswith(MAGIC):
        raise TraceError(f"{path}: bad magic, not a trace file")
    offset = len(MAGIC)
    if len(raw) < offset + _HEADER_LEN.size:
        raise TraceError(f"{path}: truncated header")
    (header_len,) = _HEADER_LEN.unpack_from(raw, offset)
    offset += _HEADER_LEN.size
    if len(raw) < offset + header_len:
        raise TraceError(f"{path}: truncated header payload")
    try:
        config = json.loads(raw[offset : offset + header_len])
    except json.JSONDecodeError as exc:
        raise TraceError(f"{path}: header is not valid JSON: {exc}") from None
    offset += header_len
    return config, _parse_records(raw, offset, str(path))


def _parse_records(raw: bytes, offset: int, origin: str) -> list[tuple[float, bytes]]:
    records: list[tuple[float, bytes]] = []
    while offset < len(raw):
        if len(raw) < offset + _RECORD.size:
            raise TraceError(f"{origin}: truncated record at byte {offset}")
        t, length = _RECORD.unpack_from(raw, offset)
        offset += _RECORD.size
        if len(raw) < offset + length:
            raise TraceError(f"{origin}: truncated record payload at byte {offset}")
        records.append((t, raw[offset : offset + length]))
        offset += length
    return records


def read_bare_records(path: str | Path) -> list[tuple[float, bytes]]:
    """Parse a headerless record stream (the quarantine file format)."""
    return _parse_records(Path(path).read_bytes(), 0, str(path))


def iter_records(path: str | Path) -> Iterator[tuple[float, bytes]]:
    _, records = read_trace(path)
    return iter(records)
