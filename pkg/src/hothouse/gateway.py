"""Base-station ingest path: decode, validate, calibrate, deduplicate.

Bad input is never fatal here. Every packet either becomes a calibrated
Reading or a Rejection carrying the first failing check, in a fixed check
order (length, checksum, reserved bits, channel, duplicate) so each bad
frame has exactly one canonical reason.
"""

from __future__ import annotations

import struct
from collections import Counter, OrderedDict
from dataclasses import dataclass, field
from typing import Any, BinaryIO

from .envmodel import Channel
from .mote import ADC_MAX, PACKET_LEN, MotePacket, checksum

DEDUP_WINDOW = 64

_BODY = struct.Struct(">HBHHIB")


class RejectReason:
    BAD_LENGTH = "bad_length"
    BAD_CHECKSUM = "bad_checksum"
    RESERVED_BITS_SET = "reserved_bits_set"
    UNKNOWN_CHANNEL = "unknown_channel"
    DUPLICATE = "duplicate"

    ALL = (BAD_LENGTH, BAD_CHECKSUM, RESERVED_BITS_SET, UNKNOWN_CHANNEL, DUPLICATE)


@dataclass(frozen=True)
class Rejection:
    reason: str
    raw_bytes: bytes


@dataclass(frozen=True)
class Reading:
    """A decoded, calibrated sample in engineering units with provenance."""

    node_id: int
    channel: Channel
    value: float
    sample_t: float
    arrival_t: float
    seq: int
    battery_pct: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "node_id": self.node_id,
            "channel": self.channel.code,
            "value": self.value,
            "sample_t": self.sample_t,
            "arrival_t": self.arrival_t,
            "seq": self.seq,
            "battery_pct": self.battery_pct,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Reading":
        return cls(
            node_id=int(d["node_id"]),
            channel=Channel.from_code(int(d["channel"])),
            value=float(d["value"]),
            sample_t=d["sample_t"],
            arrival_t=d["arrival_t"],
            seq=int(d["seq"]),
            battery_pct=int(d["battery_pct"]),
        )


DEFAULT_RANGES: dict[Channel, tuple[float, float]] = {
    Channel.TEMPERATURE: (0.0, 50.0),
    Channel.HUMIDITY: (0.0, 100.0),
    Channel.LIGHT: (0.0, 1000.0),
}


@dataclass
class CalibrationMap:
    """Per-channel physical range endpoints; the inverse of mote quantization."""

    ranges: dict[Channel, tuple[float, float]] = field(
        default_factory=lambda: dict(DEFAULT_RANGES)
    )

    def __post_init__(self) -> None:
        for ch in Channel:
            if ch not in self.ranges:
                raise ValueError(f"calibration missing channel {ch.name}")
            lo, hi = self.ranges[ch]
            if hi <= lo:
                raise ValueError(f"calibration {ch.name}: hi must exceed lo")

    def lo(self, channel: Channel) -> float:
        return self.ranges[channel][0]

    def hi(self, channel: Channel) -> float:
        return self.ranges[channel][1]

    def span(self, channel: Channel) -> float:
        lo, hi = self.ranges[channel]
        return hi - lo


def decode_packet(data: bytes) -> MotePacket | Rejection:
    """Parse 13 on-air bytes; any failure yields a Rejection, never a crash."""
    if len(data) != PACKET_LEN:
        return Rejection(RejectReason.BAD_LENGTH, bytes(data))
    if checksum(data[:12]) != data[12]:
        return Rejection(RejectReason.BAD_CHECKSUM, bytes(data))
    node_id, channel_code, seq, value_field, sample_t, battery = _BODY.unpack(data[:12])
    if value_field > ADC_MAX:
        return Rejection(RejectReason.RESERVED_BITS_SET, bytes(data))
    try:
        channel = Channel.from_code(channel_code)
    except ValueError:
        return Rejection(RejectReason.UNKNOWN_CHANNEL, bytes(data))
    return MotePacket(
        node_id=node_id,
        channel=channel,
        seq=seq,
        adc_counts=value_field,
        sample_t=sample_t,
        battery_pct=battery,
    )


def to_engineering(counts: int, channel: Channel, cal: CalibrationMap) -> float:
    """Invert quantization: lo + (counts/1023) * (hi - lo)."""
    if not 0 <= counts <= ADC_MAX:
        raise ValueError(f"adc counts out of range: {counts}")
    lo, hi = cal.ranges[channel]
    return lo + (counts / ADC_MAX) * (hi - lo)


class DedupWindow:
    """Per-node set of the last W sequence numbers, evicting oldest first."""

    def __init__(self, capacity: int = DEDUP_WINDOW) -> None:
        self.capacity = capacity
        self._seen: dict[int, OrderedDict[int, None]] = {}

    def check_and_insert(self, node_id: int, seq: int) -> bool:
        """True if (node_id, seq) was already in the window (a duplicate).

        Fresh sequence numbers are inserted; duplicates leave the window
        untouched.
        """
        window = self._seen.get(node_id)
        if window is None:
            window = self._seen[node_id] = OrderedDict()
        if seq in window:
            return True
        window[seq] = None
        if len(window) > self.capacity:
            window.popitem(last=False)
        return False


class Gateway:
    """Ordered ingest pipeline: bytes in, Readings (or counted Rejections) out."""

    def __init__(
        self,
        cal: CalibrationMap | None = None,
        dedup: DedupWindow | None = None,
        quarantine: BinaryIO | None = None,
    ) -> None:
        self.cal = cal if cal is not None else CalibrationMap()
        self.dedup = dedup if dedup is not None else DedupWindow()
        self.rejected_by_reason: Counter[str] = Counter()
        self.accepted = 0
        self._quarantine = quarantine

    def ingest(self, packet: MotePacket, arrival_t: float) -> Reading | Rejection:
        """Deduplicate and calibrate an already-decoded packet."""
        if self.dedup.check_and_insert(packet.node_id, packet.seq):
            rejection = Rejection(RejectReason.DUPLICATE, b"")
            self.rejected_by_reason[rejection.reason] += 1
            return rejection
        self.accepted += 1
        return Reading(
            node_id=packet.node_id,
            channel=packet.channel,
            value=to_engineering(packet.adc_counts, packet.channel, self.cal),
            sample_t=packet.sample_t,
            arrival_t=arrival_t,
            seq=packet.seq,
            battery_pct=packet.battery_pct,
        )

    def ingest_bytes(self, data: bytes, arrival_t: float) -> Reading | Rejection:
        """Full path: decode, then dedup + calibrate. Rejections are counted."""
        decoded = decode_packet(data)
        if isinstance(decoded, Rejection):
            self.rejected_by_reason[decoded.reason] += 1
            self._quarantine_frame(decoded.raw_bytes, arrival_t)
            return decoded
        result = self.ingest(decoded, arrival_t)
        if isinstance(result, Rejection):
            result = Rejection(result.reason, bytes(data))
            self._quarantine_frame(result.raw_bytes, arrival_t)
        return result

    def _quarantine_frame(self, raw: bytes, arrival_t: float) -> None:
        if self._quarantine is None:
            return
        from .trace import append_record

        append_record(self._quarantine, arrival_t, raw)
