"""Sensor node behaviour: periodic sampling, 10-bit quantization, packet framing.

A node samples every monitored channel on its own schedule, quantizes each
physical value into 10-bit ADC counts, and emits one 13-byte packet per due
instant. Packets share a single wrap-around sequence counter per node and
each transmission costs a sliver of battery.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .envmodel import Channel

PACKET_LEN = 13
ADC_MAX = 1023
SEQ_MOD = 1 << 16
DEFAULT_SAMPLING_INTERVAL_S = 30
DEFAULT_DRAIN_PER_PACKET = 0.01

# big-endian: node_id u16, channel u8, seq u16, value u16, sample_t u32, battery u8
_BODY = struct.Struct(">HBHHIB")


class CalibrationError(ValueError):
    """Physical range endpoints do not define a usable ADC mapping."""


class EncodeError(ValueError):
    """Packet field out of range for the wire layout."""


@dataclass(frozen=True)
class MotePacket:
    """Decoded form of the 13-byte on-air record."""

    node_id: int
    channel: Channel
    seq: int
    adc_counts: int
    sample_t: int
    battery_pct: int


def quantize_sample(value: float, lo: float, hi: float) -> int:
    """Map a physical value onto 10-bit ADC counts, clamped to [0, 1023].

    Rounds half away from zero upward (round-half-up), then clamps.
    """
    if hi <= lo:
        raise CalibrationError(f"calibration range invalid: lo={lo} hi={hi}")
    scaled = (value - lo) / (hi - lo) * ADC_MAX
    counts = math.floor(scaled + 0.5)
    return min(max(counts, 0), ADC_MAX)


def checksum(body: bytes) -> int:
    """XOR of all bytes in body."""
    acc = 0
    for b in body:
        acc ^= b
    return acc


def encode_packet(p: MotePacket) -> bytes:
    """Serialize to the 13-byte big-endian wire layout with trailing XOR checksum."""
    if not 0 < p.node_id <= 0xFFFF:
        raise EncodeError(f"node_id out of range: {p.node_id}")
    if not 0 <= p.seq < SEQ_MOD:
        raise EncodeError(f"seq out of range: {p.seq}")
    if not 0 <= p.adc_counts <= ADC_MAX:
        raise EncodeError(f"adc_counts out of range: {p.adc_counts}")
    if not 0 <= p.sample_t <= 0xFFFFFFFF:
        raise EncodeError(f"sample_t out of range: {p.sample_t}")
    if not 0 <= p.battery_pct <= 100:
        raise EncodeError(f"battery_pct out of range: {p.battery_pct}")
    body = _BODY.pack(
        p.node_id, p.channel.code, p.seq, p.adc_counts, p.sample_t, p.battery_pct
    )
    return body + bytes([checksum(body)])


@dataclass
class NodeState:
    """Mutable per-node simulation state.

    next_due_t starts one interval into the run, so a zero-length scenario
    emits nothing. The seq counter is shared across channels (one radio
    send queue) and wraps 65535 -> 0.
    """

    node_id: int
    location: str = ""
    sampling_interval_s: int = DEFAULT_SAMPLING_INTERVAL_S
    battery_pct: float = 100.0
    drain_per_packet: float = DEFAULT_DRAIN_PER_PACKET
    seq: int = 0
    next_due_t: dict[Channel, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.node_id <= 0:
            raise ValueError("node_id must be > 0 (0 is the sink)")
        if self.node_id > 0xFFFF:
            raise ValueError("node_id must fit 16 bits")
        if int(self.sampling_interval_s) != self.sampling_interval_s or self.sampling_interval_s < 1:
            raise ValueError("sampling_interval_s must be a positive integer")
        self.sampling_interval_s = int(self.sampling_interval_s)
        if not 0 <= self.battery_pct <= 100:
            raise ValueError("battery_pct must be in [0, 100]")
        if not self.next_due_t:
            self.next_due_t = {ch: self.sampling_interval_s for ch in Channel}

    @property
    def alive(self) -> bool:
        return self.battery_pct > 0.0

    def earliest_due(self) -> int:
        return min(self.next_due_t.values())


def node_tick(
    state: NodeState,
    t: float,
    read_env: Callable[[Channel, float], float],
    ranges: Mapping[Channel, tuple[float, float]],
) -> list[MotePacket]:
    """Emit one packet per due sample instant up to and including time t.

    Late ticks catch up: every missed due instant still produces its packet,
    stamped with the due instant (never t). A node whose battery has reached
    zero advances its schedule but emits nothing, forever.
    """
    due: list[tuple[int, Channel]] = []
    for ch in sorted(state.next_due_t, key=lambda c: c.code):
        while state.next_due_t[ch] <= t:
            due.append((state.next_due_t[ch], ch))
            state.next_due_t[ch] += state.sampling_interval_s
    if not state.alive:
        return []

    packets: list[MotePacket] = []
    for due_t, ch in sorted(due, key=lambda item: (item[0], item[1].code)):
        if not state.alive:
            break
        lo, hi = ranges[ch]
        value = read_env(ch, due_t)
        packets.append(
            MotePacket(
                node_id=state.node_id,
                channel=ch,
                seq=state.seq,
                adc_counts=quantize_sample(value, lo, hi),
                sample_t=due_t,
                battery_pct=int(math.floor(state.battery_pct + 0.5)),
            )
        )
        state.seq = (state.seq + 1) % SEQ_MOD
        state.battery_pct = max(0.0, state.battery_pct - state.drain_per_packet)
    return packets
