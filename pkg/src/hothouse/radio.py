"""Single-hop lossy radio between all motes and the sink.

Every transmission is an independent Bernoulli trial: dropped with
loss_prob, otherwise delivered after a fixed latency, with a second
identical delivery with probability dup_prob. All randomness comes from
one seeded stream consumed in transmit-call order, so a whole delivery
schedule is reproducible from (params, call sequence).
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass

from .mote import PACKET_LEN


class RadioError(ValueError):
    """Transmission rejected before entering the medium."""


@dataclass(frozen=True)
class RadioParams:
    loss_prob: float = 0.02
    dup_prob: float = 0.01
    latency_ms: float = 50.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.loss_prob <= 1.0:
            raise ValueError("loss_prob must be in [0, 1]")
        if not 0.0 <= self.dup_prob <= 1.0:
            raise ValueError("dup_prob must be in [0, 1]")
        if self.latency_ms < 0:
            raise ValueError("latency_ms must be >= 0")

    @property
    def latency_s(self) -> float:
        return self.latency_ms / 1000.0


@dataclass(frozen=True)
class DeliveryEvent:
    packet_bytes: bytes
    arrival_t: float
    order: int  # transmit-order tiebreak for equal arrival times


class RadioMedium:
    """Pending-delivery queue plus loss/duplication accounting for one run."""

    def __init__(self, params: RadioParams) -> None:
        self.params = params
        self._rng = random.Random(params.seed)
        self._pending: list[tuple[float, int, bytes]] = []
        self._order = 0
        self._last_drain_t = float("-inf")
        self.transmitted = 0
        self.delivered = 0
        self.duplicated = 0
        self.lost = 0

    def transmit(self, packet_bytes: bytes, t: float) -> list[DeliveryEvent]:
        """Submit one packet at time t; returns the deliveries it scheduled.

        Two uniforms are drawn per call (loss, then duplication) regardless
        of the loss outcome, so the loss pattern is invariant to dup_prob.
        """
        if len(packet_bytes) != PACKET_LEN:
            raise RadioError(f"packet must be {PACKET_LEN} bytes, got {len(packet_bytes)}")
        self.transmitted += 1
        u_loss = self._rng.random()
        u_dup = self._rng.random()
        if u_loss < self.params.loss_prob:
            self.lost += 1
            return []
        arrival_t = t + self.params.latency_s
        events = [self._schedule(packet_bytes, arrival_t)]
        self.delivered += 1
        if u_dup < self.params.dup_prob:
            events.append(self._schedule(packet_bytes, arrival_t))
            self.delivered += 1
            self.duplicated += 1
        return events

    def _schedule(self, packet_bytes: bytes, arrival_t: float) -> DeliveryEvent:
        event = DeliveryEvent(packet_bytes, arrival_t, self._order)
        heapq.heappush(self._pending, (arrival_t, self._order, packet_bytes))
        self._order += 1
        return event

    def peek_next_arrival(self) -> float | None:
        return self._pending[0][0] if self._pending else None

    def drain_deliveries(self, up_to_t: float) -> list[DeliveryEvent]:
        """Remove and return every pending event with arrival_t <= up_to_t.

        Ordered by arrival time, ties broken by transmit order; each event is
        returned exactly once across the run.
        """
        if up_to_t < self._last_drain_t:
            raise RadioError(
                f"drain time went backwards ({up_to_t} < {self._last_drain_t})"
            )
        self._last_drain_t = up_to_t
        out: list[DeliveryEvent] = []
        while self._pending and self._pending[0][0] <= up_to_t:
            arrival_t, order, packet_bytes = heapq.heappop(self._pending)
            out.append(DeliveryEvent(packet_bytes, arrival_t, order))
        return out

    @property
    def pending_count(self) -> int:
        return len(self._pending)
