"""Scenario execution: one virtual clock driving motes, radio, ingest and alarms.

The event loop visits every sample instant (k * interval, k >= 1, up to and
including duration_s) and every radio arrival, in time order. At each step it
ticks due nodes, drains the radio into the gateway pipeline, and runs the
silence watchdog. After the sampling horizon it keeps draining until the
medium is empty, so packets in flight at duration_s still land.

Batch mode runs as fast as possible; live mode maps virtual time affinely
onto the wall clock (speedup virtual seconds per wall second) while an API
service mutates state through the same lock.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from .alarms import AlarmRegistry, AlarmTransition, ThresholdConfig
from .config import ScenarioConfig, config_to_dict
from .envmodel import Channel, Environment, FaultEvent, VirtualClock
from .gateway import Gateway, Reading, Rejection
from .mote import NodeState, encode_packet, node_tick
from .radio import DeliveryEvent, RadioMedium
from .seeds import derive_stream_seed
from .store import ReadingStore
from . import trace

logger = logging.getLogger(__name__)

_TRANSITION_EVENT_TYPE = {
    "raised": "alarm_raised",
    "acknowledged": "alarm_acked",
    "cleared": "alarm_cleared",
}

# core event listener: (event_type, payload_dict) -> None
Listener = Callable[[str, dict[str, Any]], None]


def _open_for_append(path: str) -> Any:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "ab")


@dataclass
class RunReport:
    """Summarized, hashable outcome of one run."""

    transmitted: int
    delivered: int
    duplicated: int
    lost: int
    rejected_by_reason: dict[str, int]
    readings_stored: int
    alarms_by_kind: dict[str, int]
    event_log_hash: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "transmitted": self.transmitted,
            "delivered": self.delivered,
            "duplicated": self.duplicated,
            "lost": self.lost,
            "rejected_by_reason": dict(sorted(self.rejected_by_reason.items())),
            "readings_stored": self.readings_stored,
            "alarms_by_kind": dict(sorted(self.alarms_by_kind.items())),
            "event_log_hash": self.event_log_hash,
        }

    def conservation_holds(self) -> bool:
        dup_rejected = self.rejected_by_reason.get("duplicate", 0)
        return (
            self.delivered == self.readings_stored + dup_rejected
            and self.transmitted == self.delivered + self.lost - self.duplicated
        )


class SimCore:
    """Owns all mutable state of one scenario run.

    Single-threaded by construction; in live mode the API service shares
    `self.lock`, so every mutation (ingest step, ack, threshold update,
    fault injection) is serialized.
    """

    def __init__(
        self,
        cfg: ScenarioConfig,
        *,
        store: ReadingStore | None = None,
        enable_trace: bool = True,
    ) -> None:
        self.cfg = cfg
        self.lock = threading.RLock()
        self.clock = VirtualClock()
        self.env = Environment(cfg.env, seed=derive_stream_seed(cfg.seed, "env"))
        self.nodes: dict[int, NodeState] = {
            n.id: NodeState(
                node_id=n.id,
                location=n.location,
                sampling_interval_s=n.interval_s,
                battery_pct=n.battery_pct,
            )
            for n in cfg.nodes
        }
        self.radio = RadioMedium(cfg.radio)
        self.store = store if store is not None else ReadingStore(cfg.store_path)
        self._quarantine_file = (
            _open_for_append(cfg.quarantine_path) if cfg.quarantine_path else None
        )
        self.gateway = Gateway(cfg.calibration, quarantine=self._quarantine_file)
        self.registry = AlarmRegistry(notifier=self._on_transition)
        self.thresholds: dict[Channel, ThresholdConfig] = cfg.threshold_map()
        self.last_heard: dict[int, float] = {n.id: 0.0 for n in cfg.nodes}
        self.last_reading: dict[tuple[int, Channel], Reading] = {}
        self.readings_stored = 0
        self._event_hash = hashlib.sha256()
        self._listeners: list[Listener] = []
        self._trace_file = None
        if enable_trace and cfg.trace_path:
            Path(cfg.trace_path).parent.mkdir(parents=True, exist_ok=True)
            self._trace_file = open(cfg.trace_path, "wb")
            trace.write_header(self._trace_file, config_to_dict(cfg))

    # -- observers -----------------------------------------------------------

    def add_listener(self, listener: Listener) -> None:
        self._listeners.append(listener)

    def _publish(self, event_type: str, payload: dict[str, Any]) -> None:
        for listener in self._listeners:
            listener(event_type, payload)

    def now(self) -> float:
        return self.clock.now

    def intervals(self) -> dict[int, float]:
        return {nid: float(n.sampling_interval_s) for nid, n in self.nodes.items()}

    # -- mutations reachable from the API -------------------------------------

    def inject_fault(
        self,
        channel: Channel | int | str,
        kind: str,
        start_t: float | None,
        duration_s: float,
        magnitude: float,
    ) -> FaultEvent:
        with self.lock:
            if start_t is None:
                start_t = self.clock.now
            return self.env.registry.inject(channel, kind, start_t, duration_s, magnitude)

    def set_threshold(self, cfg: ThresholdConfig) -> ThresholdConfig:
        with self.lock:
            self.thresholds[cfg.channel] = cfg
            return cfg

    def acknowledge(self, alarm_id: str, who: str):
        with self.lock:
            return self.registry.acknowledge(alarm_id, who, self.clock.now)

    # -- pipeline -------------------------------------------------------------

    def _on_transition(self, transition: AlarmTransition) -> None:
        alarm = transition.alarm
        ch = alarm.channel.code if alarm.channel is not None else "-"
        self._event_hash.update(
            f"A|{transition.action}|{alarm.alarm_id}|{alarm.kind.value}"
            f"|{alarm.node_id}|{ch}|{transition.t!r}\n".encode()
        )
        self._publish(_TRANSITION_EVENT_TYPE[transition.action], alarm.to_dict())

    def _ingest(self, delivery: DeliveryEvent) -> None:
        result = self.gateway.ingest_bytes(delivery.packet_bytes, delivery.arrival_t)
        if isinstance(result, Rejection):
            return
        reading = result
        self.store.append(reading)
        self.readings_stored += 1
        self._event_hash.update(
            f"R|{reading.node_id}|{reading.channel.code}|{reading.seq}"
            f"|{reading.sample_t!r}|{reading.value!r}|{reading.arrival_t!r}\n".encode()
        )
        self.last_heard[reading.node_id] = reading.arrival_t
        self.registry.note_heard(reading.node_id, reading.arrival_t)
        cfg_t = self.thresholds.get(reading.channel)
        if cfg_t is not None:
            self.registry.evaluate_reading(reading, cfg_t)
            prev = self.last_reading.get((reading.node_id, reading.channel))
            if prev is not None:
                self.registry.check_rate(prev, reading, cfg_t)
        self.last_reading[(reading.node_id, reading.channel)] = reading
        self._publish("reading", reading.to_dict())

    def _next_sample_t(self) -> float | None:
        next_t: float | None = None
        for node in self.nodes.values():
            if not node.alive:
                continue
            due = node.earliest_due()
            if due > self.cfg.duration_s:
                continue
            if next_t is None or due < next_t:
                next_t = float(due)
        return next_t

    def next_event_t(self) -> float | None:
        candidates = [
            t for t in (self._next_sample_t(), self.radio.peek_next_arrival()) if t is not None
        ]
        return min(candidates) if candidates else None

    def step(self, t: float) -> None:
        """Process every sample due and every arrival up to and including t."""
        self.clock.advance_to(t)
        ranges = self.cfg.calibration.ranges
        for node_id in sorted(self.nodes):
            node = self.nodes[node_id]
            if not node.alive or node.earliest_due() > t:
                continue
            for packet in node_tick(node, t, self.env.value, ranges):
                data = encode_packet(packet)
                if self._trace_file is not None:
                    trace.append_record(self._trace_file, t, data)
                self.radio.transmit(data, t)
        for delivery in self.radio.drain_deliveries(t):
            self._ingest(delivery)
        self.registry.check_silence(self.last_heard, t, self.intervals())

    # -- run modes -------------------------------------------------------------

    def run_batch(self) -> RunReport:
        while True:
            with self.lock:
                t = self.next_event_t()
                if t is None:
                    break
                self.step(t)
        return self.finalize()

    def run_live(self, stop_event: threading.Event | None = None) -> RunReport:
        """Pace the event loop so speedup virtual seconds pass per wall second."""
        speedup = self.cfg.speedup
        if speedup <= 0:
            raise ValueError("run_live requires speedup > 0")
        start_wall = time.monotonic()
        try:
            while True:
                with self.lock:
                    t = self.next_event_t()
                if t is None:
                    break
                deadline = start_wall + t / speedup
                while True:
                    remaining = deadline - time.monotonic()
                    if remaining <= 0:
                        break
                    if stop_event is not None and stop_event.is_set():
                        return self.finalize()
                    time.sleep(min(remaining, 0.05))
                with self.lock:
                    self.step(t)
                if stop_event is not None and stop_event.is_set():
                    break
        except KeyboardInterrupt:
            logger.info("interrupted, finalizing run")
        return self.finalize()

    def run(self, stop_event: threading.Event | None = None) -> RunReport:
        if self.cfg.speedup > 0:
            return self.run_live(stop_event)
        return self.run_batch()

    # -- reporting ---------------------------------------------------------------

    def report(self) -> RunReport:
        """Counters so far; callable mid-run (under lock) or after finalize."""
        return RunReport(
            transmitted=self.radio.transmitted,
            delivered=self.radio.delivered,
            duplicated=self.radio.duplicated,
            lost=self.radio.lost,
            rejected_by_reason=dict(self.gateway.rejected_by_reason),
            readings_stored=self.readings_stored,
            alarms_by_kind=dict(self.registry.raised_by_kind),
            event_log_hash=self._event_hash.copy().hexdigest()[:16],
        )

    def finalize(self) -> RunReport:
        with self.lock:
            self.store.flush()
            if self._trace_file is not None:
                self._trace_file.close()
                self._trace_file = None
            if self._quarantine_file is not None:
                self._quarantine_file.close()
                self._quarantine_file = None
            return self.report()

    def close(self) -> None:
        self.finalize()
        self.store.close()


def run_scenario(cfg: ScenarioConfig, store: ReadingStore | None = None) -> RunReport:
    """Run one scenario start to finish (batch or live per cfg.speedup)."""
    core = SimCore(cfg, store=store)
    try:
        return core.run()
    finally:
        core.close()


def replay_trace(trace_path: str | Path) -> tuple[RunReport, SimCore]:
    """Re-run a recorded packet trace through radio, gateway, store and alarms.

    The embedded config supplies radio parameters (same seed, so the same
    loss/duplication pattern), calibration and thresholds. Readings land in
    a fresh in-memory store; the original store and trace files are not
    touched.
    """
    from .config import parse_config

    header, records = trace.read_trace(trace_path)
    # never write back to the recorded run's files
    header = dict(header)
    header["store_path"] = None
    header["trace_path"] = None
    header["quarantine_path"] = None
    cfg = parse_config(header)
    core = SimCore(cfg, store=ReadingStore(None), enable_trace=False)

    def drain_step(t: float) -> None:
        core.clock.advance_to(t)
        for delivery in core.radio.drain_deliveries(t):
            core._ingest(delivery)
        core.registry.check_silence(core.last_heard, t, core.intervals())

    i = 0
    while i < len(records):
        t = records[i][0]
        arrival = core.radio.peek_next_arrival()
        while arrival is not None and arrival < t:
            drain_step(arrival)
            arrival = core.radio.peek_next_arrival()
        core.clock.advance_to(t)
        while i < len(records) and records[i][0] == t:
            core.radio.transmit(records[i][1], t)
            i += 1
        drain_step(t)
    arrival = core.radio.peek_next_arrival()
    while arrival is not None:
        drain_step(arrival)
        arrival = core.radio.peek_next_arrival()
    return core.report(), core


def write_report(report: RunReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2) + "\n")
