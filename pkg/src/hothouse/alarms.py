"""Out-of-range, rapid-change and node-silence detection with alarm lifecycle.

An alarm is raised the moment a violation is observed, may be acknowledged
by an operator, and clears only after the configured number of consecutive
in-band readings (hysteresis keeps a value hovering at the threshold from
flapping). Legal transitions: active -> acknowledged -> cleared and
active -> cleared. Every transition is reported to the registry's notifier
exactly once.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable

from .envmodel import Channel
from .gateway import Reading

DEFAULT_HYSTERESIS: dict[Channel, float] = {
    Channel.TEMPERATURE: 0.5,
    Channel.HUMIDITY: 2.0,
    Channel.LIGHT: 20.0,
}
DEFAULT_CLEAR_COUNT = 3
DEFAULT_SILENT_AFTER = 3.0


class AlarmKind(Enum):
    LOW = "low"
    HIGH = "high"
    RAPID_CHANGE = "rapid_change"
    NODE_SILENT = "node_silent"


class AlarmState(Enum):
    ACTIVE = "active"
    ACKNOWLEDGED = "acknowledged"
    CLEARED = "cleared"


class AlarmNotFound(KeyError):
    pass


class InvalidAlarmState(ValueError):
    pass


@dataclass
class ThresholdConfig:
    """Acceptable range, rate limit and clearing behaviour for one channel."""

    channel: Channel
    min_ok: float
    max_ok: float
    rate_limit: float
    hysteresis: float | None = None
    clear_count: int = DEFAULT_CLEAR_COUNT

    def __post_init__(self) -> None:
        if self.min_ok >= self.max_ok:
            raise ValueError("min_ok must be < max_ok")
        if self.rate_limit <= 0:
            raise ValueError("rate_limit must be > 0")
        if self.hysteresis is None:
            self.hysteresis = DEFAULT_HYSTERESIS[self.channel]
        if self.hysteresis < 0:
            raise ValueError("hysteresis must be >= 0")
        if self.clear_count < 1:
            raise ValueError("clear_count must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        return {
            "channel": self.channel.code,
            "min_ok": self.min_ok,
            "max_ok": self.max_ok,
            "rate_limit": self.rate_limit,
            "hysteresis": self.hysteresis,
            "clear_count": self.clear_count,
        }


@dataclass
class Alarm:
    alarm_id: str
    kind: AlarmKind
    node_id: int
    channel: Channel | None
    raised_t: float
    state: AlarmState = AlarmState.ACTIVE
    peak_value: float | None = None
    ack_by: str | None = None
    ack_t: float | None = None
    cleared_t: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "alarm_id": self.alarm_id,
            "kind": self.kind.value,
            "node_id": self.node_id,
            "channel": self.channel.code if self.channel is not None else None,
            "raised_t": self.raised_t,
            "state": self.state.value,
            "peak_value": self.peak_value,
            "ack_by": self.ack_by,
            "ack_t": self.ack_t,
            "cleared_t": self.cleared_t,
        }


@dataclass(frozen=True)
class AlarmTransition:
    action: str  # "raised" | "acknowledged" | "cleared"
    alarm: Alarm
    t: float


Notifier = Callable[[AlarmTransition], None]

# registry keys: (node_id, channel or None, kind)
_Key = tuple[int, Channel | None, AlarmKind]


class AlarmRegistry:
    """Owns every alarm of a run and enforces the transition table.

    At most one non-cleared alarm exists per (node, channel, kind); raising
    against an existing one only refreshes its peak value and produces no
    new notification.
    """

    def __init__(self, notifier: Notifier | None = None) -> None:
        self._alarms: dict[str, Alarm] = {}
        self._order: list[Alarm] = []
        self._open: dict[_Key, Alarm] = {}
        self._clear_runs: dict[tuple[_Key, str], int] = {}
        self._next_id = 1
        self._notifier = notifier
        self.raised_by_kind: Counter[str] = Counter()
        self.degenerate_rate_pairs = 0

    # -- plumbing ---------------------------------------------------------

    def _emit(self, action: str, alarm: Alarm, t: float) -> AlarmTransition:
        transition = AlarmTransition(action, alarm, t)
        if self._notifier is not None:
            self._notifier(transition)
        return transition

    def _raise(
        self,
        kind: AlarmKind,
        node_id: int,
        channel: Channel | None,
        t: float,
        peak: float | None,
    ) -> AlarmTransition:
        alarm = Alarm(
            alarm_id=f"alm-{self._next_id:06d}",
            kind=kind,
            node_id=node_id,
            channel=channel,
            raised_t=t,
            peak_value=peak,
        )
        self._next_id += 1
        self._alarms[alarm.alarm_id] = alarm
        self._order.append(alarm)
        self._open[(node_id, channel, kind)] = alarm
        self.raised_by_kind[kind.value] += 1
        return self._emit("raised", alarm, t)

    def _clear(self, alarm: Alarm, t: float) -> AlarmTransition:
        alarm.state = AlarmState.CLEARED
        alarm.cleared_t = t
        del self._open[(alarm.node_id, alarm.channel, alarm.kind)]
        return self._emit("cleared", alarm, t)

    def _open_alarm(
        self, node_id: int, channel: Channel | None, kind: AlarmKind
    ) -> Alarm | None:
        return self._open.get((node_id, channel, kind))

    # -- range alarms -------------------------------------------------------

    def evaluate_reading(
        self, reading: Reading, cfg: ThresholdConfig
    ) -> list[AlarmTransition]:
        """Apply the low/high threshold rules to one accepted reading."""
        assert cfg.channel is reading.channel, "config/reading channel mismatch"
        transitions: list[AlarmTransition] = []
        node, ch, v, t = reading.node_id, reading.channel, reading.value, reading.arrival_t

        high = self._open_alarm(node, ch, AlarmKind.HIGH)
        low = self._open_alarm(node, ch, AlarmKind.LOW)

        if v > cfg.max_ok:
            if high is None:
                transitions.append(self._raise(AlarmKind.HIGH, node, ch, t, v))
            elif high.peak_value is None or v > high.peak_value:
                high.peak_value = v
        elif v < cfg.min_ok:
            if low is None:
                transitions.append(self._raise(AlarmKind.LOW, node, ch, t, v))
            elif low.peak_value is None or v < low.peak_value:
                low.peak_value = v

        in_band = (cfg.min_ok + cfg.hysteresis) <= v <= (cfg.max_ok - cfg.hysteresis)
        for alarm in (high, low):
            if alarm is None:
                continue
            run_key = ((node, ch, alarm.kind), alarm.alarm_id)
            if in_band:
                run = self._clear_runs.get(run_key, 0) + 1
                if run >= cfg.clear_count:
                    self._clear_runs.pop(run_key, None)
                    transitions.append(self._clear(alarm, t))
                else:
                    self._clear_runs[run_key] = run
            else:
                self._clear_runs.pop(run_key, None)
        return transitions

    # -- rate alarms ----------------------------------------------------------

    def check_rate(
        self, prev: Reading, curr: Reading, cfg: ThresholdConfig
    ) -> list[AlarmTransition]:
        """Compare one consecutive accepted pair against the rate limit.

        Raises rapid_change on |dv|/dt_minutes strictly above the limit; an
        open rapid_change alarm clears after one in-rate successor pair.
        """
        if curr.sample_t <= prev.sample_t:
            self.degenerate_rate_pairs += 1
            return []
        rate = abs(curr.value - prev.value) / ((curr.sample_t - prev.sample_t) / 60.0)
        node, ch, t = curr.node_id, curr.channel, curr.arrival_t
        open_alarm = self._open_alarm(node, ch, AlarmKind.RAPID_CHANGE)
        if rate > cfg.rate_limit:
            if open_alarm is None:
                return [self._raise(AlarmKind.RAPID_CHANGE, node, ch, t, rate)]
            if open_alarm.peak_value is None or rate > open_alarm.peak_value:
                open_alarm.peak_value = rate
            return []
        if open_alarm is not None:
            return [self._clear(open_alarm, t)]
        return []

    # -- silence watchdog -----------------------------------------------------

    def check_silence(
        self,
        node_last_heard: dict[int, float],
        now: float,
        intervals: dict[int, float],
        silent_after: float = DEFAULT_SILENT_AFTER,
    ) -> list[AlarmTransition]:
        """Raise node_silent for every node unheard for silent_after intervals."""
        transitions = []
        for node_id in sorted(node_last_heard):
            last = node_last_heard[node_id]
            interval = intervals.get(node_id)
            if interval is None:
                continue
            elapsed = now - last
            limit = silent_after * interval
            # both stamps carry the same latency offset, so an exact boundary
            # hit can come out a few ulps above the limit; treat that as equal
            if elapsed > limit and not math.isclose(
                elapsed, limit, rel_tol=1e-9, abs_tol=1e-9
            ):
                if self._open_alarm(node_id, None, AlarmKind.NODE_SILENT) is None:
                    transitions.append(
                        self._raise(AlarmKind.NODE_SILENT, node_id, None, now, None)
                    )
        return transitions

    def note_heard(self, node_id: int, t: float) -> list[AlarmTransition]:
        """An accepted packet from node_id clears its silence alarm, if open."""
        alarm = self._open_alarm(node_id, None, AlarmKind.NODE_SILENT)
        if alarm is not None:
            return [self._clear(alarm, t)]
        return []

    # -- operator actions -------------------------------------------------------

    def acknowledge(self, alarm_id: str, who: str, t: float) -> Alarm:
        alarm = self._alarms.get(alarm_id)
        if alarm is None:
            raise AlarmNotFound(alarm_id)
        if alarm.state is not AlarmState.ACTIVE:
            raise InvalidAlarmState(
                f"alarm {alarm_id} is {alarm.state.value}, not active"
            )
        alarm.state = AlarmState.ACKNOWLEDGED
        alarm.ack_by = who
        alarm.ack_t = t
        self._emit("acknowledged", alarm, t)
        return alarm

    # -- views ----------------------------------------------------------------

    def get(self, alarm_id: str) -> Alarm | None:
        return self._alarms.get(alarm_id)

    def list_active(self) -> list[Alarm]:
        """Non-cleared alarms in raise order (raised_t ties keep id order)."""
        return [a for a in self._order if a.state is not AlarmState.CLEARED]

    def all_alarms(self) -> list[Alarm]:
        return list(self._order)
