"""Synthetic greenhouse physics: per-channel diurnal signals plus injectable faults.

Each monitored channel follows a sinusoid (day/night structure) with optional
additive Gaussian noise and whatever fault disturbances an operator has
injected. Values are pure functions of virtual time, so two runs with the
same seed and fault list agree bit for bit.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

TWO_PI = 2.0 * math.pi


class Channel(Enum):
    """Monitored physical channel, identified on the wire by its code."""

    TEMPERATURE = 0
    HUMIDITY = 1
    LIGHT = 2

    @property
    def code(self) -> int:
        return self.value

    @property
    def unit(self) -> str:
        return _UNITS[self]

    @classmethod
    def from_code(cls, code: int) -> "Channel":
        try:
            return cls(code)
        except ValueError:
            raise ValueError(f"unknown channel code {code!r}") from None

    @classmethod
    def parse(cls, value: "Channel | int | str") -> "Channel":
        """Accept a Channel, its integer code, or its lowercase name."""
        if isinstance(value, cls):
            return value
        if isinstance(value, bool):
            raise ValueError(f"unknown channel {value!r}")
        if isinstance(value, int):
            return cls.from_code(value)
        if isinstance(value, str):
            name = value.strip().lower()
            for ch in cls:
                if ch.name.lower() == name:
                    return ch
            if name.isdigit():
                return cls.from_code(int(name))
        raise ValueError(f"unknown channel {value!r}")


_UNITS = {
    Channel.TEMPERATURE: "degC",
    Channel.HUMIDITY: "%RH",
    Channel.LIGHT: "lux",
}


class FaultKind(Enum):
    STEP = "step"
    RAMP = "ramp"
    SPIKE = "spike"


class FaultError(ValueError):
    """Raised when a fault event violates its invariants."""


@dataclass(frozen=True)
class EnvSignalSpec:
    """Deterministic driver for one channel: base + amplitude * sin(...) + noise."""

    channel: Channel
    base: float
    amplitude: float
    period_s: float = 86400.0
    phase_s: float = 0.0
    noise_sigma: float = 0.0

    def __post_init__(self) -> None:
        if self.period_s <= 0:
            raise ValueError("period_s must be > 0")
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


@dataclass(frozen=True)
class FaultEvent:
    """Operator-injected disturbance added on top of the base signal."""

    fault_id: str
    channel: Channel
    kind: FaultKind
    start_t: float
    duration_s: float
    magnitude: float

    def __post_init__(self) -> None:
        if self.duration_s <= 0:
            raise FaultError("duration_s must be > 0")

    def contribution(self, t: float) -> float:
        if t < self.start_t:
            return 0.0
        if self.kind is FaultKind.STEP:
            return self.magnitude
        elapsed = t - self.start_t
        if self.kind is FaultKind.RAMP:
            if elapsed >= self.duration_s:
                return self.magnitude
            return self.magnitude * (elapsed / self.duration_s)
        # spike: active only inside [start_t, start_t + duration_s)
        if elapsed < self.duration_s:
            return self.magnitude
        return 0.0


def _noise_at(seed: int, channel: Channel, t: float, sigma: float) -> float:
    """Seeded Gaussian noise as a pure function of (seed, channel, t).

    Counter-based rather than a stateful stream: the draw for time t never
    depends on which other instants were sampled, so radio loss patterns or
    extra queries cannot shift environment values.
    """
    if sigma <= 0.0:
        return 0.0
    key = f"{seed}:{channel.code}:{t!r}".encode()
    digest = hashlib.blake2b(key, digest_size=8).digest()
    rng = random.Random(int.from_bytes(digest, "big"))
    return rng.gauss(0.0, sigma)


def env_value(
    spec: EnvSignalSpec,
    faults: Sequence[FaultEvent],
    t: float,
    noise_seed: int = 0,
) -> float:
    """Physical value of spec.channel at virtual time t.

    base + amplitude * sin(2*pi*(t - phase_s)/period_s) + noise + fault terms.
    Total on valid inputs; with noise_sigma = 0 it is a pure function of
    (spec, faults, t).
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    value = spec.base + spec.amplitude * math.sin(
        TWO_PI * (t - spec.phase_s) / spec.period_s
    )
    value += _noise_at(noise_seed, spec.channel, t, spec.noise_sigma)
    for fault in faults:
        if fault.channel is spec.channel:
            value += fault.contribution(t)
    return value


class FaultRegistry:
    """Append-only registry of injected faults, shared by environment readers."""

    def __init__(self) -> None:
        self._faults: list[FaultEvent] = []
        self._by_channel: dict[Channel, list[FaultEvent]] = {ch: [] for ch in Channel}
        self._next_id = 1

    def inject(
        self,
        channel: Channel | int | str,
        kind: FaultKind | str,
        start_t: float,
        duration_s: float,
        magnitude: float,
    ) -> FaultEvent:
        """Register a fault; it is visible to every subsequent env_value call."""
        ch = Channel.parse(channel)
        if not isinstance(kind, FaultKind):
            try:
                kind = FaultKind(str(kind).strip().lower())
            except ValueError:
                raise FaultError(f"unknown fault kind {kind!r}") from None
        fault = FaultEvent(
            fault_id=f"f-{self._next_id:04d}",
            channel=ch,
            kind=kind,
            start_t=float(start_t),
            duration_s=float(duration_s),
            magnitude=float(magnitude),
        )
        self._next_id += 1
        self._faults.append(fault)
        self._by_channel[ch].append(fault)
        return fault

    def for_channel(self, channel: Channel) -> tuple[FaultEvent, ...]:
        return tuple(self._by_channel[channel])

    def all_faults(self) -> tuple[FaultEvent, ...]:
        return tuple(self._faults)


@dataclass
class VirtualClock:
    """Monotonically non-decreasing virtual seconds since scenario start."""

    now: float = 0.0

    def advance_to(self, t: float) -> float:
        if t < self.now:
            raise ValueError(f"clock cannot go backwards ({t} < {self.now})")
        self.now = t
        return self.now


class Environment:
    """All channel signals of one scenario plus the shared fault registry."""

    def __init__(
        self,
        specs: Iterable[EnvSignalSpec],
        seed: int = 0,
        registry: FaultRegistry | None = None,
    ) -> None:
        self._specs: dict[Channel, EnvSignalSpec] = {}
        for spec in specs:
            if spec.channel in self._specs:
                raise ValueError(f"duplicate spec for {spec.channel.name}")
            self._specs[spec.channel] = spec
        self.seed = seed
        self.registry = registry if registry is not None else FaultRegistry()

    def spec(self, channel: Channel) -> EnvSignalSpec:
        return self._specs[channel]

    @property
    def channels(self) -> tuple[Channel, ...]:
        return tuple(sorted(self._specs, key=lambda ch: ch.code))

    def value(self, channel: Channel, t: float) -> float:
        spec = self._specs[channel]
        return env_value(spec, self.registry.for_channel(channel), t, self.seed)
