"""Scenario configuration: schema, defaults, validation, JSON loading.

A scenario file is a single JSON object. Only `seed` and `nodes` are
mandatory; everything else has documented defaults so a minimal config is
two keys. Validation errors always name the offending field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .alarms import ThresholdConfig
from .envmodel import Channel, EnvSignalSpec
from .gateway import DEFAULT_RANGES, CalibrationMap
from .mote import DEFAULT_SAMPLING_INTERVAL_S
from .radio import RadioParams
from .seeds import derive_stream_seed

DEFAULT_LISTEN_ADDRESS = "127.0.0.1:8787"

DEFAULT_ENV_SPECS: dict[Channel, dict[str, float]] = {
    Channel.TEMPERATURE: {"base": 20.0, "amplitude": 6.0},
    Channel.HUMIDITY: {"base": 60.0, "amplitude": 15.0},
    Channel.LIGHT: {"base": 500.0, "amplitude": 480.0},
}


class ConfigError(ValueError):
    """Invalid scenario config; `field` names what is wrong."""

    def __init__(self, field_name: str, message: str) -> None:
        self.field = field_name
        super().__init__(f"config field '{field_name}': {message}")


@dataclass
class NodeConfig:
    id: int
    location: str = ""
    interval_s: int = DEFAULT_SAMPLING_INTERVAL_S
    battery_pct: float = 100.0


@dataclass
class ScenarioConfig:
    seed: int
    nodes: list[NodeConfig]
    duration_s: float = 0.0
    speedup: float = 0.0
    radio: RadioParams = field(default_factory=RadioParams)
    env: list[EnvSignalSpec] = field(default_factory=list)
    thresholds: list[ThresholdConfig] = field(default_factory=list)
    calibration: CalibrationMap = field(default_factory=CalibrationMap)
    store_path: str | None = None
    listen_address: str = DEFAULT_LISTEN_ADDRESS
    trace_path: str | None = None
    quarantine_path: str | None = None

    def env_spec(self, channel: Channel) -> EnvSignalSpec:
        for spec in self.env:
            if spec.channel is channel:
                return spec
        raise KeyError(channel)

    def threshold_map(self) -> dict[Channel, ThresholdConfig]:
        return {cfg.channel: cfg for cfg in self.thresholds}

    def listen_host_port(self) -> tuple[str, int]:
        host, _, port = self.listen_address.rpartition(":")
        try:
            return (host or "127.0.0.1", int(port))
        except ValueError:
            raise ConfigError("listen_address", f"not host:port: {self.listen_address!r}")


def _require(data: dict[str, Any], key: str) -> Any:
    if key not in data:
        raise ConfigError(key, "missing required field")
    return data[key]


def _as_number(value: Any, field_name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(field_name, f"expected a number, got {value!r}")
    return float(value)


def _parse_channel(value: Any, field_name: str) -> Channel:
    try:
        return Channel.parse(value)
    except ValueError as exc:
        raise ConfigError(field_name, str(exc)) from None


def parse_config(data: dict[str, Any], base_dir: Path | None = None) -> ScenarioConfig:
    """Validate a raw config mapping and apply defaults."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    known = {
        "seed", "duration_s", "speedup", "nodes", "radio", "env", "thresholds",
        "calibration", "store_path", "listen_address", "trace_path", "quarantine_path",
    }
    for key in data:
        if key not in known:
            raise ConfigError(key, "unknown field")

    seed = _require(data, "seed")
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("seed", f"expected an integer, got {seed!r}")

    duration_s = _as_number(data.get("duration_s", 0.0), "duration_s")
    if duration_s < 0:
        raise ConfigError("duration_s", "must be >= 0")
    speedup = _as_number(data.get("speedup", 0.0), "speedup")
    if speedup < 0:
        raise ConfigError("speedup", "must be >= 0")

    raw_nodes = _require(data, "nodes")
    if not isinstance(raw_nodes, list) or not raw_nodes:
        raise ConfigError("nodes", "must be a non-empty list")
    nodes: list[NodeConfig] = []
    seen_ids: set[int] = set()
    for i, raw in enumerate(raw_nodes):
        if not isinstance(raw, dict):
            raise ConfigError("nodes", f"entry {i} must be an object")
        node_id = raw.get("id")
        if isinstance(node_id, bool) or not isinstance(node_id, int) or node_id <= 0:
            raise ConfigError("nodes", f"entry {i}: id must be a positive integer")
        if node_id in seen_ids:
            raise ConfigError("nodes", f"duplicate node id {node_id}")
        seen_ids.add(node_id)
        interval = raw.get("interval_s", DEFAULT_SAMPLING_INTERVAL_S)
        if isinstance(interval, bool) or not isinstance(interval, int) or interval < 1:
            raise ConfigError("nodes", f"entry {i}: interval_s must be a positive integer")
        battery = _as_number(raw.get("battery_pct", 100.0), "nodes")
        if not 0 <= battery <= 100:
            raise ConfigError("nodes", f"entry {i}: battery_pct must be in [0, 100]")
        nodes.append(
            NodeConfig(
                id=node_id,
                location=str(raw.get("location", "")),
                interval_s=interval,
                battery_pct=battery,
            )
        )

    raw_radio = data.get("radio", {})
    if not isinstance(raw_radio, dict):
        raise ConfigError("radio", "must be an object")
    try:
        radio = RadioParams(
            loss_prob=_as_number(raw_radio.get("loss_prob", 0.02), "radio.loss_prob"),
            dup_prob=_as_number(raw_radio.get("dup_prob", 0.01), "radio.dup_prob"),
            latency_ms=_as_number(raw_radio.get("latency_ms", 50.0), "radio.latency_ms"),
            seed=raw_radio.get("seed", derive_stream_seed(seed, "radio")),
        )
    except ValueError as exc:
        raise ConfigError("radio", str(exc)) from None

    raw_env = data.get("env", [])
    if not isinstance(raw_env, list):
        raise ConfigError("env", "must be a list")
    specs: dict[Channel, EnvSignalSpec] = {}
    for i, raw in enumerate(raw_env):
        if not isinstance(raw, dict):
            raise ConfigError("env", f"entry {i} must be an object")
        ch = _parse_channel(raw.get("channel"), "env")
        if ch in specs:
            raise ConfigError("env", f"duplicate spec for channel {ch.name.lower()}")
        try:
            specs[ch] = EnvSignalSpec(
                channel=ch,
                base=_as_number(_require(raw, "base"), "env.base"),
                amplitude=_as_number(_require(raw, "amplitude"), "env.amplitude"),
                period_s=_as_number(raw.get("period_s", 86400.0), "env.period_s"),
                phase_s=_as_number(raw.get("phase_s", 0.0), "env.phase_s"),
                noise_sigma=_as_number(raw.get("noise_sigma", 0.0), "env.noise_sigma"),
            )
        except ValueError as exc:
            raise ConfigError("env", f"entry {i}: {exc}") from None
    for ch in Channel:
        if ch not in specs:
            defaults = DEFAULT_ENV_SPECS[ch]
            specs[ch] = EnvSignalSpec(channel=ch, **defaults)
    env = [specs[ch] for ch in sorted(specs, key=lambda c: c.code)]

    raw_thresholds = data.get("thresholds", [])
    if not isinstance(raw_thresholds, list):
        raise ConfigError("thresholds", "must be a list")
    thresholds: list[ThresholdConfig] = []
    seen_channels: set[Channel] = set()
    for i, raw in enumerate(raw_thresholds):
        if not isinstance(raw, dict):
            raise ConfigError("thresholds", f"entry {i} must be an object")
        ch = _parse_channel(raw.get("channel"), "thresholds")
        if ch in seen_channels:
            raise ConfigError("thresholds", f"duplicate config for channel {ch.name.lower()}")
        seen_channels.add(ch)
        try:
            thresholds.append(
                ThresholdConfig(
                    channel=ch,
                    min_ok=_as_number(_require(raw, "min_ok"), "thresholds.min_ok"),
                    max_ok=_as_number(_require(raw, "max_ok"), "thresholds.max_ok"),
                    rate_limit=_as_number(_require(raw, "rate_limit"), "thresholds.rate_limit"),
                    hysteresis=(
                        _as_number(raw["hysteresis"], "thresholds.hysteresis")
                        if "hysteresis" in raw
                        else None
                    ),
                    clear_count=raw.get("clear_count", 3),
                )
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError("thresholds", f"entry {i}: {exc}") from None

    raw_cal = data.get("calibration", [])
    if not isinstance(raw_cal, list):
        raise ConfigError("calibration", "must be a list")
    ranges = dict(DEFAULT_RANGES)
    for i, raw in enumerate(raw_cal):
        if not isinstance(raw, dict):
            raise ConfigError("calibration", f"entry {i} must be an object")
        ch = _parse_channel(raw.get("channel"), "calibration")
        lo = _as_number(_require(raw, "lo"), "calibration.lo")
        hi = _as_number(_require(raw, "hi"), "calibration.hi")
        ranges[ch] = (lo, hi)
    try:
        calibration = CalibrationMap(ranges)
    except ValueError as exc:
        raise ConfigError("calibration", str(exc)) from None

    def _path(key: str) -> str | None:
        value = data.get(key)
        if value is None:
            return None
        if not isinstance(value, str) or not value:
            raise ConfigError(key, "must be a non-empty string or null")
        p = Path(value)
        if base_dir is not None and not p.is_absolute():
            p = base_dir / p
        return str(p)

    listen_address = data.get("listen_address", DEFAULT_LISTEN_ADDRESS)
    if not isinstance(listen_address, str) or ":" not in listen_address:
        raise ConfigError("listen_address", "must be a 'host:port' string")

    return ScenarioConfig(
        seed=seed,
        nodes=nodes,
        duration_s=duration_s,
        speedup=speedup,
        radio=radio,
        env=env,
        thresholds=thresholds,
        calibration=calibration,
        store_path=_path("store_path"),
        listen_address=listen_address,
        trace_path=_path("trace_path"),
        quarantine_path=_path("quarantine_path"),
    )


def load_config(path: str | Path) -> ScenarioConfig:
    """Read and validate a scenario file; relative data paths resolve beside it."""
    p = Path(path)
    if not p.exists():
        raise ConfigError("<file>", f"no such file: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"not valid JSON: {exc}") from None
    return parse_config(data, base_dir=p.parent)


def config_to_dict(cfg: ScenarioConfig) -> dict[str, Any]:
    """Serialize back to the JSON schema (used by trace headers and reports)."""
    return {
        "seed": cfg.seed,
        "duration_s": cfg.duration_s,
        "speedup": cfg.speedup,
        "nodes": [
            {
                "id": n.id,
                "location": n.location,
                "interval_s": n.interval_s,
                "battery_pct": n.battery_pct,
            }
            for n in cfg.nodes
        ],
        "radio": {
            "loss_prob": cfg.radio.loss_prob,
            "dup_prob": cfg.radio.dup_prob,
            "latency_ms": cfg.radio.latency_ms,
            "seed": cfg.radio.seed,
        },
        "env": [
            {
                "channel": s.channel.code,
                "base": s.base,
                "amplitude": s.amplitude,
                "period_s": s.period_s,
                "phase_s": s.phase_s,
                "noise_sigma": s.noise_sigma,
            }
            for s in cfg.env
        ],
        "thresholds": [t.to_dict() for t in cfg.thresholds],
        "calibration": [
            {"channel": ch.code, "lo": lo, "hi": hi}
            for ch, (lo, hi) in sorted(cfg.calibration.ranges.items(), key=lambda kv: kv[0].code)
        ],
        "store_path": cfg.store_path,
        "listen_address": cfg.listen_address,
        "trace_path": cfg.trace_path,
        "quarantine_path": cfg.quarantine_path,
    }
