"""HTTP and SSE surface over a running scenario.

Everything rides on the stdlib ThreadingHTTPServer: one thread per
connection, JSON bodies serialized canonically (sorted keys, no spaces) so
identical state always yields identical bytes. Server-sent events carry
reading updates (throttled to one per series per refresh interval, latest
wins, missed updates are reconciled via /api/v1/current) and alarm
transitions (never throttled, pushed at most once each).
"""

from __future__ import annotations

import json
import logging
import mimetypes
import queue
import re
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any
from urllib.parse import parse_qs, urlsplit

from .alarms import AlarmNotFound, InvalidAlarmState, ThresholdConfig
from .envmodel import Channel, FaultError
from .sim import SimCore
from .store import SeriesKey

logger = logging.getLogger(__name__)

API_PREFIX = "/api/v1"
MAX_BUCKETS = 100_000
MAX_BODY_BYTES = 1 << 20

_ACK_RE = re.compile(r"^/api/v1/alarms/([A-Za-z0-9_-]+)/ack$")
_THRESHOLD_RE = re.compile(r"^/api/v1/thresholds/([A-Za-z0-9_]+)$")


def _dumps(obj: Any) -> bytes:
    return json.dumps(obj, separators=(",", ":"), sort_keys=True).encode()


class _ApiError(Exception):
    """Carries an HTTP status and a short machine-readable reason."""

    def __init__(self, status: int, reason: str) -> None:
        self.status = status
        self.reason = reason
        super().__init__(reason)


class _Subscriber:
    def __init__(self) -> None:
        self.queue: queue.Queue = queue.Queue()
        self._seq = 0

    def next_seq(self) -> int:
        self._seq += 1
        return self._seq


class EventHub:
    """Fans core events out to stream subscribers.

    Reading events are rate-limited per series on the wall clock; dropped
    ones are not queued (clients reconcile against /current). Alarm events
    always go through.
    """

    def __init__(self, refresh_interval_s: float = 1.0) -> None:
        self.refresh_interval_s = refresh_interval_s
        self._subscribers: list[_Subscriber] = []
        self._last_push: dict[tuple[int, int], float] = {}
        self._lock = threading.Lock()
        self._closed = False

    def publish(self, event_type: str, payload: dict[str, Any]) -> None:
        with self._lock:
            if self._closed:
                return
            if event_type == "reading":
                key = (payload["node_id"], payload["channel"])
                now = time.monotonic()
                last = self._last_push.get(key)
                if last is not None and now - last < self.refresh_interval_s:
                    return
                self._last_push[key] = now
            subscribers = list(self._subscribers)
        for sub in subscribers:
            sub.queue.put((event_type, payload))

    def subscribe(self) -> _Subscriber:
        sub = _Subscriber()
        with self._lock:
            self._subscribers.append(sub)
        return sub

    def unsubscribe(self, sub: _Subscriber) -> None:
        with self._lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)

    def close(self) -> None:
        with self._lock:
            self._closed = True
            subscribers = list(self._subscribers)
        for sub in subscribers:
            sub.queue.put(None)


class _Server(ThreadingHTTPServer):
    allow_reuse_address = True
    daemon_threads = True

    core: SimCore
    hub: EventHub
    console_dir: Path | None
    heartbeat_s: float


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: _Server

    # -- plumbing -------------------------------------------------------------

    def log_message(self, format: str, *args: Any) -> None:
        logger.debug("%s %s", self.address_string(), format % args)

    def _send_json(self, status: int, obj: Any) -> None:
        body = _dumps(obj)
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_error_json(self, status: int, reason: str) -> None:
        self._send_json(status, {"error": reason})

    def _read_json_body(self) -> dict[str, Any]:
        try:
            length = int(self.headers.get("Content-Length", "0"))
        except ValueError:
            raise _ApiError(400, "bad content-length")
        if length > MAX_BODY_BYTES:
            raise _ApiError(413, "body too large")
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return {}
        try:
            body = json.loads(raw)
        except json.JSONDecodeError:
            raise _ApiError(400, "body is not valid JSON")
        if not isinstance(body, dict):
            raise _ApiError(400, "body must be a JSON object")
        return body

    # -- param helpers ----------------------------------------------------------

    def _query(self) -> dict[str, str]:
        qs = parse_qs(urlsplit(self.path).query, keep_blank_values=True)
        return {k: v[0] for k, v in qs.items()}

    @staticmethod
    def _need(params: dict[str, str], key: str) -> str:
        if key not in params:
            raise _ApiError(400, f"missing param '{key}'")
        return params[key]

    @staticmethod
    def _as_float(value: str, key: str) -> float:
        try:
            return float(value)
        except ValueError:
            raise _ApiError(400, f"param '{key}' must be a number")

    @staticmethod
    def _as_int(value: str, key: str) -> int:
        try:
            return int(value)
        except ValueError:
            raise _ApiError(400, f"param '{key}' must be an integer")

    @staticmethod
    def _channel(value: Any, key: str) -> Channel:
        try:
            return Channel.parse(value)
        except ValueError:
            raise _ApiError(400, f"param '{key}' is not a known channel")

    # -- request entry points ----------------------------------------------------

    def do_GET(self) -> None:
        self._dispatch("GET")

    def do_POST(self) -> None:
        self._dispatch("POST")

    def do_PUT(self) -> None:
        self._dispatch("PUT")

    def do_OPTIONS(self) -> None:
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def _dispatch(self, method: str) -> None:
        path = urlsplit(self.path).path
        try:
            if self._route(method, path):
                return
            if path.startswith(API_PREFIX):
                raise _ApiError(404, "not found")
            if method == "GET" and self.server.console_dir is not None:
                self._serve_static(path)
                return
            raise _ApiError(404, "not found")
        except _ApiError as exc:
            self._send_error_json(exc.status, exc.reason)
        except (BrokenPipeError, ConnectionResetError):
            self.close_connection = True
        except Exception:
            logger.exception("unhandled error serving %s %s", method, path)
            self._send_error_json(500, "internal error")

    def _route(self, method: str, path: str) -> bool:
        core = self.server.core
        if path == f"{API_PREFIX}/current":
            self._check_method(method, "GET")
            self._get_current(core)
        elif path == f"{API_PREFIX}/history":
            self._check_method(method, "GET")
            self._get_history(core)
        elif path == f"{API_PREFIX}/alarms":
            self._check_method(method, "GET")
            self._get_alarms(core)
        elif (m := _ACK_RE.match(path)) is not None:
            self._check_method(method, "POST")
            self._post_ack(core, m.group(1))
        elif path == f"{API_PREFIX}/thresholds":
            self._check_method(method, "GET")
            self._get_thresholds(core)
        elif (m := _THRESHOLD_RE.match(path)) is not None:
            self._check_method(method, "PUT")
            self._put_threshold(core, m.group(1))
        elif path == f"{API_PREFIX}/sim/fault":
            self._check_method(method, "POST")
            self._post_fault(core)
        elif path == f"{API_PREFIX}/report":
            self._check_method(method, "GET")
            self._get_report(core)
        elif path == f"{API_PREFIX}/meta":
            self._check_method(method, "GET")
            self._get_meta(core)
        elif path == f"{API_PREFIX}/stream":
            self._check_method(method, "GET")
            self._serve_stream()
        else:
            return False
        return True

    @staticmethod
    def _check_method(method: str, expected: str) -> None:
        if method != expected:
            raise _ApiError(405, "method not allowed")

    # -- endpoints ---------------------------------------------------------------

    def _get_current(self, core: SimCore) -> None:
        with core.lock:
            now = core.now()
            readings = []
            for key, reading in core.store.latest_all():
                entry = reading.to_dict()
                entry["unit"] = key.channel.unit
                readings.append(entry)
        self._send_json(200, {"now": now, "readings": readings})

    def _get_history(self, core: SimCore) -> None:
        params = self._query()
        node_id = self._as_int(self._need(params, "node"), "node")
        channel = self._channel(self._need(params, "channel"), "channel")
        t0 = self._as_float(params.get("from", "0"), "from")
        t1 = params.get("to")
        bucket = params.get("bucket")
        key = SeriesKey(node_id, channel)
        with core.lock:
            end = self._as_float(t1, "to") if t1 is not None else core.now() + 1.0
            if end <= t0:
                raise _ApiError(400, "'to' must be greater than 'from'")
            if bucket is None:
                rows = [r.to_dict() for r in core.store.query_range(key, t0, end)]
                self._send_json(
                    200, {"node": node_id, "channel": channel.code, "readings": rows}
                )
                return
            bucket_s = self._as_float(bucket, "bucket")
            if bucket_s <= 0:
                raise _ApiError(400, "param 'bucket' must be > 0")
            if (end - t0) / bucket_s > MAX_BUCKETS:
                raise _ApiError(400, "too many buckets")
            buckets = [b.to_dict() for b in core.store.aggregate(key, t0, end, bucket_s)]
        self._send_json(
            200, {"node": node_id, "channel": channel.code, "buckets": buckets}
        )

    def _get_alarms(self, core: SimCore) -> None:
        params = self._query()
        which = params.get("state", "active")
        if which not in ("active", "all"):
            raise _ApiError(400, "param 'state' must be 'active' or 'all'")
        with core.lock:
            alarms = (
                core.registry.all_alarms() if which == "all" else core.registry.list_active()
            )
            rows = [a.to_dict() for a in alarms]
        self._send_json(200, {"alarms": rows})

    def _post_ack(self, core: SimCore, alarm_id: str) -> None:
        body = self._read_json_body()
        who = body.get("who")
        if not isinstance(who, str) or not who.strip():
            raise _ApiError(400, "field 'who' must be a non-empty string")
        try:
            alarm = core.acknowledge(alarm_id, who.strip())
        except AlarmNotFound:
            raise _ApiError(404, "no such alarm")
        except InvalidAlarmState as exc:
            raise _ApiError(409, str(exc))
        self._send_json(200, {"alarm": alarm.to_dict()})

    def _get_thresholds(self, core: SimCore) -> None:
        with core.lock:
            rows = [
                core.thresholds[ch].to_dict()
                for ch in sorted(core.thresholds, key=lambda c: c.code)
            ]
        self._send_json(200, {"thresholds": rows})

    def _put_threshold(self, core: SimCore, channel_raw: str) -> None:
        channel = self._channel(channel_raw, "channel")
        body = self._read_json_body()
        allowed = {"min_ok", "max_ok", "rate_limit", "hysteresis", "clear_count"}
        for key in body:
            if key not in allowed:
                raise _ApiError(400, f"unknown field '{key}'")
        for key in ("min_ok", "max_ok", "rate_limit"):
            if key not in body:
                raise _ApiError(400, f"missing field '{key}'")
            if isinstance(body[key], bool) or not isinstance(body[key], (int, float)):
                raise _ApiError(400, f"field '{key}' must be a number")
        try:
            cfg = ThresholdConfig(
                channel=channel,
                min_ok=float(body["min_ok"]),
                max_ok=float(body["max_ok"]),
                rate_limit=float(body["rate_limit"]),
                hysteresis=(
                    float(body["hysteresis"]) if body.get("hysteresis") is not None else None
                ),
                clear_count=body.get("clear_count", 3),
            )
        except (TypeError, ValueError) as exc:
            raise _ApiError(400, str(exc))
        core.set_threshold(cfg)
        self._send_json(200, {"threshold": cfg.to_dict()})

    def _post_fault(self, core: SimCore) -> None:
        body = self._read_json_body()
        channel = self._channel(body.get("channel"), "channel")
        kind = body.get("kind")
        if not isinstance(kind, str):
            raise _ApiError(400, "field 'kind' must be a string")
        magnitude = body.get("magnitude")
        if isinstance(magnitude, bool) or not isinstance(magnitude, (int, float)):
            raise _ApiError(400, "field 'magnitude' must be a number")
        duration_s = body.get("duration_s", 1.0)
        if isinstance(duration_s, bool) or not isinstance(duration_s, (int, float)):
            raise _ApiError(400, "field 'duration_s' must be a number")
        start_t = body.get("start_t")
        if start_t is not None and (
            isinstance(start_t, bool) or not isinstance(start_t, (int, float))
        ):
            raise _ApiError(400, "field 'start_t' must be a number")
        try:
            fault = core.inject_fault(
                channel,
                kind,
                float(start_t) if start_t is not None else None,
                float(duration_s),
                float(magnitude),
            )
        except (FaultError, ValueError) as exc:
            raise _ApiError(400, str(exc))
        self._send_json(
            200,
            {
                "fault": {
                    "fault_id": fault.fault_id,
                    "channel": fault.channel.code,
                    "kind": fault.kind.value,
                    "start_t": fault.start_t,
                    "duration_s": fault.duration_s,
                    "magnitude": fault.magnitude,
                }
            },
        )

    def _get_report(self, core: SimCore) -> None:
        with core.lock:
            report = core.report().to_dict()
        self._send_json(200, {"report": report})

    def _get_meta(self, core: SimCore) -> None:
        cfg = core.cfg
        with core.lock:
            nodes = [
                {
                    "id": node.node_id,
                    "location": node.location,
                    "interval_s": node.sampling_interval_s,
                    "battery_pct": node.battery_pct,
                    "last_heard": core.last_heard.get(node.node_id, 0.0),
                }
                for node in (core.nodes[nid] for nid in sorted(core.nodes))
            ]
            now = core.now()
        channels = [
            {
                "code": ch.code,
                "name": ch.name.lower(),
                "unit": ch.unit,
                "lo": cfg.calibration.lo(ch),
                "hi": cfg.calibration.hi(ch),
            }
            for ch in Channel
        ]
        self._send_json(
            200,
            {
                "now": now,
                "seed": cfg.seed,
                "duration_s": cfg.duration_s,
                "speedup": cfg.speedup,
                "nodes": nodes,
                "channels": channels,
            },
        )

    # -- server-sent events ---------------------------------------------------------

    def _serve_stream(self) -> None:
        hub = self.server.hub
        sub = hub.subscribe()
        self.close_connection = True
        try:
            self.send_response(200)
            self.send_header("Content-Type", "text/event-stream")
            self.send_header("Cache-Control", "no-cache")
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Connection", "close")
            self.end_headers()
            while True:
                try:
                    item = sub.queue.get(timeout=self.server.heartbeat_s)
                except queue.Empty:
                    self.wfile.write(b": keepalive\n\n")
                    self.wfile.flush()
                    continue
                if item is None:
                    break
                event_type, payload = item
                event = {
                    "event_type": event_type,
                    "event_seq": sub.next_seq(),
                    "payload": payload,
                }
                self.wfile.write(b"data: " + _dumps(event) + b"\n\n")
                self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError, TimeoutError, OSError):
            pass
        finally:
            hub.unsubscribe(sub)

    # -- static console ----------------------------------------------------------------

    def _serve_static(self, path: str) -> None:
        root = self.server.console_dir
        assert root is not None
        rel = path.lstrip("/") or "index.html"
        if ".." in rel.split("/"):
            raise _ApiError(404, "not found")
        target = (root / rel).resolve()
        if root.resolve() not in target.parents and target != root.resolve():
            raise _ApiError(404, "not found")
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            raise _ApiError(404, "not found")
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        data = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


class ApiService:
    """Owns the HTTP server for one core; start() returns once it is listening."""

    def __init__(
        self,
        core: SimCore,
        console_dir: str | Path | None = None,
        host: str | None = None,
        port: int | None = None,
        refresh_interval_s: float = 1.0,
        heartbeat_s: float = 15.0,
    ) -> None:
        cfg_host, cfg_port = core.cfg.listen_host_port()
        self.core = core
        self.hub = EventHub(refresh_interval_s)
        core.add_listener(self.hub.publish)
        self.server = _Server(
            (host if host is not None else cfg_host, port if port is not None else cfg_port),
            _Handler,
        )
        self.server.core = core
        self.server.hub = self.hub
        self.server.console_dir = Path(console_dir) if console_dir is not None else None
        self.server.heartbeat_s = heartbeat_s
        self._thread: threading.Thread | None = None
        self._stopped = False

    @property
    def address(self) -> tuple[str, int]:
        host, port = self.server.server_address[:2]
        return str(host), int(port)

    @property
    def base_url(self) -> str:
        host, port = self.address
        return f"http://{host}:{port}"

    def start(self) -> None:
        self._thread = threading.Thread(
            target=lambda: self.server.serve_forever(poll_interval=0.05),
            name="api-server",
            daemon=True,
        )
        self._thread.start()

    def stop(self) -> None:
        if self._stopped:
            return
        self._stopped = True
        self.hub.close()
        self.server.shutdown()
        self.server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None
