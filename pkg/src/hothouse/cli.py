"""Command line entry points: run a scenario, replay a trace, summarize a store.

Exit codes: 0 on success, 1 on runtime failures (bad trace, corrupt store,
socket errors), 2 on usage or config errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .config import ConfigError, load_config
from .sim import SimCore, replay_trace, write_report
from .store import ReadingStore, StoreLoadError
from .trace import TraceError

logger = logging.getLogger(__name__)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hothouse",
        description="Greenhouse sensor network simulator and monitoring service.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario from a JSON config")
    run_p.add_argument("config", help="path to scenario config")
    run_p.add_argument(
        "--console",
        metavar="DIR",
        default=None,
        help="serve this directory as the operator console at /",
    )
    run_p.add_argument(
        "--hold",
        action="store_true",
        help="live mode: keep serving after the scenario ends, until Ctrl-C",
    )

    replay_p = sub.add_parser("replay", help="re-run a recorded packet trace")
    replay_p.add_argument("trace", help="path to a trace file")

    report_p = sub.add_parser("report", help="summarize a reading store")
    report_p.add_argument("store", help="path to a JSONL reading store")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    core = SimCore(cfg)
    service = None
    try:
        if cfg.speedup > 0:
            from .api import ApiService

            service = ApiService(core, console_dir=args.console)
            service.start()
            host, port = service.address
            print(f"serving on http://{host}:{port}", file=sys.stderr)
        report = core.run()
        print(json.dumps(report.to_dict(), indent=2))
        if cfg.store_path:
            report_path = Path(cfg.store_path).with_suffix(".report.json")
            write_report(report, report_path)
            logger.info("report written to %s", report_path)
        if service is not None and args.hold:
            print("scenario finished, still serving (Ctrl-C to stop)", file=sys.stderr)
            try:
                while True:
                    time.sleep(1.0)
            except KeyboardInterrupt:
                pass
        return 0
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        if service is not None:
            service.stop()
        core.close()


def _cmd_replay(args: argparse.Namespace) -> int:
    try:
        report, core = replay_trace(args.trace)
    except (TraceError, ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    core.close()
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    path = Path(args.store)
    if not path.exists():
        print(f"error: no such file: {path}", file=sys.stderr)
        return 1
    try:
        store = ReadingStore(path)
    except StoreLoadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    series = []
    for key in store.keys():
        rows = store.query_range(key, 0.0, float("inf"))
        series.append(
            {
                "node": key.node_id,
                "channel": key.channel.code,
                "count": len(rows),
                "first_t": rows[0].sample_t if rows else None,
                "last_t": rows[-1].sample_t if rows else None,
                "last_value": rows[-1].value if rows else None,
                "last_battery_pct": rows[-1].battery_pct if rows else None,
            }
        )
    total = store.count
    store.close()
    print(json.dumps({"readings": total, "series": series}, indent=2))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "replay":
        return _cmd_replay(args)
    if args.command == "report":
        return _cmd_report(args)
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
