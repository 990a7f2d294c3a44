"""End-to-end scenario runs: counts, flush, alarms, determinism, replay."""

import json
import random

import pytest

from hothouse.config import config_to_dict, parse_config
from hothouse.envmodel import Channel
from hothouse.seeds import derive_stream_seed
from hothouse.sim import SimCore, replay_trace, run_scenario, write_report
from hothouse.store import ReadingStore, SeriesKey
from hothouse.trace import read_bare_records, read_trace

SHA256_EMPTY_16 = "e3b0c44298fc1c14"


def scenario(**overrides):
    base = {
        "seed": 11,
        "nodes": [{"id": 1}, {"id": 2}],
        "duration_s": 600.0,
        "radio": {"loss_prob": 0.0, "dup_prob": 0.0},
    }
    base.update(overrides)
    return parse_config(base)


def test_seed_derivation_is_stable_and_label_sensitive():
    assert derive_stream_seed(1, "radio") == derive_stream_seed(1, "radio")
    assert derive_stream_seed(1, "radio") != derive_stream_seed(1, "env")
    assert derive_stream_seed(1, "radio") != derive_stream_seed(2, "radio")


def test_lossless_run_stores_every_scheduled_sample():
    report = run_scenario(scenario())
    # 2 nodes x 3 channels x (600 / 30) instants, duration inclusive
    assert report.transmitted == 120
    assert report.readings_stored == 120
    assert report.lost == report.duplicated == 0
    assert report.rejected_by_reason == {}
    assert report.conservation_holds()


def test_samples_cover_interval_grid_inclusive_of_duration():
    store = ReadingStore()
    run_scenario(scenario(), store=store)
    rows = store.query_range(SeriesKey(1, Channel.TEMPERATURE), 0.0, 10_000.0)
    assert [r.sample_t for r in rows] == [float(t) for t in range(30, 601, 30)]
    # packets sampled at the horizon still arrive (latency after duration_s)
    assert rows[-1].arrival_t == pytest.approx(600.05)


def test_zero_duration_run_is_empty():
    report = run_scenario(scenario(duration_s=0.0))
    assert report.transmitted == 0
    assert report.readings_stored == 0
    assert report.event_log_hash == SHA256_EMPTY_16


def test_node_battery_death_and_silence_alarm():
    cfg = scenario(nodes=[{"id": 1, "battery_pct": 0.05}, {"id": 2}])
    core = SimCore(cfg)
    report = core.run()
    # 3 packets at t=30, 2 at t=60, then the node is dead
    assert report.transmitted == 5 + 20 * 3
    assert report.alarms_by_kind == {"node_silent": 1}
    alarm = core.registry.all_alarms()[0]
    assert alarm.node_id == 1
    # unheard since 60.05; strictly more than 3 x 30 s elapsed first at t=180
    assert alarm.raised_t == 180.0
    core.close()


def test_step_fault_raises_high_at_first_post_crossing_sample():
    cfg = scenario(
        nodes=[{"id": 1}],
        env=[{"channel": 0, "base": 20.0, "amplitude": 0.0}],
        thresholds=[{"channel": 0, "min_ok": 10.0, "max_ok": 24.0, "rate_limit": 100.0}],
    )
    core = SimCore(cfg)
    core.inject_fault(Channel.TEMPERATURE, "step", 400.0, 1.0, 10.0)
    report = core.run()
    assert report.alarms_by_kind == {"high": 1}
    alarm = core.registry.all_alarms()[0]
    # first sample after the crossing is t=420, its reading arrives at 420.05
    assert alarm.raised_t == pytest.approx(420.05)
    assert alarm.raised_t - 400.0 <= 30.0 + 0.05
    core.close()


def test_ramp_fault_raises_rapid_change_through_the_pipeline():
    cfg = scenario(
        nodes=[{"id": 1}],
        env=[{"channel": 0, "base": 20.0, "amplitude": 0.0}],
        thresholds=[{"channel": 0, "min_ok": 1.0, "max_ok": 49.0, "rate_limit": 2.0}],
    )
    core = SimCore(cfg)
    # 25 degC over 600 s = 2.5 degC/min, above the 2.0 limit
    core.inject_fault(Channel.TEMPERATURE, "ramp", 0.0, 600.0, 25.0)
    report = core.run()
    assert report.alarms_by_kind.get("rapid_change", 0) >= 1
    assert "high" not in report.alarms_by_kind
    assert "low" not in report.alarms_by_kind
    core.close()


def test_same_config_same_hash():
    cfg = dict(
        seed=23,
        nodes=[{"id": 1}, {"id": 2}, {"id": 3}],
        duration_s=1800.0,
        radio={"loss_prob": 0.1, "dup_prob": 0.15},
        thresholds=[{"channel": 0, "min_ok": 10.0, "max_ok": 27.0, "rate_limit": 3.0}],
    )
    a = run_scenario(parse_config(dict(cfg)))
    b = run_scenario(parse_config(dict(cfg)))
    assert a.event_log_hash == b.event_log_hash
    assert a.to_dict() == b.to_dict()


def test_seed_change_changes_outcomes_but_not_invariants():
    cfg = dict(
        seed=23,
        nodes=[{"id": 1}, {"id": 2}],
        duration_s=1800.0,
        radio={"loss_prob": 0.1, "dup_prob": 0.15},
    )
    a = run_scenario(parse_config(dict(cfg)))
    b = run_scenario(parse_config(dict(cfg, seed=24)))
    assert (a.delivered, a.lost) != (b.delivered, b.lost)
    assert a.conservation_holds() and b.conservation_holds()
    assert a.event_log_hash != b.event_log_hash


def test_alarm_transitions_are_part_of_the_hash():
    base = dict(
        seed=9,
        nodes=[{"id": 1}],
        duration_s=600.0,
        radio={"loss_prob": 0.0, "dup_prob": 0.0},
        env=[{"channel": 0, "base": 40.0, "amplitude": 0.0}],
    )
    plain = run_scenario(parse_config(dict(base)))
    alarmed = run_scenario(
        parse_config(
            dict(
                base,
                thresholds=[
                    {"channel": 0, "min_ok": 5.0, "max_ok": 30.0, "rate_limit": 100.0}
                ],
            )
        )
    )
    assert alarmed.alarms_by_kind.get("high") == 1
    assert plain.event_log_hash != alarmed.event_log_hash


def test_conservation_across_random_radio_conditions():
    rng = random.Random(555)
    for _ in range(8):
        cfg = parse_config(
            {
                "seed": rng.getrandbits(16),
                "nodes": [{"id": 1}, {"id": 2}],
                "duration_s": 900.0,
                "radio": {
                    "loss_prob": round(rng.uniform(0.0, 0.6), 3),
                    "dup_prob": round(rng.uniform(0.0, 0.6), 3),
                },
            }
        )
        report = run_scenario(cfg)
        assert report.conservation_holds(), report.to_dict()
        dup_rejected = report.rejected_by_reason.get("duplicate", 0)
        assert report.readings_stored == report.delivered - dup_rejected


def test_live_mode_outcomes_match_batch(tmp_path):
    base = dict(
        seed=31,
        nodes=[{"id": 1}, {"id": 2}],
        duration_s=300.0,
        radio={"loss_prob": 0.05, "dup_prob": 0.05},
    )
    batch = run_scenario(parse_config(dict(base, speedup=0.0)))
    live = run_scenario(parse_config(dict(base, speedup=5000.0)))
    assert live.event_log_hash == batch.event_log_hash
    assert live.to_dict() == batch.to_dict()


def test_trace_and_quarantine_files(tmp_path):
    trace_path = tmp_path / "run.trace"
    quarantine_path = tmp_path / "bad-frames.bin"
    cfg = scenario(
        seed=77,
        radio={"loss_prob": 0.0, "dup_prob": 0.5},
        trace_path=str(trace_path),
        quarantine_path=str(quarantine_path),
    )
    report = run_scenario(cfg)
    header, records = read_trace(trace_path)
    assert header == config_to_dict(cfg)
    assert len(records) == report.transmitted
    assert all(len(payload) == 13 for _, payload in records)
    dup_frames = read_bare_records(quarantine_path)
    assert len(dup_frames) == report.rejected_by_reason.get("duplicate", 0)
    assert len(dup_frames) == report.duplicated  # loss-free run


def test_replay_reproduces_the_recorded_run(tmp_path):
    trace_path = tmp_path / "run.trace"
    cfg = scenario(
        seed=13,
        duration_s=1200.0,
        radio={"loss_prob": 0.1, "dup_prob": 0.2},
        thresholds=[{"channel": 0, "min_ok": 15.0, "max_ok": 25.0, "rate_limit": 1.0}],
        trace_path=str(trace_path),
    )
    original = run_scenario(cfg)
    replayed, core = replay_trace(trace_path)
    assert replayed.to_dict() == original.to_dict()
    core.close()


def test_store_file_written_during_run(tmp_path):
    store_path = tmp_path / "readings.jsonl"
    report = run_scenario(scenario(store_path=str(store_path)))
    reloaded = ReadingStore(store_path)
    assert reloaded.count == report.readings_stored
    reloaded.close()


def test_fault_injection_defaults_to_current_time():
    core = SimCore(scenario())
    t = core.next_event_t()
    core.step(t)
    fault = core.inject_fault(Channel.LIGHT, "spike", None, 5.0, 100.0)
    assert fault.start_t == core.now() == 30.0
    core.close()


def test_mid_run_report_is_consistent():
    core = SimCore(scenario())
    for _ in range(6):
        core.step(core.next_event_t())
    partial = core.report()
    assert partial.transmitted >= partial.readings_stored > 0
    final = core.run()
    assert final.readings_stored == 120
    core.close()


def test_write_report(tmp_path):
    report = run_scenario(scenario(duration_s=60.0))
    out = tmp_path / "report.json"
    write_report(report, out)
    assert json.loads(out.read_text()) == report.to_dict()
