"""Ingest pipeline: decode order, calibration inverse, dedup window, quarantine."""

import random
import struct

import pytest

from hothouse.envmodel import Channel
from hothouse.gateway import (
    DEDUP_WINDOW,
    CalibrationMap,
    DedupWindow,
    Gateway,
    Reading,
    Rejection,
    RejectReason,
    decode_packet,
    to_engineering,
)
from hothouse.mote import MotePacket, checksum, encode_packet, quantize_sample
from hothouse.trace import read_bare_records


def make_frame(node_id=1, channel=0, seq=0, value=512, sample_t=0, battery=100):
    """Build a frame byte by byte, allowing out-of-spec field values."""
    body = struct.pack(">HBHHIB", node_id, channel, seq, value, sample_t, battery)
    return body + bytes([checksum(body)])


def test_decode_golden_frame():
    data = bytes.fromhex("0001000007020000000e10647e")
    packet = decode_packet(data)
    assert isinstance(packet, MotePacket)
    assert packet.node_id == 1
    assert packet.channel is Channel.TEMPERATURE
    assert packet.seq == 7
    assert packet.adc_counts == 512
    assert packet.sample_t == 3600
    assert packet.battery_pct == 100


def test_encode_decode_roundtrip_random():
    rng = random.Random(31337)
    for _ in range(500):
        packet = MotePacket(
            node_id=rng.randint(1, 0xFFFF),
            channel=rng.choice(list(Channel)),
            seq=rng.randint(0, 65535),
            adc_counts=rng.randint(0, 1023),
            sample_t=rng.randint(0, 2**32 - 1),
            battery_pct=rng.randint(0, 100),
        )
        assert decode_packet(encode_packet(packet)) == packet


def test_reject_bad_length_before_anything_else():
    result = decode_packet(b"\x00" * 12)
    assert result == Rejection(RejectReason.BAD_LENGTH, b"\x00" * 12)
    assert isinstance(decode_packet(b"\x00" * 14), Rejection)


def test_reject_bad_checksum_before_reserved_bits():
    frame = make_frame(value=2000)  # reserved bits set
    corrupted = frame[:-1] + bytes([frame[-1] ^ 0xFF])
    result = decode_packet(corrupted)
    assert isinstance(result, Rejection)
    assert result.reason == RejectReason.BAD_CHECKSUM


def test_reject_reserved_bits_before_unknown_channel():
    frame = make_frame(channel=9, value=1024)
    result = decode_packet(frame)
    assert isinstance(result, Rejection)
    assert result.reason == RejectReason.RESERVED_BITS_SET


def test_reject_unknown_channel():
    frame = make_frame(channel=9, value=100)
    result = decode_packet(frame)
    assert isinstance(result, Rejection)
    assert result.reason == RejectReason.UNKNOWN_CHANNEL


def test_flipping_any_body_bit_fails_checksum():
    frame = make_frame()
    for i in range(12):
        for bit in range(8):
            corrupted = bytearray(frame)
            corrupted[i] ^= 1 << bit
            result = decode_packet(bytes(corrupted))
            if isinstance(result, Rejection):
                assert result.reason == RejectReason.BAD_CHECKSUM
            else:
                pytest.fail(f"bit flip at byte {i} bit {bit} went undetected")


def test_to_engineering_inverts_quantization_within_half_lsb():
    cal = CalibrationMap()
    rng = random.Random(2024)
    for ch in Channel:
        lo, hi = cal.ranges[ch]
        tol = (hi - lo) / 2046
        for _ in range(400):
            v = rng.uniform(lo, hi)
            back = to_engineering(quantize_sample(v, lo, hi), ch, cal)
            assert abs(back - v) <= tol + 1e-12


def test_to_engineering_endpoints():
    cal = CalibrationMap()
    assert to_engineering(0, Channel.TEMPERATURE, cal) == 0.0
    assert to_engineering(1023, Channel.TEMPERATURE, cal) == 50.0
    with pytest.raises(ValueError):
        to_engineering(1024, Channel.TEMPERATURE, cal)


def test_calibration_requires_all_channels_and_sane_ranges():
    with pytest.raises(ValueError):
        CalibrationMap({Channel.TEMPERATURE: (0.0, 50.0)})
    bad = {
        Channel.TEMPERATURE: (50.0, 0.0),
        Channel.HUMIDITY: (0.0, 100.0),
        Channel.LIGHT: (0.0, 1000.0),
    }
    with pytest.raises(ValueError):
        CalibrationMap(bad)


def test_dedup_window_rejects_repeat_within_window():
    window = DedupWindow(capacity=4)
    assert window.check_and_insert(1, 0) is False
    assert window.check_and_insert(1, 0) is True
    assert window.check_and_insert(2, 0) is False  # windows are per node


def test_dedup_window_eviction():
    window = DedupWindow(capacity=4)
    for seq in range(4):
        assert window.check_and_insert(1, seq) is False
    assert window.check_and_insert(1, 4) is False  # evicts seq 0
    assert window.check_and_insert(1, 0) is False  # stale seq accepted again
    assert window.check_and_insert(1, 4) is True


def test_default_window_is_64():
    window = DedupWindow()
    for seq in range(DEDUP_WINDOW):
        window.check_and_insert(1, seq)
    assert window.check_and_insert(1, 0) is True
    window.check_and_insert(1, DEDUP_WINDOW)  # pushes seq 0 out
    assert window.check_and_insert(1, 0) is False


def test_gateway_produces_calibrated_reading():
    gw = Gateway()
    packet = MotePacket(
        node_id=7,
        channel=Channel.TEMPERATURE,
        seq=3,
        adc_counts=quantize_sample(25.0, 0.0, 50.0),
        sample_t=120,
        battery_pct=98,
    )
    result = gw.ingest_bytes(encode_packet(packet), 120.05)
    assert isinstance(result, Reading)
    assert result.node_id == 7
    assert result.channel is Channel.TEMPERATURE
    assert abs(result.value - 25.0) <= 50.0 / 2046
    assert result.sample_t == 120
    assert result.arrival_t == 120.05
    assert result.seq == 3
    assert result.battery_pct == 98
    assert gw.accepted == 1


def test_gateway_counts_rejections_by_reason():
    gw = Gateway()
    frame = encode_packet(MotePacket(1, Channel.TEMPERATURE, 0, 10, 0, 100))
    gw.ingest_bytes(frame, 1.0)
    gw.ingest_bytes(frame, 2.0)  # duplicate seq
    gw.ingest_bytes(b"\x00" * 5, 3.0)
    gw.ingest_bytes(frame[:-1] + b"\xff", 4.0)
    assert gw.rejected_by_reason[RejectReason.DUPLICATE] == 1
    assert gw.rejected_by_reason[RejectReason.BAD_LENGTH] == 1
    assert gw.rejected_by_reason[RejectReason.BAD_CHECKSUM] == 1
    assert gw.accepted == 1


def test_gateway_quarantines_rejected_frames(tmp_path):
    qpath = tmp_path / "quarantine.bin"
    with open(qpath, "wb") as qfile:
        gw = Gateway(quarantine=qfile)
        good = encode_packet(MotePacket(1, Channel.TEMPERATURE, 0, 10, 0, 100))
        gw.ingest_bytes(good, 1.0)
        gw.ingest_bytes(good, 2.0)  # duplicate
        bad = good[:-1] + b"\x00"
        gw.ingest_bytes(bad, 3.0)
    records = read_bare_records(qpath)
    assert [(t, raw) for t, raw in records] == [(2.0, good), (3.0, bad)]


def test_reading_dict_roundtrip():
    reading = Reading(3, Channel.LIGHT, 510.5, 60, 60.05, 12, 99)
    assert Reading.from_dict(reading.to_dict()) == reading
