"""Radio medium: loss, duplication, latency, ordering, conservation."""

import random

import pytest

from hothouse.radio import RadioError, RadioMedium, RadioParams

FRAME = bytes(range(13))


def frame(i):
    return bytes([i % 256]) * 13


def test_params_validation():
    with pytest.raises(ValueError):
        RadioParams(loss_prob=-0.1)
    with pytest.raises(ValueError):
        RadioParams(loss_prob=1.1)
    with pytest.raises(ValueError):
        RadioParams(dup_prob=2.0)
    with pytest.raises(ValueError):
        RadioParams(latency_ms=-1.0)
    assert RadioParams(latency_ms=50.0).latency_s == pytest.approx(0.05)


def test_rejects_wrong_frame_length():
    medium = RadioMedium(RadioParams())
    with pytest.raises(RadioError):
        medium.transmit(b"\x00" * 12, 0.0)
    with pytest.raises(RadioError):
        medium.transmit(b"\x00" * 14, 0.0)


def test_no_loss_no_dup_delivers_everything_once():
    medium = RadioMedium(RadioParams(loss_prob=0.0, dup_prob=0.0, latency_ms=50.0, seed=1))
    for i in range(20):
        medium.transmit(frame(i), float(i))
    deliveries = medium.drain_deliveries(100.0)
    assert len(deliveries) == 20
    assert [d.packet_bytes for d in deliveries] == [frame(i) for i in range(20)]
    assert [d.arrival_t for d in deliveries] == [pytest.approx(i + 0.05) for i in range(20)]
    assert medium.transmitted == medium.delivered == 20
    assert medium.lost == medium.duplicated == 0


def test_total_loss_delivers_nothing():
    medium = RadioMedium(RadioParams(loss_prob=1.0, dup_prob=0.0, seed=1))
    for i in range(50):
        medium.transmit(frame(i), float(i))
    assert medium.drain_deliveries(1000.0) == []
    assert medium.lost == 50
    assert medium.pending_count == 0


def test_certain_duplication_doubles_each_delivery():
    medium = RadioMedium(RadioParams(loss_prob=0.0, dup_prob=1.0, seed=2))
    for i in range(10):
        medium.transmit(frame(i), float(i))
    deliveries = medium.drain_deliveries(1000.0)
    assert len(deliveries) == 20
    assert medium.duplicated == 10
    assert medium.delivered == 20
    # both copies arrive at the same instant, order preserved
    assert [d.packet_bytes for d in deliveries[:2]] == [frame(0), frame(0)]


def test_loss_pattern_invariant_to_dup_prob():
    # same seed, different dup_prob: exactly the same transmissions get lost
    outcomes = []
    for dup in (0.0, 0.95):
        medium = RadioMedium(RadioParams(loss_prob=0.3, dup_prob=dup, seed=99))
        lost_flags = []
        for i in range(300):
            events = medium.transmit(frame(i), float(i))
            lost_flags.append(len(events) == 0)
        outcomes.append(lost_flags)
    assert outcomes[0] == outcomes[1]
    assert any(outcomes[0])
    assert not all(outcomes[0])


def test_same_seed_same_outcome_sequence():
    a = RadioMedium(RadioParams(loss_prob=0.2, dup_prob=0.2, seed=5))
    b = RadioMedium(RadioParams(loss_prob=0.2, dup_prob=0.2, seed=5))
    for i in range(200):
        ea = a.transmit(frame(i), float(i))
        eb = b.transmit(frame(i), float(i))
        assert len(ea) == len(eb)
    assert a.lost == b.lost and a.duplicated == b.duplicated


def test_conservation_over_random_parameters():
    rng = random.Random(1234)
    for _ in range(30):
        params = RadioParams(
            loss_prob=rng.uniform(0.0, 1.0),
            dup_prob=rng.uniform(0.0, 1.0),
            latency_ms=rng.uniform(0.0, 500.0),
            seed=rng.getrandbits(32),
        )
        medium = RadioMedium(params)
        n = 200
        for i in range(n):
            medium.transmit(frame(i), float(i))
        deliveries = medium.drain_deliveries(10_000.0)
        assert medium.transmitted == n
        assert medium.delivered + medium.lost - medium.duplicated == n
        assert len(deliveries) == medium.delivered
        assert medium.pending_count == 0


def test_drain_orders_by_arrival_then_transmit_order():
    medium = RadioMedium(RadioParams(loss_prob=0.0, dup_prob=0.0, latency_ms=1000.0, seed=3))
    medium.transmit(frame(1), 0.0)
    medium.transmit(frame(2), 0.0)
    medium.transmit(frame(3), 0.5)
    deliveries = medium.drain_deliveries(2.0)
    assert [d.packet_bytes for d in deliveries] == [frame(1), frame(2), frame(3)]
    assert deliveries[0].arrival_t == pytest.approx(1.0)
    assert deliveries[2].arrival_t == pytest.approx(1.5)


def test_drain_is_inclusive_and_partial():
    medium = RadioMedium(RadioParams(loss_prob=0.0, dup_prob=0.0, latency_ms=100.0, seed=3))
    medium.transmit(frame(1), 0.0)
    medium.transmit(frame(2), 1.0)
    first = medium.drain_deliveries(0.1)  # inclusive upper bound
    assert [d.packet_bytes for d in first] == [frame(1)]
    assert medium.peek_next_arrival() == pytest.approx(1.1)
    assert [d.packet_bytes for d in medium.drain_deliveries(1.1)] == [frame(2)]
    assert medium.peek_next_arrival() is None


def test_drain_rejects_time_regression():
    medium = RadioMedium(RadioParams(seed=3))
    medium.drain_deliveries(5.0)
    with pytest.raises(RadioError):
        medium.drain_deliveries(4.0)


def test_zero_latency_delivers_at_transmit_time():
    medium = RadioMedium(RadioParams(loss_prob=0.0, dup_prob=0.0, latency_ms=0.0, seed=3))
    medium.transmit(frame(1), 7.0)
    deliveries = medium.drain_deliveries(7.0)
    assert len(deliveries) == 1
    assert deliveries[0].arrival_t == 7.0
