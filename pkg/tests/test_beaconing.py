import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roundsim.attack import AttackConfig
from roundsim.beaconing import (FRAME_SIZE, MAX_ROGUE_IDS, BeaconMessage, ChannelModel,
                                GuardPayload, decode_beacon, deliver, emit_beacons,
                                encode_beacon)
from roundsim.detection import DetectionReport, SpeedAggregate
from roundsim.errors import ContractViolation, DecodeError, EncodeError, InvalidParameterError
from roundsim.mobility import RoadNetwork, World

f32 = st.floats(width=32, allow_nan=False, allow_infinity=False)
u32 = st.integers(0, 2**32 - 1)


@st.composite
def beacons(draw):
    payload = None
    if draw(st.booleans()):
        ids = draw(st.lists(u32, max_size=MAX_ROGUE_IDS))
        payload = GuardPayload(1 if ids else 0, ids)
    return BeaconMessage(draw(u32), draw(st.integers(0, 2**64 - 1)), draw(f32),
                         draw(st.floats(allow_nan=False)), draw(st.integers(0, 255)),
                         draw(f32), draw(f32), payload)


def world_at(positions, rogue=None, speeds=None):
    n = len(positions)
    return World(road=RoadNetwork(length=6000.0, lanes=2), ids=np.arange(1, n + 1),
                 pos=positions, lane=[0] * n, speed=speeds or [20.0] * n, accel=[0.0] * n,
                 is_rogue=rogue or [False] * n, desired=[20.0] * n)


@given(beacons())
@settings(max_examples=300)
def test_round_trip(b):
    data = encode_beacon(b)
    assert len(data) == FRAME_SIZE
    assert decode_beacon(data) == b


def test_guard_payload_layout():
    b = BeaconMessage(7, 100, 20.0, 5.0, 1, 0.0, 0.01, GuardPayload(1, (10, 11, 12)))
    data = encode_beacon(b)
    assert data[0] == 0xB5 and data[1] == 1
    assert data[35] == 1
    assert struct.unpack_from("<H", data, 36)[0] == 3
    assert struct.unpack_from("<3I", data, 38) == (10, 11, 12)
    # payload region: 1 + 2 + 12 bytes, then zero padding
    assert data[35 + 15:] == bytes(FRAME_SIZE - 50)


def test_vehicle_header_layout():
    b = BeaconMessage(0x01020304, 2**40, 28.0, 1234.5, 1, -1.5, 0.02)
    data = encode_beacon(b)
    assert data[:2] == b"\xb5\x00"
    assert struct.unpack_from("<I", data, 2)[0] == 0x01020304
    assert struct.unpack_from("<Q", data, 6)[0] == 2**40
    assert struct.unpack_from("<f", data, 14)[0] == 28.0
    assert struct.unpack_from("<d", data, 18)[0] == 1234.5
    assert data[26] == 1
    assert struct.unpack_from("<f", data, 27)[0] == -1.5
    assert data[35:] == bytes(FRAME_SIZE - 35)


def test_encode_overflow():
    b = BeaconMessage(1, 0, 1.0, 0.0, 0, 0.0, 0.0, GuardPayload(1, range(1, 66)))
    with pytest.raises(EncodeError):
        encode_beacon(b)


def test_decode_wrong_length():
    with pytest.raises(DecodeError):
        decode_beacon(bytes(299))


def test_decode_bad_magic_and_type():
    good = bytearray(encode_beacon(BeaconMessage(1, 0, 1.0, 0.0, 0, 0.0, 0.0)))
    bad = bytearray(good)
    bad[0] = 0x00
    with pytest.raises(DecodeError):
        decode_beacon(bytes(bad))
    bad = bytearray(good)
    bad[1] = 7
    with pytest.raises(DecodeError):
        decode_beacon(bytes(bad))


def test_decode_count_overflow():
    data = bytearray(encode_beacon(BeaconMessage(1, 0, 1.0, 0.0, 0, 0.0, 0.0,
                                                 GuardPayload(0, ()))))
    struct.pack_into("<BH", data, 35, 1, 65)
    with pytest.raises(DecodeError):
        decode_beacon(bytes(data))


def test_guard_payload_invariant():
    with pytest.raises(InvalidParameterError):
        GuardPayload(1, ())
    with pytest.raises(InvalidParameterError):
        GuardPayload(0, (4,))


def test_emit_one_per_vehicle():
    w = world_at([0.0, 10.0, 20.0, 30.0, 40.0])
    assert len(emit_beacons(w, 0.1, AttackConfig())) == 5


def test_emit_off_interval():
    with pytest.raises(ContractViolation):
        emit_beacons(world_at([0.0, 1.0]), 0.05, AttackConfig())


def test_emit_rogue_speed_falsified():
    w = world_at([0.0, 50.0], rogue=[False, True], speeds=[28.0, 28.0])
    out = emit_beacons(w, 0.1, AttackConfig(rogue_fraction=0.5, false_speed=4.5))
    assert out[0].speed == 28.0
    assert out[1].speed == pytest.approx(4.5, abs=1e-6)
    assert out[1].pos == 50.0


def test_emit_guard_carries_payload():
    w = world_at([0.0, 50.0, 100.0])
    rep = DetectionReport(2, SpeedAggregate(3, 0.0, 20.0, 0.0), {}, (3,), 1, 0.0)
    out = emit_beacons(w, 0.2, AttackConfig(), report=rep)
    assert [b.is_guard for b in out] == [False, True, False]
    assert out[1].guard_payload == GuardPayload(1, (3,))
    assert out[1].timestamp_ms == 200


def _channel(**kw):
    base = dict(tx_range=500.0, capacity=None, base_loss_prob=0.0, background_load=0.0)
    base.update(kw)
    return ChannelModel(**base)


def test_out_of_range_not_a_loss():
    w = world_at([0.0, 600.0])
    inbox, led = deliver(emit_beacons(w, 0.1, AttackConfig()), w, _channel(),
                         np.random.default_rng(0))
    assert inbox[1] == [] and inbox[2] == []
    assert led.lost == 0 and led.out_of_range == 2 and led.sent == 2


def test_in_range_delivered():
    w = world_at([0.0, 100.0])
    bs = emit_beacons(w, 0.1, AttackConfig())
    inbox, led = deliver(bs, w, _channel(), np.random.default_rng(0))
    assert inbox[2] == [bs[0]] and inbox[1] == [bs[1]]
    assert led.delivered == 2 and led.lost == 0


def test_congestion_cap():
    # receiver plus 200 senders, all within 100 m of each other
    pos = [0.0] + list(np.linspace(-100, 100, 200) % 6000)
    w = world_at(pos)
    bs = emit_beacons(w, 0.1, AttackConfig())
    inbox, led = deliver(bs, w, _channel(capacity=150), np.random.default_rng(0))
    assert led.per_receiver[1] == {"eligible": 200, "delivered": 150, "lost": 50}
    assert len(inbox[1]) == 150
    assert all(len(v) <= 150 for v in inbox.values())
    assert led.lost_base == 0
    assert led.balanced()


def test_ignore_list():
    w = world_at([0.0, 50.0, 100.0])
    bs = emit_beacons(w, 0.1, AttackConfig())
    inbox, led = deliver(bs, w, _channel(), np.random.default_rng(0), ignore={1: {3}})
    assert [b.sender_id for b in inbox[1]] == [2]
    assert led.ignored == 1 and led.delivered == 6


@given(st.lists(st.floats(0, 5999), min_size=2, max_size=60), st.floats(0, 1),
       st.one_of(st.none(), st.integers(1, 20)), st.integers(0, 2**32))
@settings(max_examples=60, deadline=None)
def test_frame_conservation(pos, loss, cap, seed):
    w = world_at(pos)
    ch = ChannelModel(tx_range=500.0, capacity=cap, base_loss_prob=loss, background_load=0.0)
    inbox, led = deliver(emit_beacons(w, 0.1, AttackConfig()), w, ch,
                         np.random.default_rng(seed))
    assert led.balanced()
    assert all(min(v.values()) >= 0 for v in led.per_receiver.values())
    for rid, rec in led.per_receiver.items():
        assert rec["delivered"] + rec["lost"] == rec["eligible"]
        assert len(inbox[rid]) <= ch.effective_capacity(w.n)


def test_lossless_delivers_everything_in_range():
    rng = np.random.default_rng(5)
    pos = list(rng.uniform(0, 6000, 80))
    w = world_at(pos)
    inbox, led = deliver(emit_beacons(w, 0.1, AttackConfig()), w, _channel(), rng)
    p = np.array(pos)
    for i in range(w.n):
        d = np.abs(p - p[i])
        d = np.minimum(d, 6000 - d)
        expected = {j + 1 for j in np.flatnonzero(d <= 500) if j != i}
        assert {b.sender_id for b in inbox[i + 1]} == expected
    assert led.lost == 0


def test_channel_invariants():
    with pytest.raises(InvalidParameterError):
        ChannelModel(tx_range=0)
    with pytest.raises(InvalidParameterError):
        ChannelModel(capacity=0)
    with pytest.raises(InvalidParameterError):
        ChannelModel(base_loss_prob=1.5)
    assert ChannelModel(capacity=250, background_load=0.1).effective_capacity(10) == 225
