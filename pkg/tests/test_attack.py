import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from roundsim.attack import AttackConfig, AttackMode, apply_attack, effective_onsets
from roundsim.beaconing import BeaconMessage
from roundsim.errors import InvalidParameterError
from roundsim.mobility import VehicleState

HONEST = VehicleState(1, 100.0, 0, 28.0, 0.5, False)
ROGUE = VehicleState(2, 200.0, 1, 28.0, 0.5, True)


def beacon_of(v):
    return BeaconMessage(v.id, 1000, v.speed, v.pos, v.lane, v.accel, 0.01)


def test_honest_passthrough():
    b = beacon_of(HONEST)
    assert apply_attack(HONEST, b, AttackConfig(false_speed=4.5), 50.0) is b


def test_rogue_before_onset():
    b = beacon_of(ROGUE)
    assert apply_attack(ROGUE, b, AttackConfig(onset=10.0), 5.0) == b


def test_rogue_sudden_drop():
    b = beacon_of(ROGUE)
    out = apply_attack(ROGUE, b, AttackConfig(false_speed=4.5), 1.0)
    assert out.speed == pytest.approx(4.5, abs=1e-6)
    assert dataclasses.replace(out, speed=b.speed) == b


def test_sender_mismatch():
    with pytest.raises(InvalidParameterError):
        apply_attack(ROGUE, beacon_of(HONEST), AttackConfig(), 1.0)


@given(st.floats(0, 100), st.sampled_from(list(AttackMode)), st.booleans(),
       st.floats(0, 20))
def test_idempotent(t, mode, coordinated, jitter):
    cfg = AttackConfig(false_speed=4.5, mode=mode, coordinated=coordinated, jitter=jitter,
                       ramp_time=5.0)
    for v in (HONEST, ROGUE):
        once = apply_attack(v, beacon_of(v), cfg, t)
        assert apply_attack(v, once, cfg, t) == once


def test_gradual_ramp():
    cfg = AttackConfig(false_speed=4.0, onset=10.0, mode="gradual", ramp_time=10.0)
    b = beacon_of(ROGUE)
    assert apply_attack(ROGUE, b, cfg, 15.0).speed == pytest.approx(16.0, abs=1e-5)
    assert apply_attack(ROGUE, b, cfg, 25.0).speed == pytest.approx(4.0, abs=1e-6)


def test_coordinated_onsets_equal_and_jittered_spread():
    ids = np.arange(1, 50)
    assert np.all(effective_onsets(ids, AttackConfig(onset=3.0)) == 3.0)
    jit = effective_onsets(ids, AttackConfig(onset=3.0, coordinated=False, jitter=2.0))
    assert np.all((jit >= 3.0) & (jit < 5.0)) and len(set(jit.tolist())) > 40


def test_attack_config_validation():
    with pytest.raises(InvalidParameterError):
        AttackConfig(rogue_fraction=1.2)
    with pytest.raises(InvalidParameterError):
        AttackConfig(false_speed=-1)
