"""False-information attack: rogue vehicles report a low speed in beacons."""
from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass

import numpy as np

from ._core import mix64
from .errors import InvalidParameterError


class AttackMode(str, enum.Enum):
    SUDDEN = "sudden"
    GRADUAL = "gradual"


@dataclass(frozen=True)
class AttackConfig:
    rogue_fraction: float = 0.0
    false_speed: float = 4.5  # m/s, about 10 mph
    onset: float = 0.0
    coordinated: bool = True
    jitter: float = 0.0
    mode: AttackMode = AttackMode.SUDDEN
    ramp_time: float = 10.0  # s, gradual mode only

    def __post_init__(self):
        object.__setattr__(self, "mode", AttackMode(self.mode))
        if not 0.0 <= self.rogue_fraction <= 1.0:
            raise InvalidParameterError(
                f"rogue_fraction must be in [0, 1], got {self.rogue_fraction}")
        for name in ("false_speed", "onset", "jitter"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise InvalidParameterError(f"{name} must be finite and >= 0, got {v}")
        if not (math.isfinite(self.ramp_time) and self.ramp_time > 0):
            raise InvalidParameterError(f"ramp_time must be > 0, got {self.ramp_time}")


def effective_onsets(ids, cfg):
    """Attack start time per vehicle id.

    Coordinated rogues all switch at ``cfg.onset``; otherwise each one waits an
    extra id-dependent delay in [0, jitter).
    """
    ids = np.asarray(ids, dtype=np.uint64)
    if cfg.coordinated or cfg.jitter == 0:
        return np.full(len(ids), cfg.onset)
    u = (mix64(ids ^ np.uint64(0xA5A5A5A5A5A5A5A5)) >> np.uint64(11)).astype(np.float64)
    return cfg.onset + cfg.jitter * u / 9007199254740992.0


def reported_speeds(true_speed, is_rogue, onsets, cfg, t):
    """Vectorized speed field that each vehicle puts into its beacon."""
    true_speed = np.asarray(true_speed, dtype=np.float64)
    active = np.asarray(is_rogue, dtype=bool) & (t >= np.asarray(onsets))
    if cfg.mode is AttackMode.SUDDEN:
        return np.where(active, cfg.false_speed, true_speed)
    frac = np.clip((t - np.asarray(onsets)) / cfg.ramp_time, 0.0, 1.0)
    ramped = true_speed + (cfg.false_speed - true_speed) * frac
    return np.where(active, ramped, true_speed)


def apply_attack(vehicle, beacon, cfg, t):
    """Return the beacon as the vehicle actually broadcasts it at time ``t``.

    Only the speed field changes, and it is derived from the vehicle's true
    speed, so applying this twice gives the same beacon.
    """
    if beacon.sender_id != vehicle.id:
        raise InvalidParameterError("beacon sender does not match vehicle")
    if not vehicle.is_rogue:
        return beacon
    onset = float(effective_onsets([vehicle.id], cfg)[0])
    if t < onset:
        return beacon
    speed = float(reported_speeds([vehicle.speed], [True], [onset], cfg, t)[0])
    return dataclasses.replace(beacon, speed=float(np.float32(speed)))
