"""Beacon messages, their fixed 300-byte wire frame, and the broadcast channel."""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import _core
from .attack import effective_onsets, reported_speeds
from .errors import ContractViolation, DecodeError, EncodeError, InvalidParameterError
from .mobility import density_field

FRAME_SIZE = 300
MAGIC = 0xB5
MSG_VEHICLE = 0
MSG_GUARD = 1
MAX_ROGUE_IDS = 64
DEFAULT_INTERVAL_MS = 100

_HEADER = struct.Struct("<BBIQfdBff")  # 35 bytes
_GUARD_HEAD = struct.Struct("<BH")
assert _HEADER.size == 35


def _f32(x):
    return float(np.float32(x))


@dataclass(frozen=True)
class GuardPayload:
    rlt: int
    rogue_ids: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "rogue_ids", tuple(int(i) for i in self.rogue_ids))
        if self.rlt not in (0, 1):
            raise InvalidParameterError(f"rlt must be 0 or 1, got {self.rlt}")
        if bool(self.rlt) != bool(self.rogue_ids):
            raise InvalidParameterError("rlt must be 1 exactly when rogue_ids is non-empty")

    @property
    def wire_size(self):
        """Bytes this payload adds to the frame: rlt, count, then ids."""
        return 1 + 2 + 4 * len(self.rogue_ids)


@dataclass(frozen=True)
class BeaconMessage:
    """One broadcast record. Float fields carried as f32 on the wire are
    stored already rounded to f32 so that decode(encode(b)) == b."""

    sender_id: int
    timestamp_ms: int
    speed: float
    pos: float
    lane: int
    accel: float
    density: float
    guard_payload: GuardPayload | None = None

    def __post_init__(self):
        object.__setattr__(self, "speed", _f32(self.speed))
        object.__setattr__(self, "accel", _f32(self.accel))
        object.__setattr__(self, "density", _f32(self.density))
        object.__setattr__(self, "pos", float(self.pos))

    @property
    def is_guard(self):
        return self.guard_payload is not None


def encode_beacon(b):
    if not 0 <= b.sender_id < 2**32:
        raise EncodeError(f"sender_id out of u32 range: {b.sender_id}")
    if not 0 <= b.timestamp_ms < 2**64:
        raise EncodeError(f"timestamp out of u64 range: {b.timestamp_ms}")
    if not 0 <= b.lane < 256:
        raise EncodeError(f"lane out of u8 range: {b.lane}")
    msg_type = MSG_GUARD if b.guard_payload is not None else MSG_VEHICLE
    buf = bytearray(FRAME_SIZE)
    _HEADER.pack_into(buf, 0, MAGIC, msg_type, b.sender_id, b.timestamp_ms,
                      b.speed, b.pos, b.lane, b.accel, b.density)
    if msg_type == MSG_GUARD:
        ids = b.guard_payload.rogue_ids
        if len(ids) > MAX_ROGUE_IDS:
            raise EncodeError(f"{len(ids)} rogue ids exceed the frame cap of {MAX_ROGUE_IDS}")
        if any(not 0 <= i < 2**32 for i in ids):
            raise EncodeError("rogue id out of u32 range")
        _GUARD_HEAD.pack_into(buf, _HEADER.size, b.guard_payload.rlt, len(ids))
        struct.pack_into(f"<{len(ids)}I", buf, _HEADER.size + _GUARD_HEAD.size, *ids)
    return bytes(buf)


def decode_beacon(data):
    if len(data) != FRAME_SIZE:
        raise DecodeError(f"beacon frame must be {FRAME_SIZE} bytes, got {len(data)}")
    magic, msg_type, sid, ts, speed, pos, lane, accel, density = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise DecodeError(f"bad magic byte 0x{magic:02x}")
    if msg_type not in (MSG_VEHICLE, MSG_GUARD):
        raise DecodeError(f"unknown msg_type {msg_type}")
    payload = None
    if msg_type == MSG_GUARD:
        rlt, count = _GUARD_HEAD.unpack_from(data, _HEADER.size)
        if count > MAX_ROGUE_IDS:
            raise DecodeError(f"rogue count {count} exceeds {MAX_ROGUE_IDS}")
        ids = struct.unpack_from(f"<{count}I", data, _HEADER.size + _GUARD_HEAD.size)
        try:
            payload = GuardPayload(rlt, ids)
        except InvalidParameterError as exc:
            raise DecodeError(str(exc)) from None
    return BeaconMessage(sid, ts, speed, pos, lane, accel, density, payload)


@dataclass(frozen=True)
class ChannelModel:
    tx_range: float = 500.0
    capacity: int | None = 250  # beacons per slot per receiver; None = unbounded
    base_loss_prob: float = 0.005
    background_load: float = 0.1  # share of capacity taken by SCH/IP traffic

    def __post_init__(self):
        if not (math.isfinite(self.tx_range) and self.tx_range > 0):
            raise InvalidParameterError(f"tx_range must be > 0, got {self.tx_range}")
        if self.capacity is not None and self.capacity < 1:
            raise InvalidParameterError(f"capacity must be >= 1, got {self.capacity}")
        if not 0.0 <= self.base_loss_prob <= 1.0:
            raise InvalidParameterError(
                f"base_loss_prob must be in [0, 1], got {self.base_loss_prob}")
        if not 0.0 <= self.background_load < 1.0:
            raise InvalidParameterError(
                f"background_load must be in [0, 1), got {self.background_load}")

    def effective_capacity(self, n_vehicles):
        """Per-receiver slot budget after the background deduction."""
        if self.capacity is None:
            return max(int(n_vehicles), 1)
        return max(1, int(math.floor(self.capacity * (1.0 - self.background_load))))


@dataclass
class DeliveryLedger:
    sent: int = 0
    delivered: int = 0
    lost_base: int = 0
    lost_congestion: int = 0
    out_of_range: int = 0
    ignored: int = 0
    per_receiver: dict = field(default_factory=dict)

    @property
    def lost(self):
        return self.lost_base + self.lost_congestion

    @property
    def eligible(self):
        return self.sent - self.out_of_range

    def balanced(self):
        parts = (self.delivered, self.lost_base, self.lost_congestion, self.out_of_range)
        return min(parts) >= 0 and self.sent == sum(parts)

    def add(self, other):
        self.sent += other.sent
        self.delivered += other.delivered
        self.lost_base += other.lost_base
        self.lost_congestion += other.lost_congestion
        self.out_of_range += other.out_of_range
        self.ignored += other.ignored


def slot_index(t, beacon_interval_ms=DEFAULT_INTERVAL_MS):
    k = t * 1000.0 / beacon_interval_ms
    kr = round(k)
    if t < 0 or abs(k - kr) > 1e-6:
        raise ContractViolation(
            f"t={t} s is not a multiple of the {beacon_interval_ms} ms beacon interval")
    return int(kr)


def emit_beacons(world, t, attack, report=None, beacon_interval_ms=DEFAULT_INTERVAL_MS):
    """One beacon per vehicle at slot time ``t``.

    Rogue speeds go through the attack; the vehicle that ran the last
    detection round (``report.guard_id``) attaches its verdict payload.
    """
    k = slot_index(t, beacon_interval_ms)
    ts = k * beacon_interval_ms
    rho = density_field(world)
    onsets = effective_onsets(world.ids, attack)
    speeds = reported_speeds(world.speed, world.is_rogue, onsets, attack, t)
    guard_id = report.guard_id if report is not None else None
    out = []
    for i in range(world.n):
        vid = int(world.ids[i])
        payload = None
        if guard_id is not None and vid == guard_id:
            payload = GuardPayload(report.rlt, tuple(report.flagged_ids))
        out.append(BeaconMessage(vid, ts, speeds[i], world.pos[i], int(world.lane[i]),
                                 world.accel[i], rho[i], payload))
    return out


def draw_slot_key(rng):
    return np.uint64(rng.integers(0, 2**64, dtype=np.uint64))


def deliver(beacons, world, channel, rng, ignore=None):
    """Broadcast one slot of beacons.

    Returns ``(inboxes, ledger)``: inboxes map receiver id to the beacons it
    accepted, in arrival order. ``ignore`` optionally maps a receiver id to
    sender ids whose beacons it discards on arrival (counted as delivered and
    ignored, never as lost).
    """
    latest = {}
    for b in beacons:
        prev = latest.get(b.sender_id)
        if prev is None or b.timestamp_ms >= prev.timestamp_ms:
            latest[b.sender_id] = b
    n = world.n
    active = np.zeros(n, dtype=bool)
    for sid in latest:
        active[world.index_of(sid)] = True
    slot_key = draw_slot_key(rng)
    arrival = _core.arrival_rank(slot_key, world.ids)
    order = _core.sort_order(world.pos)
    recv, send, status = _core.slot_pairs(
        world.pos, world.ids, order, world.road.length, channel.tx_range,
        channel.base_loss_prob, channel.effective_capacity(n), slot_key, arrival,
        active=active)

    ledger = DeliveryLedger()
    ledger.sent = len(latest) * (n - 1)
    ledger.out_of_range = ledger.sent - len(recv)
    ledger.lost_base = int(np.sum(status == 1))
    ledger.lost_congestion = int(np.sum(status == 2))
    ledger.delivered = int(np.sum(status == 0))
    inboxes = {int(v): [] for v in world.ids}
    ok = np.flatnonzero(status == 0)
    ok = ok[np.lexsort((arrival[send[ok]], recv[ok]))]
    for p in ok:
        rid, sid = int(world.ids[recv[p]]), int(world.ids[send[p]])
        if ignore and sid in ignore.get(rid, ()):
            ledger.ignored += 1
            continue
        inboxes[rid].append(latest[sid])
    for i in range(n):
        rid = int(world.ids[i])
        m = recv == i
        ledger.per_receiver[rid] = {
            "eligible": int(m.sum()),
            "delivered": int(np.sum(m & (status == 0))),
            "lost": int(np.sum(m & (status > 0))),
        }
    return inboxes, ledger
