"""Guard election, beacon aggregation, and the mean +/- sigma speed test."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .beaconing import MAX_ROGUE_IDS, BeaconMessage, GuardPayload
from .errors import EncodeError, InvalidParameterError, NoEligibleGuard, NoQuorum

DEFAULT_EPSILON_SIGMA = 1e-6  # m/s


class Verdict(str, enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"


@dataclass(frozen=True)
class GuardSelection:
    guard_id: int
    centroid: tuple
    tie_broken: bool


@dataclass(frozen=True)
class SpeedAggregate:
    n: int
    rho_avg: float
    s_avg: float
    sigma: float


@dataclass(frozen=True)
class DetectionReport:
    guard_id: int
    aggregate: SpeedAggregate
    verdicts: dict
    flagged_ids: tuple
    rlt: int
    processing_time: float


@dataclass(frozen=True)
class FogModel:
    """Pooled OBU capacity seen by the guard: alpha + m / (rate * n**gamma)."""

    per_obu_rate: float = 1000.0  # messages/s
    gamma: float = 0.8
    alpha: float = 0.0  # s

    def __post_init__(self):
        if not (math.isfinite(self.per_obu_rate) and self.per_obu_rate > 0):
            raise InvalidParameterError(f"per_obu_rate must be > 0, got {self.per_obu_rate}")
        if not 0 < self.gamma <= 1:
            raise InvalidParameterError(f"gamma must be in (0, 1], got {self.gamma}")
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise InvalidParameterError(f"alpha must be >= 0, got {self.alpha}")


def fog_processing_time(m, n_vehicles, fog):
    if m < 0:
        raise InvalidParameterError(f"message count must be >= 0, got {m}")
    if n_vehicles < 1:
        raise InvalidParameterError(f"n_vehicles must be >= 1, got {n_vehicles}")
    return fog.alpha + m / (fog.per_obu_rate * n_vehicles ** fog.gamma)


def centroid(positions):
    pts = np.asarray(positions, dtype=np.float64)
    if pts.size == 0:
        raise InvalidParameterError("centroid of an empty point set")
    pts = pts.reshape(len(pts), -1)
    return tuple(float(c) for c in pts.mean(axis=0))


def select_guard_index(points, eligible, rng):
    """Index of the eligible point nearest the centroid of all points.

    Near-equal distances (relative 1e-12 of the coordinate scale) count as a
    tie and are resolved by a draw from ``rng``.
    """
    pts = np.asarray(points, dtype=np.float64)
    eligible = np.asarray(eligible, dtype=bool)
    if len(pts) < 2:
        raise NoQuorum(f"guard election needs at least 2 vehicles, got {len(pts)}")
    if not eligible.any():
        raise NoEligibleGuard("no honest vehicle can act as guard")
    c = pts.mean(axis=0)
    d = np.sqrt(((pts - c) ** 2).sum(axis=1))
    cand = np.flatnonzero(eligible)
    dmin = d[cand].min()
    tol = 1e-12 * max(1.0, float(np.abs(pts).max()))
    tied = cand[d[cand] <= dmin + tol]
    if len(tied) == 1:
        return int(tied[0]), tuple(float(v) for v in c), False
    return int(tied[rng.integers(len(tied))]), tuple(float(v) for v in c), True


def select_guard(world, rng):
    idx, c, tie = select_guard_index(world.points(), ~world.is_rogue, rng)
    return GuardSelection(int(world.ids[idx]), c, tie)


def _latest_per_sender(beacons):
    latest = {}
    for b in beacons:
        prev = latest.get(b.sender_id)
        if prev is None or b.timestamp_ms >= prev.timestamp_ms:
            latest[b.sender_id] = b
    return latest


def aggregate_arrays(speeds, densities):
    speeds = np.asarray(speeds, dtype=np.float64)
    if len(speeds) < 2:
        raise NoQuorum(f"aggregation needs at least 2 senders, got {len(speeds)}")
    s_avg = float(speeds.mean())
    sigma = float(np.sqrt(np.mean((speeds - s_avg) ** 2)))
    return SpeedAggregate(len(speeds), float(np.mean(densities)), s_avg, sigma)


def aggregate(beacons):
    latest = _latest_per_sender(beacons)
    vals = list(latest.values())
    return aggregate_arrays([b.speed for b in vals], [b.density for b in vals])


def _exact_inside(speeds, idx):
    """Exact test of |S_i - mean| < sigma for the listed indices.

    Uses n * (n*S_i - T)**2 < sum_j (n*S_j - T)**2 with T = sum S, which is
    the same condition with the divisions cleared.
    """
    fr = [Fraction(float(s)) for s in speeds]
    n = len(fr)
    total = sum(fr)
    spread = sum((n * s - total) ** 2 for s in fr)
    return {int(i): n * (n * fr[i] - total) ** 2 < spread for i in idx}


def accept_mask(speeds, agg, epsilon_sigma=DEFAULT_EPSILON_SIGMA):
    """True where a speed lies strictly inside (s_avg - sigma, s_avg + sigma)."""
    speeds = np.asarray(speeds, dtype=np.float64)
    if agg.sigma < epsilon_sigma:
        return np.ones(len(speeds), dtype=bool)
    dev = np.abs(speeds - agg.s_avg)
    inside = dev < agg.sigma
    # float rounding can flip the strict bound; settle close calls exactly
    close = np.flatnonzero(np.abs(dev - agg.sigma) <= 1e-9 * agg.sigma)
    if len(close):
        for i, ok in _exact_inside(speeds, close).items():
            inside[i] = ok
    return inside


def hypothesis_test(speeds, agg, epsilon_sigma=DEFAULT_EPSILON_SIGMA):
    """Per-sender verdicts; REJECT means the honest-sender hypothesis is rejected."""
    ids = list(speeds)
    mask = accept_mask([speeds[i] for i in ids], agg, epsilon_sigma)
    return {i: Verdict.ACCEPT if ok else Verdict.REJECT for i, ok in zip(ids, mask)}


def detect(world, inbox, fog, rng, guard_id=None, epsilon_sigma=DEFAULT_EPSILON_SIGMA):
    """One detection round over the beacons the guard collected."""
    if not inbox:
        raise NoQuorum("guard inbox is empty")
    if guard_id is None:
        guard_id = select_guard(world, rng).guard_id
    latest = _latest_per_sender(inbox)
    ids = sorted(latest)
    agg = aggregate_arrays([latest[i].speed for i in ids], [latest[i].density for i in ids])
    mask = accept_mask([latest[i].speed for i in ids], agg, epsilon_sigma)
    verdicts = {i: Verdict.ACCEPT if ok else Verdict.REJECT for i, ok in zip(ids, mask)}
    flagged = tuple(i for i, ok in zip(ids, mask) if not ok)
    return DetectionReport(
        guard_id=int(guard_id), aggregate=agg, verdicts=verdicts, flagged_ids=flagged,
        rlt=1 if flagged else 0,
        processing_time=fog_processing_time(len(inbox), world.n, fog))


def build_guard_beacon(report, guard_state, t, density=None):
    if len(report.flagged_ids) > MAX_ROGUE_IDS:
        raise EncodeError(f"{len(report.flagged_ids)} flagged ids exceed the "
                          f"{MAX_ROGUE_IDS}-id guard frame")
    if density is None:
        density = report.aggregate.rho_avg
    return BeaconMessage(
        sender_id=guard_state.id, timestamp_ms=int(round(t * 1000)),
        speed=guard_state.speed, pos=guard_state.pos, lane=guard_state.lane,
        accel=guard_state.accel, density=density,
        guard_payload=GuardPayload(report.rlt, report.flagged_ids))
