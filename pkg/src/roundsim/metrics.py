"""Detection and network metrics, plus the binomial system-failure probability."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .beaconing import FRAME_SIZE
from .errors import InvalidParameterError


@dataclass(frozen=True)
class GroundTruth:
    rogue_ids: frozenset
    honest_ids: frozenset

    def __post_init__(self):
        object.__setattr__(self, "rogue_ids", frozenset(int(i) for i in self.rogue_ids))
        object.__setattr__(self, "honest_ids", frozenset(int(i) for i in self.honest_ids))
        if self.rogue_ids & self.honest_ids:
            raise InvalidParameterError("rogue and honest id sets overlap")

    @classmethod
    def from_world(cls, world):
        ids = [int(i) for i in world.ids]
        rogue = [i for i, r in zip(ids, world.is_rogue) if r]
        honest = [i for i, r in zip(ids, world.is_rogue) if not r]
        return cls(frozenset(rogue), frozenset(honest))


@dataclass(frozen=True)
class MetricsReport:
    tpr: float | None
    fpr: float | None
    plr: float
    avg_throughput: float  # bits/s
    overhead_bytes: int
    overhead_ratio: float
    processing_time: float  # s, mean per detection round


def tpr(flagged, truth):
    """Share of rogues flagged; None when there are no rogues."""
    if not truth.rogue_ids:
        return None
    return len(set(flagged) & truth.rogue_ids) / len(truth.rogue_ids)


def fpr(flagged, truth):
    """Share of honest vehicles flagged; None when there are none."""
    if not truth.honest_ids:
        return None
    return len(set(flagged) & truth.honest_ids) / len(truth.honest_ids)


def _ledger_counts(ledger):
    if isinstance(ledger, dict):
        sent = ledger.get("sent", 0)
        oor = ledger.get("out_of_range", 0)
        lost = ledger.get("lost", ledger.get("lost_base", 0) + ledger.get("lost_congestion", 0))
        return sent - oor, lost, ledger.get("delivered", sent - oor - lost)
    return ledger.eligible, ledger.lost, ledger.delivered


def plr(ledger):
    """Lost over offered in-range messages; out-of-range pairs are not losses."""
    eligible, lost, _ = _ledger_counts(ledger)
    if eligible <= 0:
        return 0.0
    if lost > eligible:
        raise InvalidParameterError("ledger reports more losses than offered messages")
    return lost / eligible


def avg_throughput(ledger, sim_time, frame_size=FRAME_SIZE):
    if not sim_time > 0:
        raise InvalidParameterError(f"sim_time must be > 0, got {sim_time}")
    _, _, delivered = _ledger_counts(ledger)
    return delivered * frame_size * 8 / sim_time


def payload_bytes(n_ids):
    """Guard payload size on the wire: rlt byte, u16 count, u32 per id."""
    return 1 + 2 + 4 * n_ids


def overhead(guard_beacons, total_beacons=None, frame_size=FRAME_SIZE):
    """(bytes, ratio) of guard payloads relative to all beacon bytes sent.

    ``guard_beacons`` holds BeaconMessage or GuardPayload items; when
    ``total_beacons`` is omitted only the guard beacons count as sent.
    """
    total = 0
    count = 0
    for g in guard_beacons:
        payload = getattr(g, "guard_payload", g)
        if payload is None:
            continue
        total += payload_bytes(len(payload.rogue_ids))
        count += 1
    sent = count if total_beacons is None else total_beacons
    if sent == 0:
        return 0, 0.0
    return total, total / (sent * frame_size)


def p_sysfail(n_vehicles, t_max, d_f, k_threshold):
    """P(X >= k_threshold) for X ~ Binomial(n_vehicles * t_max, d_f).

    With k_threshold = 0 this is the full binomial sum, i.e. 1.
    """
    if not (isinstance(d_f, (int, float)) and 0.0 <= d_f <= 1.0):
        raise InvalidParameterError(f"d_f must be a probability, got {d_f}")
    n = int(n_vehicles) * int(t_max)
    if n < 1:
        raise InvalidParameterError(f"n_vehicles * t_max must be >= 1, got {n}")
    k = int(k_threshold)
    if not 0 <= k <= n:
        raise InvalidParameterError(f"k_threshold must be in [0, {n}], got {k_threshold}")
    if k == 0:
        return 1.0
    if d_f == 0.0:
        return 0.0
    if d_f == 1.0:
        return 1.0
    log_p, log_q = math.log(d_f), math.log1p(-d_f)
    lg_n = math.lgamma(n + 1)
    mean = n * d_f
    sd = math.sqrt(n * d_f * (1 - d_f))
    # terms further than ~40 sd from the mean are below double precision
    hi = min(n, int(mean + 40 * sd + 50))
    lo = max(k, int(mean - 40 * sd - 50))
    if lo > hi:
        return 0.0
    logs = [lg_n - math.lgamma(j + 1) - math.lgamma(n - j + 1) + j * log_p + (n - j) * log_q
            for j in range(lo, hi + 1)]
    m = max(logs)
    return min(1.0, math.exp(m) * math.fsum(math.exp(v - m) for v in logs))
