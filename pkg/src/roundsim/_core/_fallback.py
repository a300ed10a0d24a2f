"""Pure numpy implementations of the hot per-slot kernels.

These define the reference semantics; ``_kernels.pyx`` must agree with them
bit for bit (see tests/test_kernels.py).
"""
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


def mix64(z):
    """splitmix64 finalizer over a uint64 array (wrapping arithmetic)."""
    with np.errstate(over="ignore"):
        z = np.asarray(z, dtype=np.uint64) + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


def pair_uniform(slot_key, sender_ids, receiver_ids):
    """Uniform [0, 1) coin for each (sender, receiver) pair in a slot."""
    s = np.asarray(sender_ids, dtype=np.uint64)
    r = np.asarray(receiver_ids, dtype=np.uint64)
    z = mix64(np.uint64(slot_key) ^ mix64((s << np.uint64(32)) | r))
    return (z >> np.uint64(11)).astype(np.float64) * _INV53


def window_counts(pos, order, length, half_window):
    """Vehicles (self included) with a ring copy inside [x - h, x + h]."""
    n = len(pos)
    if 2.0 * half_window >= length:
        return np.full(n, n, dtype=np.int64)
    x = pos[order]
    ext = np.concatenate((x - length, x, x + length))
    hi = np.searchsorted(ext, x + half_window, side="right")
    lo = np.searchsorted(ext, x - half_window, side="left")
    counts = np.empty(n, dtype=np.int64)
    counts[order] = hi - lo
    return counts


def ring_pairs(pos, order, length, tx_range):
    """All ordered (receiver, sender) index pairs with ring distance <= tx_range."""
    n = len(pos)
    if n < 2:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    eps = 1e-6 * max(1.0, tx_range)
    if 2.0 * (tx_range + eps) >= length:
        recv = np.repeat(np.arange(n, dtype=np.int64), n)
        send = np.tile(np.arange(n, dtype=np.int64), n)
    else:
        x = pos[order]
        ext = np.concatenate((x - length, x, x + length))
        lo = np.searchsorted(ext, x - tx_range - eps, side="left")
        hi = np.searchsorted(ext, x + tx_range + eps, side="right")
        counts = hi - lo
        total = int(counts.sum())
        recv_sorted = np.repeat(np.arange(n, dtype=np.int64), counts)
        starts = np.cumsum(counts) - counts
        ext_idx = np.repeat(lo, counts) + (np.arange(total, dtype=np.int64)
                                           - np.repeat(starts, counts))
        send_sorted = ext_idx % n
        recv = order[recv_sorted]
        send = order[send_sorted]
    keep = recv != send
    recv, send = recv[keep], send[keep]
    d = np.abs(pos[send] - pos[recv])
    d = np.minimum(d, length - d)
    keep = d <= tx_range
    return recv[keep], send[keep]


def slot_pairs(pos, ids, order, length, tx_range, loss_prob, capacity,
               slot_key, arrival_rank, active=None):
    """Resolve every eligible pair of one slot.

    Returns (recv, send, status) where status is 0 delivered, 1 base loss,
    2 congestion loss. Out-of-range pairs are not listed. ``active``
    optionally masks which vehicles transmit this slot.
    """
    recv, send = ring_pairs(pos, order, length, tx_range)
    if active is not None:
        keep = np.asarray(active, dtype=bool)[send]
        recv, send = recv[keep], send[keep]
    status = np.zeros(len(recv), dtype=np.int8)
    if len(recv) == 0:
        return recv, send, status
    coin = pair_uniform(slot_key, ids[send], ids[recv])
    lost = coin < loss_prob
    status[lost] = 1
    cand = np.flatnonzero(~lost)
    if len(cand):
        keys = np.lexsort((arrival_rank[send[cand]], recv[cand]))
        cand = cand[keys]
        grp = recv[cand]
        boundary = np.ones(len(cand), dtype=bool)
        boundary[1:] = grp[1:] != grp[:-1]
        starts = np.flatnonzero(boundary)
        first = np.repeat(starts, np.diff(np.append(starts, len(cand))))
        within = np.arange(len(cand)) - first
        status[cand[within >= capacity]] = 2
    return recv, send, status


def resolve_slot(pos, ids, order, length, tx_range, loss_prob, capacity,
                 slot_key, arrival_rank, ignore, guard):
    """Per-vehicle counters for one slot.

    Returns (eligible, delivered, lost_base, lost_congestion, ignored,
    reached, got_guard); the first five are per receiver, ``reached`` is per
    sender, ``got_guard`` flags receivers that accepted the beacon of vehicle
    index ``guard`` (-1 for none).
    """
    n = len(pos)
    recv, send, status = slot_pairs(pos, ids, order, length, tx_range, loss_prob,
                                    capacity, slot_key, arrival_rank)
    ok = status == 0
    eligible = np.bincount(recv, minlength=n).astype(np.int64)
    delivered = np.bincount(recv[ok], minlength=n).astype(np.int64)
    lost_base = np.bincount(recv[status == 1], minlength=n).astype(np.int64)
    lost_cong = np.bincount(recv[status == 2], minlength=n).astype(np.int64)
    r_ok, s_ok = recv[ok], send[ok]
    ign = ignore[r_ok, s_ok].astype(bool)
    ignored = np.bincount(r_ok[ign], minlength=n).astype(np.int64)
    reached = np.bincount(s_ok, minlength=n).astype(np.int64)
    got_guard = np.zeros(n, dtype=np.uint8)
    if guard >= 0:
        got_guard[r_ok[s_ok == guard]] = 1
    return eligible, delivered, lost_base, lost_cong, ignored, reached, got_guard
