"""Hot per-slot kernels: compiled when available, numpy otherwise.

Set ``ROUNDSIM_PURE_PYTHON=1`` to force the fallback.
"""
import os

import numpy as np

from . import _fallback
from ._fallback import mix64, pair_uniform, ring_pairs, slot_pairs  # noqa: F401

_compiled = None
if not os.environ.get("ROUNDSIM_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _fallback


def available_backends():
    return ["cython", "python"] if _compiled is not None else ["python"]


def get_backend(name=None):
    if name is None:
        return _impl
    if name == "python":
        return _fallback
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def sort_order(pos):
    return np.argsort(pos, kind="stable").astype(np.int64)


def arrival_rank(slot_key, ids):
    """Rank of each sender in the slot's channel-access order."""
    prio = mix64(np.uint64(slot_key) ^ mix64(np.asarray(ids, dtype=np.uint64)
                                             + np.uint64(0x5851F42D4C957F2D)))
    rank = np.empty(len(ids), dtype=np.int64)
    rank[np.argsort(prio, kind="stable")] = np.arange(len(ids), dtype=np.int64)
    return rank


def window_counts(pos, order, length, half_window, backend=None):
    impl = get_backend(backend)
    return impl.window_counts(np.ascontiguousarray(pos, dtype=np.float64),
                              np.ascontiguousarray(order, dtype=np.int64),
                              float(length), float(half_window))


def resolve_slot(pos, ids, order, length, tx_range, loss_prob, capacity,
                 slot_key, arrival, ignore, guard=-1, backend=None):
    impl = get_backend(backend)
    return impl.resolve_slot(np.ascontiguousarray(pos, dtype=np.float64),
                             np.ascontiguousarray(ids, dtype=np.uint32),
                             np.ascontiguousarray(order, dtype=np.int64),
                             float(length), float(tx_range), float(loss_prob),
                             int(capacity), np.uint64(slot_key),
                             np.ascontiguousarray(arrival, dtype=np.int64),
                             np.ascontiguousarray(ignore, dtype=np.uint8),
                             int(guard))
