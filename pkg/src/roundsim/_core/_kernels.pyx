# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-slot kernels. Semantics mirror ``_fallback`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, uint8_t, uint32_t
from libc.stdlib cimport malloc, free, qsort
from libc.math cimport fabs

cnp.import_array()

cdef double INV53 = 1.0 / 9007199254740992.0


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z += 0x9E3779B97F4A7C15ULL
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double pair_coin(uint64_t key, uint64_t sid, uint64_t rid) noexcept nogil:
    cdef uint64_t z = mix64(key ^ mix64((sid << 32) | rid))
    return <double>(z >> 11) * INV53


cdef int cmp_i64(const void* a, const void* b) noexcept nogil:
    cdef int64_t x = (<int64_t*>a)[0]
    cdef int64_t y = (<int64_t*>b)[0]
    return (x > y) - (x < y)


def window_counts(double[::1] pos, int64_t[::1] order, double length, double half_window):
    cdef Py_ssize_t n = pos.shape[0]
    cdef cnp.ndarray[int64_t, ndim=1] out = np.empty(n, dtype=np.int64)
    if 2.0 * half_window >= length:
        out[:] = n
        return out
    cdef double[::1] x = np.empty(3 * n, dtype=np.float64)
    cdef Py_ssize_t i, j, lo = 0, hi = 0
    cdef double xv
    for i in range(n):
        xv = pos[order[i]]
        x[i] = xv - length
        x[n + i] = xv
        x[2 * n + i] = xv + length
    with nogil:
        for j in range(n):
            xv = x[n + j]
            while lo < 3 * n and x[lo] < xv - half_window:
                lo += 1
            if hi < lo:
                hi = lo
            while hi < 3 * n and x[hi] <= xv + half_window:
                hi += 1
            out[order[j]] = hi - lo
    return out


def resolve_slot(double[::1] pos, uint32_t[::1] ids, int64_t[::1] order,
                 double length, double tx_range, double loss_prob, int64_t capacity,
                 uint64_t slot_key, int64_t[::1] arrival_rank,
                 uint8_t[:, ::1] ignore, int64_t guard):
    cdef Py_ssize_t n = pos.shape[0]
    eligible_a = np.zeros(n, dtype=np.int64)
    delivered_a = np.zeros(n, dtype=np.int64)
    lost_base_a = np.zeros(n, dtype=np.int64)
    lost_cong_a = np.zeros(n, dtype=np.int64)
    ignored_a = np.zeros(n, dtype=np.int64)
    reached_a = np.zeros(n, dtype=np.int64)
    got_guard_a = np.zeros(n, dtype=np.uint8)
    cdef int64_t[::1] eligible = eligible_a
    cdef int64_t[::1] delivered = delivered_a
    cdef int64_t[::1] lost_base = lost_base_a
    cdef int64_t[::1] lost_cong = lost_cong_a
    cdef int64_t[::1] ignored = ignored_a
    cdef int64_t[::1] reached = reached_a
    cdef uint8_t[::1] got_guard = got_guard_a
    if n < 2:
        return eligible_a, delivered_a, lost_base_a, lost_cong_a, ignored_a, reached_a, got_guard_a

    cdef double eps = 1e-6 * (tx_range if tx_range > 1.0 else 1.0)
    cdef bint full = 2.0 * (tx_range + eps) >= length
    cdef double[::1] xs = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i
    for i in range(n):
        xs[i] = pos[order[i]]

    cdef int64_t* cand_send = <int64_t*>malloc(n * sizeof(int64_t))
    cdef int64_t* cand_rank = <int64_t*>malloc(n * sizeof(int64_t))
    cdef int64_t* tmp = <int64_t*>malloc(n * sizeof(int64_t))
    cdef int64_t* scan = <int64_t*>malloc(n * sizeof(int64_t))
    if cand_send == NULL or cand_rank == NULL or tmp == NULL or scan == NULL:
        free(cand_send); free(cand_rank); free(tmp); free(scan)
        raise MemoryError()

    cdef Py_ssize_t j, k, idx, nscan, fcount, ncand, c
    cdef int64_t r, s, thresh
    cdef double g, d, xr
    with nogil:
        for j in range(n):
            r = order[j]
            xr = xs[j]
            nscan = 0
            if full:
                for k in range(n):
                    if k != r:
                        scan[nscan] = k
                        nscan += 1
            else:
                fcount = 0
                for k in range(1, n):
                    idx = (j + k) % n
                    g = xs[idx] - xr
                    if j + k >= n:
                        g = g + length
                    if g > tx_range + eps:
                        break
                    scan[nscan] = order[idx]
                    nscan += 1
                    fcount += 1
                for k in range(1, n - fcount):
                    idx = (j - k + n) % n
                    g = xr - xs[idx]
                    if j - k < 0:
                        g = g + length
                    if g > tx_range + eps:
                        break
                    scan[nscan] = order[idx]
                    nscan += 1

            ncand = 0
            for c in range(nscan):
                s = scan[c]
                d = fabs(pos[s] - pos[r])
                if length - d < d:
                    d = length - d
                if d > tx_range:
                    continue
                eligible[r] += 1
                if pair_coin(slot_key, ids[s], ids[r]) < loss_prob:
                    lost_base[r] += 1
                    continue
                cand_send[ncand] = s
                cand_rank[ncand] = arrival_rank[s]
                ncand += 1

            thresh = -1
            if ncand > capacity:
                for c in range(ncand):
                    tmp[c] = cand_rank[c]
                qsort(tmp, ncand, sizeof(int64_t), cmp_i64)
                thresh = tmp[capacity - 1] if capacity > 0 else -1
            for c in range(ncand):
                s = cand_send[c]
                if ncand > capacity and cand_rank[c] > thresh:
                    lost_cong[r] += 1
                    continue
                delivered[r] += 1
                reached[s] += 1
                if ignore[r, s]:
                    ignored[r] += 1
                if s == guard:
                    got_guard[r] = 1

    free(cand_send); free(cand_rank); free(tmp); free(scan)
    return eligible_a, delivered_a, lost_base_a, lost_cong_a, ignored_a, reached_a, got_guard_a
