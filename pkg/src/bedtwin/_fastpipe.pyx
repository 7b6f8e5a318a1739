# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# cython: language_level=3
"""Compiled four-stage cleaning pipeline.

Twin of ``_pipeline_py.run_pipeline``. The event discipline mirrors the
generic kernel exactly: a binary heap keyed on (time, seq) where seq is a
global insertion counter, shift boundaries scheduled before arrivals, and
on every stage completion the freed server is granted to the FIFO queue
before the finishing bed schedules its own next stage. Any semantic change
here must be made in ``_pipeline_py`` as well; the cross-backend tests
assert bit-identical output.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef enum:
    K_BOUNDARY = 0
    K_ARRIVAL = 1
    K_UA_END = 2
    K_STAGE2_END = 3
    K_EVS_END = 4
    K_STAGE4_END = 5

cdef double MINUTES_PER_DAY = 1440.0


cdef inline void _heap_push(double[::1] ht, long long[::1] hs, int[::1] hk,
                            long long[::1] hi, Py_ssize_t* size,
                            double t, long long seq, int kind, long long idx) nogil:
    cdef Py_ssize_t pos = size[0]
    cdef Py_ssize_t parent
    size[0] += 1
    while pos > 0:
        parent = (pos - 1) >> 1
        if ht[parent] < t or (ht[parent] == t and hs[parent] < seq):
            break
        ht[pos] = ht[parent]
        hs[pos] = hs[parent]
        hk[pos] = hk[parent]
        hi[pos] = hi[parent]
        pos = parent
    ht[pos] = t
    hs[pos] = seq
    hk[pos] = kind
    hi[pos] = idx


cdef inline void _heap_pop(double[::1] ht, long long[::1] hs, int[::1] hk,
                           long long[::1] hi, Py_ssize_t* size) nogil:
    cdef Py_ssize_t last = size[0] - 1
    cdef double t = ht[last]
    cdef long long seq = hs[last]
    cdef int kind = hk[last]
    cdef long long idx = hi[last]
    cdef Py_ssize_t pos = 0
    cdef Py_ssize_t child
    size[0] = last
    if last == 0:
        return
    while True:
        child = 2 * pos + 1
        if child >= last:
            break
        if child + 1 < last and (ht[child + 1] < ht[child] or
                                 (ht[child + 1] == ht[child] and hs[child + 1] < hs[child])):
            child += 1
        if t < ht[child] or (t == ht[child] and seq < hs[child]):
            break
        ht[pos] = ht[child]
        hs[pos] = hs[child]
        hk[pos] = hk[child]
        hi[pos] = hi[child]
        pos = child
    ht[pos] = t
    hs[pos] = seq
    hk[pos] = kind
    hi[pos] = idx


def run_pipeline(dirty_at, durations, ua_caps, evs_caps, bounds, horizon_days):
    """Run the pipeline; returns (stage_starts, stage_ends, completed).

    Same contract as ``_pipeline_py.run_pipeline``.
    """
    cdef double[::1] arr = np.ascontiguousarray(dirty_at, dtype=np.float64)
    cdef double[:, ::1] dur = np.ascontiguousarray(durations, dtype=np.float64)
    cdef long long[::1] ucap = np.ascontiguousarray(ua_caps, dtype=np.int64)
    cdef long long[::1] ecap = np.ascontiguousarray(evs_caps, dtype=np.int64)
    cdef double[::1] bnd = np.ascontiguousarray(bounds, dtype=np.float64)
    cdef Py_ssize_t n = arr.shape[0]
    cdef long long days = int(horizon_days)
    cdef double horizon_end = days * MINUTES_PER_DAY

    starts_np = np.full((n, 4), np.nan)
    ends_np = np.full((n, 4), np.nan)
    completed_np = np.zeros(n, dtype=np.uint8)
    cdef double[:, ::1] starts = starts_np
    cdef double[:, ::1] ends = ends_np
    cdef cnp.uint8_t[::1] completed = completed_np

    # Heap capacity: all boundaries + all arrivals + one in-flight dynamic
    # event per bed.
    cdef Py_ssize_t cap = 3 * days + 2 * n + 4
    cdef double[::1] ht = np.empty(cap, dtype=np.float64)
    cdef long long[::1] hs = np.empty(cap, dtype=np.int64)
    cdef int[::1] hk = np.empty(cap, dtype=np.int32)
    cdef long long[::1] hi = np.empty(cap, dtype=np.int64)
    cdef Py_ssize_t heap_size = 0
    cdef long long seq = 0

    # FIFO queues; each bed enters each queue at most once.
    cdef long long[::1] ua_q = np.empty(max(n, 1), dtype=np.int64)
    cdef long long[::1] evs_q = np.empty(max(n, 1), dtype=np.int64)
    cdef Py_ssize_t ua_head = 0, ua_tail = 0, evs_head = 0, evs_tail = 0

    cdef long long ua_cap = ucap[0]
    cdef long long evs_cap = ecap[0]
    cdef long long ua_in_use = 0, evs_in_use = 0

    cdef long long day, b, b2
    cdef int s
    cdef double t
    cdef int kind
    cdef long long idx

    with nogil:
        for day in range(days):
            for s in range(3):
                if day == 0 and s == 0:
                    continue
                _heap_push(ht, hs, hk, hi, &heap_size,
                           day * MINUTES_PER_DAY + bnd[s], seq, K_BOUNDARY, s)
                seq += 1
        for b in range(n):
            _heap_push(ht, hs, hk, hi, &heap_size, arr[b], seq, K_ARRIVAL, b)
            seq += 1

        while heap_size > 0 and ht[0] <= horizon_end:
            t = ht[0]
            kind = hk[0]
            idx = hi[0]
            _heap_pop(ht, hs, hk, hi, &heap_size)

            if kind == K_BOUNDARY:
                s = <int> idx
                ua_cap = ucap[s]
                while ua_in_use < ua_cap and ua_head < ua_tail:
                    b2 = ua_q[ua_head]
                    ua_head += 1
                    ua_in_use += 1
                    starts[b2, 0] = t
                    _heap_push(ht, hs, hk, hi, &heap_size,
                               t + dur[b2, 0], seq, K_UA_END, b2)
                    seq += 1
                evs_cap = ecap[s]
                while evs_in_use < evs_cap and evs_head < evs_tail:
                    b2 = evs_q[evs_head]
                    evs_head += 1
                    evs_in_use += 1
                    starts[b2, 2] = t
                    _heap_push(ht, hs, hk, hi, &heap_size,
                               t + dur[b2, 2], seq, K_EVS_END, b2)
                    seq += 1
            elif kind == K_ARRIVAL:
                b = idx
                if ua_in_use < ua_cap:
                    ua_in_use += 1
                    starts[b, 0] = t
                    _heap_push(ht, hs, hk, hi, &heap_size,
                               t + dur[b, 0], seq, K_UA_END, b)
                    seq += 1
                else:
                    ua_q[ua_tail] = b
                    ua_tail += 1
            elif kind == K_UA_END:
                b = idx
                ends[b, 0] = t
                ua_in_use -= 1
                while ua_in_use < ua_cap and ua_head < ua_tail:
                    b2 = ua_q[ua_head]
                    ua_head += 1
                    ua_in_use += 1
                    starts[b2, 0] = t
                    _heap_push(ht, hs, hk, hi, &heap_size,
                               t + dur[b2, 0], seq, K_UA_END, b2)
                    seq += 1
                starts[b, 1] = t
                _heap_push(ht, hs, hk, hi, &heap_size,
                           t + dur[b, 1], seq, K_STAGE2_END, b)
                seq += 1
            elif kind == K_STAGE2_END:
                b = idx
                ends[b, 1] = t
                if evs_in_use < evs_cap:
                    evs_in_use += 1
                    starts[b, 2] = t
                    _heap_push(ht, hs, hk, hi, &heap_size,
                               t + dur[b, 2], seq, K_EVS_END, b)
                    seq += 1
                else:
                    evs_q[evs_tail] = b
                    evs_tail += 1
            elif kind == K_EVS_END:
                b = idx
                ends[b, 2] = t
                evs_in_use -= 1
                while evs_in_use < evs_cap and evs_head < evs_tail:
                    b2 = evs_q[evs_head]
                    evs_head += 1
                    evs_in_use += 1
                    starts[b2, 2] = t
                    _heap_push(ht, hs, hk, hi, &heap_size,
                               t + dur[b2, 2], seq, K_EVS_END, b2)
                    seq += 1
                starts[b, 3] = t
                _heap_push(ht, hs, hk, hi, &heap_size,
                           t + dur[b, 3], seq, K_STAGE4_END, b)
                seq += 1
            else:
                b = idx
                ends[b, 3] = t
                completed[b] = 1

    return starts_np, ends_np, completed_np.astype(bool)
