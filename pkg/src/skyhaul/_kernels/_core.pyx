# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: lazy-greedy association and water-filling.

Mirrors _fallback.py expression-for-expression so both backends emit
identical assignments; see that module for the algorithm notes.
"""

from libc.math cimport HUGE_VAL, NAN, log
from libc.stdlib cimport free, malloc, realloc

import numpy as np

SUM_RATE = 0
MIN_RATE = 1
PROP_FAIR = 2

cdef struct Entry:
    double key  # negated score; heap pops the smallest key first
    long u
    long s
    long stamp


cdef inline bint _less(Entry a, Entry b) noexcept nogil:
    if a.key != b.key:
        return a.key < b.key
    if a.u != b.u:
        return a.u < b.u
    return a.s < b.s


cdef struct Heap:
    Entry* data
    long size
    long cap


cdef inline bint _heap_push(Heap* h, double key, long u, long s, long stamp) noexcept nogil:
    cdef Entry e
    cdef Entry* grown
    cdef long i, parent
    if h.size == h.cap:
        grown = <Entry*> realloc(h.data, 2 * h.cap * sizeof(Entry))
        if grown == NULL:
            return False
        h.data = grown
        h.cap = 2 * h.cap
    e.key = key
    e.u = u
    e.s = s
    e.stamp = stamp
    i = h.size
    h.size += 1
    while i > 0:
        parent = (i - 1) >> 1
        if _less(e, h.data[parent]):
            h.data[i] = h.data[parent]
            i = parent
        else:
            break
    h.data[i] = e
    return True


cdef inline Entry _heap_pop(Heap* h) noexcept nogil:
    cdef Entry top = h.data[0]
    cdef Entry last
    cdef long i = 0, child
    h.size -= 1
    if h.size > 0:
        last = h.data[h.size]
        while True:
            child = 2 * i + 1
            if child >= h.size:
                break
            if child + 1 < h.size and _less(h.data[child + 1], h.data[child]):
                child += 1
            if _less(h.data[child], last):
                h.data[i] = h.data[child]
                i = child
            else:
                break
        h.data[i] = last
    return top


cdef inline double _score_of(double a, double q, long n, long cap, double sum_a,
                             double min_a, double c, int metric) noexcept nogil:
    # NAN = ineligible (station full, zero rate, or below QoS).
    cdef double sig1, ratio, scale1, r, v1, v0, mn, sc, ratio0, scale0
    if n >= cap:
        return NAN
    sig1 = sum_a + a
    ratio = c / sig1
    scale1 = 1.0 if 1.0 < ratio else ratio
    r = a * scale1
    if not (r > 0.0 and r >= q):
        return NAN
    if metric == 0:  # SUM_RATE
        v1 = sig1 if sig1 < c else c
        if n > 0:
            v0 = sum_a if sum_a < c else c
        else:
            v0 = 0.0
        return v1 - v0
    if metric == 1:  # MIN_RATE
        mn = a if a < min_a else min_a
        return mn * scale1
    sc = log(a) + (n + 1) * log(scale1)  # PROP_FAIR
    if n > 0:
        ratio0 = c / sum_a
        scale0 = 1.0 if 1.0 < ratio0 else ratio0
        sc -= n * log(scale0)
    return sc


cdef void _repair_sum(double[:, ::1] slot, double[::1] chain, double[::1] qos,
                      long[::1] caps, long[::1] assign, long* load, double* sum_a,
                      long n_users, long n_stations, double* reloc_gain,
                      long* reloc_to, long* cand1, long* cand2, double* key1,
                      double* key2) noexcept nogil:
    # Mirrors _fallback._repair_sum: unblock unserved users by evicting a
    # member with a good alternative; restart after every applied move.
    cdef long mv, u, v, s, t, ci, best_s, best_v
    cdef double a_vt, a_us, new_sum, ratio, scale, r, d, k, c, v1, v0, best_delta
    cdef bint applied
    for mv in range(8):
        for v in range(n_users):
            reloc_gain[v] = 0.0
            reloc_to[v] = -1
        for v in range(n_users):
            if assign[v] < 0:
                continue
            for t in range(n_stations):
                if t == assign[v] or load[t] >= caps[t]:
                    continue
                a_vt = slot[v, t]
                if a_vt <= 0.0:
                    continue
                new_sum = sum_a[t] + a_vt
                ratio = chain[t] / new_sum
                scale = 1.0 if 1.0 < ratio else ratio
                r = a_vt * scale
                if not (r > 0.0 and r >= qos[v]):
                    continue
                c = chain[t]
                v1 = new_sum if new_sum < c else c
                v0 = sum_a[t] if sum_a[t] < c else c
                d = v1 - v0
                if d > reloc_gain[v] or (d == reloc_gain[v] and reloc_to[v] < 0):
                    reloc_gain[v] = d
                    reloc_to[v] = t
        for s in range(n_stations):
            cand1[s] = -1
            cand2[s] = -1
            key1[s] = -HUGE_VAL
            key2[s] = -HUGE_VAL
        for v in range(n_users):
            s = assign[v]
            if s < 0:
                continue
            k = reloc_gain[v] - slot[v, s]
            if k > key1[s]:
                key2[s] = key1[s]
                cand2[s] = cand1[s]
                key1[s] = k
                cand1[s] = v
            elif k > key2[s]:
                key2[s] = k
                cand2[s] = v

        applied = False
        for u in range(n_users):
            if assign[u] >= 0:
                continue
            best_delta = 0.0
            best_s = -1
            best_v = -1
            for s in range(n_stations):
                a_us = slot[u, s]
                if a_us <= 0.0 or caps[s] == 0:
                    continue
                if load[s] < caps[s]:
                    new_sum = sum_a[s] + a_us
                    ratio = chain[s] / new_sum
                    scale = 1.0 if 1.0 < ratio else ratio
                    r = a_us * scale
                    if r > 0.0 and r >= qos[u]:
                        c = chain[s]
                        v1 = new_sum if new_sum < c else c
                        v0 = sum_a[s] if sum_a[s] < c else c
                        d = v1 - v0
                        if d > best_delta:
                            best_delta = d
                            best_s = s
                            best_v = -1
                    continue
                for ci in range(2):
                    v = cand1[s] if ci == 0 else cand2[s]
                    if v < 0:
                        continue
                    new_sum = sum_a[s] - slot[v, s] + a_us
                    ratio = chain[s] / new_sum
                    scale = 1.0 if 1.0 < ratio else ratio
                    r = a_us * scale
                    if not (r > 0.0 and r >= qos[u]):
                        continue
                    c = chain[s]
                    v1 = new_sum if new_sum < c else c
                    v0 = sum_a[s] if sum_a[s] < c else c
                    d = (v1 - v0) + reloc_gain[v]
                    if d > best_delta:
                        best_delta = d
                        best_s = s
                        best_v = v
            if best_s >= 0:
                a_us = slot[u, best_s]
                if best_v >= 0:
                    t = reloc_to[best_v]
                    sum_a[best_s] -= slot[best_v, best_s]
                    load[best_s] -= 1
                    assign[best_v] = t
                    if t >= 0:
                        sum_a[t] += slot[best_v, t]
                        load[t] += 1
                assign[u] = best_s
                sum_a[best_s] += a_us
                load[best_s] += 1
                applied = True
                break
        if not applied:
            break


def greedy_assign(slot_rates, chain, qos, caps, metric):
    """See _fallback.greedy_assign; identical contract and tie-breaking."""
    cdef double[:, ::1] slot_v = np.ascontiguousarray(slot_rates, dtype=np.float64)
    cdef double[::1] chain_v = np.ascontiguousarray(chain, dtype=np.float64)
    cdef double[::1] qos_v = np.ascontiguousarray(qos, dtype=np.float64)
    cdef long[::1] caps_v = np.ascontiguousarray(caps, dtype=np.int64)
    cdef long n_users = slot_v.shape[0]
    cdef long n_stations = slot_v.shape[1]
    assign_arr = np.full(n_users, -1, dtype=np.int64)
    cdef long[::1] assign = assign_arr
    if n_users == 0 or n_stations == 0:
        return assign_arr

    cdef long* load = <long*> malloc(n_stations * sizeof(long))
    cdef double* sum_a = <double*> malloc(n_stations * sizeof(double))
    cdef double* min_a = <double*> malloc(n_stations * sizeof(double))
    cdef long* version = <long*> malloc(n_stations * sizeof(long))
    cdef double* reloc_gain = <double*> malloc(n_users * sizeof(double))
    cdef long* reloc_to = <long*> malloc(n_users * sizeof(long))
    cdef long* cand1 = <long*> malloc(n_stations * sizeof(long))
    cdef long* cand2 = <long*> malloc(n_stations * sizeof(long))
    cdef double* key1 = <double*> malloc(n_stations * sizeof(double))
    cdef double* key2 = <double*> malloc(n_stations * sizeof(double))
    cdef Heap heap
    heap.cap = n_users * n_stations + 16
    heap.size = 0
    heap.data = <Entry*> malloc(heap.cap * sizeof(Entry))
    if (load == NULL or sum_a == NULL or min_a == NULL or version == NULL
            or heap.data == NULL or reloc_gain == NULL or reloc_to == NULL
            or cand1 == NULL or cand2 == NULL or key1 == NULL or key2 == NULL):
        free(load); free(sum_a); free(min_a); free(version); free(heap.data)
        free(reloc_gain); free(reloc_to); free(cand1); free(cand2)
        free(key1); free(key2)
        raise MemoryError()

    cdef long u, s
    cdef double a, sc
    cdef Entry top
    cdef bint ok = True
    cdef int metric_c = metric
    try:
        with nogil:
            for s in range(n_stations):
                load[s] = 0
                sum_a[s] = 0.0
                min_a[s] = HUGE_VAL
                version[s] = 0
            for u in range(n_users):
                for s in range(n_stations):
                    a = slot_v[u, s]
                    if a <= 0.0:
                        continue
                    sc = _score_of(a, qos_v[u], load[s], caps_v[s], sum_a[s],
                                   min_a[s], chain_v[s], metric_c)
                    if sc == sc:
                        if not _heap_push(&heap, -sc, u, s, 0):
                            ok = False
                            break
                if not ok:
                    break
            while ok and heap.size > 0:
                top = _heap_pop(&heap)
                u = top.u
                s = top.s
                if assign[u] >= 0:
                    continue
                if top.stamp != version[s]:
                    sc = _score_of(slot_v[u, s], qos_v[u], load[s], caps_v[s],
                                   sum_a[s], min_a[s], chain_v[s], metric_c)
                    if sc == sc:
                        if not _heap_push(&heap, -sc, u, s, version[s]):
                            ok = False
                    continue
                assign[u] = s
                a = slot_v[u, s]
                load[s] += 1
                sum_a[s] += a
                if a < min_a[s]:
                    min_a[s] = a
                version[s] += 1
            if ok and metric_c == 0:
                _repair_sum(slot_v, chain_v, qos_v, caps_v, assign, load, sum_a,
                            n_users, n_stations, reloc_gain, reloc_to, cand1,
                            cand2, key1, key2)
    finally:
        free(load)
        free(sum_a)
        free(min_a)
        free(version)
        free(heap.data)
        free(reloc_gain)
        free(reloc_to)
        free(cand1)
        free(cand2)
        free(key1)
        free(key2)
    if not ok:
        raise MemoryError()
    return assign_arr


cdef long _waterfill_raw(double budget, double* eff, double* bw, long n, double tol,
                         double* out) noexcept nogil:
    cdef long i, it
    cdef double b_ref = 0.0, sum_bn = 0.0, eff_max = 0.0, bn_min = HUGE_VAL
    cdef double lo, hi, mid, total, p
    if budget <= 0.0 or n == 0:
        for i in range(n):
            out[i] = 0.0
        return 0
    for i in range(n):
        b_ref += bw[i]
    b_ref /= n
    for i in range(n):
        out[i] = bw[i] / b_ref  # reuse out as the normalized-bandwidth scratch
        sum_bn += out[i]
        if eff[i] > eff_max:
            eff_max = eff[i]
        if out[i] < bn_min:
            bn_min = out[i]
    lo = 0.0
    hi = (budget + eff_max) / bn_min
    for it in range(200):
        if (hi - lo) * sum_bn <= tol:
            break
        mid = 0.5 * (lo + hi)
        total = 0.0
        for i in range(n):
            p = mid * out[i] - eff[i]
            if p > 0.0:
                total += p
        if total > budget:
            hi = mid
        else:
            lo = mid
    for i in range(n):
        p = lo * out[i] - eff[i]
        out[i] = p if p > 0.0 else 0.0
    return 0


def waterfill(budget, eff_noise, bw, tol):
    """See _fallback.waterfill."""
    eff_arr = np.ascontiguousarray(eff_noise, dtype=np.float64)
    bw_arr = np.ascontiguousarray(bw, dtype=np.float64)
    cdef double[::1] eff_v = eff_arr
    cdef double[::1] bw_v = bw_arr
    cdef long n = eff_v.shape[0]
    out_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] out_v = out_arr
    if n > 0:
        _waterfill_raw(budget, &eff_v[0], &bw_v[0], n, tol, &out_v[0])
    return out_arr


def waterfill_groups(budgets, eff_noise, bw, assign, n_stations, tol):
    """See _fallback.waterfill_groups."""
    cdef double[::1] budgets_v = np.ascontiguousarray(budgets, dtype=np.float64)
    cdef double[::1] eff_v = np.ascontiguousarray(eff_noise, dtype=np.float64)
    cdef double[::1] bw_v = np.ascontiguousarray(bw, dtype=np.float64)
    cdef long[::1] assign_v = np.ascontiguousarray(assign, dtype=np.int64)
    cdef long n_users = eff_v.shape[0]
    cdef long n_st = n_stations
    powers_arr = np.zeros(n_users, dtype=np.float64)
    cdef double[::1] powers = powers_arr
    cdef double tol_c = tol

    cdef long* members = <long*> malloc(n_users * sizeof(long))
    cdef double* g_eff = <double*> malloc(n_users * sizeof(double))
    cdef double* g_bw = <double*> malloc(n_users * sizeof(double))
    cdef double* g_out = <double*> malloc(n_users * sizeof(double))
    if members == NULL or g_eff == NULL or g_bw == NULL or g_out == NULL:
        free(members); free(g_eff); free(g_bw); free(g_out)
        raise MemoryError()
    cdef long s, u, k
    try:
        with nogil:
            for s in range(n_st):
                k = 0
                for u in range(n_users):
                    if assign_v[u] == s:
                        members[k] = u
                        g_eff[k] = eff_v[u]
                        g_bw[k] = bw_v[u]
                        k += 1
                if k == 0:
                    continue
                _waterfill_raw(budgets_v[s], g_eff, g_bw, k, tol_c, g_out)
                for u in range(k):
                    powers[members[u]] = g_out[u]
    finally:
        free(members)
        free(g_eff)
        free(g_bw)
        free(g_out)
    return powers_arr
