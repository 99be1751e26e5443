"""Pure-Python reference implementations of the hot kernels.

These mirror the compiled Cython core exactly: same algorithms, same
floating-point expression order, so both backends produce identical greedy
assignments. Kept dependency-light so the package works without a compiler.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

SUM_RATE = 0
MIN_RATE = 1
PROP_FAIR = 2


def greedy_assign(slot_rates, chain, qos, caps, metric):
    """Lazy-greedy access association over fixed per-user bandwidth slices.

    slot_rates[u, s] is user u's access rate on one slice of station s at
    the slice power share (0 = out of range), chain[s] the station's
    backhaul chain rate, caps[s] how many slices the station has, qos[u]
    the user's minimum acceptable effective rate. A station's members share
    its chain rate in proportion to access demand, so each member's
    effective rate is slot * min(1, chain/sum_slots) and marginal scores
    are O(1) per candidate. Candidates are taken in descending
    marginal-score order (CELF-style lazy refresh) until no eligible
    candidate remains; users stay unserved only when every option is full,
    out of range, or below their QoS floor. For the sum-rate metric a short
    repair pass then unblocks stranded users by relocating members that
    have a good alternative station. Returns the station index per user,
    -1 when unserved. Ties break toward the lowest user then station
    index.
    """
    slot = np.ascontiguousarray(slot_rates, dtype=np.float64)
    chain_arr = np.ascontiguousarray(chain, dtype=np.float64)
    qos_arr = np.ascontiguousarray(qos, dtype=np.float64)
    caps_arr = np.ascontiguousarray(caps, dtype=np.int64)
    n_users, n_stations = slot.shape
    assign = np.full(n_users, -1, dtype=np.int64)
    if n_users == 0 or n_stations == 0:
        return assign

    slot_l = slot.tolist()
    chain_l = chain_arr.tolist()
    qos_l = qos_arr.tolist()
    caps_l = caps_arr.tolist()
    load = [0] * n_stations
    sum_a = [0.0] * n_stations
    min_a = [math.inf] * n_stations
    version = [0] * n_stations

    def score_of(a, q, s):
        # None = ineligible (station full, zero rate, or below QoS).
        n = load[s]
        if n >= caps_l[s]:
            return None
        c = chain_l[s]
        sig1 = sum_a[s] + a
        ratio = c / sig1
        scale1 = 1.0 if 1.0 < ratio else ratio
        r = a * scale1
        if not (r > 0.0 and r >= q):
            return None
        if metric == SUM_RATE:
            v1 = sig1 if sig1 < c else c
            if n > 0:
                v0 = sum_a[s] if sum_a[s] < c else c
            else:
                v0 = 0.0
            return v1 - v0
        if metric == MIN_RATE:
            mn = a if a < min_a[s] else min_a[s]
            return mn * scale1
        sc = math.log(a) + (n + 1) * math.log(scale1)
        if n > 0:
            ratio0 = c / sum_a[s]
            scale0 = 1.0 if 1.0 < ratio0 else ratio0
            sc -= n * math.log(scale0)
        return sc

    heap = []
    for u in range(n_users):
        row = slot_l[u]
        q = qos_l[u]
        for s in range(n_stations):
            a = row[s]
            if a <= 0.0:
                continue
            sc = score_of(a, q, s)
            if sc is not None:
                heap.append((-sc, u, s, 0))
    heapq.heapify(heap)

    while heap:
        _, u, s, stamp = heapq.heappop(heap)
        if assign[u] >= 0:
            continue
        if stamp != version[s]:
            sc = score_of(slot_l[u][s], qos_l[u], s)
            if sc is not None:
                heapq.heappush(heap, (-sc, u, s, version[s]))
            continue
        assign[u] = s
        a = slot_l[u][s]
        load[s] += 1
        sum_a[s] += a
        if a < min_a[s]:
            min_a[s] = a
        version[s] += 1

    if metric == SUM_RATE:
        _repair_sum(slot_l, chain_l, qos_l, caps_l, assign, load, sum_a,
                    n_users, n_stations)
    return assign


def _repair_sum(slot, chain, qos, caps, assign, load, sum_a, n_users, n_stations,
                max_moves=8):
    """Unblock unserved users by evicting a member with a good alternative.

    Greedy can strand a user whose only reachable station filled up with
    users that had other options. Each move inserts an unserved user and
    relocates (or drops) one member, accepted only when the summed
    station value min(sum, chain) strictly improves. Restarts after every
    applied move so the relocation table stays fresh.
    """

    def value_gain(s, new_sum):
        c = chain[s]
        v1 = new_sum if new_sum < c else c
        v0 = sum_a[s] if sum_a[s] < c else c
        return v1 - v0

    for _ in range(max_moves):
        # best relocation gain per served user, toward free-capacity stations
        reloc_gain = [0.0] * n_users
        reloc_to = [-1] * n_users
        for v in range(n_users):
            if assign[v] < 0:
                continue
            for t in range(n_stations):
                if t == assign[v] or load[t] >= caps[t]:
                    continue
                a_vt = slot[v][t]
                if a_vt <= 0.0:
                    continue
                new_sum = sum_a[t] + a_vt
                ratio = chain[t] / new_sum
                scale = 1.0 if 1.0 < ratio else ratio
                r = a_vt * scale
                if not (r > 0.0 and r >= qos[v]):
                    continue
                d = value_gain(t, new_sum)
                if d > reloc_gain[v] or (d == reloc_gain[v] and reloc_to[v] < 0):
                    reloc_gain[v] = d
                    reloc_to[v] = t
        # per station: the two members cheapest to displace
        cand1 = [-1] * n_stations
        cand2 = [-1] * n_stations
        key1 = [-math.inf] * n_stations
        key2 = [-math.inf] * n_stations
        for v in range(n_users):
            s = assign[v]
            if s < 0:
                continue
            k = reloc_gain[v] - slot[v][s]
            if k > key1[s]:
                key2[s], cand2[s] = key1[s], cand1[s]
                key1[s], cand1[s] = k, v
            elif k > key2[s]:
                key2[s], cand2[s] = k, v

        applied = False
        for u in range(n_users):
            if assign[u] >= 0:
                continue
            best_delta = 0.0
            best_s = best_v = -1
            for s in range(n_stations):
                a_us = slot[u][s]
                if a_us <= 0.0 or caps[s] == 0:
                    continue
                if load[s] < caps[s]:
                    new_sum = sum_a[s] + a_us
                    ratio = chain[s] / new_sum
                    scale = 1.0 if 1.0 < ratio else ratio
                    r = a_us * scale
                    if r > 0.0 and r >= qos[u]:
                        d = value_gain(s, new_sum)
                        if d > best_delta:
                            best_delta, best_s, best_v = d, s, -1
                    continue
                for v in (cand1[s], cand2[s]):
                    if v < 0:
                        continue
                    new_sum = sum_a[s] - slot[v][s] + a_us
                    ratio = chain[s] / new_sum
                    scale = 1.0 if 1.0 < ratio else ratio
                    r = a_us * scale
                    if not (r > 0.0 and r >= qos[u]):
                        continue
                    d = value_gain(s, new_sum) + reloc_gain[v]
                    if d > best_delta:
                        best_delta, best_s, best_v = d, s, v
            if best_s >= 0:
                a_us = slot[u][best_s]
                if best_v >= 0:
                    t = reloc_to[best_v]
                    sum_a[best_s] -= slot[best_v][best_s]
                    load[best_s] -= 1
                    assign[best_v] = t
                    if t >= 0:
                        sum_a[t] += slot[best_v][t]
                        load[t] += 1
                assign[u] = best_s
                sum_a[best_s] += a_us
                load[best_s] += 1
                applied = True
                break
        if not applied:
            break


def waterfill(budget, eff_noise, bw, tol):
    """Water-filling power split by bisection on the water level.

    powers_i = max(0, mu * bw_i/mean(bw) - eff_noise_i), with mu chosen so
    the powers sum to `budget` within `tol` (watt). Requires positive
    budget, noise terms, and bandwidths.
    """
    eff = np.asarray(eff_noise, dtype=np.float64)
    bw_arr = np.asarray(bw, dtype=np.float64)
    n = eff.shape[0]
    if budget <= 0.0 or n == 0:
        return np.zeros(n)
    b_ref = float(bw_arr.sum()) / n
    bn = bw_arr / b_ref
    sum_bn = float(bn.sum())
    lo = 0.0
    hi = (budget + float(eff.max())) / float(bn.min())
    for _ in range(200):
        if (hi - lo) * sum_bn <= tol:
            break
        mid = 0.5 * (lo + hi)
        total = float(np.maximum(0.0, mid * bn - eff).sum())
        if total > budget:
            hi = mid
        else:
            lo = mid
    return np.maximum(0.0, lo * bn - eff)


def waterfill_groups(budgets, eff_noise, bw, assign, n_stations, tol):
    """Per-station water-filling over users grouped by `assign` (-1 skipped)."""
    eff = np.asarray(eff_noise, dtype=np.float64)
    bw_arr = np.asarray(bw, dtype=np.float64)
    assign_arr = np.asarray(assign, dtype=np.int64)
    powers = np.zeros(eff.shape[0])
    for s in range(n_stations):
        idx = np.nonzero(assign_arr == s)[0]
        if idx.size == 0:
            continue
        powers[idx] = waterfill(budgets[s], eff[idx], bw_arr[idx], tol)
    return powers
