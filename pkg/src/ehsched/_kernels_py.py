"""Pure-Python kernels; fallback used when the compiled core is unavailable.

Mirrors ``_ckernels.pyx`` operation for operation so both backends produce
bit-identical results. Keep the two files in sync.
"""

import math

LN2 = 0.6931471805599453


def awgn_bits_per_time(p):
    """Rate of the builtin AWGN map at power p: 0.5*log2(1+p)."""
    return 0.5 * math.log1p(p) / LN2


def awgn_solve_duration(energy, bits):
    """Unique T >= 0 with T*g(energy/T) = bits for the builtin rate map.

    Assumes bits < energy * g'(0+); returns inf if the doubling bracket
    fails, which only happens when bits sits at the analytic supremum.
    """
    if bits <= 0.0:
        return 0.0
    hi = 1.0
    grew = False
    for _ in range(2000):
        if hi * awgn_bits_per_time(energy / hi) >= bits:
            break
        hi *= 2.0
        grew = True
    else:
        return math.inf
    lo = hi * 0.5 if grew else 0.0
    for _ in range(200):
        if hi - lo <= max(1e-12, 1e-10 * hi):
            break
        mid = 0.5 * (lo + hi)
        if mid * awgn_bits_per_time(energy / mid) < bits:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def taut_max_bits(cum, c_t, w):
    """Max bits over a slot prefix under harvest and battery-cap corridors.

    ``cum[k]`` is the energy arrived in slots 1..k (cum[0] = 0). Usage must
    stay within [cum[k+1] - c_t, cum[k]] at every interior slot boundary and
    drain everything by the last slot; the taut string through that corridor
    evens out per-slot powers as much as feasibility allows, which maximizes
    total bits since the rate map is concave.
    """
    n = len(cum) - 1
    if n <= 0:
        return 0.0
    bits = 0.0
    pk = 0
    pv = 0.0
    while pk < n:
        hi = math.inf
        lo = -math.inf
        hi_k = -1
        lo_k = -1
        lo_v = 0.0
        bend_k = -1
        bend_v = 0.0
        for k in range(pk + 1, n + 1):
            dk = k - pk
            up = cum[k]
            if k == n:
                low = cum[n]
            else:
                low = cum[k + 1] - c_t
                if low < 0.0:
                    low = 0.0
            su = (up - pv) / dk
            sl = (low - pv) / dk
            if su < lo:
                bend_k = lo_k
                bend_v = lo_v
                break
            if sl > hi:
                bend_k = hi_k
                bend_v = cum[hi_k]
                break
            if su < hi:
                hi = su
                hi_k = k
            if sl > lo:
                lo = sl
                lo_k = k
                lo_v = low
        if bend_k < 0:
            bend_k = n
            bend_v = cum[n]
        slope = (bend_v - pv) / (bend_k - pk)
        bits += (bend_k - pk) * w * awgn_bits_per_time(slope / w)
        pk = bend_k
        pv = bend_v
    return bits


def ad_trial(draws, threshold, c_t, w, b0):
    """Slots an accumulate-and-dump run takes to deliver b0 bits.

    Walks the per-slot arrival array: accumulate (capped at c_t) until the
    battery holds at least ``threshold``, dump everything in that slot, then
    restart. Returns -1 if the array runs out before the bits are done so
    the caller can extend the realization.
    """
    bits = 0.0
    done = b0 - 1e-12 * b0
    slots = 0
    stored = 0.0
    n = len(draws)
    i = 0
    while True:
        if i >= n:
            return -1
        stored += draws[i]
        if stored > c_t:
            stored = c_t
        i += 1
        slots += 1
        if stored >= threshold:
            bits += w * awgn_bits_per_time(stored / w)
            stored = 0.0
            if bits >= done:
                return slots


def mad_trial(draws_tx, draws_rx, th_tx, pr_w, c_t, c_r, w, b0):
    """Joint tx/rx accumulate-and-dump: dump once both sides cross their
    thresholds (tx battery >= th_tx, fresh rx arrivals >= pr_w).

    Returns -1 if either array runs out first.
    """
    bits = 0.0
    done = b0 - 1e-12 * b0
    slots = 0
    stored_tx = 0.0
    fresh_rx = 0.0
    b_rx = 0.0
    n = min(len(draws_tx), len(draws_rx))
    i = 0
    while True:
        if i >= n:
            return -1
        stored_tx += draws_tx[i]
        if stored_tx > c_t:
            stored_tx = c_t
        b_rx += draws_rx[i]
        if b_rx > c_r:
            b_rx = c_r
        fresh_rx += draws_rx[i]
        i += 1
        slots += 1
        if stored_tx >= th_tx and fresh_rx >= pr_w:
            bits += w * awgn_bits_per_time(stored_tx / w)
            b_rx -= pr_w
            stored_tx = 0.0
            fresh_rx = 0.0
            if bits >= done:
                return slots
