# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the hot inner loops.

Must stay operation-for-operation in sync with ``_kernels_py.py`` (the
pure-Python fallback) so both backends produce bit-identical results.
"""

from libc.math cimport log1p, INFINITY

cdef double LN2 = 0.6931471805599453


cdef inline double _g(double p) nogil:
    return 0.5 * log1p(p) / LN2


def awgn_bits_per_time(double p):
    """Rate of the builtin AWGN map at power p: 0.5*log2(1+p)."""
    return _g(p)


def awgn_solve_duration(double energy, double bits):
    """Unique T >= 0 with T*g(energy/T) = bits for the builtin rate map."""
    cdef double hi, lo, mid, tol
    cdef int i
    cdef bint grew = False
    if bits <= 0.0:
        return 0.0
    hi = 1.0
    for i in range(2000):
        if hi * _g(energy / hi) >= bits:
            break
        hi *= 2.0
        grew = True
    else:
        return INFINITY
    lo = hi * 0.5 if grew else 0.0
    for i in range(200):
        tol = 1e-10 * hi
        if tol < 1e-12:
            tol = 1e-12
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if mid * _g(energy / mid) < bits:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def taut_max_bits(double[::1] cum, double c_t, double w):
    """Max bits over a slot prefix under harvest and battery-cap corridors."""
    cdef Py_ssize_t n = cum.shape[0] - 1
    cdef Py_ssize_t pk, k, dk, hi_k, lo_k, bend_k
    cdef double bits, pv, hi, lo, lo_v, bend_v, up, low, su, sl, slope
    if n <= 0:
        return 0.0
    bits = 0.0
    pk = 0
    pv = 0.0
    while pk < n:
        hi = INFINITY
        lo = -INFINITY
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
        bits += (bend_k - pk) * w * _g(slope / w)
        pk = bend_k
        pv = bend_v
    return bits


def ad_trial(double[::1] draws, double threshold, double c_t, double w, double b0):
    """Slots an accumulate-and-dump run takes to deliver b0 bits (-1: extend)."""
    cdef double bits = 0.0
    cdef double done = b0 - 1e-12 * b0
    cdef double stored = 0.0
    cdef long slots = 0
    cdef Py_ssize_t n = draws.shape[0]
    cdef Py_ssize_t i = 0
    while True:
        if i >= n:
            return -1
        stored += draws[i]
        if stored > c_t:
            stored = c_t
        i += 1
        slots += 1
        if stored >= threshold:
            bits += w * _g(stored / w)
            stored = 0.0
            if bits >= done:
                return slots


def mad_trial(double[::1] draws_tx, double[::1] draws_rx, double th_tx,
              double pr_w, double c_t, double c_r, double w, double b0):
    """Joint tx/rx accumulate-and-dump slot count (-1: extend)."""
    cdef double bits = 0.0
    cdef double done = b0 - 1e-12 * b0
    cdef double stored_tx = 0.0
    cdef double fresh_rx = 0.0
    cdef double b_rx = 0.0
    cdef long slots = 0
    cdef Py_ssize_t n = min(draws_tx.shape[0], draws_rx.shape[0])
    cdef Py_ssize_t i = 0
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
            bits += w * _g(stored_tx / w)
            b_rx -= pr_w
            stored_tx = 0.0
            fresh_rx = 0.0
            if bits >= done:
                return slots
