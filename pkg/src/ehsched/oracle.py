"""Desk-scale brute-force oracles used only to validate the main algorithms.

Nothing here is on any hot path. The window maximizer has two independent
routes (a corner walk and a concave program solved by SLSQP), the finish
oracles search start times on a grid, and the finite-battery oracle is an
exhaustive dynamic program over discretized battery states.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import LinearConstraint, minimize

from ehsched.errors import BadInput, Unachievable
from ehsched.profiles import RxHarvestProfile, TxHarvestProfile
from ehsched.rate import AWGN, RateFunction


def max_bits_window(tx: TxHarvestProfile, a: float, b: float, g: RateFunction = AWGN) -> float:
    """Maximal bits transmittable over [a, b] under energy neutrality.

    Walks the lower convex hull beneath the corner set (epoch, arrived-before)
    from (a, 0) to (b, arrived-before-b): nondecreasing powers that drain all
    harvested energy at every bend and at b.
    """
    if not (0.0 <= a < b):
        raise BadInput("need 0 <= a < b")
    end_level = tx.cumulative(b, "left")
    if end_level <= 0.0:
        return 0.0
    corners = [
        (tau, tx.cumulative(tau, "left")) for tau in tx.epochs if a < tau < b
    ]
    bits = 0.0
    t, v = a, 0.0
    idx = 0
    while t < b:
        best_t, best_v = b, end_level
        best_s = (end_level - v) / (b - t)
        for k in range(idx, len(corners)):
            ct, cv = corners[k]
            s = (cv - v) / (ct - t)
            if s < best_s * (1.0 - 1e-13) or (s <= best_s * (1.0 + 1e-13) and ct < best_t):
                best_s, best_t, best_v = s, ct, cv
        bits += (best_t - t) * g.g(best_s)
        t, v = best_t, best_v
        while idx < len(corners) and corners[idx][0] <= t:
            idx += 1
    return bits


def max_bits_window_concave(
    tx: TxHarvestProfile, a: float, b: float, g: RateFunction = AWGN, extra_cells: int = 16
) -> float:
    """Second, independent route: concave maximization over per-cell energies.

    Cell boundaries include every epoch, so the continuum optimum (powers
    constant between epochs) is representable exactly; SLSQP maximizes the
    total bits subject to the prefix-availability constraints.
    """
    if not (0.0 <= a < b):
        raise BadInput("need 0 <= a < b")
    bounds_t = sorted(
        {a, b}
        | set(tau for tau in tx.epochs if a < tau < b)
        | {a + (b - a) * k / (extra_cells + 1) for k in range(1, extra_cells + 1)}
    )
    m = len(bounds_t) - 1
    d = np.diff(np.asarray(bounds_t))
    avail = np.array([tx.cumulative(t, "left") for t in bounds_t[1:]])
    total = avail[-1]
    if total <= 0.0:
        return 0.0

    prefix = np.tril(np.ones((m, m)))
    lc = LinearConstraint(prefix, -np.inf, avail)
    # no total-energy equality: the objective is increasing in every cell,
    # so the optimum drains everything on its own (and SLSQP stalls on the
    # degenerate vertex the equality pins the start point to)

    def neg_bits(e):
        return -float(np.sum(d * [g.g(max(ei, 0.0) / di) for ei, di in zip(e, d)]))

    # feasible start: spend each arrival as soon as it is available
    x0 = np.diff(np.concatenate([[0.0], avail]))
    res = minimize(
        neg_bits,
        x0,
        method="SLSQP",
        bounds=[(0.0, total)] * m,
        constraints=[lc],
        options={"maxiter": 1000, "ftol": 1e-12},
    )
    best = -res.fun if res.success else -neg_bits(x0)
    return max(best, -neg_bits(x0))


def _min_finish_from(
    tx: TxHarvestProfile, s: float, horizon: float, b0: float, g: RateFunction
) -> float | None:
    """Minimal T in (s, s+horizon] with max_bits_window(s, T) >= b0, else None."""
    if horizon <= 0.0:
        return None
    hi = s + horizon
    if max_bits_window(tx, s, hi, g) < b0:
        return None
    lo = s
    for _ in range(100):
        if hi - lo <= max(1e-13, 1e-12 * hi):
            break
        mid = 0.5 * (lo + hi)
        if mid > s and max_bits_window(tx, s, mid, g) >= b0:
            hi = mid
        else:
            lo = mid
    return hi


def _start_grid(tx: TxHarvestProfile, delta: float, t_max: float) -> list[float]:
    grid = {0.0}
    grid.update(tau for tau in tx.epochs if tau <= t_max)
    n = int(t_max / delta) + 1
    grid.update(min(k * delta, t_max) for k in range(n + 1))
    return sorted(grid)


def oracle_min_finish_single(
    tx: TxHarvestProfile,
    b0: float,
    gamma0: float,
    g: RateFunction = AWGN,
    delta: float | None = None,
) -> float:
    """Grid-search oracle for the single-budget problem.

    Scans candidate start times (grid step delta plus all epochs and 0) and
    bisects the minimal finish for each; the result brackets the true
    optimum within O(delta). Guaranteed never below the true optimum.
    """
    if b0 <= 0.0:
        return 0.0
    scale = max(1.0, tx.epochs[-1] + gamma0)
    if delta is None:
        delta = 1e-3 * scale
    best = math.inf
    for s in _start_grid(tx, delta, tx.epochs[-1] + gamma0):
        if s >= best:
            break
        fin = _min_finish_from(tx, s, gamma0, b0, g)
        if fin is not None and fin < best:
            best = fin
    if math.isinf(best):
        raise Unachievable("no feasible start on the oracle grid")
    return best


def _rx_window_ok(rx: RxHarvestProfile, s: float, d: float) -> bool:
    """Direct check: keeping the receiver on over [s, s+d] respects the budget."""
    for r in rx.epochs:
        if s < r <= s + d and r - s > rx.cumulative(r, "left") + 1e-12:
            return False
    return d <= rx.cumulative(s + d, "right") + 1e-12


def _rx_max_window(rx: RxHarvestProfile, s: float) -> float:
    lo, hi = 0.0, rx.total_time
    if _rx_window_ok(rx, s, hi):
        return hi
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _rx_window_ok(rx, s, mid):
            lo = mid
        else:
            hi = mid
    return lo


def oracle_min_finish_multi(
    tx: TxHarvestProfile,
    rx: RxHarvestProfile,
    b0: float,
    g: RateFunction = AWGN,
    delta: float | None = None,
) -> float:
    """Grid-search oracle with the full receiver arrival constraint.

    Candidate windows are contiguous (an optimal no-breaks schedule exists),
    so each start's maximal window length is found by a direct feasibility
    bisection against the receiver staircase.
    """
    if b0 <= 0.0:
        return 0.0
    t_max = max(tx.epochs[-1], rx.epochs[-1]) + rx.total_time
    scale = max(1.0, t_max)
    if delta is None:
        delta = 1e-3 * scale
    grid = set(_start_grid(tx, delta, t_max))
    grid.update(r for r in rx.epochs)
    best = math.inf
    for s in sorted(grid):
        if s >= best:
            break
        fin = _min_finish_from(tx, s, _rx_max_window(rx, s), b0, g)
        if fin is not None and fin < best:
            best = fin
    if math.isinf(best):
        raise Unachievable("no feasible start on the oracle grid")
    return best


def oracle_finite_battery_slots(
    realization,
    c_t: float,
    w: float,
    b0: float,
    g: RateFunction = AWGN,
    levels: int = 257,
) -> int:
    """Exhaustive DP over discretized battery states; minimal slots to b0 bits.

    End-of-slot battery levels are restricted to a uniform grid (usage is
    accounted exactly, nothing is snapped away), so the DP value is a lower
    bound on the true maximum bits that tightens with the grid; slot counts
    match the exact comparator on a fine grid.
    """
    grid = np.linspace(0.0, c_t, levels)
    value = np.full(levels, -np.inf)
    value[0] = 0.0
    ln2 = math.log(2.0)
    is_awgn = g.__class__.__name__ == "AwgnHalfLog"
    for k, e in enumerate(realization, start=1):
        reachable = np.isfinite(value)
        full = np.minimum(grid[reachable] + e, c_t)
        usage = full[:, None] - grid[None, :]
        valid = usage >= -1e-12
        usage = np.maximum(usage, 0.0)
        if is_awgn:
            gain = w * 0.5 * np.log1p(usage / w) / ln2
        else:
            gain = w * np.vectorize(g.g)(usage / w)
        cand = value[reachable][:, None] + np.where(valid, gain, -np.inf)
        value = cand.max(axis=0)
        if value.max() >= b0 * (1.0 - 1e-12):
            return k
    raise Unachievable("bits do not fit in the realization horizon")
