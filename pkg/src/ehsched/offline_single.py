"""Optimal offline schedule under a single receiver on-time budget.

Three phases. An initial feasible plan transmits at one constant power,
starting as early as the energy staircase allows. The pull-back phase then
repeatedly raises the last power to the next energy boundary and lowers the
first power to rebalance the bits, sliding the start earlier while the
transmission window widens. Once the window would exceed the receiver
budget (or the start hits 0), the final phase interpolates between the last
two iterates to land the window exactly on the budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from ehsched.errors import (
    BadInput,
    InternalInvariantViolation,
    NoRoot,
    Unachievable,
)
from ehsched.policy import TransmissionPolicy
from ehsched.profiles import TxHarvestProfile
from ehsched.rate import AWGN, RateFunction, solve_duration_for_bits, solve_power_for_bits

_REL = 1e-12


def _arrival_list(tx: TxHarvestProfile, t0: float) -> list[tuple[float, float]]:
    """Arrivals usable from t0 on: everything harvested by t0 collapses to t0."""
    avail = tx.cumulative(t0, "right")
    out = [(t0, avail)] if avail > 0.0 else []
    for t, a in zip(tx.epochs, tx.amounts):
        if t > t0:
            out.append((t, a))
    return out


def _hull_walk(
    times: list[float], cums: list[float], t_end: float, g: RateFunction
) -> tuple[float, list[float], list[float]]:
    """Taut path from (times[0], 0) to (t_end, arrived-before-t_end).

    The max-bits consumption curve by t_end is the lower convex hull under
    the staircase corners (times[j], cums[j-1]) that fall strictly inside
    the window: nondecreasing slopes, each bend draining all energy
    harvested before it. Returns (bits, powers, switch_times).
    """
    t0 = times[0]
    end_idx = 0
    for j, t in enumerate(times):
        if t < t_end:
            end_idx = j
        else:
            break
    end_level = cums[end_idx]
    corners = [(times[j], cums[j - 1]) for j in range(1, len(times)) if t0 < times[j] < t_end]

    bits = 0.0
    powers: list[float] = []
    switches: list[float] = [t0]
    a, v = t0, 0.0
    ci = 0
    while a < t_end:
        best_t, best_v = t_end, end_level
        best_s = (end_level - v) / (t_end - a)
        for k in range(ci, len(corners)):
            t, val = corners[k]
            slope = (val - v) / (t - a)
            if slope < best_s * (1.0 - 1e-13) or (
                slope <= best_s * (1.0 + 1e-13) and t < best_t
            ):
                best_s, best_t, best_v = slope, t, val
        bits += (best_t - a) * g.g(best_s)
        powers.append(best_s)
        switches.append(best_t)
        a, v = best_t, best_v
        while ci < len(corners) and corners[ci][0] <= a:
            ci += 1
    return bits, powers, switches


def _min_time_segments(
    arrivals: list[tuple[float, float]], g: RateFunction, bits: float
) -> tuple[list[float], list[float]]:
    """Minimum-completion-time schedule ignoring the receiver budget.

    Bisects the finish time over the (increasing) max-bits-by-t curve, then
    reconstructs the taut path for the minimal window. Powers come out
    nondecreasing, switching only at arrival epochs with all harvested
    energy drained there and at the finish.
    """
    if not arrivals:
        raise Unachievable("no energy available")
    times = [t for t, _ in arrivals]
    cums = []
    s_acc = 0.0
    for _, a in arrivals:
        s_acc += a
        cums.append(s_acc)
    t0 = times[0]
    if bits <= 0.0:
        return [], [t0]
    if bits >= cums[-1] * g.max_bits_per_energy:
        raise Unachievable(
            f"{bits} bits exceed the all-energy supremum {cums[-1] * g.max_bits_per_energy}"
        )

    # fastest conceivable finish: every joule available up front
    lo = t0 + solve_duration_for_bits(g, cums[-1], bits)
    if _hull_walk(times, cums, lo, g)[0] >= bits * (1.0 - 1e-12):
        hi = lo
    else:
        hi = lo
        for _ in range(200):
            hi = t0 + 2.0 * (hi - t0)
            if _hull_walk(times, cums, hi, g)[0] >= bits:
                break
        else:
            raise Unachievable("bits do not fit under the energy staircase")
        for _ in range(200):
            if hi - lo <= max(1e-14, 1e-13 * hi):
                break
            mid = 0.5 * (lo + hi)
            if _hull_walk(times, cums, mid, g)[0] < bits:
                lo = mid
            else:
                hi = mid

    _, powers, switches = _hull_walk(times, cums, hi, g)
    # re-solve the last segment from its bend so total bits are solver-exact
    bits_before = sum(g.g(p) * (b - a) for p, a, b in zip(powers[:-1], switches, switches[1:]))
    used_before = sum(p * (b - a) for p, a, b in zip(powers[:-1], switches, switches[1:]))
    a_last = switches[-2]
    end_level = max(
        (c for t, c in zip(times, cums) if t < switches[-1]), default=0.0
    )
    residual = bits - bits_before
    e_last = end_level - used_before
    if residual > 0.0 and e_last > 0.0:
        dur = solve_duration_for_bits(g, e_last, residual)
        powers[-1] = e_last / dur
        switches[-1] = a_last + dur
    return powers, switches


def min_time_no_rx_constraint(
    tx: TxHarvestProfile, bits: float, t0: float = 0.0, g: RateFunction = AWGN
) -> TransmissionPolicy:
    """Minimum-finish-time policy for ``bits`` from t0, no receiver constraint."""
    if bits < 0.0:
        raise BadInput("bits must be nonnegative")
    powers, switches = _min_time_segments(_arrival_list(tx, t0), g, bits)
    if not powers:
        return TransmissionPolicy.empty()
    return TransmissionPolicy(tuple(powers), tuple(switches))


def init_policy(
    tx: TxHarvestProfile, b0: float, gamma0: float, g: RateFunction = AWGN
) -> tuple[TransmissionPolicy, float]:
    """Initial feasible plan and the anchor epoch.

    Finds the first arrival whose accumulated energy can push b0 bits
    through the receiver budget, sizes the constant power accordingly, and
    starts it as early as the staircase allows. The anchor is the first
    epoch at which this plan has drained all harvested energy; if energy
    keeps arriving past the plan's end, the tail after the anchor is
    replaced by the minimum-time schedule for the residual bits.
    """
    if b0 <= 0.0:
        raise BadInput("b0 must be positive")
    if gamma0 <= 0.0:
        raise BadInput("receiver budget must be positive")
    n_idx = None
    for i, tau in enumerate(tx.epochs):
        if gamma0 * g.g(tx.cumulative(tau, "right") / gamma0) >= b0:
            n_idx = i
            break
    if n_idx is None:
        raise Unachievable("no arrival prefix can deliver the bits within the budget")
    e_n = tx.cumulative(tx.epochs[n_idx], "right")
    gamma_tilde = solve_duration_for_bits(g, e_n, b0)
    p_c = e_n / gamma_tilde

    tscale = max(1.0, tx.epochs[-1], gamma0)
    t_start = -math.inf
    anchor = tx.epochs[0]
    for k in range(n_idx + 1):
        tau = tx.epochs[k]
        cand = tau - tx.cumulative(tau, "left") / p_c
        if cand > t_start + _REL * tscale:
            t_start = cand
            anchor = tau
    t_start = max(t_start, 0.0)
    t_stop = t_start + gamma_tilde

    if tx.cumulative(t_stop, "left") <= e_n * (1.0 + 1e-12) + _REL:
        if anchor > t_start + _REL * tscale and anchor < t_stop - _REL * tscale:
            policy = TransmissionPolicy((p_c, p_c), (t_start, anchor, t_stop))
        else:
            policy = TransmissionPolicy((p_c,), (t_start, t_stop))
        return policy, anchor

    b_resid = g.g(p_c) * (t_stop - anchor)
    tail_arrivals = [(anchor, tx.amount_at(anchor))] + [
        (t, a) for t, a in zip(tx.epochs, tx.amounts) if t > anchor
    ]
    tail_powers, tail_switches = _min_time_segments(tail_arrivals, g, b_resid)
    if anchor > t_start + _REL * tscale:
        powers = (p_c, *tail_powers)
        switches = (t_start, *tail_switches)
    else:
        powers = tuple(tail_powers)
        switches = tuple(tail_switches)
    return TransmissionPolicy(powers, switches), anchor


@dataclass
class _Snapshot:
    powers: list[float]
    switches: list[float]

    @property
    def t_start(self):
        return self.switches[0]

    @property
    def t_stop(self):
        return self.switches[-1]

    @property
    def tau_l(self):
        return self.switches[1]

    @property
    def tau_r(self):
        return self.switches[-2]

    @property
    def p_l(self):
        return self.powers[0]

    @property
    def p_r(self):
        return self.powers[-1]


@dataclass
class PullBackState:
    """Terminal state of the pull-back iteration.

    ``policy`` is the last iterate; ``prev`` the one before it (the QUIT
    interpolation bracket). ``trace`` holds one row per iteration:
    (iteration, t_start, t_stop, duration, tau_l, tau_r, p_l, p_r).
    """

    policy: TransmissionPolicy
    prev: Optional[_Snapshot]
    anchor: float
    iterations: int
    trace: list[tuple] = field(default_factory=list)

    @property
    def duration(self) -> float:
        return self.policy.finish_time - self.policy.start_time


def pull_back(
    initial: TransmissionPolicy,
    anchor: float,
    tx: TxHarvestProfile,
    b0: float,
    gamma0: float,
    g: RateFunction = AWGN,
) -> PullBackState:
    """Widen the transmission window toward the receiver budget.

    Each iteration raises the power after the last drained epoch to the
    next energy boundary (or drops a boundary segment when no arrival lies
    beyond it) and rebalances the first power so total bits stay fixed;
    when the rebalanced first power would dip under the staircase it is
    clamped to the tightest feasible slope and the last power re-solved
    instead. The transmission duration grows strictly every iteration, and
    the iteration count is at most the number of arrivals before the
    initial plan's finish.
    """
    powers = list(initial.powers)
    switches = list(initial.switch_times)
    tscale = max(1.0, switches[-1], gamma0)
    bscale = max(1.0, b0)
    term_tol = 1e-12 * max(1.0, gamma0)

    n_before = sum(1 for t in tx.epochs if t < initial.finish_time)
    max_iter = 2 * n_before + 8

    trace: list[tuple] = []
    prev: Optional[_Snapshot] = None
    it = 0
    stalls = 0
    while (
        switches[-1] - switches[0] < gamma0 - term_tol
        and switches[0] > _REL * tscale
    ):
        if len(powers) < 2:
            break
        it += 1
        if it > max_iter:
            raise InternalInvariantViolation("pull-back exceeded its iteration bound")
        prev = _Snapshot(list(powers), list(switches))
        old_duration = switches[-1] - switches[0]

        t_start, t_stop = switches[0], switches[-1]
        tau_l, tau_r = switches[1], switches[-2]
        p_l, p_r = powers[0], powers[-1]
        e_l = tx.cumulative(tau_l, "left")
        e_r = tx.cumulative(tau_r, "left")
        e_stop = tx.cumulative(t_stop, "left")
        old_left_bits = g.g(p_l) * (tau_l - t_start)
        old_right_bits = g.g(p_r) * (t_stop - tau_r)

        inner = tx.epochs_in(tau_r, t_stop)
        if not inner:
            control = 1
            b_l = old_right_bits + old_left_bits
            cand = None
        else:
            control = 0
            best_p = math.inf
            best_tau = inner[0]
            for tau in inner:
                slope = (tx.cumulative(tau, "left") - e_r) / (tau - tau_r)
                if slope < best_p * (1.0 - 1e-13):
                    best_p = slope
                    best_tau = tau
            new_dur = (e_stop - e_r) / best_p
            b_l = old_right_bits + old_left_bits - g.g(best_p) * new_dur
            cand = (best_p, best_tau, tau_r + new_dur)

        p_tilde = None
        if 0.0 < b_l < e_l * g.max_bits_per_energy:
            p_tilde = solve_power_for_bits(g, e_l, b_l)
        feasible = False
        if p_tilde is not None:
            new_start = tau_l - e_l / p_tilde
            if new_start >= -_REL * tscale:
                feasible = True
                for tau in tx.epochs_in(max(new_start, 0.0), tau_l, include_left=True):
                    if (e_l - tx.cumulative(tau, "left")) > p_tilde * (tau_l - tau) * (
                        1.0 + 1e-9
                    ) + _REL:
                        feasible = False
                        break

        if feasible:
            powers[0] = p_tilde
            switches[0] = max(tau_l - e_l / p_tilde, 0.0)
            if control == 0:
                best_p, best_tau, new_stop = cand
                powers[-1] = best_p
                switches[-1] = best_tau
                powers.append(best_p)
                switches.append(new_stop)
            else:
                powers.pop()
                switches.pop()
        else:
            # clamp the first power to the tightest slope into the left anchor
            best_p = e_l / tau_l if tau_l > 0 else math.inf  # origin corner (0, 0)
            best_tau = None
            for tau in tx.epochs_in(0.0, tau_l, include_left=True):
                slope = (e_l - tx.cumulative(tau, "left")) / (tau_l - tau)
                if slope > best_p * (1.0 + 1e-13):
                    best_p = slope
                    best_tau = tau
            new_start = tau_l - e_l / best_p
            b_r = old_left_bits + old_right_bits - g.g(best_p) * (e_l / best_p)
            switches[0] = best_tau if best_tau is not None else max(new_start, 0.0)
            powers[0] = best_p
            if best_tau is not None and new_start < best_tau - _REL * tscale:
                powers.insert(0, best_p)
                switches.insert(0, max(new_start, 0.0))
            de = e_stop - e_r
            if b_r <= _REL * bscale:
                powers.pop()
                switches.pop()
            else:
                if b_r >= de * g.max_bits_per_energy:
                    raise NoRoot("right rebalance has no feasible power")
                p_r_new = solve_power_for_bits(g, de, b_r)
                powers[-1] = p_r_new
                switches[-1] = tau_r + de / p_r_new

        new_duration = switches[-1] - switches[0]
        trace.append(
            (
                it,
                switches[0],
                switches[-1],
                new_duration,
                switches[1] if len(switches) > 2 else switches[-1],
                switches[-2] if len(switches) > 2 else switches[0],
                powers[0],
                powers[-1],
            )
        )
        if new_duration < old_duration - 1e-9 * tscale:
            raise InternalInvariantViolation(
                "transmission duration decreased across a pull-back iteration"
            )
        if new_duration <= old_duration + _REL * tscale:
            stalls += 1
            if stalls > n_before + 2:
                raise InternalInvariantViolation("pull-back stalled without progress")

    policy = TransmissionPolicy(tuple(powers), tuple(switches))
    return PullBackState(policy=policy, prev=prev, anchor=anchor, iterations=it, trace=trace)


def quit_(
    state: PullBackState,
    tx: TxHarvestProfile,
    b0: float,
    gamma0: float,
    g: RateFunction = AWGN,
) -> TransmissionPolicy:
    """Land the window exactly on the receiver budget.

    If pull-back stopped with the window inside the budget (start pinned at
    0), its last iterate is already optimal. Otherwise the final iterate
    overshot: the window that uses exactly the budget lies between the last
    two iterates, and a scalar root find on the start time (finish follows
    from the bit balance) locates it.
    """
    duration = state.policy.finish_time - state.policy.start_time
    qtol = 1e-9 * max(1.0, gamma0)
    if duration <= gamma0 + qtol:
        return state.policy
    snap = state.prev
    if snap is None:
        raise InternalInvariantViolation("budget overshoot without a previous iterate")

    tau_l, tau_r = snap.tau_l, snap.tau_r
    e_l = tx.cumulative(tau_l, "left")
    de = tx.cumulative(snap.t_stop, "left") - tx.cumulative(tau_r, "left")
    interior_powers = snap.powers[1:-1]
    interior_switches = snap.switches[1:-1]
    b_sides = g.g(snap.p_l) * (tau_l - snap.t_start) + g.g(snap.p_r) * (
        snap.t_stop - tau_r
    )

    def y_of(x: float) -> float:
        left_bits = (tau_l - x) * g.g(e_l / (tau_l - x))
        residual = b_sides - left_bits
        if residual <= 0.0:
            return tau_r
        return tau_r + solve_duration_for_bits(g, de, residual)

    x_lo, x_hi = state.policy.start_time, snap.t_start
    f_lo = y_of(x_lo) - x_lo - gamma0
    f_hi = y_of(x_hi) - x_hi - gamma0
    if f_lo < -qtol or f_hi > qtol:
        raise NoRoot("budget equation bracket failed; pull-back invariants violated")
    for _ in range(200):
        if x_hi - x_lo <= max(1e-14, 1e-12 * max(abs(x_hi), 1.0)):
            break
        mid = 0.5 * (x_lo + x_hi)
        if y_of(mid) - mid - gamma0 >= 0.0:
            x_lo = mid
        else:
            x_hi = mid
    x_star = 0.5 * (x_lo + x_hi)
    y_star = x_star + gamma0

    # snap.switches[1:-1] spans [tau_l, ..., tau_r]; splice fresh outer segments on
    powers = [e_l / (tau_l - x_star), *interior_powers]
    switches = [x_star, *interior_switches]
    if y_star > tau_r + _REL * max(1.0, tau_r):
        powers.append(de / (y_star - tau_r))
        switches.append(y_star)
    return TransmissionPolicy(tuple(powers), tuple(switches))


@dataclass(frozen=True)
class OffSolution:
    policy: TransmissionPolicy
    anchor: float
    state: Optional[PullBackState]


def solve_off(
    tx: TxHarvestProfile, b0: float, gamma0: float, g: RateFunction = AWGN
) -> OffSolution:
    """Full pipeline, exposing the anchor epoch and the pull-back trace."""
    if b0 < 0.0:
        raise BadInput("bits must be nonnegative")
    if b0 == 0.0:
        return OffSolution(TransmissionPolicy.empty(), 0.0, None)
    initial, anchor = init_policy(tx, b0, gamma0, g)
    state = pull_back(initial, anchor, tx, b0, gamma0, g)
    policy = quit_(state, tx, b0, gamma0, g)
    return OffSolution(policy, anchor, state)


def off(
    tx: TxHarvestProfile, b0: float, gamma0: float, g: RateFunction = AWGN
) -> TransmissionPolicy:
    """Minimum-finish-time policy for b0 bits under receiver budget gamma0."""
    return solve_off(tx, b0, gamma0, g).policy
