"""The causal online policy, its event-driven simulator, and the adversarial
two-sequence construction that pins the best possible competitive ratio.

The policy waits until the harvested energy and on-time seen so far could
carry all the bits, then always transmits at the power that would finish
the remaining bits with the remaining energy if nothing more ever arrived.
Power is re-solved at every transmitter arrival; receiver arrivals after
the start are ignored (enough on-time is already banked).
"""

from __future__ import annotations

from dataclasses import dataclass

from ehsched.errors import BadInput, NoRoot, Unachievable
from ehsched.policy import TransmissionPolicy
from ehsched.profiles import RxHarvestProfile, TxHarvestProfile
from ehsched.rate import (
    AWGN,
    RateFunction,
    invert_rate,
    solve_duration_for_bits,
)


@dataclass(frozen=True)
class OnlineTrace:
    """Decision log: one (time, power, bits_left, energy_left) row per choice."""

    start_time: float
    events: tuple[tuple[float, float, float, float], ...]
    finish_time: float


def on_start_time(
    tx: TxHarvestProfile, rx: RxHarvestProfile, b0: float, g: RateFunction = AWGN
) -> float:
    """Earliest arrival instant where banked on-time can carry b0 bits."""
    if b0 <= 0.0:
        raise BadInput("bits must be positive")
    for t in sorted(set(tx.epochs) | set(rx.epochs)):
        gamma = rx.cumulative(t, "right")
        energy = tx.cumulative(t, "right")
        if gamma > 0.0 and energy > 0.0 and gamma * g.g(energy / gamma) >= b0:
            return t
    raise Unachievable("no arrival instant satisfies the start condition")


def on_simulate(
    tx: TxHarvestProfile, rx: RxHarvestProfile, b0: float, g: RateFunction = AWGN
) -> tuple[float, TransmissionPolicy, OnlineTrace]:
    """Run the online policy causally; decisions at t read only arrivals <= t."""
    t_start = on_start_time(tx, rx, b0, g)
    e_rem = tx.cumulative(t_start, "right")
    b_rem = b0
    t = t_start
    powers: list[float] = []
    switches: list[float] = [t_start]
    events: list[tuple[float, float, float, float]] = []
    future = [tau for tau in tx.epochs if tau > t_start]
    idx = 0
    finish = t_start
    while True:
        dur = solve_duration_for_bits(g, e_rem, b_rem)
        p = e_rem / dur
        events.append((t, p, b_rem, e_rem))
        planned = t + dur
        nxt = future[idx] if idx < len(future) else None
        if nxt is None or nxt >= planned:
            # an arrival landing exactly on the finish instant is ignored
            powers.append(p)
            switches.append(planned)
            finish = planned
            break
        powers.append(p)
        switches.append(nxt)
        b_rem -= g.g(p) * (nxt - t)
        e_rem -= p * (nxt - t)
        e_rem += tx.amount_at(nxt)
        t = nxt
        idx += 1
        if b_rem <= 1e-12 * b0:
            finish = t
            break
    policy = TransmissionPolicy(tuple(powers), tuple(switches))
    return finish, policy, OnlineTrace(t_start, tuple(events), finish)


@dataclass(frozen=True)
class LowerBoundInstance:
    """The two-sequence family showing no causal policy beats ratio 2.

    sigma1 carries a single arrival; sigma2 adds a second arrival at time 1
    sized so the offline schedule already finishes just past it, while the
    online policy, having committed to the slow sigma1-safe power, limps to
    nearly twice that. ratio = t2 / t1 approaches 2 as e0 shrinks and the
    on-time budget grows.
    """

    sigma1: TxHarvestProfile
    sigma2: TxHarvestProfile
    rho1: RxHarvestProfile
    b0: float
    e1: float
    t1: float
    t2: float
    ratio: float


def lower_bound_instance(e0: float, t_budget: float, g: RateFunction = AWGN) -> LowerBoundInstance:
    """Build the adversarial pair for first-arrival energy e0 and budget t_budget."""
    if e0 <= 0.0 or t_budget <= 0.0:
        raise BadInput("e0 and t_budget must be positive")
    tau1 = 1.0
    b0 = t_budget * g.g(e0 / t_budget)
    total = invert_rate(g, b0 / tau1)
    e1 = total - e0
    resid_off = b0 - tau1 * g.g(e0 / tau1)
    if e1 <= 0.0 or resid_off <= 0.0:
        raise NoRoot("the second arrival would be nonpositive (budget too small)")
    try:
        t1 = tau1 + solve_duration_for_bits(g, e1, resid_off)
    except Unachievable as exc:
        raise NoRoot("offline residual equation has no solution") from exc
    e_rem = e1 + e0 * (1.0 - tau1 / t_budget)
    resid_on = b0 - tau1 * g.g(e0 / t_budget)
    try:
        t2 = tau1 + solve_duration_for_bits(g, e_rem, resid_on)
    except Unachievable as exc:
        raise NoRoot("online residual equation has no solution") from exc
    sigma1 = TxHarvestProfile.from_arrivals([(0.0, e0)])
    sigma2 = TxHarvestProfile.from_arrivals([(0.0, e0), (tau1, e1)])
    rho1 = RxHarvestProfile.from_arrivals([(0.0, t_budget)], on_power=1.0)
    return LowerBoundInstance(sigma1, sigma2, rho1, b0, e1, t1, t2, t2 / t1)
