"""Optimal offline schedule when the receiver harvests at multiple instants.

Each receiver arrival r_i defines an anchor window: the earliest instant
O_i from which the receiver could stay on continuously for its accumulated
budget. Solving the single-budget problem from each anchor in turn (with
pre-anchor transmitter energy collapsed into the anchor) and stopping at
the first solution that starts before the next anchor yields the optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from ehsched.errors import BadInput, InternalInvariantViolation, Unachievable
from ehsched.offline_single import OffSolution, solve_off
from ehsched.policy import TransmissionPolicy
from ehsched.profiles import RxHarvestProfile, TxHarvestProfile
from ehsched.rate import AWGN, RateFunction


@dataclass(frozen=True)
class AnchorRecord:
    """One anchor visit: the earliest continuous-on start for receiver
    arrival ``index``, its accumulated budget, and the solve's outcome."""

    index: int
    o_i: float
    gamma_i: float
    start: float
    finish: float
    returned: bool


@dataclass(frozen=True)
class OffmSolution:
    policy: TransmissionPolicy
    index: int
    anchors: tuple[AnchorRecord, ...]


def compute_O(rx: RxHarvestProfile, i: int) -> float:
    """Earliest x such that the receiver can stay on over [x, x + budget_i].

    The elapsed-time constraint binds only just before receiver epochs, so
    the minimum is the largest shortfall (r_j - budget-before-r_j) over
    arrivals up to r_i, clipped at 0.
    """
    if not 0 <= i < len(rx.epochs):
        raise BadInput("receiver arrival index out of range")
    out = 0.0
    for j in range(i + 1):
        r = rx.epochs[j]
        out = max(out, r - rx.cumulative(r, "left"))
    return out


def compute_i0(
    tx: TxHarvestProfile, rx: RxHarvestProfile, b0: float, g: RateFunction = AWGN
) -> int:
    """Smallest arrival index whose accumulated on-time can carry b0 bits
    using every joule the transmitter will ever harvest."""
    e_tot = tx.total
    for i, r in enumerate(rx.epochs):
        gamma = rx.cumulative(r, "right")
        if gamma * g.g(e_tot / gamma) >= b0:
            return i
    raise Unachievable("no receiver budget prefix can carry the bits")


def _shifted_tx(tx: TxHarvestProfile, origin: float) -> Optional[TxHarvestProfile]:
    """Transmitter profile seen from ``origin``: prior energy collapses there."""
    arrivals = []
    head = tx.cumulative(origin, "right")
    if head > 0.0:
        arrivals.append((0.0, head))
    arrivals.extend((t - origin, a) for t, a in zip(tx.epochs, tx.amounts) if t > origin)
    if not arrivals:
        return None
    return TxHarvestProfile.from_arrivals(arrivals)


def solve_offm(
    tx: TxHarvestProfile, rx: RxHarvestProfile, b0: float, g: RateFunction = AWGN
) -> OffmSolution:
    """Anchor loop with per-anchor records (for the CLI trace)."""
    if b0 < 0.0:
        raise BadInput("bits must be nonnegative")
    if b0 == 0.0:
        return OffmSolution(TransmissionPolicy.empty(), 0, ())
    i0 = compute_i0(tx, rx, b0, g)
    records: list[AnchorRecord] = []
    for i in range(i0, len(rx.epochs)):
        o_i = compute_O(rx, i)
        gamma_i = rx.cumulative(rx.epochs[i], "right")
        shifted = _shifted_tx(tx, o_i)
        if shifted is None:
            raise Unachievable("no transmitter energy at or after the anchor")
        sol: OffSolution = solve_off(shifted, b0, gamma_i, g)
        policy = TransmissionPolicy(
            sol.policy.powers, tuple(s + o_i for s in sol.policy.switch_times)
        )
        o_next = compute_O(rx, i + 1) if i + 1 < len(rx.epochs) else math.inf
        returned = policy.start_time <= o_next + 1e-12 * max(1.0, o_next if math.isfinite(o_next) else 1.0)
        records.append(
            AnchorRecord(i, o_i, gamma_i, policy.start_time, policy.finish_time, returned)
        )
        if returned:
            return OffmSolution(policy, i, tuple(records))
    raise InternalInvariantViolation("anchor loop exhausted without a solution")


def offm(
    tx: TxHarvestProfile, rx: RxHarvestProfile, b0: float, g: RateFunction = AWGN
) -> TransmissionPolicy:
    """Minimum-finish-time policy under the full receiver arrival staircase."""
    return solve_offm(tx, rx, b0, g).policy
