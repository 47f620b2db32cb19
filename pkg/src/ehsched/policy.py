"""Transmission policies, their cumulative metrics, and the optimality certificate.

A policy is a piecewise-constant power profile: powers p_1..p_N between
switch times s_1 < ... < s_{N+1}. Zero power means the receiver is off; off
segments are represented explicitly (not as gaps in the switch list) so the
receiver on-time metric is computable verbatim.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Union

from ehsched.errors import BadInput
from ehsched.profiles import RxHarvestProfile, TxHarvestProfile
from ehsched.rate import RateFunction


@dataclass(frozen=True)
class TransmissionPolicy:
    powers: tuple[float, ...]
    switch_times: tuple[float, ...]

    def __post_init__(self):
        if len(self.switch_times) != len(self.powers) + 1:
            raise BadInput("need exactly one more switch time than powers")
        prev = None
        for s in self.switch_times:
            if prev is not None and s <= prev:
                raise BadInput("switch times must be strictly increasing")
            prev = s
        for p in self.powers:
            if not math.isfinite(p) or p < 0.0:
                raise BadInput("powers must be finite and nonnegative")

    @classmethod
    def empty(cls) -> "TransmissionPolicy":
        return cls((), (0.0,))

    @property
    def start_time(self) -> float:
        return self.switch_times[0]

    @property
    def finish_time(self) -> float:
        return self.switch_times[-1]

    @property
    def transmission_time(self) -> float:
        """Total duration with nonzero power (receiver on)."""
        return sum(
            b - a for p, a, b in self.segments() if p > 0.0
        )

    def segments(self) -> Iterable[tuple[float, float, float]]:
        """Yield (power, start, end) triples."""
        for i, p in enumerate(self.powers):
            yield p, self.switch_times[i], self.switch_times[i + 1]

    def _accumulate(self, t: float, rate_of) -> float:
        if t < 0.0:
            raise BadInput("time must be nonnegative")
        total = 0.0
        for p, a, b in self.segments():
            if t <= a:
                break
            total += rate_of(p) * (min(b, t) - a)
        return total

    def energy_used(self, t: float) -> float:
        """U(t): energy consumed up to time t."""
        return self._accumulate(t, lambda p: p)

    def bits_sent(self, g: RateFunction, t: float) -> float:
        """B(t): bits delivered up to time t."""
        return self._accumulate(t, lambda p: g.g(p) if p > 0.0 else 0.0)

    def receiver_on_time(self, t: float) -> float:
        """C(t): receiver on-time consumed up to time t."""
        return self._accumulate(t, lambda p: 1.0 if p > 0.0 else 0.0)

    def power_at(self, t: float) -> float:
        """Power of the segment containing t (right-continuous; 0 outside)."""
        for p, a, b in self.segments():
            if a <= t < b:
                return p
        return 0.0

    def to_json(self) -> dict:
        return {"powers": list(self.powers), "switch_times": list(self.switch_times)}

    @classmethod
    def from_json(cls, data: dict) -> "TransmissionPolicy":
        return cls(tuple(data["powers"]), tuple(data["switch_times"]))


def remove_breaks(policy: TransmissionPolicy) -> TransmissionPolicy:
    """Shift all interior off-time to the front, then drop it.

    The result starts later by the total gap duration, has no zero-power
    segments, and keeps bits and finish time unchanged. Energy use is only
    delayed, so feasibility against any harvest profile is preserved.
    """
    gap = sum(b - a for p, a, b in policy.segments() if p == 0.0)
    if gap == 0.0:
        return policy
    powers, switches = [], []
    t = policy.start_time + gap
    switches.append(t)
    for p, a, b in policy.segments():
        if p == 0.0:
            continue
        t += b - a
        powers.append(p)
        switches.append(t)
    if not powers:
        return TransmissionPolicy.empty()
    return TransmissionPolicy(tuple(powers), tuple(switches))


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    energy_violation: float
    time_violation: float
    bits_error: float

    def __bool__(self):
        return self.feasible


def is_feasible(
    policy: TransmissionPolicy,
    tx: TxHarvestProfile,
    rx_budget: Union[float, RxHarvestProfile],
    g: RateFunction,
    b0: float,
    tol: float = 1e-8,
) -> FeasibilityReport:
    """Check energy neutrality, the receiver time budget, and total bits.

    Piecewise linearity means violations can only appear at arrival epochs
    (just before a jump) or at the finish, so those points suffice.
    """
    finish = policy.finish_time
    start = policy.start_time

    energy_viol = policy.energy_used(finish) - tx.cumulative(finish, "left")
    for tau in tx.epochs_in(start, finish, include_right=True):
        energy_viol = max(energy_viol, policy.energy_used(tau) - tx.cumulative(tau, "left"))

    if isinstance(rx_budget, RxHarvestProfile):
        time_viol = policy.receiver_on_time(finish) - rx_budget.cumulative(finish, "left")
        for r in rx_budget.epochs_in(start, finish, include_right=True):
            time_viol = max(time_viol, policy.receiver_on_time(r) - rx_budget.cumulative(r, "left"))
    else:
        time_viol = policy.receiver_on_time(finish) - float(rx_budget)

    bits_err = abs(policy.bits_sent(g, finish) - b0)

    scale_e = max(1.0, tx.total)
    scale_b = max(1.0, abs(b0))
    feasible = (
        energy_viol <= tol * scale_e
        and time_viol <= tol * max(1.0, policy.finish_time)
        and bits_err <= tol * scale_b
    )
    return FeasibilityReport(feasible, energy_viol, time_viol, bits_err)


@dataclass(frozen=True)
class ClaimCheck:
    ok: bool
    violation: float


@dataclass(frozen=True)
class StructureReport:
    """One check per optimality-certificate claim, with worst violations."""

    bits_exact: ClaimCheck
    powers_nondecreasing: ClaimCheck
    switches_on_epochs_and_energy_exhausted: ClaimCheck
    duration_rule: ClaimCheck
    contains_anchor: ClaimCheck

    @property
    def all_ok(self) -> bool:
        return (
            self.bits_exact.ok
            and self.powers_nondecreasing.ok
            and self.switches_on_epochs_and_energy_exhausted.ok
            and self.duration_rule.ok
            and self.contains_anchor.ok
        )

    def failures(self) -> list[str]:
        return [
            name
            for name in (
                "bits_exact",
                "powers_nondecreasing",
                "switches_on_epochs_and_energy_exhausted",
                "duration_rule",
                "contains_anchor",
            )
            if not getattr(self, name).ok
        ]


def check_optimal_structure(
    policy: TransmissionPolicy,
    tx: TxHarvestProfile,
    gamma0: float,
    g: RateFunction,
    b0: float,
    anchor: float,
    tol_factor: float = 1e-8,
) -> StructureReport:
    """Evaluate the finish-time optimality certificate for a no-breaks policy.

    The five claims: exact bits; nondecreasing powers; every interior switch
    on a transmitter epoch with all harvested energy drained there (and at
    the finish); the transmission window spanning exactly the receiver
    budget unless the policy starts at 0; and the anchor epoch (where the
    initial constant-power plan drains all harvested energy) appearing among
    the switch times. Switch points with equal adjacent powers are accepted.
    """
    if any(p <= 0.0 for p in policy.powers):
        raise BadInput("certificate applies to no-breaks policies (all powers > 0)")

    finish = policy.finish_time
    start = policy.start_time
    scale = max(1.0, abs(b0), tx.total, finish, gamma0)
    tol = tol_factor * scale

    bits_viol = abs(policy.bits_sent(g, finish) - b0)
    bits = ClaimCheck(bits_viol <= tol, bits_viol)

    ndec_viol = 0.0
    for i in range(len(policy.powers) - 1):
        ndec_viol = max(ndec_viol, policy.powers[i] - policy.powers[i + 1])
    ndec = ClaimCheck(ndec_viol <= tol, ndec_viol)

    sw_viol = 0.0
    for s in policy.switch_times[1:-1]:
        nearest = min((abs(s - tau) for tau in tx.epochs), default=math.inf)
        sw_viol = max(sw_viol, nearest)
        sw_viol = max(sw_viol, abs(policy.energy_used(s) - tx.cumulative(s, "left")))
    sw_viol = max(sw_viol, abs(policy.energy_used(finish) - tx.cumulative(finish, "left")))
    switches = ClaimCheck(sw_viol <= tol, sw_viol)

    if start > tol:
        dur_viol = abs((finish - start) - gamma0)
    else:
        dur_viol = max(0.0, finish - gamma0)
    duration = ClaimCheck(dur_viol <= tol, dur_viol)

    anchor_viol = min(abs(s - anchor) for s in policy.switch_times)
    has_anchor = ClaimCheck(anchor_viol <= tol, anchor_viol)

    return StructureReport(bits, ndec, switches, duration, has_anchor)


def write_trace_csv(policy: TransmissionPolicy, g: RateFunction, path, times) -> None:
    """Export (t, power, cum_bits, cum_energy, cum_on_time) rows on a time grid."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "power", "cum_bits", "cum_energy", "cum_on_time"])
        for t in times:
            writer.writerow(
                [
                    f"{t:.12g}",
                    f"{policy.power_at(t):.12g}",
                    f"{policy.bits_sent(g, t):.12g}",
                    f"{policy.energy_used(t):.12g}",
                    f"{policy.receiver_on_time(t):.12g}",
                ]
            )
