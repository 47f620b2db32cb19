"""Harvest-profile data model: cumulative transmitter energy and receiver on-time.

Profiles are right-continuous nondecreasing step functions built from finite
arrival lists. "No more energy arrives" is represented by the list simply
ending. Arrivals sharing an instant are merged at construction; the model
treats arrivals as instants and merging is the only feasibility-preserving
way to resolve ties.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from ehsched.errors import BadInput, EmptyProfile

Arrival = tuple[float, float]


def _merge_sorted(arrivals: Iterable[Arrival]) -> list[Arrival]:
    out: list[Arrival] = []
    for t, a in sorted(arrivals, key=lambda x: x[0]):
        if out and out[-1][0] == t:
            out[-1] = (t, out[-1][1] + a)
        else:
            out.append((float(t), float(a)))
    return out


def _validate(epochs: Sequence[float], amounts: Sequence[float]) -> None:
    if len(epochs) != len(amounts):
        raise BadInput("epochs and amounts must have equal length")
    if len(epochs) == 0:
        raise EmptyProfile("profile needs at least one arrival")
    prev = None
    for t, a in zip(epochs, amounts):
        if t < 0.0:
            raise BadInput("arrival times must be nonnegative")
        if prev is not None and t <= prev:
            raise BadInput("epochs must be strictly increasing")
        if a <= 0.0:
            raise BadInput("arrival amounts must be strictly positive")
        prev = t


@dataclass(frozen=True)
class TxHarvestProfile:
    """Transmitter energy arrivals: epochs and positive amounts."""

    epochs: tuple[float, ...]
    amounts: tuple[float, ...]

    def __post_init__(self):
        _validate(self.epochs, self.amounts)

    @classmethod
    def from_arrivals(cls, arrivals: Iterable[Arrival]) -> "TxHarvestProfile":
        merged = _merge_sorted(arrivals)
        return cls(tuple(t for t, _ in merged), tuple(a for _, a in merged))

    @cached_property
    def _cum(self) -> tuple[float, ...]:
        out, s = [], 0.0
        for a in self.amounts:
            s += a
            out.append(s)
        return tuple(out)

    @property
    def total(self) -> float:
        return self._cum[-1]

    def cumulative(self, t: float, side: str = "right") -> float:
        """E(t) (side="right") or E(t-) (side="left")."""
        if t < 0.0:
            raise BadInput("time must be nonnegative")
        if side == "right":
            i = bisect_right(self.epochs, t)
        elif side == "left":
            i = bisect_left(self.epochs, t)
        else:
            raise BadInput("side must be 'left' or 'right'")
        return self._cum[i - 1] if i > 0 else 0.0

    def amount_at(self, t: float) -> float:
        """Amount arriving exactly at t (0 if t is not an epoch)."""
        i = bisect_left(self.epochs, t)
        if i < len(self.epochs) and self.epochs[i] == t:
            return self.amounts[i]
        return 0.0

    def epochs_in(self, a: float, b: float, include_left=False, include_right=False):
        """Epoch times inside (a, b), with optional closed endpoints."""
        lo = bisect_left(self.epochs, a) if include_left else bisect_right(self.epochs, a)
        hi = bisect_right(self.epochs, b) if include_right else bisect_left(self.epochs, b)
        return self.epochs[lo:hi]


@dataclass(frozen=True)
class RxHarvestProfile:
    """Receiver energy arrivals plus the constant power it burns while on.

    Each energy amount R buys R / on_power of receiver on-time; cumulative()
    reports on-time, the unit every scheduling constraint uses.
    """

    epochs: tuple[float, ...]
    energies: tuple[float, ...]
    on_power: float = 1.0

    def __post_init__(self):
        _validate(self.epochs, self.energies)
        if self.on_power <= 0.0:
            raise BadInput("receiver on-power must be positive")

    @classmethod
    def from_arrivals(cls, arrivals: Iterable[Arrival], on_power: float = 1.0) -> "RxHarvestProfile":
        merged = _merge_sorted(arrivals)
        return cls(tuple(t for t, _ in merged), tuple(a for _, a in merged), on_power)

    @property
    def time_amounts(self) -> tuple[float, ...]:
        return tuple(e / self.on_power for e in self.energies)

    @cached_property
    def _cum_time(self) -> tuple[float, ...]:
        out, s = [], 0.0
        for e in self.energies:
            s += e / self.on_power
            out.append(s)
        return tuple(out)

    @property
    def total_time(self) -> float:
        return self._cum_time[-1]

    def cumulative(self, t: float, side: str = "right") -> float:
        """Accumulated on-time budget at t (right) or just before t (left)."""
        if t < 0.0:
            raise BadInput("time must be nonnegative")
        if side == "right":
            i = bisect_right(self.epochs, t)
        elif side == "left":
            i = bisect_left(self.epochs, t)
        else:
            raise BadInput("side must be 'left' or 'right'")
        return self._cum_time[i - 1] if i > 0 else 0.0

    def epochs_in(self, a: float, b: float, include_left=False, include_right=False):
        """Epoch times inside (a, b), with optional closed endpoints."""
        lo = bisect_left(self.epochs, a) if include_left else bisect_right(self.epochs, a)
        hi = bisect_right(self.epochs, b) if include_right else bisect_left(self.epochs, b)
        return self.epochs[lo:hi]


def cumulative_at(profile, t: float, side: str = "right") -> float:
    """Cumulative harvested amount at time t; side selects E(t) vs E(t-)."""
    return profile.cumulative(t, side)


def normalize_origin(
    tx_arrivals: Iterable[Arrival],
    rx_arrivals: Iterable[Arrival],
    on_power: float = 1.0,
) -> tuple[TxHarvestProfile, RxHarvestProfile]:
    """Shift the time origin so both first arrivals sit at t = 0.

    Nothing can be scheduled before energy exists on both sides, so arrivals
    on one side that precede the other side's first arrival are merged into
    a single arrival at that instant; both sides are then translated so the
    common first epoch is 0.
    """
    tx = _merge_sorted(tx_arrivals)
    rx = _merge_sorted(rx_arrivals)
    if not tx or not rx:
        raise EmptyProfile("both sides need at least one arrival")
    if tx[0][0] < 0.0 or rx[0][0] < 0.0:
        raise BadInput("arrival times must be nonnegative")
    tau0, r0 = tx[0][0], rx[0][0]
    if r0 <= tau0:
        head = [a for t, a in rx if t <= tau0]
        rx = [(tau0, sum(head))] + [(t, a) for t, a in rx if t > tau0]
        origin = tau0
    else:
        head = [a for t, a in tx if t <= r0]
        tx = [(r0, sum(head))] + [(t, a) for t, a in tx if t > r0]
        origin = r0
    tx = [(t - origin, a) for t, a in tx]
    rx = [(t - origin, a) for t, a in rx]
    return TxHarvestProfile.from_arrivals(tx), RxHarvestProfile.from_arrivals(rx, on_power)


def profiles_from_json(data: dict, normalize: bool = True):
    """Build (tx, rx) profiles from the JSON wire format.

    Expected shape: {"tx": [[t, e], ...], "rx": [[t, r], ...],
    "receiver_on_power": P}. rx and receiver_on_power are optional when the
    caller only needs the transmitter side (rx comes back as None).
    """
    if "tx" not in data:
        raise BadInput("profile JSON needs a 'tx' arrival list")
    tx_raw = [(float(t), float(a)) for t, a in data["tx"]]
    if "rx" not in data or data["rx"] is None:
        return TxHarvestProfile.from_arrivals(tx_raw), None
    rx_raw = [(float(t), float(a)) for t, a in data["rx"]]
    on_power = float(data.get("receiver_on_power", 1.0))
    if normalize:
        return normalize_origin(tx_raw, rx_raw, on_power)
    return (
        TxHarvestProfile.from_arrivals(tx_raw),
        RxHarvestProfile.from_arrivals(rx_raw, on_power),
    )
