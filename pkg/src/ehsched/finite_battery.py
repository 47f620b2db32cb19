"""Slotted finite-battery online schedulers and their expected-ratio bounds.

Time is slotted; energy lands at slot starts as i.i.d. draws from a known
distribution whose support respects the battery cap. The accumulate-and-dump
scheduler waits until the battery holds at least cap/c, then spends it all
at constant power within that slot and starts over. The offline comparator
is the exact optimum for the transmitter-only finite-battery problem (the
joint offline optimum is unknown), computed as the taut allocation inside
the corridor between the arrival staircase and the staircase lowered by the
battery cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ehsched import kernels
from ehsched.errors import BadInput, BadModel, Unachievable
from ehsched.rate import AWGN, AwgnHalfLog, RateFunction


@dataclass(frozen=True)
class DistributionSpec:
    """Per-slot arrival law: uniform(0, cap), exponential truncated at cap
    (the tail mass collapses onto the cap), or a point mass."""

    kind: str
    cap: float = 0.0
    rate: float = 0.0
    value: float = 0.0

    def __post_init__(self):
        if self.kind == "uniform":
            if self.cap <= 0.0:
                raise BadModel("uniform cap must be positive")
        elif self.kind == "exponential_truncated":
            if self.cap <= 0.0 or self.rate <= 0.0:
                raise BadModel("truncated exponential needs positive rate and cap")
        elif self.kind == "point_mass":
            if self.value <= 0.0:
                raise BadModel("point mass must be positive")
        else:
            raise BadModel(f"unknown distribution kind {self.kind!r}")

    @property
    def mean(self) -> float:
        if self.kind == "uniform":
            return 0.5 * self.cap
        if self.kind == "exponential_truncated":
            return -math.expm1(-self.rate * self.cap) / self.rate
        return self.value

    @property
    def ess_sup(self) -> float:
        return self.value if self.kind == "point_mass" else self.cap

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "uniform":
            return rng.uniform(0.0, self.cap, n)
        if self.kind == "exponential_truncated":
            return np.minimum(rng.exponential(1.0 / self.rate, n), self.cap)
        return np.full(n, self.value)

    def conditional_mean_above(self, gamma: float) -> float:
        """E[X | X >= gamma] in closed form."""
        if gamma <= 0.0:
            return self.mean
        if gamma > self.ess_sup:
            raise BadInput("gamma above the support")
        if self.kind == "uniform":
            return 0.5 * (gamma + self.cap)
        if self.kind == "exponential_truncated":
            if gamma >= self.cap:
                return self.cap
            return gamma - math.expm1(-self.rate * (self.cap - gamma)) / self.rate
        return self.value

    def assumption1_margin(self, points: int = 256) -> float:
        """max over gamma of E[X | X >= gamma] - gamma - E[X] (<= 0: satisfied)."""
        worst = -math.inf
        mean = self.mean
        hi = self.ess_sup
        for k in range(points):
            gamma = hi * k / points
            worst = max(worst, self.conditional_mean_above(gamma) - gamma - mean)
        return worst

    def satisfies_assumption1(self, tol: float = 1e-9) -> bool:
        return self.assumption1_margin() <= tol

    @classmethod
    def from_json(cls, data: dict) -> "DistributionSpec":
        return cls(
            kind=data["kind"],
            cap=float(data.get("cap", 0.0)),
            rate=float(data.get("rate", 0.0)),
            value=float(data.get("value", 0.0)),
        )


@dataclass(frozen=True)
class SlottedModel:
    """Slot width, battery caps, arrival laws, and the accumulation divisor."""

    w: float
    c_t: float
    tx_dist: DistributionSpec
    c: float = 1.0
    c_r: Optional[float] = None
    p_r: Optional[float] = None
    rx_dist: Optional[DistributionSpec] = None

    def __post_init__(self):
        if self.w <= 0.0 or self.c_t <= 0.0:
            raise BadModel("slot width and tx battery capacity must be positive")
        if self.c < 1.0:
            raise BadModel("accumulation divisor must be >= 1")
        if self.tx_dist.mean <= 0.0:
            raise BadModel("tx arrival mean must be positive")
        if self.tx_dist.ess_sup > self.c_t * (1.0 + 1e-12):
            raise BadModel("tx arrivals must fit the battery: support within [0, c_t]")
        has_rx = any(x is not None for x in (self.c_r, self.p_r, self.rx_dist))
        if has_rx:
            if None in (self.c_r, self.p_r, self.rx_dist):
                raise BadModel("joint model needs c_r, p_r, and rx_dist together")
            if self.c_r <= 0.0 or self.p_r <= 0.0:
                raise BadModel("rx capacity and on-power must be positive")
            if self.rx_dist.ess_sup > self.c_r * (1.0 + 1e-12):
                raise BadModel("rx arrivals must fit the battery: support within [0, c_r]")
            if self.p_r * self.w > self.c_r:
                raise BadModel("one slot of receiver on-time must fit its battery")

    @property
    def has_rx(self) -> bool:
        return self.rx_dist is not None

    @property
    def threshold(self) -> float:
        return self.c_t / self.c

    @classmethod
    def from_json(cls, data: dict) -> "SlottedModel":
        return cls(
            w=float(data["w"]),
            c_t=float(data["c_t"]),
            tx_dist=DistributionSpec.from_json(data["tx_dist"]),
            c=float(data.get("c", 1.0)),
            c_r=float(data["c_r"]) if "c_r" in data else None,
            p_r=float(data["p_r"]) if "p_r" in data else None,
            rx_dist=DistributionSpec.from_json(data["rx_dist"]) if "rx_dist" in data else None,
        )


@dataclass(frozen=True)
class IterationRecord:
    slots: int
    dumped: float
    bits_after: float


@dataclass(frozen=True)
class SimulationRun:
    slots: int
    iterations: tuple[IterationRecord, ...]
    realization: np.ndarray


def _draw_stream(dist: DistributionSpec, rng: np.random.Generator, chunk: int):
    while True:
        yield dist.sample(rng, chunk)


def _split_streams(rng: np.random.Generator):
    """Two independent child generators; the joint scheduler samples its two
    sides from separate streams so chunk sizes cannot affect the draws."""
    seeds = rng.integers(0, 2**63 - 1, 2)
    return (
        np.random.Generator(np.random.PCG64(int(seeds[0]))),
        np.random.Generator(np.random.PCG64(int(seeds[1]))),
    )


def ad_simulate(
    model: SlottedModel, b0: float, g: RateFunction = AWGN, seed: int = 0, _draws=None
) -> SimulationRun:
    """Accumulate-and-dump with a full iteration log (reference implementation).

    ``_draws`` lets tests script the arrival sequence; normally draws come
    from a PCG64 generator seeded with ``seed``.
    """
    if model.has_rx:
        raise BadModel("ad_simulate is the transmitter-only scheduler; use mad_simulate")
    if b0 <= 0.0:
        raise BadInput("bits must be positive")
    threshold = model.threshold
    if threshold <= 0.0 or model.tx_dist.mean <= 0.0:
        raise BadModel("unreachable accumulation threshold")
    rng = np.random.Generator(np.random.PCG64(seed))
    arrivals: list[float] = []
    stream = _draw_stream(model.tx_dist, rng, 1024) if _draws is None else iter([np.asarray(_draws, float)])
    buf = np.empty(0)
    pos = 0
    stored = 0.0
    bits = 0.0
    done = b0 * (1.0 - 1e-12)
    slots = 0
    iter_slots = 0
    log: list[IterationRecord] = []
    guard = 0
    while bits < done:
        if pos >= len(buf):
            try:
                buf = next(stream)
            except StopIteration:
                raise BadModel("scripted draw sequence exhausted before the bits finished")
            pos = 0
            guard += 1
            if guard > 10_000_000 // max(len(buf), 1):
                raise BadModel("accumulation threshold unreachable in any sane horizon")
        e = float(buf[pos])
        pos += 1
        arrivals.append(e)
        stored = min(stored + e, model.c_t)
        slots += 1
        iter_slots += 1
        if stored >= threshold:
            bits += model.w * g.g(stored / model.w)
            log.append(IterationRecord(iter_slots, stored, bits))
            stored = 0.0
            iter_slots = 0
    return SimulationRun(slots, tuple(log), np.array(arrivals))


def mad_simulate(
    model: SlottedModel,
    b0: float,
    g: RateFunction = AWGN,
    seed: int = 0,
    _draws_tx=None,
    _draws_rx=None,
) -> SimulationRun:
    """Joint scheduler: dump when the tx battery holds >= c_t/c AND the fresh
    receiver arrivals of the iteration cover one slot of on-power.

    The rx battery is clipped at its cap on accumulation and pays p_r * w at
    every dump; it never influences the stopping rule, which per the scheme
    counts only arrivals of the current iteration.
    """
    if not model.has_rx:
        raise BadModel("mad_simulate needs the joint model (c_r, p_r, rx_dist)")
    if b0 <= 0.0:
        raise BadInput("bits must be positive")
    rng_tx, rng_rx = _split_streams(np.random.Generator(np.random.PCG64(seed)))
    threshold = model.threshold
    pr_w = model.p_r * model.w
    scripted = _draws_tx is not None
    if scripted:
        buf_tx = np.asarray(_draws_tx, float)
        buf_rx = np.asarray(_draws_rx, float)
    else:
        buf_tx = model.tx_dist.sample(rng_tx, 1024)
        buf_rx = model.rx_dist.sample(rng_rx, 1024)
    pos = 0
    stored_tx = 0.0
    fresh_rx = 0.0
    b_rx = 0.0
    bits = 0.0
    done = b0 * (1.0 - 1e-12)
    slots = 0
    iter_slots = 0
    arrivals: list[float] = []
    log: list[IterationRecord] = []
    while bits < done:
        if pos >= len(buf_tx):
            if scripted:
                raise BadModel("scripted draw sequence exhausted before the bits finished")
            buf_tx = model.tx_dist.sample(rng_tx, 1024)
            buf_rx = model.rx_dist.sample(rng_rx, 1024)
            pos = 0
        e, r = float(buf_tx[pos]), float(buf_rx[pos])
        pos += 1
        arrivals.append(e)
        stored_tx = min(stored_tx + e, model.c_t)
        b_rx = min(b_rx + r, model.c_r)
        fresh_rx += r
        slots += 1
        iter_slots += 1
        if stored_tx >= threshold and fresh_rx >= pr_w:
            bits += model.w * g.g(stored_tx / model.w)
            log.append(IterationRecord(iter_slots, stored_tx, bits))
            b_rx -= pr_w
            if b_rx < -1e-9:
                raise BadModel("receiver battery went negative; model invalid")
            stored_tx = 0.0
            fresh_rx = 0.0
            iter_slots = 0
    return SimulationRun(slots, tuple(log), np.array(arrivals))


def ad_slots(
    model: SlottedModel, b0: float, g: RateFunction, rng: np.random.Generator
) -> tuple[int, np.ndarray]:
    """Fast path used in Monte Carlo batches: slot count plus the arrival
    realization (one draw per slot), shared with the offline comparator."""
    if not isinstance(g, AwgnHalfLog):
        run = ad_simulate(model, b0, g, seed=int(rng.integers(1 << 62)))
        return run.slots, run.realization
    per_iter_bits = model.w * g.g((model.threshold + model.tx_dist.mean) / model.w)
    est = int((b0 / per_iter_bits + 2) * (model.threshold / model.tx_dist.mean + 2) * 1.5) + 64
    draws = model.tx_dist.sample(rng, est)
    slots = kernels.ad_trial(draws, model.threshold, model.c_t, model.w, b0)
    while slots < 0:
        draws = np.concatenate([draws, model.tx_dist.sample(rng, est)])
        slots = kernels.ad_trial(draws, model.threshold, model.c_t, model.w, b0)
    return slots, draws[:slots]


def mad_slots(
    model: SlottedModel, b0: float, g: RateFunction, rng: np.random.Generator
) -> tuple[int, np.ndarray]:
    if not isinstance(g, AwgnHalfLog):
        run = mad_simulate(model, b0, g, seed=int(rng.integers(1 << 62)))
        return run.slots, run.realization
    rng_tx, rng_rx = _split_streams(rng)
    pr_w = model.p_r * model.w
    per_iter_bits = model.w * g.g((model.threshold + model.tx_dist.mean) / model.w)
    n_iter = b0 / per_iter_bits + 2
    slots_per_iter = (
        max(model.threshold / model.tx_dist.mean, pr_w / model.rx_dist.mean) + 2
    )
    est = int(n_iter * slots_per_iter * 1.5) + 64
    draws_tx = model.tx_dist.sample(rng_tx, est)
    draws_rx = model.rx_dist.sample(rng_rx, est)
    slots = kernels.mad_trial(
        draws_tx, draws_rx, model.threshold, pr_w, model.c_t, model.c_r, model.w, b0
    )
    while slots < 0:
        draws_tx = np.concatenate([draws_tx, model.tx_dist.sample(rng_tx, est)])
        draws_rx = np.concatenate([draws_rx, model.rx_dist.sample(rng_rx, est)])
        slots = kernels.mad_trial(
            draws_tx, draws_rx, model.threshold, pr_w, model.c_t, model.c_r, model.w, b0
        )
    return slots, draws_tx[:slots]


def _taut_bits_generic(cum: np.ndarray, c_t: float, w: float, g: RateFunction) -> float:
    """Pure-Python corridor walk for non-builtin rate maps."""
    n = len(cum) - 1
    if n <= 0:
        return 0.0
    bits = 0.0
    pk, pv = 0, 0.0
    while pk < n:
        hi, lo = math.inf, -math.inf
        hi_k = lo_k = -1
        lo_v = 0.0
        bend_k, bend_v = -1, 0.0
        for k in range(pk + 1, n + 1):
            dk = k - pk
            up = cum[k]
            low = cum[n] if k == n else max(0.0, cum[k + 1] - c_t)
            su = (up - pv) / dk
            sl = (low - pv) / dk
            if su < lo:
                bend_k, bend_v = lo_k, lo_v
                break
            if sl > hi:
                bend_k, bend_v = hi_k, cum[hi_k]
                break
            if su < hi:
                hi, hi_k = su, k
            if sl > lo:
                lo, lo_k, lo_v = sl, k, low
        if bend_k < 0:
            bend_k, bend_v = n, cum[n]
        slope = (bend_v - pv) / (bend_k - pk)
        bits += (bend_k - pk) * w * g.g(slope / w)
        pk, pv = bend_k, bend_v
    return bits


def max_bits_by_slot(
    realization, c_t: float, w: float, t: int, g: RateFunction = AWGN
) -> float:
    """Maximum bits deliverable within the first t slots of a realization."""
    cum = np.zeros(t + 1)
    np.cumsum(np.asarray(realization, float)[:t], out=cum[1:])
    if isinstance(g, AwgnHalfLog):
        return kernels.taut_max_bits(np.ascontiguousarray(cum), c_t, w)
    return _taut_bits_generic(cum, c_t, w, g)


def offline_finite_battery_min_slots(
    realization, c_t: float, w: float, b0: float, g: RateFunction = AWGN
) -> int:
    """Minimal slot count an offline optimum needs on this realization.

    Max bits by slot t is the taut allocation between the arrival staircase
    and the staircase lowered by the battery cap (energy parked above the
    cap is lost); the count is the smallest t whose maximum reaches b0,
    found by bisection since the maximum is nondecreasing in t.
    """
    realization = np.asarray(realization, float)
    n = len(realization)
    if b0 <= 0.0:
        return 0
    done = b0 * (1.0 - 1e-12)
    if n == 0 or max_bits_by_slot(realization, c_t, w, n, g) < done:
        raise Unachievable("bits do not fit in the realization horizon")
    lo, hi = 0, n  # max_bits(lo) < b0 <= max_bits(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if max_bits_by_slot(realization, c_t, w, mid, g) >= done:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class AdBound:
    """Expected-competitive-ratio upper bounds for accumulate-and-dump."""

    assumption1_bound: float
    general_bound: float
    assumption1_satisfied: bool

    @property
    def applicable(self) -> float:
        return self.assumption1_bound if self.assumption1_satisfied else self.general_bound


def bound_ad(model: SlottedModel, c: float, g: RateFunction = AWGN) -> AdBound:
    """Closed-form bounds: (threshold-fill expectation) x (rate penalty).

    The rate penalty g(c_t/w) / g(c_t/(c*w)) compares a best-case full-cap
    slot against a threshold-level dump slot; the prefactor bounds the
    expected slots per dump via the stopping-time identity.
    """
    if c < 1.0:
        raise BadInput("accumulation divisor must be >= 1")
    mean = model.tx_dist.mean
    ratio = g.g(model.c_t / model.w) / g.g(model.c_t / (c * model.w))
    a1 = (model.c_t / (c * mean) + 1.0) * ratio
    gen = ((model.c_t / c + model.c_t) / mean) * ratio
    return AdBound(a1, gen, model.tx_dist.satisfies_assumption1())


@dataclass(frozen=True)
class MadBound:
    assumption1_bound: float
    general_bound: float
    assumption1_satisfied: bool

    @property
    def applicable(self) -> float:
        return self.assumption1_bound if self.assumption1_satisfied else self.general_bound


def bound_mad(model: SlottedModel, c: float, g: RateFunction = AWGN) -> MadBound:
    """Joint-model bounds; the receiver side adds its own fill expectation."""
    if not model.has_rx:
        raise BadModel("bound_mad needs the joint model")
    if c < 1.0:
        raise BadInput("accumulation divisor must be >= 1")
    mean_tx = model.tx_dist.mean
    mean_rx = model.rx_dist.mean
    pr_w = model.p_r * model.w
    ratio = g.g(model.c_t / model.w) / g.g(model.c_t / (c * model.w))
    a1 = (pr_w / mean_rx + model.c_t / (c * mean_tx) + 2.0) * ratio
    gen = ((model.c_r + pr_w) / mean_rx + (model.c_t + model.c_t / c) / mean_tx) * ratio
    ok = model.tx_dist.satisfies_assumption1() and model.rx_dist.satisfies_assumption1()
    return MadBound(a1, gen, ok)


def optimize_c(
    model: SlottedModel,
    c_range: tuple[float, float] | None = None,
    g: RateFunction = AWGN,
    grid: int = 4000,
) -> tuple[float, float]:
    """Minimize the applicable accumulate-and-dump bound over the divisor.

    Dense grid scan (first minimum wins on ties) followed by a golden-section
    polish of the best bracket.
    """
    if c_range is None:
        c_range = (1.0, max(10.0, 4.0 * model.c_t / model.tx_dist.mean))
    lo, hi = c_range
    if lo < 1.0 or hi <= lo:
        raise BadInput("c range must satisfy 1 <= lo < hi")

    def f(c):
        return bound_ad(model, c, g).applicable

    cs = [lo + (hi - lo) * k / grid for k in range(grid + 1)]
    vals = [f(c) for c in cs]
    k_best = min(range(len(vals)), key=lambda k: (vals[k], k))
    a = cs[max(0, k_best - 1)]
    b = cs[min(len(cs) - 1, k_best + 1)]
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - phi * (b - a)
    x2 = a + phi * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(80):
        if b - a < 1e-10 * max(1.0, b):
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - phi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + phi * (b - a)
            f2 = f(x2)
    c_star = 0.5 * (a + b)
    return c_star, f(c_star)


@dataclass(frozen=True)
class StoppingReport:
    """Monte Carlo stopping-time summary against the renewal identity."""

    trials: int
    mean_n: float
    mean_sum: float
    wald_gap: float  # mean of N*E[X] - sum(X), expected 0
    wald_stderr: float
    analytic_bound: float  # threshold/mean + 1, valid under the jump condition
    bound_ok: bool

    @property
    def wald_ok(self) -> bool:
        return abs(self.wald_gap) <= 3.0 * self.wald_stderr


def expected_stopping_slots(
    model: SlottedModel, c: float, trials: int, seed: int = 0
) -> StoppingReport:
    """Estimate E[slots per accumulation] and check it against theory."""
    if trials < 1:
        raise BadInput("need at least one trial")
    rng = np.random.Generator(np.random.PCG64(seed))
    threshold = model.c_t / c
    mean = model.tx_dist.mean
    k = max(8, int(threshold / mean * 6) + 8)
    n_arr = np.empty(trials)
    s_arr = np.empty(trials)
    done = 0
    while done < trials:
        m = min(trials - done, 200_000 // k + 1)
        draws = model.tx_dist.sample(rng, m * k).reshape(m, k)
        csum = np.cumsum(draws, axis=1)
        reached = csum[:, -1] >= threshold
        idx = np.argmax(csum >= threshold, axis=1)
        for row in np.nonzero(~reached)[0]:
            extra = model.tx_dist.sample(rng, 64)
            total = csum[row, -1]
            j = k
            for e in extra:
                total += e
                j += 1
                if total >= threshold:
                    break
            idx[row] = j - 1
            csum[row, -1] = total
        n_arr[done : done + m] = idx + 1
        s_arr[done : done + m] = np.where(reached, csum[np.arange(m), idx], csum[:, -1])
        done += m
    gap_samples = n_arr * mean - s_arr
    gap = float(np.mean(gap_samples))
    stderr = float(np.std(gap_samples, ddof=1) / math.sqrt(trials)) if trials > 1 else math.inf
    bound = threshold / mean + 1.0
    mean_n = float(np.mean(n_arr))
    se_n = float(np.std(n_arr, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return StoppingReport(
        trials=trials,
        mean_n=mean_n,
        mean_sum=float(np.mean(s_arr)),
        wald_gap=gap,
        wald_stderr=stderr,
        analytic_bound=bound,
        bound_ok=mean_n <= bound + 3.0 * se_n,
    )
