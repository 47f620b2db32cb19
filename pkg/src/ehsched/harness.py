"""Config-driven Monte Carlo experiments with deterministic seeding.

Every trial derives its own PCG64 stream from ``master_seed XOR trial_id``,
so runs reproduce byte-identically regardless of worker count and trials
can execute in any order. Instances are generated in chunks of 64 arrivals
and extended lazily until the generated horizon covers both algorithms'
finishes; arrivals beyond a finish cannot change either answer.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ehsched.errors import BadInput, Unachievable
from ehsched.finite_battery import (
    SlottedModel,
    ad_slots,
    bound_ad,
    bound_mad,
    mad_slots,
    offline_finite_battery_min_slots,
)
from ehsched.offline_multi import offm
from ehsched.online import lower_bound_instance, on_simulate
from ehsched.profiles import RxHarvestProfile, TxHarvestProfile
from ehsched.rate import get_rate_function

_CHUNK = 64
_MAX_CHUNKS = 500

EXPERIMENT_KINDS = (
    "online_vs_offm",
    "ad_vs_offline",
    "mad_vs_offline",
    "lower_bound_sweep",
    "bound_sweep",
)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    trials: int = 500
    master_seed: int = 0
    b0_list: tuple[float, ...] = (1.0,)
    amount_high: float = 1.0
    gap_high: float = 1.0
    b0: float = 200.0
    model: Optional[SlottedModel] = None
    ladder: tuple[tuple[float, float], ...] = ((1e-3, 1e3), (1e-4, 1e4), (1e-5, 1e5))
    c_grid: tuple[float, ...] = ()
    rate_name: str = "awgn_half_log"

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise BadInput(f"unknown experiment kind {self.kind!r}")
        if self.trials < 1:
            raise BadInput("trials must be >= 1")
        if self.kind in ("ad_vs_offline", "mad_vs_offline") and self.model is None:
            raise BadInput(f"{self.kind} needs a slotted model")
        if self.kind == "online_vs_offm" and (
            self.amount_high <= 0.0 or self.gap_high <= 0.0 or not self.b0_list
        ):
            raise BadInput("online_vs_offm needs positive distributions and a b0 list")

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentConfig":
        model = SlottedModel.from_json(data["model"]) if "model" in data else None
        return cls(
            kind=data["kind"],
            trials=int(data.get("trials", 500)),
            master_seed=int(data.get("seed", 0)),
            b0_list=tuple(float(x) for x in data.get("b0_list", [1.0])),
            amount_high=float(data.get("amount_high", 1.0)),
            gap_high=float(data.get("gap_high", 1.0)),
            b0=float(data.get("b0", 200.0)),
            model=model,
            ladder=tuple((float(a), float(b)) for a, b in data.get("ladder", [(1e-3, 1e3), (1e-4, 1e4), (1e-5, 1e5)])),
            c_grid=tuple(float(x) for x in data.get("c_grid", [])),
            rate_name=data.get("rate", {}).get("kind", "awgn_half_log")
            if isinstance(data.get("rate"), dict)
            else data.get("rate", "awgn_half_log"),
        )


@dataclass(frozen=True)
class ReportRow:
    trial: int
    t_online: float
    t_offline: float
    ratio: float


@dataclass(frozen=True)
class SimulationReport:
    kind: str
    rows: tuple[ReportRow, ...]
    unachievable: int

    @property
    def ratios(self) -> list[float]:
        return [r.ratio for r in self.rows]

    @property
    def running_mean(self) -> list[float]:
        out, s = [], 0.0
        for i, r in enumerate(self.rows, 1):
            s += r.ratio
            out.append(s / i)
        return out

    @property
    def summary(self) -> dict:
        rs = self.ratios
        n = len(rs)
        mean = sum(rs) / n if n else math.nan
        if n > 1:
            var = sum((x - mean) ** 2 for x in rs) / (n - 1)
            stderr = math.sqrt(var / n)
        else:
            stderr = math.nan
        return {
            "mean": mean,
            "stderr": stderr,
            "max": max(rs) if rs else math.nan,
            "min": min(rs) if rs else math.nan,
            "n": n,
            "excluded": self.unachievable,
        }


def _uniform_arrivals(rng: np.random.Generator, n: int, amount_high: float, gap_high: float,
                      t_last: float, first_at_zero: bool):
    times, amounts = [], []
    t = t_last
    for k in range(n):
        if first_at_zero and k == 0 and t_last == 0.0 and not times:
            times.append(0.0)
        else:
            t += max(rng.uniform(0.0, gap_high), 1e-9)
            times.append(t)
        amounts.append(max(rng.uniform(0.0, amount_high), 1e-9))
    return times, amounts


def paired_online_offline(
    rng: np.random.Generator,
    b0: float,
    amount_high: float = 1.0,
    gap_high: float = 1.0,
    rate_name: str = "awgn_half_log",
):
    """One trial: generate an instance, answer (t_online, t_offline).

    The realization is extended chunk by chunk until both finish inside the
    generated horizon; the offline optimum cannot improve from arrivals
    after its finish and the online policy never reacts to them.
    """
    g = get_rate_function(rate_name)
    tx_t, tx_a = _uniform_arrivals(rng, _CHUNK, amount_high, gap_high, 0.0, True)
    rx_t, rx_a = _uniform_arrivals(rng, _CHUNK, amount_high, gap_high, 0.0, True)
    for _ in range(_MAX_CHUNKS):
        tx = TxHarvestProfile(tuple(tx_t), tuple(tx_a))
        rx = RxHarvestProfile(tuple(rx_t), tuple(rx_a), on_power=1.0)
        try:
            fin_off = offm(tx, rx, b0, g).finish_time
            fin_on, _, _ = on_simulate(tx, rx, b0, g)
            if max(fin_on, fin_off) <= min(tx_t[-1], rx_t[-1]):
                return fin_on, fin_off
        except Unachievable:
            pass
        t2, a2 = _uniform_arrivals(rng, _CHUNK, amount_high, gap_high, tx_t[-1], False)
        tx_t.extend(t2)
        tx_a.extend(a2)
        t2, a2 = _uniform_arrivals(rng, _CHUNK, amount_high, gap_high, rx_t[-1], False)
        rx_t.extend(t2)
        rx_a.extend(a2)
    raise Unachievable("horizon extension limit reached")


def _run_trial(config: ExperimentConfig, tid: int):
    """One deterministic trial; returns (tid, t_online, t_offline) or None."""
    rng = np.random.Generator(np.random.PCG64(config.master_seed ^ tid))
    g = get_rate_function(config.rate_name)
    try:
        if config.kind == "online_vs_offm":
            b0 = config.b0_list[tid // config.trials]
            t_on, t_off = paired_online_offline(
                rng, b0, config.amount_high, config.gap_high, config.rate_name
            )
            return tid, t_on, t_off
        if config.kind == "ad_vs_offline":
            slots_on, realization = ad_slots(config.model, config.b0, g, rng)
            slots_off = offline_finite_battery_min_slots(
                realization, config.model.c_t, config.model.w, config.b0, g
            )
            return tid, float(slots_on), float(slots_off)
        if config.kind == "mad_vs_offline":
            slots_on, realization = mad_slots(config.model, config.b0, g, rng)
            slots_off = offline_finite_battery_min_slots(
                realization, config.model.c_t, config.model.w, config.b0, g
            )
            return tid, float(slots_on), float(slots_off)
    except Unachievable:
        return None
    raise BadInput(f"kind {config.kind!r} is not trial-based")


def run_experiment(config: ExperimentConfig, threads: int = 1) -> SimulationReport:
    """Run all trials (or sweep points) and aggregate in trial order."""
    if config.kind == "lower_bound_sweep":
        g = get_rate_function(config.rate_name)
        rows = []
        for k, (e0, t_budget) in enumerate(config.ladder):
            inst = lower_bound_instance(e0, t_budget, g)
            rows.append(ReportRow(k, inst.t2, inst.t1, inst.ratio))
        return SimulationReport(config.kind, tuple(rows), 0)
    if config.kind == "bound_sweep":
        if config.model is None:
            raise BadInput("bound_sweep needs a slotted model")
        g = get_rate_function(config.rate_name)
        grid = config.c_grid or tuple(1.0 + 0.1 * k for k in range(91))
        rows = []
        for k, c in enumerate(grid):
            if config.model.has_rx:
                b = bound_mad(config.model, c, g)
            else:
                b = bound_ad(config.model, c, g)
            rows.append(ReportRow(k, b.assumption1_bound, b.general_bound, b.applicable))
        return SimulationReport(config.kind, tuple(rows), 0)

    n_trials = config.trials * (
        len(config.b0_list) if config.kind == "online_vs_offm" else 1
    )
    tids = list(range(n_trials))
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_trial, [config] * n_trials, tids, chunksize=32))
    else:
        results = [_run_trial(config, tid) for tid in tids]

    rows = []
    excluded = 0
    for res in results:
        if res is None:
            excluded += 1
            continue
        tid, t_on, t_off = res
        rows.append(ReportRow(tid, t_on, t_off, t_on / t_off))
    return SimulationReport(config.kind, tuple(rows), excluded)


def emit_csv(report: SimulationReport, path) -> None:
    """Write rows plus a summary trailer; 12 significant digits, no timestamps.

    An empty report produces a header-only file.
    """
    with open(path, "w", newline="") as fh:
        fh.write("trial,t_online,t_offline,ratio\n")
        if not report.rows:
            return
        for r in report.rows:
            fh.write(f"{r.trial},{r.t_online:.12g},{r.t_offline:.12g},{r.ratio:.12g}\n")
        s = report.summary
        fh.write(
            "# summary: mean=%.12g stderr=%.12g max=%.12g min=%.12g n=%d excluded=%d\n"
            % (s["mean"], s["stderr"], s["max"], s["min"], s["n"], s["excluded"])
        )


def read_report_csv(path) -> tuple[list[ReportRow], dict]:
    """Round-trip reader for the report format (rows, summary dict)."""
    rows: list[ReportRow] = []
    summary: dict = {}
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "trial,t_online,t_offline,ratio":
            raise BadInput(f"unexpected header {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("# summary:"):
                for part in line[len("# summary:"):].split():
                    key, val = part.split("=")
                    summary[key] = int(val) if key in ("n", "excluded") else float(val)
                continue
            t, a, b, r = line.split(",")
            rows.append(ReportRow(int(t), float(a), float(b), float(r)))
    return rows, summary
