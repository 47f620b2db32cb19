"""Command-line front end: solvers, simulators, bounds, and experiments."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from ehsched.errors import BadInput, EhschedError, Unachievable
from ehsched.finite_battery import (
    SlottedModel,
    ad_slots,
    bound_ad,
    bound_mad,
    mad_slots,
    offline_finite_battery_min_slots,
    optimize_c,
)
from ehsched.harness import ExperimentConfig, emit_csv, run_experiment
from ehsched.offline_multi import solve_offm
from ehsched.offline_single import solve_off
from ehsched.online import lower_bound_instance, on_simulate
from ehsched.oracle import oracle_min_finish_multi, oracle_min_finish_single
from ehsched.policy import check_optimal_structure, is_feasible
from ehsched.profiles import profiles_from_json
from ehsched.rate import get_rate_function


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _rate_from(data: dict, override: str | None):
    if override:
        return get_rate_function(override)
    rate = data.get("rate", "awgn_half_log")
    if isinstance(rate, dict):
        rate = rate.get("kind", "awgn_half_log")
    return get_rate_function(rate)


def _print_policy(policy) -> None:
    print(json.dumps({"finish_time": policy.finish_time, "policy": policy.to_json()}))


def _cmd_off(args) -> int:
    data = _load_json(args.input)
    g = _rate_from(data, args.rate)
    tx, _ = profiles_from_json(data)
    sol = solve_off(tx, args.bits, args.gamma, g)
    if args.trace and sol.state is not None:
        with open(args.trace, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "t_start", "t_stop", "duration", "tau_l", "tau_r", "p_l", "p_r"])
            for row in sol.state.trace:
                w.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in row])
    _print_policy(sol.policy)
    return 0


def _cmd_offm(args) -> int:
    data = _load_json(args.input)
    g = _rate_from(data, args.rate)
    tx, rx = profiles_from_json(data)
    if rx is None:
        raise BadInput("offm needs an rx arrival list in the profile")
    sol = solve_offm(tx, rx, args.bits, g)
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "o_i", "gamma_i", "start_i", "finish_i", "returned"])
            for rec in sol.anchors:
                w.writerow(
                    [
                        rec.index,
                        f"{rec.o_i:.12g}",
                        f"{rec.gamma_i:.12g}",
                        f"{rec.start:.12g}",
                        f"{rec.finish:.12g}",
                        int(rec.returned),
                    ]
                )
    _print_policy(sol.policy)
    return 0


def _cmd_on(args) -> int:
    data = _load_json(args.input)
    g = _rate_from(data, args.rate)
    tx, rx = profiles_from_json(data)
    if rx is None:
        raise BadInput("on needs an rx arrival list in the profile")
    finish, policy, trace = on_simulate(tx, rx, args.bits, g)
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "power", "bits_left", "energy_left"])
            for t, p, b, e in trace.events:
                w.writerow([f"{t:.12g}", f"{p:.12g}", f"{b:.12g}", f"{e:.12g}"])
    _print_policy(policy)
    return 0


def _cmd_lower_bound(args) -> int:
    g = get_rate_function(args.rate or "awgn_half_log")
    inst = lower_bound_instance(args.e0, args.t, g)
    print(f"t1={inst.t1:.12g} t2={inst.t2:.12g} ratio={inst.ratio:.12g}")
    return 0


def _cmd_ad(args) -> int:
    data = _load_json(args.config)
    g = _rate_from(data, args.rate)
    model = SlottedModel.from_json(data)
    rows = []
    unach = 0
    for trial in range(args.trials):
        rng = np.random.Generator(np.random.PCG64(args.seed ^ trial))
        try:
            if model.has_rx:
                slots_on, realization = mad_slots(model, args.bits, g, rng)
            else:
                slots_on, realization = ad_slots(model, args.bits, g, rng)
            slots_off = offline_finite_battery_min_slots(
                realization, model.c_t, model.w, args.bits, g
            )
            rows.append((trial, slots_on, slots_off, slots_on / slots_off))
        except Unachievable:
            unach += 1
    with open(args.out, "w", newline="") as fh:
        fh.write("trial,slots_online,slots_offline,ratio\n")
        for trial, s_on, s_off, ratio in rows:
            fh.write(f"{trial},{s_on},{s_off},{ratio:.12g}\n")
        if rows:
            mean = sum(r[3] for r in rows) / len(rows)
            fh.write(f"# summary: mean={mean:.12g} n={len(rows)} excluded={unach}\n")
    print(f"wrote {len(rows)} trials to {args.out}")
    return 0 if unach == 0 else 2


def _cmd_bounds(args) -> int:
    data = _load_json(args.config)
    g = _rate_from(data, args.rate)
    model = SlottedModel.from_json(data)
    c = args.c if args.c is not None else model.c
    b = bound_ad(model, c, g)
    print(
        f"ad: c={c:.6g} assumption1_bound={b.assumption1_bound:.6g} "
        f"general_bound={b.general_bound:.6g} assumption1={'yes' if b.assumption1_satisfied else 'no'}"
    )
    c_star, b_star = optimize_c(model, g=g)
    print(f"ad: optimal c={c_star:.6g} bound={b_star:.6g}")
    if model.has_rx:
        mb = bound_mad(model, c, g)
        print(
            f"mad: c={c:.6g} assumption1_bound={mb.assumption1_bound:.6g} "
            f"general_bound={mb.general_bound:.6g} assumption1={'yes' if mb.assumption1_satisfied else 'no'}"
        )
    return 0


def _cmd_verify(args) -> int:
    data = _load_json(args.input)
    g = _rate_from(data, args.rate)
    tx, rx = profiles_from_json(data)
    if args.gamma is not None:
        sol = solve_off(tx, args.bits, args.gamma, g)
        scale = max(1.0, tx.epochs[-1] + args.gamma)
        oracle_fin = oracle_min_finish_single(tx, args.bits, args.gamma, g, args.delta * scale)
        report = check_optimal_structure(sol.policy, tx, args.gamma, g, args.bits, sol.anchor)
        print(f"algorithm_finish={sol.policy.finish_time:.12g}")
        print(f"oracle_finish={oracle_fin:.12g}")
        print(f"gap={sol.policy.finish_time - oracle_fin:.3g} (grid delta={args.delta * scale:.3g})")
        for name in (
            "bits_exact",
            "powers_nondecreasing",
            "switches_on_epochs_and_energy_exhausted",
            "duration_rule",
            "contains_anchor",
        ):
            claim = getattr(report, name)
            print(f"structure.{name}: {'ok' if claim.ok else 'FAIL'} (violation={claim.violation:.3g})")
        return 0 if report.all_ok else 2
    if rx is None:
        raise BadInput("verify needs either --gamma or an rx list in the profile")
    sol = solve_offm(tx, rx, args.bits, g)
    scale = max(1.0, max(tx.epochs[-1], rx.epochs[-1]) + rx.total_time)
    oracle_fin = oracle_min_finish_multi(tx, rx, args.bits, g, args.delta * scale)
    feas = is_feasible(sol.policy, tx, rx, g, args.bits)
    print(f"algorithm_finish={sol.policy.finish_time:.12g}")
    print(f"oracle_finish={oracle_fin:.12g}")
    print(f"gap={sol.policy.finish_time - oracle_fin:.3g} (grid delta={args.delta * scale:.3g})")
    print(f"feasible={'yes' if feas.feasible else 'NO'}")
    return 0 if feas.feasible else 2


def _resolve_threads(cli_value: int) -> int:
    env = os.environ.get("EHSCHED_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise BadInput(f"EHSCHED_THREADS must be an integer, got {env!r}") from None
    return max(1, cli_value)


def _cmd_run(args) -> int:
    config = ExperimentConfig.from_json(_load_json(args.config))
    report = run_experiment(config, threads=_resolve_threads(args.threads))
    emit_csv(report, args.out)
    s = report.summary
    print(
        f"{config.kind}: n={s['n']} mean={s['mean']:.6g} stderr={s['stderr']:.6g} "
        f"max={s['max']:.6g} excluded={s['excluded']}"
    )
    return 2 if report.unachievable > 0 else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ehsched",
        description="Scheduling for energy-harvesting transmitter/receiver links.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("off", help="offline optimum, single receiver budget")
    p.add_argument("--input", required=True)
    p.add_argument("--bits", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--trace")
    p.add_argument("--rate")
    p.set_defaults(func=_cmd_off)

    p = sub.add_parser("offm", help="offline optimum, multiple receiver arrivals")
    p.add_argument("--input", required=True)
    p.add_argument("--bits", type=float, required=True)
    p.add_argument("--trace")
    p.add_argument("--rate")
    p.set_defaults(func=_cmd_offm)

    p = sub.add_parser("on", help="causal online policy")
    p.add_argument("--input", required=True)
    p.add_argument("--bits", type=float, required=True)
    p.add_argument("--trace")
    p.add_argument("--rate")
    p.set_defaults(func=_cmd_on)

    p = sub.add_parser("lower-bound", help="adversarial two-sequence family")
    p.add_argument("--e0", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--rate")
    p.set_defaults(func=_cmd_lower_bound)

    p = sub.add_parser("ad", help="accumulate-and-dump Monte Carlo")
    p.add_argument("--config", required=True)
    p.add_argument("--bits", type=float, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--rate")
    p.set_defaults(func=_cmd_ad)

    p = sub.add_parser("bounds", help="expected-competitive-ratio bounds")
    p.add_argument("--config", required=True)
    p.add_argument("--c", type=float)
    p.add_argument("--rate")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("verify", help="algorithm vs brute-force oracle")
    p.add_argument("--input", required=True)
    p.add_argument("--bits", type=float, required=True)
    p.add_argument("--gamma", type=float)
    p.add_argument("--delta", type=float, default=1e-3)
    p.add_argument("--rate")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("run", help="config-driven experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_run)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (EhschedError, OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
