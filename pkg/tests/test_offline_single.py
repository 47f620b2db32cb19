import random

import pytest

from conftest import random_single_budget_instance
from ehsched.errors import BadInput, Unachievable
from ehsched.offline_single import (
    init_policy,
    min_time_no_rx_constraint,
    off,
    pull_back,
    quit_,
    solve_off,
)
from ehsched.oracle import oracle_min_finish_single
from ehsched.policy import check_optimal_structure, is_feasible
from ehsched.profiles import TxHarvestProfile
from ehsched.rate import AWGN, max_bits, solve_duration_for_bits, solve_power_for_bits

g = AWGN


# ---------------------------------------------------------------- min time

def test_min_time_single_arrival_constant_power():
    tx = TxHarvestProfile.from_arrivals([(0.0, 5.0)])
    pol = min_time_no_rx_constraint(tx, 1.0, 0.0, g)
    p = solve_power_for_bits(g, 5.0, 1.0)
    assert pol.powers == pytest.approx((p,))
    assert pol.finish_time == pytest.approx(5.0 / p)


def test_min_time_even_arrivals_single_slope():
    tx = TxHarvestProfile.from_arrivals([(0.0, 1.0), (1.0, 1.0)])
    pol = min_time_no_rx_constraint(tx, 2.0 * g.g(1.0), 0.0, g)
    assert all(p == pytest.approx(1.0, abs=1e-9) for p in pol.powers)
    assert pol.finish_time == pytest.approx(2.0, abs=1e-9)


def test_min_time_binding_epoch_two_powers():
    tx = TxHarvestProfile.from_arrivals([(0.0, 0.2), (1.0, 1.8)])
    pol = min_time_no_rx_constraint(tx, g.g(0.2) + g.g(1.8), 0.0, g)
    assert pol.powers == pytest.approx((0.2, 1.8), abs=1e-8)
    assert pol.switch_times == pytest.approx((0.0, 1.0, 2.0), abs=1e-8)


def test_min_time_unachievable():
    tx = TxHarvestProfile.from_arrivals([(0.0, 1.0)])
    with pytest.raises(Unachievable):
        min_time_no_rx_constraint(tx, 1.0, 0.0, g)  # sup = 0.7213


def test_min_time_structure_random():
    # nondecreasing powers; every interior switch is an epoch that drains
    # all harvested energy; the finish drains everything arrived before it
    rng = random.Random(10)
    for _ in range(100):
        tx, _, _ = random_single_budget_instance(rng, 2, 7)
        b0 = rng.uniform(0.05, 0.9) * tx.total * g.max_bits_per_energy
        pol = min_time_no_rx_constraint(tx, b0, 0.0, g)
        assert abs(pol.bits_sent(g, pol.finish_time) - b0) <= 1e-8 * max(1.0, b0)
        for lo, hi in zip(pol.powers, pol.powers[1:]):
            assert hi >= lo - 1e-10
        for s in pol.switch_times[1:-1]:
            assert any(abs(s - tau) <= 1e-9 for tau in tx.epochs)
            assert abs(pol.energy_used(s) - tx.cumulative(s, "left")) <= 1e-8
        assert abs(
            pol.energy_used(pol.finish_time) - tx.cumulative(pol.finish_time, "left")
        ) <= 1e-8


# -------------------------------------------------------------- init phase

def test_init_single_arrival_constant_from_zero():
    tx = TxHarvestProfile.from_arrivals([(0.0, 2.0)])
    pol, anchor = init_policy(tx, 1.0, 10.0, g)
    gamma_tilde = solve_duration_for_bits(g, 2.0, 1.0)
    assert anchor == 0.0
    assert pol.start_time == 0.0
    assert pol.finish_time == pytest.approx(gamma_tilde)
    assert all(p == pytest.approx(2.0 / gamma_tilde) for p in pol.powers)


def test_init_constant_power_already_drains_at_stop():
    # both arrivals inside the window, none after: the constant plan drains
    # everything at its stop and is returned unchanged
    tx = TxHarvestProfile.from_arrivals([(0.0, 1.0), (0.4, 1.0)])
    gamma0 = 2.0
    b0 = 0.95 * gamma0 * g.g(tx.total / gamma0)
    pol, anchor = init_policy(tx, b0, gamma0, g)
    assert len(set(pol.powers)) == 1
    assert abs(pol.energy_used(pol.finish_time) - tx.total) <= 1e-9


def test_init_splices_min_time_tail_after_anchor():
    # a big arrival lands inside the constant window: the tail after the
    # anchor is replaced by the minimum-time schedule, powers nondecreasing
    tx = TxHarvestProfile.from_arrivals([(0.0, 0.4), (0.25, 0.5), (1.1, 2.0)])
    gamma0 = 2.2
    b0 = 0.999 * gamma0 * g.g(tx.cumulative(0.25) / gamma0)
    pol, anchor = init_policy(tx, b0, gamma0, g)
    assert len(pol.powers) >= 2
    rep = check_optimal_structure(pol, tx, gamma0, g, b0, anchor)
    assert rep.bits_exact.ok
    assert rep.powers_nondecreasing.ok
    assert rep.switches_on_epochs_and_energy_exhausted.ok
    assert rep.contains_anchor.ok
    assert is_feasible(pol, tx, gamma0, g, b0).feasible


def test_init_unachievable_when_no_prefix_suffices():
    tx = TxHarvestProfile.from_arrivals([(0.0, 1.0)])
    gamma0 = 1.0
    with pytest.raises(Unachievable):
        init_policy(tx, 1.1 * gamma0 * g.g(1.0 / gamma0), gamma0, g)


# --------------------------------------------------------------- pull back

def test_pull_back_single_arrival_terminates_immediately():
    tx = TxHarvestProfile.from_arrivals([(0.0, 2.0)])
    initial, anchor = init_policy(tx, 1.0, 10.0, g)
    state = pull_back(initial, anchor, tx, 1.0, 10.0, g)
    assert state.iterations == 0
    assert state.policy.start_time == 0.0


def test_pull_back_three_epoch_walkthrough():
    # two iterations: the first slides the start left and clamps the first
    # power at the middle epoch; the second pins the start at 0 and
    # re-solves the last power; window duration grows strictly throughout
    tx = TxHarvestProfile.from_arrivals([(0.0, 0.26), (0.718, 0.383), (1.062, 0.528)])
    gamma0, b0 = 0.972, 0.4950196946774506
    initial, anchor = init_policy(tx, b0, gamma0, g)
    assert anchor == pytest.approx(1.062)
    state = pull_back(initial, anchor, tx, b0, gamma0, g)
    assert state.iterations == 2
    (it1, ts1, tp1, d1, tl1, tr1, pl1, pr1), (it2, ts2, tp2, d2, tl2, tr2, pl2, pr2) = state.trace
    d0 = initial.finish_time - initial.start_time
    assert d0 < d1 < d2
    assert tl1 == pytest.approx(0.718)  # first power clamped at the middle epoch
    assert tr1 == pytest.approx(1.062)
    assert ts2 == pytest.approx(0.0)  # start pinned at the origin
    assert pr2 > pr1 > initial.powers[-1]
    final = quit_(state, tx, b0, gamma0, g)
    assert final.finish_time - final.start_time == pytest.approx(gamma0, abs=1e-9)
    assert check_optimal_structure(final, tx, gamma0, g, b0, anchor).all_ok


def test_pull_back_raise_right_branch():
    # the last power climbs to the next energy boundary: the right anchor
    # advances to a later epoch
    tx = TxHarvestProfile.from_arrivals(
        [(0.0, 0.08), (0.237, 0.199), (1.233, 0.891), (1.467, 0.565), (1.598, 0.317), (1.972, 0.538)]
    )
    gamma0, b0 = 2.523, 0.6823017475850908
    initial, anchor = init_policy(tx, b0, gamma0, g)
    state = pull_back(initial, anchor, tx, b0, gamma0, g)
    taus_r = [initial.switch_times[-2]] + [row[5] for row in state.trace]
    assert any(b > a + 1e-12 for a, b in zip(taus_r, taus_r[1:]))
    final = quit_(state, tx, b0, gamma0, g)
    assert check_optimal_structure(final, tx, gamma0, g, b0, anchor).all_ok


def test_pull_back_drop_right_segment_branch():
    # no arrival beyond the right anchor: the last segment is dropped and
    # the stop time snaps back to the anchor
    tx = TxHarvestProfile.from_arrivals(
        [(0.0, 0.539), (0.807, 0.597), (1.648, 0.521), (2.097, 0.51), (2.952, 0.645), (3.692, 0.083), (4.204, 0.262)]
    )
    gamma0, b0 = 1.886, 1.1313734557943818
    initial, anchor = init_policy(tx, b0, gamma0, g)
    state = pull_back(initial, anchor, tx, b0, gamma0, g)
    stops = [row[2] for row in state.trace]
    taus_r = [initial.switch_times[-2]] + [row[5] for row in state.trace]
    assert any(abs(tp - tr_prev) <= 1e-9 for tp, tr_prev in zip(stops, taus_r))
    final = quit_(state, tx, b0, gamma0, g)
    assert check_optimal_structure(final, tx, gamma0, g, b0, anchor).all_ok


def test_pull_back_duration_strictly_increases_random():
    rng = random.Random(11)
    for _ in range(150):
        tx, gamma0, b0 = random_single_budget_instance(rng, 3, 6)
        initial, anchor = init_policy(tx, b0, gamma0, g)
        state = pull_back(initial, anchor, tx, b0, gamma0, g)
        durations = [initial.finish_time - initial.start_time] + [r[3] for r in state.trace]
        for a, b in zip(durations, durations[1:]):
            assert b > a - 1e-12
        n_before = sum(1 for t in tx.epochs if t < initial.finish_time)
        assert state.iterations <= n_before


# -------------------------------------------------------------------- quit

def test_quit_passthrough_when_start_reaches_zero_inside_budget():
    tx = TxHarvestProfile.from_arrivals([(0.0, 1.0), (0.3, 2.0)])
    gamma0 = 5.0
    b0 = 0.6 * max_bits(g, tx.total, gamma0)
    initial, anchor = init_policy(tx, b0, gamma0, g)
    state = pull_back(initial, anchor, tx, b0, gamma0, g)
    final = quit_(state, tx, b0, gamma0, g)
    if state.policy.start_time == 0.0 and state.duration <= gamma0:
        assert final == state.policy
    assert final.start_time == 0.0
    assert final.finish_time <= gamma0 + 1e-9


def test_quit_lands_exactly_on_budget_random():
    rng = random.Random(12)
    exercised = 0
    for _ in range(300):
        tx, gamma0, b0 = random_single_budget_instance(rng, 3, 6)
        sol = solve_off(tx, b0, gamma0, g)
        if sol.state is not None and sol.state.duration > gamma0 + 1e-9:
            exercised += 1
            dur = sol.policy.finish_time - sol.policy.start_time
            assert abs(dur - gamma0) <= 1e-9 * max(1.0, gamma0)
        assert check_optimal_structure(sol.policy, tx, gamma0, g, b0, sol.anchor).all_ok
    assert exercised >= 20


# --------------------------------------------------------------------- off

def test_off_zero_bits_empty_policy():
    tx = TxHarvestProfile.from_arrivals([(0.0, 1.0)])
    pol = off(tx, 0.0, 1.0, g)
    assert pol.powers == () and pol.finish_time == 0.0


def test_off_single_arrival_matches_closed_form():
    tx = TxHarvestProfile.from_arrivals([(0.0, 2.0)])
    pol = off(tx, 1.0, 10.0, g)
    assert pol.finish_time == pytest.approx(solve_duration_for_bits(g, 2.0, 1.0))
    assert len(set(pol.powers)) == 1


def test_off_never_worse_than_oracle():
    rng = random.Random(13)
    for _ in range(30):
        tx, gamma0, b0 = random_single_budget_instance(rng, 2, 5)
        scale = max(1.0, tx.epochs[-1] + gamma0)
        delta = 1e-3 * scale
        fin = off(tx, b0, gamma0, g).finish_time
        fin_oracle = oracle_min_finish_single(tx, b0, gamma0, g, delta)
        assert fin <= fin_oracle + 1e-9
        assert fin_oracle <= fin + 2 * delta


def test_off_rejects_bad_inputs():
    tx = TxHarvestProfile.from_arrivals([(0.0, 1.0)])
    with pytest.raises(BadInput):
        off(tx, -1.0, 1.0, g)
    with pytest.raises(BadInput):
        solve_off(tx, 1.0, 0.0, g)
