import math
import random

import pytest

from ehsched.errors import BadInput, Unachievable
from ehsched.rate import (
    AWGN,
    AwgnHalfLog,
    get_rate_function,
    invert_rate,
    max_bits,
    register_rate_function,
    solve_duration_for_bits,
    solve_power_for_bits,
)

SUP = 0.5 / math.log(2.0)  # bits per unit energy at vanishing power


def test_zero_bits_need_zero_time():
    assert solve_duration_for_bits(AWGN, 1.0, 0.0) == 0.0


def test_duration_solve_residual():
    t = solve_duration_for_bits(AWGN, 3.0, 1.0)
    assert abs(t * AWGN.g(3.0 / t) - 1.0) <= 1e-10


def test_duration_unachievable_beyond_supremum():
    # sup = 1/(2 ln 2) ~ 0.7213 < 0.75
    with pytest.raises(Unachievable):
        solve_duration_for_bits(AWGN, 1.0, 0.75)


def test_duration_bad_inputs():
    with pytest.raises(BadInput):
        solve_duration_for_bits(AWGN, 0.0, 1.0)
    with pytest.raises(BadInput):
        solve_duration_for_bits(AWGN, 1.0, -0.1)


def test_power_solve_and_duration_crosscheck():
    p = solve_power_for_bits(AWGN, 2.0, 1.0)
    assert abs((2.0 / p) * AWGN.g(p) - 1.0) <= 1e-10
    assert abs((2.0 / p) * AWGN.g(p) - 1.0) <= 1e-10


def test_power_vanishes_at_supremum():
    b = 5.0 * SUP * (1.0 - 1e-7)
    p = solve_power_for_bits(AWGN, 5.0, b)
    assert 0.0 < p < 1e-3


def test_power_unachievable_at_exact_supremum():
    with pytest.raises(Unachievable):
        solve_power_for_bits(AWGN, 1.0, SUP)


def test_power_zero_bits_rejected():
    with pytest.raises(BadInput):
        solve_power_for_bits(AWGN, 1.0, 0.0)


def test_max_bits_examples():
    assert max_bits(AWGN, 0.0, 10.0) == 0.0
    assert abs(max_bits(AWGN, 1.0, 1.0) - 0.5) <= 1e-12
    assert abs(max_bits(AWGN, 1.0, 0.0, unbounded_time=True) - SUP) <= 1e-12


def test_max_bits_negative_rejected():
    with pytest.raises(BadInput):
        max_bits(AWGN, -1.0, 1.0)


def test_round_trip_duration_then_bits():
    rng = random.Random(1)
    for _ in range(200):
        e = rng.uniform(0.01, 50.0)
        b = rng.uniform(0.01, 0.99) * e * SUP
        t = solve_duration_for_bits(AWGN, e, b)
        assert abs(max_bits(AWGN, e, t) - b) <= 1e-9 * b


def test_power_strictly_decreases_with_bits():
    # fixed energy: more bits force a lower, more energy-efficient power
    # (g(p)/p strictly decreasing), i.e. a longer transmission
    rng = random.Random(2)
    for _ in range(100):
        e = rng.uniform(0.1, 20.0)
        bs = sorted(rng.uniform(0.05, 0.95) * e * SUP for _ in range(4))
        ps = [solve_power_for_bits(AWGN, e, b) for b in bs]
        for lo, hi in zip(ps, ps[1:]):
            assert hi < lo


def test_power_strictly_increases_with_energy():
    # fixed bits: more banked energy lets a higher power finish sooner;
    # this is what drives the online policy's growing powers
    rng = random.Random(12)
    for _ in range(100):
        b = rng.uniform(0.05, 2.0)
        es = sorted(rng.uniform(1.05, 4.0) * b / SUP for _ in range(4))
        ps = [solve_power_for_bits(AWGN, e, b) for e in es]
        for lo, hi in zip(ps, ps[1:]):
            assert hi > lo


def test_jensen_total_bits_below_average_power_bound():
    # any power profile over a window sends no more than the even split
    rng = random.Random(3)
    for _ in range(100):
        n = rng.randint(2, 6)
        powers = [rng.uniform(0.01, 5.0) for _ in range(n)]
        durs = [rng.uniform(0.01, 2.0) for _ in range(n)]
        total_t = sum(durs)
        total_e = sum(p * d for p, d in zip(powers, durs))
        bits = sum(AWGN.g(p) * d for p, d in zip(powers, durs))
        assert bits <= max_bits(AWGN, total_e, total_t) * (1.0 + 1e-12)


def test_builtin_shape_properties():
    # increasing from 0, concave; per-unit rate decreasing and convex
    rng = random.Random(4)
    assert AWGN.g(0.0) == 0.0
    for _ in range(200):
        p1, p2 = sorted(rng.uniform(1e-6, 100.0) for _ in range(2))
        lam = rng.uniform(0.01, 0.99)
        assert AWGN.g(p2) > AWGN.g(p1)
        mix = AWGN.g(lam * p1 + (1 - lam) * p2)
        assert mix >= lam * AWGN.g(p1) + (1 - lam) * AWGN.g(p2) - 1e-12
        if p1 < p2:
            assert AWGN.per_unit_rate(p1) > AWGN.per_unit_rate(p2)
    # convexity of g(p)/p on a ladder
    for _ in range(100):
        p1, p2 = sorted(rng.uniform(1e-3, 50.0) for _ in range(2))
        lam = rng.uniform(0.01, 0.99)
        mid = lam * p1 + (1 - lam) * p2
        assert AWGN.per_unit_rate(mid) <= (
            lam * AWGN.per_unit_rate(p1) + (1 - lam) * AWGN.per_unit_rate(p2) + 1e-12
        )


def test_slope_at_zero_exposed():
    assert abs(AWGN.max_bits_per_energy - SUP) <= 1e-15
    assert abs(AWGN.g_prime(0.0) - SUP) <= 1e-15


def test_registry_lookup():
    assert isinstance(get_rate_function("awgn_half_log"), AwgnHalfLog)
    with pytest.raises(BadInput):
        get_rate_function("nope")


def test_registry_extension_and_generic_solvers():
    class SqrtRate:
        """g(p) = sqrt(p): satisfies the shape properties, infinite slope at 0."""

        name = "sqrt_test"

        def g(self, p):
            return math.sqrt(p)

        def g_prime(self, p):
            return 0.5 / math.sqrt(p) if p > 0 else math.inf

        @property
        def max_bits_per_energy(self):
            return math.inf

        def per_unit_rate(self, p):
            return self.g(p) / p

    r = SqrtRate()
    register_rate_function(r)
    assert get_rate_function("sqrt_test") is r
    # T*sqrt(E/T) = B  ->  T = B^2/E
    t = solve_duration_for_bits(r, 4.0, 2.0)
    assert abs(t - 1.0) <= 1e-9
    # unachievable never triggers: supremum is infinite
    t = solve_duration_for_bits(r, 0.01, 100.0)
    assert abs(t * r.g(0.01 / t) - 100.0) <= 1e-6


def test_invert_rate_builtin_and_generic():
    assert abs(invert_rate(AWGN, 0.5) - 1.0) <= 1e-12
    assert invert_rate(AWGN, 0.0) == 0.0
    # tiny rates keep full relative precision via the analytic inverse
    y = 7.2134752e-5
    x = invert_rate(AWGN, y)
    assert abs(AWGN.g(x) - y) <= 1e-18
