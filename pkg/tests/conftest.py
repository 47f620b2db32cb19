"""Shared instance generators for the test suite."""

import random

from ehsched.profiles import RxHarvestProfile, TxHarvestProfile
from ehsched.rate import AWGN, max_bits


def random_tx(rng: random.Random, n_lo=2, n_hi=8, amount_high=1.0, gap_high=1.0):
    n = rng.randint(n_lo, n_hi)
    t, arrivals = 0.0, []
    for _ in range(n):
        arrivals.append((t, max(rng.uniform(0.0, amount_high), 1e-9)))
        t += max(rng.uniform(0.0, gap_high), 1e-9)
    return TxHarvestProfile.from_arrivals(arrivals)


def random_rx(rng: random.Random, n_lo=1, n_hi=4, amount_high=1.0, gap_high=1.0):
    n = rng.randint(n_lo, n_hi)
    t, arrivals = 0.0, []
    for _ in range(n):
        arrivals.append((t, max(rng.uniform(0.2, amount_high), 1e-9)))
        t += max(rng.uniform(0.0, gap_high), 1e-9)
    return RxHarvestProfile.from_arrivals(arrivals, on_power=1.0)


def random_single_budget_instance(rng: random.Random, n_lo=2, n_hi=8, frac=(0.05, 0.95)):
    """(tx, gamma0, b0) with b0 guaranteed achievable within the budget."""
    tx = random_tx(rng, n_lo, n_hi)
    gamma0 = rng.uniform(0.5, 3.0)
    cap = max_bits(AWGN, tx.total, gamma0)
    b0 = rng.uniform(*frac) * cap
    return tx, gamma0, b0
