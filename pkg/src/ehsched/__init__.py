"""Scheduling for energy-harvesting transmitter/receiver links.

Offline optimal schedules (single and multiple receiver energy arrivals),
a 2-competitive causal online policy, finite-battery accumulate-and-dump
schedulers with closed-form expected-ratio bounds, brute-force validation
oracles, and a deterministic Monte Carlo experiment harness.
"""

from ehsched.errors import (
    BadInput,
    BadModel,
    EhschedError,
    EmptyProfile,
    InternalInvariantViolation,
    NoRoot,
    Unachievable,
)
from ehsched.finite_battery import (
    DistributionSpec,
    SlottedModel,
    ad_simulate,
    bound_ad,
    bound_mad,
    expected_stopping_slots,
    mad_simulate,
    offline_finite_battery_min_slots,
    optimize_c,
)
from ehsched.harness import ExperimentConfig, SimulationReport, emit_csv, run_experiment
from ehsched.offline_multi import compute_O, compute_i0, offm, solve_offm
from ehsched.offline_single import (
    init_policy,
    min_time_no_rx_constraint,
    off,
    pull_back,
    quit_,
    solve_off,
)
from ehsched.online import lower_bound_instance, on_simulate, on_start_time
from ehsched.policy import (
    TransmissionPolicy,
    check_optimal_structure,
    is_feasible,
    remove_breaks,
)
from ehsched.profiles import (
    RxHarvestProfile,
    TxHarvestProfile,
    cumulative_at,
    normalize_origin,
    profiles_from_json,
)
from ehsched.rate import (
    AWGN,
    AwgnHalfLog,
    RateFunction,
    get_rate_function,
    max_bits,
    register_rate_function,
    solve_duration_for_bits,
    solve_power_for_bits,
)

__version__ = "0.1.0"
