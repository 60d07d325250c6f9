"""Confidential stochastic optimization on the unit interval.

A learner queries a stochastic oracle through a replicated query schedule so
that an eavesdropper who sees only the query points learns almost nothing
about the optimizer's location, at the price of a 1/delta_adv slowdown in the
effective sample budget.
"""
from .adversary import (
    AdversaryEstimate,
    packing_ball_sample,
    posterior_interval_adversary,
    proportional_sample,
    uniform_naive,
)
from .bounds import (
    RateReport,
    binary_entropy,
    c_of_p,
    kl_gaussian_pair,
    lower_bound_binary,
    lower_bound_convex,
    lower_bound_noisy,
    make_rate_report,
    upper_bound_rates,
)
from .epoch_gd import (
    EpochGdState,
    default_constants,
    epoch_gd_estimate,
    epoch_gd_feed,
    epoch_gd_init,
    epoch_gd_propose,
    run_epoch_gd,
)
from .errors import (
    BudgetError,
    ConstructionError,
    DomainError,
    PackingError,
    ParameterError,
    ProtocolOrderError,
)
from .functions import (
    Ball,
    FunctionInstance,
    HardPair,
    make_abs,
    make_hard_pair,
    make_uniformly_convex,
)
from .harness import (
    ADVERSARY_ORDER,
    CSV_HEADER,
    BatchSummary,
    ComparisonRow,
    SlopeFit,
    SweepResult,
    TrialOutcome,
    compare_to_bounds,
    default_packing_centers,
    export_csv,
    instance_for_trial,
    run_batch,
    run_trial,
    sample_x_star,
    summarize,
    sweep_budget,
    trial_seed,
)
from .oracles import (
    OracleResponse,
    RngStream,
    gaussian_first_order,
    noisy_sign_oracle,
    sign_oracle,
)
from .protocol import (
    MODES,
    ProtocolConfig,
    Transcript,
    majority_repetitions,
    run_plain_convex,
    run_protocol,
    run_secure_bisection,
    run_secure_convex,
    subinterval_index,
)

__version__ = "0.1.0"

__all__ = [
    "ADVERSARY_ORDER",
    "AdversaryEstimate",
    "Ball",
    "BatchSummary",
    "BudgetError",
    "CSV_HEADER",
    "ComparisonRow",
    "ConstructionError",
    "DomainError",
    "EpochGdState",
    "FunctionInstance",
    "HardPair",
    "MODES",
    "OracleResponse",
    "PackingError",
    "ParameterError",
    "ProtocolConfig",
    "ProtocolOrderError",
    "RateReport",
    "RngStream",
    "SlopeFit",
    "SweepResult",
    "Transcript",
    "TrialOutcome",
    "binary_entropy",
    "c_of_p",
    "compare_to_bounds",
    "default_constants",
    "default_packing_centers",
    "epoch_gd_estimate",
    "epoch_gd_feed",
    "epoch_gd_init",
    "epoch_gd_propose",
    "export_csv",
    "gaussian_first_order",
    "instance_for_trial",
    "kl_gaussian_pair",
    "lower_bound_binary",
    "lower_bound_convex",
    "lower_bound_noisy",
    "majority_repetitions",
    "make_abs",
    "make_hard_pair",
    "make_rate_report",
    "make_uniformly_convex",
    "noisy_sign_oracle",
    "packing_ball_sample",
    "posterior_interval_adversary",
    "proportional_sample",
    "run_batch",
    "run_epoch_gd",
    "run_plain_convex",
    "run_protocol",
    "run_secure_bisection",
    "run_secure_convex",
    "run_trial",
    "sample_x_star",
    "sign_oracle",
    "subinterval_index",
    "summarize",
    "sweep_budget",
    "trial_seed",
    "uniform_naive",
    "upper_bound_rates",
]
