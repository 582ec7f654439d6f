"""hedgesim: discretization schemes for stochastic integrals under transaction costs.

Simulates hitting-time and equidistant rebalancing schemes on Brownian-family
and Black-Scholes-delta models, measures the discretization error and cost
functionals, and verifies the sharp asymptotic efficiency bounds and the
kurtosis-skewness moment inequalities they rest on.
"""

__version__ = "0.1.0"

from .metrics import ErrorReport, cost, error_qv, evaluate, terminal_error, trade_count
from .models import BM, BS_DELTA, DRIFTED, ModelSpec, PathGrid, refine, rng_stream, simulate
from .moments import (
    DiscreteDistribution,
    MomentSet,
    bernoulli_distribution,
    bernoulli_ratio,
    center,
    efficiency_factor,
    exact_moments,
    fukasawa_gap,
    g,
    ks1_margin,
    ks20_margin,
    pearson_gap,
)
from .montecarlo import (
    EfficiencyProduct,
    Estimate,
    ExitStats,
    hitting_exit_stats,
    inner_expectation,
    run_experiment,
    run_paired,
    scheme_limits,
    sweep,
    theoretical_bound,
)
from .schemes import (
    RebalanceSchedule,
    SchemeSpec,
    ShatMode,
    build_schedule,
    schedule_equidistant,
    schedule_hitting_biased,
    schedule_hitting_unbiased,
)
from .utility import (
    UtilityParams,
    UtilityReport,
    mu_check,
    mu_hat,
    nu,
    nu_check,
    scaled_utility_experiment,
    surrogate_target_factor,
)
