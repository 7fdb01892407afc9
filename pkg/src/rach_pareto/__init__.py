"""Resource-aware random access: closed forms, POCA optimiser, burst simulator."""
from .analytic import (
    ChannelSplit,
    ContentionConfig,
    ResourceCosts,
    efficiency,
    expected_consumption,
    expected_idle,
    throughput,
)
from .estimator import EstimatorState, add_arrivals, update
from .optimizer import (
    ParetoPoint,
    PolicyDecision,
    ResourceBudget,
    acb_policy,
    best_acb_allocation,
    constrained_p_star,
    pareto_frontier,
    poca,
)
from .oracle import RoundSample, exact_expectations, make_rng, simulate_round
from .simulator import BurstResult, RoundRecord, ScenarioConfig, run_burst, run_replications

__version__ = "0.1.0"
