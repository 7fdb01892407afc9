"""Round-driven simulation of a burst of UEs contending for preambles.

``N`` UEs activate inside a short window and join the backlog at the next
round boundary. Round ``i`` happens at ``(i + 1) * round_period``. Each
round a controller picks ``(p, M)`` from the estimator state, the round is
drawn against the true backlog, singletons leave, and the estimator folds
in the observed split. The burst ends once every UE has arrived and
succeeded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Callable

import numpy as np

from . import estimator as est
from .analytic import ChannelSplit, ResourceCosts, _consumption, _throughput
from .errors import DomainError, InfeasibleError, NonTerminationError
from .oracle import make_rng, simulate_round
from .optimizer import PolicyDecision, ResourceBudget, acb_policy, best_acb_allocation, poca

CONTROLLERS = ("poca", "lin17", "duan16-f", "duan16-d")
ARRIVAL_PROFILES = ("uniform", "beta")
DEFAULT_M_FIXED = 54
DEFAULT_ROUND_CAP = 10**5

Controller = Callable[[est.EstimatorState], PolicyDecision]


@dataclass(frozen=True)
class ScenarioConfig:
    N: int
    controller: str = "poca"
    activation_window: float = 10.0  # ms
    round_period: float = 5.0  # ms
    costs: ResourceCosts = field(default_factory=ResourceCosts)
    budget: ResourceBudget = field(default_factory=lambda: ResourceBudget(50.0))
    M_fixed: int = DEFAULT_M_FIXED
    # fixed-M benchmarks run unconstrained unless this is False
    fixed_budget_high: bool = True
    arrival_profile: str = "uniform"
    master_seed: int = 0
    replications: int = 1
    round_cap: int = DEFAULT_ROUND_CAP
    initial_n_hat: float = 0.0
    perfect_estimator: bool = False

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be a positive integer, got {self.N}")
        if self.controller not in CONTROLLERS:
            raise DomainError(f"unknown controller {self.controller!r}; choose from {CONTROLLERS}")
        if self.arrival_profile not in ARRIVAL_PROFILES:
            raise DomainError(f"unknown arrival profile {self.arrival_profile!r}")
        if not self.round_period > 0:
            raise DomainError("round_period must be positive")
        if self.activation_window < 0:
            raise DomainError("activation_window must be nonnegative")
        if self.replications < 1:
            raise DomainError("replications must be >= 1")
        if self.M_fixed < 1:
            raise DomainError("M_fixed must be >= 1")


@dataclass(frozen=True)
class RoundRecord:
    round_index: int
    decision: PolicyDecision
    split: ChannelSplit
    successes: int
    consumed: float
    backlog_true: int
    backlog_estimate: float


@dataclass(frozen=True)
class BurstResult:
    resolution_rounds: int
    resolution_time: float
    avg_throughput: float
    avg_consumption: float
    rounds: list[RoundRecord]


def _decision(n_hat: float, p: float, M: int, costs: ResourceCosts) -> PolicyDecision:
    n = max(n_hat, 1.0)
    return PolicyDecision(p, M, _throughput(n, p, M), _consumption(n, p, M, costs.r_I, costs.r_O))


def controller_poca(budget: ResourceBudget, state: est.EstimatorState,
                    costs: ResourceCosts) -> PolicyDecision:
    return poca(max(state.n_hat, 1.0), costs, budget)


def controller_lin17(M_fixed: int, state: est.EstimatorState,
                     costs: ResourceCosts) -> PolicyDecision:
    p = acb_policy(state.n_hat, M_fixed) if state.n_hat > 0 else 1.0
    return _decision(state.n_hat, p, M_fixed, costs)


def controller_duan16_fixed(M_fixed: int, state: est.EstimatorState,
                            costs: ResourceCosts) -> PolicyDecision:
    # same rule as lin17; kept separate so benchmark labels stay distinct
    return controller_lin17(M_fixed, state, costs)


def controller_duan16_dynamic(budget: ResourceBudget, M_grid, state: est.EstimatorState,
                              costs: ResourceCosts) -> PolicyDecision:
    return best_acb_allocation(max(state.n_hat, 1.0), costs, budget, M_grid)


def _enforce_budget(rule: Controller, budget: ResourceBudget) -> Controller:
    def controlled(state):
        decision = rule(state)
        if decision.predicted_R > budget.r_bar + 1e-9:
            raise InfeasibleError(
                f"fixed M={decision.M} predicts {decision.predicted_R:.3f} RBs > r_bar={budget.r_bar}"
            )
        return decision
    return controlled


def make_controller(config: ScenarioConfig) -> Controller:
    """Bind a registered controller to the scenario's costs and budget."""
    costs, budget = config.costs, config.budget
    if config.controller == "poca":
        return partial(controller_poca, budget, costs=costs)
    if config.controller == "duan16-d":
        return partial(controller_duan16_dynamic, budget, budget.M_grid(costs), costs=costs)
    rule = controller_lin17 if config.controller == "lin17" else controller_duan16_fixed
    bound = partial(rule, config.M_fixed, costs=costs)
    if config.fixed_budget_high:
        return bound
    return _enforce_budget(bound, budget)


def arrival_cdf(t: float, window: float, profile: str = "uniform") -> float:
    """Fraction of the burst activated by time ``t`` (ms)."""
    if window == 0:
        return 1.0 if t >= 0 else 0.0
    x = min(max(t / window, 0.0), 1.0)
    if profile == "uniform":
        return x
    # regularised incomplete beta I_x(3, 4)
    return sum(math.comb(6, j) * x**j * (1 - x) ** (6 - j) for j in range(3, 7))


def draw_activation_times(N: int, window: float, profile: str,
                          rng: np.random.Generator) -> np.ndarray:
    if profile == "uniform":
        times = rng.uniform(0.0, window, N)
    else:
        times = window * rng.beta(3.0, 4.0, N)
    return np.sort(times)


def run_burst(config: ScenarioConfig, controller: Controller | None = None,
              seed: int | None = None, replication_index: int = 0,
              estimator: est.Estimator = est.update) -> BurstResult:
    """Simulate one burst until every UE has succeeded.

    ``seed`` overrides ``config.master_seed``; the stream is keyed by
    ``(seed, replication_index)``.
    """
    controller = controller or make_controller(config)
    rng = make_rng(config.master_seed if seed is None else seed, replication_index)
    costs = config.costs
    times = draw_activation_times(config.N, config.activation_window, config.arrival_profile, rng)

    state = est.EstimatorState(config.initial_n_hat)
    backlog = 0
    arrived = 0
    records: list[RoundRecord] = []
    prev_cdf = 0.0
    for i in range(config.round_cap):
        t = (i + 1) * config.round_period
        joined = int(np.searchsorted(times, t, side="right")) - arrived
        arrived += joined
        backlog += joined
        cdf = arrival_cdf(t, config.activation_window, config.arrival_profile)
        state = est.add_arrivals(state, config.N * (cdf - prev_cdf))
        prev_cdf = cdf
        if config.perfect_estimator:
            state = replace(state, n_hat=float(backlog))

        decision = controller(state)
        sample = simulate_round(backlog, decision.p, decision.M, costs, rng)
        estimate = state.n_hat
        backlog -= sample.successes
        state = estimator(est.with_decision(state, decision), sample.split)
        records.append(RoundRecord(i, decision, sample.split, sample.successes,
                                   sample.consumed, backlog + sample.successes, estimate))
        if backlog == 0 and arrived == config.N:
            rounds = i + 1
            return BurstResult(
                resolution_rounds=rounds,
                resolution_time=rounds * config.round_period,
                avg_throughput=config.N / rounds,
                avg_consumption=sum(r.consumed for r in records) / rounds,
                rounds=records,
            )
    raise NonTerminationError(
        f"burst of N={config.N} with {config.controller} unresolved after {config.round_cap} rounds"
    )


@dataclass
class ReplicationSummary:
    """Outcome of a replication sweep; aborted and infeasible runs are kept apart."""

    results: list[BurstResult]
    aborted: list[int]
    infeasible: str | None = None

    def stat(self, attr: str) -> tuple[float, float]:
        """Mean and standard error of a BurstResult attribute across completed bursts."""
        x = np.array([getattr(r, attr) for r in self.results], dtype=float)
        if x.size == 0:
            return math.nan, math.nan
        se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
        return float(x.mean()), se


def run_replications(config: ScenarioConfig, seed: int | None = None) -> ReplicationSummary:
    """Run ``config.replications`` independent bursts on streams ``(seed, 0..reps-1)``."""
    seed = config.master_seed if seed is None else seed
    controller = make_controller(config)
    summary = ReplicationSummary([], [])
    for rep in range(config.replications):
        try:
            summary.results.append(run_burst(config, controller, seed, rep))
        except NonTerminationError:
            summary.aborted.append(rep)
        except InfeasibleError as exc:
            summary.infeasible = str(exc)
            break
    return summary
