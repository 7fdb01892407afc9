"""Backlog estimation from the observed channel split.

The default estimator inverts the expected idle count: if ``m_I`` of ``M``
preambles stayed idle under access probability ``p``, the backlog that
would produce that idle fraction on average is
``ln(m_I / M) / ln(1 - p/M)``. Singletons leave the backlog afterwards.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

from .analytic import ChannelSplit
from .errors import DomainError, InconsistentObservationError
from .optimizer import PolicyDecision


@dataclass(frozen=True)
class EstimatorState:
    n_hat: float
    last_decision: PolicyDecision | None = None

    def __post_init__(self):
        if not self.n_hat >= 0:
            raise DomainError(f"n_hat must be >= 0, got {self.n_hat}")


Estimator = Callable[[EstimatorState, ChannelSplit], EstimatorState]


def initial_state(M: int, n_hat: float | None = None) -> EstimatorState:
    """Fresh state; without a prior the estimate is one round's capacity ``M``."""
    return EstimatorState(float(M) if n_hat is None else float(n_hat))


def with_decision(state: EstimatorState, decision: PolicyDecision) -> EstimatorState:
    return replace(state, last_decision=decision)


def invert_idle_count(observed: ChannelSplit, p: float, M: int) -> float:
    """Backlog whose expected idle count matches the observation."""
    if observed.m_I == M:
        return 0.0
    log_keep = math.log1p(-p / M) if p < M else -math.inf
    if log_keep == -math.inf:
        # M == 1, p == 1: fall back to the fewest transmitters consistent with the split
        return float(observed.m_S + 2 * observed.m_C)
    # half-preamble pseudo-count keeps the log finite when nothing was idle
    idle = observed.m_I if observed.m_I > 0 else 0.5
    return math.log(idle / M) / log_keep


def update(state: EstimatorState, observed: ChannelSplit) -> EstimatorState:
    """Fold one observed split into the estimate and remove the successful UEs."""
    decision = state.last_decision
    if decision is None:
        raise DomainError("update needs the decision the split was observed under")
    if observed.M != decision.M:
        raise InconsistentObservationError(
            f"split {observed} sums to {observed.M}, round used M={decision.M}"
        )
    n_obs = invert_idle_count(observed, decision.p, decision.M)
    return replace(state, n_hat=max(n_obs - observed.m_S, 0.0))


def add_arrivals(state: EstimatorState, expected_new: float) -> EstimatorState:
    """Credit ``expected_new`` UEs expected to join before the next round."""
    if expected_new < 0:
        raise DomainError(f"expected_new must be >= 0, got {expected_new}")
    return replace(state, n_hat=state.n_hat + expected_new)
