"""Closed-form contention metrics for multichannel slotted ALOHA with barring.

A round has ``n`` backlogged UEs, each transmitting with probability ``p``
on one of ``M`` preambles picked uniformly. The quantities here are the
expected number of successes (throughput ``S``), the expected number of
idle preambles, the expected resource consumption ``R`` when idle and
occupied preambles cost ``r_I`` and ``r_O`` resource blocks, and the
efficiency ``T = S / R``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

DEFAULT_R_IDLE = 0.09
DEFAULT_R_OCCUPIED = 1.09


@dataclass(frozen=True)
class ContentionConfig:
    """Parameters of one contention round.

    ``n`` is real-valued because controllers plug in backlog estimates.
    """

    n: float
    p: float
    M: int

    def __post_init__(self):
        if not self.n >= 0:
            raise DomainError(f"backlog n must be >= 0, got {self.n}")
        if not 0 < self.p <= 1:
            raise DomainError(f"access probability p must be in (0, 1], got {self.p}")
        if int(self.M) != self.M or self.M < 1:
            raise DomainError(f"preamble count M must be a positive integer, got {self.M}")


@dataclass(frozen=True)
class ResourceCosts:
    """Resource blocks spent per idle (``r_I``) and occupied (``r_O``) preamble."""

    r_I: float = DEFAULT_R_IDLE
    r_O: float = DEFAULT_R_OCCUPIED

    def __post_init__(self):
        if not 0 <= self.r_I <= self.r_O:
            raise DomainError(f"need 0 <= r_I <= r_O, got r_I={self.r_I}, r_O={self.r_O}")

    def consumption(self, split: ChannelSplit) -> float:
        """Instantaneous consumption of one observed round."""
        return (split.m_S + split.m_C) * self.r_O + split.m_I * self.r_I


@dataclass(frozen=True)
class ChannelSplit:
    """Collided, singleton and idle preamble counts of a round."""

    m_C: int
    m_S: int
    m_I: int

    def __post_init__(self):
        if min(self.m_C, self.m_S, self.m_I) < 0:
            raise DomainError(f"split counts must be nonnegative: {self}")

    @property
    def M(self) -> int:
        return self.m_C + self.m_S + self.m_I


def idle_probability(n: float, p: float, M: int) -> float:
    """``(1 - p/M) ** n``, the chance that a given preamble stays idle."""
    q = p / M
    if n == 0:
        return 1.0
    if q >= 1.0:
        # only reachable with M == 1 and p == 1
        return 0.0
    return math.exp(n * math.log1p(-q))


def _throughput(n: float, p: float, M: int) -> float:
    if p == 0:
        return 0.0
    return n * p * idle_probability(n - 1, p, M)


def _consumption(n: float, p: float, M: int, r_I: float, r_O: float) -> float:
    return M * (r_O - (r_O - r_I) * idle_probability(n, p, M))


def throughput(cfg: ContentionConfig) -> float:
    """Expected successes per round, ``n p (1 - p/M)^(n-1)``."""
    if cfg.n < 1:
        raise DomainError(f"throughput needs n >= 1, got n={cfg.n}; clamp estimates first")
    return _throughput(cfg.n, cfg.p, cfg.M)


def expected_idle(cfg: ContentionConfig) -> float:
    """Expected number of idle preambles, ``M (1 - p/M)^n``."""
    return cfg.M * idle_probability(cfg.n, cfg.p, cfg.M)


def expected_consumption(cfg: ContentionConfig, costs: ResourceCosts) -> float:
    """Expected resource blocks spent in the round."""
    return _consumption(cfg.n, cfg.p, cfg.M, costs.r_I, costs.r_O)


def efficiency(cfg: ContentionConfig, costs: ResourceCosts) -> float:
    """Throughput per expected resource block, ``S / R``.

    Raises DomainError when ``R == 0`` instead of returning infinity.
    """
    R = expected_consumption(cfg, costs)
    if R <= 0:
        raise DomainError(f"expected consumption is zero for {cfg} with {costs}")
    return throughput(cfg) / R


def evaluate_grid(n: float, p, M, costs: ResourceCosts):
    """Vectorised ``(S, E[m_I], R)`` over broadcastable arrays ``p`` and ``M``.

    Requires ``n >= 1`` and ``p`` in ``(0, 1]``; used by the grid searches.
    """
    p = np.asarray(p, dtype=float)
    M = np.asarray(M, dtype=float)
    q = p / M
    with np.errstate(divide="ignore", invalid="ignore"):
        log_keep = np.log1p(-q)
        idle_n = np.where(q >= 1.0, 0.0, np.exp(n * log_keep))
        idle_n1 = np.where(q >= 1.0, 1.0 if n == 1 else 0.0, np.exp((n - 1) * log_keep))
    S = n * p * idle_n1
    E_idle = M * idle_n
    R = M * (costs.r_O - (costs.r_O - costs.r_I) * idle_n)
    return S, E_idle, R
