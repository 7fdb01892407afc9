"""Ground truth for the closed forms: exact enumeration and seeded sampling.

Exact expectations condition on the number of transmitters
``k ~ Binomial(n, p)`` and then either list all ``M**k`` preamble
assignments or, for larger ``k``, run the occupancy recursion over
``(collided, singleton, idle)`` states one ball at a time. Arithmetic is
in :class:`fractions.Fraction`, so the only rounding is the final
conversion to float. Nothing here calls :mod:`rach_pareto.analytic`.

Random streams come from numpy's counter-based Philox generator keyed by
``SeedSequence([master_seed, replication_index])``, so every replication
owns an independent, reproducible stream.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .analytic import ChannelSplit, ResourceCosts
from .errors import CapExceededError

DEFAULT_OUTCOME_CAP = 10**7
# above this many raw assignments per k, switch to the occupancy recursion
LISTING_LIMIT = 4096


@dataclass(frozen=True)
class RoundSample:
    split: ChannelSplit
    successes: int
    consumed: float


def make_rng(master_seed: int, replication_index: int = 0) -> np.random.Generator:
    """Independent Philox stream for one replication."""
    seq = np.random.SeedSequence([int(master_seed), int(replication_index)])
    return np.random.Generator(np.random.Philox(seq))


def simulate_round(n: int, p: float, M: int, costs: ResourceCosts,
                   rng: np.random.Generator) -> RoundSample:
    """Draw one contention round: barring first, then a uniform preamble pick."""
    k = int(rng.binomial(n, p)) if n > 0 else 0
    if k == 0:
        split = ChannelSplit(0, 0, M)
    else:
        load = np.bincount(rng.integers(0, M, size=k), minlength=M)
        m_S = int(np.count_nonzero(load == 1))
        m_I = int(np.count_nonzero(load == 0))
        split = ChannelSplit(M - m_S - m_I, m_S, m_I)
    return RoundSample(split, split.m_S, costs.consumption(split))


def sample_means(n: int, p: float, M: int, costs: ResourceCosts, rounds: int,
                 rng: np.random.Generator) -> dict[str, tuple[float, float]]:
    """Monte Carlo mean and standard error of successes, idle count and consumption."""
    s = np.empty(rounds)
    idle = np.empty(rounds)
    r = np.empty(rounds)
    for i in range(rounds):
        sample = simulate_round(n, p, M, costs, rng)
        s[i], idle[i], r[i] = sample.successes, sample.split.m_I, sample.consumed
    out = {}
    for name, x in (("s", s), ("m_I", idle), ("r", r)):
        out[name] = (float(x.mean()), float(x.std(ddof=1) / math.sqrt(rounds)))
    return out


def outcome_count(n: int, M: int) -> int:
    """Size of the joint outcome space, sum_k C(n, k) M^k = (M + 1)^n."""
    return (M + 1) ** n


def _split_distribution_listing(k: int, M: int) -> Counter:
    dist: Counter = Counter()
    weight = Fraction(1, M**k)
    for assignment in itertools.product(range(M), repeat=k):
        load = Counter(assignment)
        m_S = sum(1 for c in load.values() if c == 1)
        m_C = sum(1 for c in load.values() if c > 1)
        dist[(m_C, m_S, M - m_S - m_C)] += weight
    return dist


def _split_distribution_recursion(k: int, M: int) -> Counter:
    # ball-by-ball occupancy chain over (collided, singleton, idle)
    dist: Counter = Counter({(0, 0, M): Fraction(1)})
    for _ in range(k):
        nxt: Counter = Counter()
        for (c, s, i), w in dist.items():
            if i:
                nxt[(c, s + 1, i - 1)] += w * Fraction(i, M)
            if s:
                nxt[(c + 1, s - 1, i)] += w * Fraction(s, M)
            if c:
                nxt[(c, s, i)] += w * Fraction(c, M)
        dist = nxt
    return dist


def split_distribution(k: int, M: int) -> Counter:
    """Exact distribution of the split when ``k`` UEs pick among ``M`` preambles."""
    if M**k <= LISTING_LIMIT:
        return _split_distribution_listing(k, M)
    return _split_distribution_recursion(k, M)


def exact_expectations(n: int, p: float, M: int, costs: ResourceCosts,
                       cap: int = DEFAULT_OUTCOME_CAP) -> tuple[float, float, float]:
    """Exact ``(E[s], E[m_I], E[r])`` for an integer backlog.

    Raises CapExceededError when the outcome space ``(M + 1)**n`` exceeds ``cap``.
    """
    size = outcome_count(n, M)
    if size > cap:
        raise CapExceededError(n, M, size, cap)
    pf = Fraction(p)
    r_I, r_O = Fraction(costs.r_I), Fraction(costs.r_O)
    E_s = E_idle = E_r = Fraction(0)
    for k in range(n + 1):
        pk = math.comb(n, k) * pf**k * (1 - pf) ** (n - k)
        if pk == 0:
            continue
        for (m_C, m_S, m_I), w in split_distribution(k, M).items():
            E_s += pk * w * m_S
            E_idle += pk * w * m_I
            E_r += pk * w * ((m_S + m_C) * r_O + m_I * r_I)
    return float(E_s), float(E_idle), float(E_r)
