"""Selection of access probability and preamble count.

Contains the classic throughput-maximising barring rule, the closed-form
best ``p`` for a fixed ``M`` under an expected-consumption budget, the
linear search over preamble multiples built on it (POCA), the
exhaustive search used by the dynamic-allocation benchmark, and the
Pareto frontier of (throughput, consumption) over a parameter grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .analytic import ResourceCosts, _consumption, _throughput, evaluate_grid
from .errors import DomainError, InfeasibleError

DEFAULT_P_POINTS = 200
# absolute slack on budget comparisons, for float round-off only
BUDGET_TOL = 1e-9


@dataclass(frozen=True)
class ResourceBudget:
    """Bound ``r_bar`` on expected per-round consumption, allocated in steps of ``granularity_m``."""

    r_bar: float
    granularity_m: int = 1

    def __post_init__(self):
        if not self.r_bar > 0:
            raise DomainError(f"r_bar must be positive, got {self.r_bar}")
        if int(self.granularity_m) != self.granularity_m or self.granularity_m < 1:
            raise DomainError(f"granularity_m must be a positive integer, got {self.granularity_m}")

    def k_max(self, costs: ResourceCosts) -> int:
        """Largest multiplier ``k`` with ``k * m * r_I <= r_bar``."""
        if costs.r_I <= 0:
            raise DomainError("r_I must be positive to bound the preamble count")
        return int(math.floor(self.r_bar / (costs.r_I * self.granularity_m) + 1e-9))

    def M_grid(self, costs: ResourceCosts) -> np.ndarray:
        m = self.granularity_m
        return np.arange(1, self.k_max(costs) + 1) * m


@dataclass(frozen=True)
class PolicyDecision:
    p: float
    M: int
    predicted_S: float
    predicted_R: float


@dataclass(frozen=True)
class ParetoPoint:
    p: float
    M: int
    S: float
    R: float
    on_frontier: bool


def acb_policy(n: float, M: int) -> float:
    """Throughput-maximising access probability ``min(1, M/n)``."""
    if not n > 0:
        raise DomainError(f"acb_policy needs n > 0, got {n}")
    return min(1.0, M / n)


def p_max(n: float, M: int, costs: ResourceCosts, r_bar: float) -> float:
    """Largest ``p`` whose expected consumption at ``(n, M)`` stays within ``r_bar``.

    May exceed 1 when the budget is loose; callers clamp.
    """
    r_I, r_O = costs.r_I, costs.r_O
    if r_O < r_bar / M:
        return 1.0
    base = (r_O - r_bar / M) / (r_O - r_I)
    if base <= 0:
        return float(M)
    # M (1 - base^(1/n)), root taken in log space
    return -M * math.expm1(math.log(base) / n)


def constrained_p_star(n: float, M: int, costs: ResourceCosts, budget: ResourceBudget) -> float:
    """Best access probability for a fixed ``M`` subject to ``R <= r_bar``.

    Returns ``min(M/n, p_max)`` clamped to at most 1. Returns 0 only in the
    degenerate case ``M * r_I == r_bar``, where no positive ``p`` fits.
    """
    if n < 1:
        raise DomainError(f"constrained_p_star needs n >= 1, got {n}")
    if not costs.r_O > costs.r_I:
        raise DomainError("constrained_p_star needs r_O > r_I")
    if M * costs.r_I > budget.r_bar + BUDGET_TOL:
        raise InfeasibleError(
            f"M={M} needs at least {M * costs.r_I:.6g} RBs, budget is {budget.r_bar}"
        )
    return max(0.0, min(M / n, p_max(n, M, costs, budget.r_bar), 1.0))


def poca(n: float, costs: ResourceCosts, budget: ResourceBudget) -> PolicyDecision:
    """Best ``(p, M)`` under the budget, scanning ``M = k m`` from ``k_max`` down to 1.

    Ties keep the incumbent, so among equal-throughput choices the largest
    ``M`` wins. ``constrained_p_star`` is evaluated exactly ``k_max`` times.
    """
    if n < 1:
        raise DomainError(f"poca needs n >= 1, got {n}")
    m = budget.granularity_m
    k = budget.k_max(costs)
    if k < 1:
        raise InfeasibleError(
            f"budget {budget.r_bar} cannot fund {m} preambles at r_I={costs.r_I}"
        )
    best_M = k * m
    best_p = constrained_p_star(n, best_M, costs, budget)
    best_S = _throughput(n, best_p, best_M)
    while k > 1:
        k -= 1
        M = k * m
        p = constrained_p_star(n, M, costs, budget)
        S = _throughput(n, p, M)
        if S > best_S:
            best_p, best_M, best_S = p, M, S
    if best_p <= 0:
        raise InfeasibleError(f"budget {budget.r_bar} leaves no positive access probability")
    return PolicyDecision(best_p, best_M, best_S,
                          _consumption(n, best_p, best_M, costs.r_I, costs.r_O))


def best_acb_allocation(n: float, costs: ResourceCosts, budget: ResourceBudget,
                        M_grid: Sequence[int] | None = None) -> PolicyDecision:
    """Exhaustive search over ``M`` with ``p = min(1, M/n)``, keeping feasible pairs.

    Ties go to the smallest ``M``.
    """
    if n < 1:
        raise DomainError(f"best_acb_allocation needs n >= 1, got {n}")
    M = budget.M_grid(costs) if M_grid is None else np.asarray(M_grid)
    p = np.minimum(1.0, M / n)
    S, _, R = evaluate_grid(n, p, M, costs)
    feasible = R <= budget.r_bar + BUDGET_TOL
    if not feasible.any():
        raise InfeasibleError(f"no M in grid satisfies R <= {budget.r_bar} with p = min(1, M/n)")
    i = int(np.argmax(np.where(feasible, S, -np.inf)))
    return PolicyDecision(float(p[i]), int(M[i]), float(S[i]), float(R[i]))


def default_p_grid(points: int = DEFAULT_P_POINTS) -> np.ndarray:
    return np.linspace(1.0 / points, 1.0, points)


def nondominated_mask(S, R) -> np.ndarray:
    """Mask of points not dominated under (maximise S, minimise R)."""
    S = np.asarray(S, dtype=float)
    R = np.asarray(R, dtype=float)
    order = np.lexsort((-S, R))
    mask = np.zeros(len(S), dtype=bool)
    best_S = -np.inf
    best_R = None
    for i in order:
        if S[i] > best_S:
            best_S, best_R = S[i], R[i]
            mask[i] = True
        elif S[i] == best_S and R[i] == best_R:
            mask[i] = True
    return mask


def pareto_frontier(n: float, costs: ResourceCosts, p_grid: Sequence[float],
                    M_values: Sequence[int]) -> list[ParetoPoint]:
    """Evaluate every ``(p, M)`` grid point and flag the non-dominated ones."""
    p_grid = np.asarray(p_grid, dtype=float)
    M_values = np.asarray(M_values, dtype=int)
    if p_grid.size == 0 or M_values.size == 0:
        raise DomainError("pareto_frontier needs non-empty grids")
    if (M_values < 1).any():
        raise DomainError("all M values must be >= 1")
    PP, MM = np.meshgrid(p_grid, M_values)
    S, _, R = evaluate_grid(n, PP.ravel(), MM.ravel(), costs)
    mask = nondominated_mask(S, R)
    return [ParetoPoint(float(p), int(M), float(s), float(r), bool(f))
            for p, M, s, r, f in zip(PP.ravel(), MM.ravel(), S, R, mask)]


def frontier_throughput_at(frontier: Sequence[ParetoPoint], R: float) -> float:
    """Frontier throughput at consumption ``R``, interpolated linearly between frontier points."""
    pts = sorted((pt.R, pt.S) for pt in frontier if pt.on_frontier)
    xs = np.array([r for r, _ in pts])
    ys = np.array([s for _, s in pts])
    return float(np.interp(R, xs, ys))
