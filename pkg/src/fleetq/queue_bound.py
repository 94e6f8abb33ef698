"""Multi-day reservation queue: waiting-probability bound and sizing.

Unserved requests roll over to the next day.  With ``X_n`` outstanding
requests at the end of day ``n`` and ``M`` vehicles released every morning,
the last request in line waits ``floor(X_n / M)`` extra days.  The bound

    P(X_n > k M) <= 1/2 * exp(-(k-1) M alpha) / (exp(mu alpha / 2) - 1)

with ``mu = M - Np``, ``sigma2 = Np(1-p)`` and ``alpha = mu / sigma2`` holds
for every day ``n`` and every ``k >= 1`` in the regime where daily demand is
close to normal.  It only makes sense while ``mu > 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import InfeasibleError, InvalidInputError, UnstableRegimeError
from .prob_core import FleetScenario, QosTarget, smallest_satisfying

UNDERFLOW_LEVEL = 1e-300
_LOG_UNDERFLOW = math.log(UNDERFLOW_LEVEL)


@dataclass(frozen=True)
class LemmaParams:
    mu: float
    sigma2: float
    alpha: float


@dataclass(frozen=True)
class BoundPoint:
    p: float
    bound: float
    saturated: bool = False  # mu <= 0, reported as 1.0
    underflow: bool = False  # true value below UNDERFLOW_LEVEL


@dataclass
class BoundCurve:
    n_users: int
    m_fleet: int
    k_extra_days: int
    points: list[BoundPoint] = field(default_factory=list)


def lemma_params(scenario: FleetScenario) -> LemmaParams:
    if scenario.m_fleet is None:
        raise InvalidInputError("scenario has no fleet size m_fleet")
    mu = scenario.m_fleet - scenario.mean
    sigma2 = scenario.variance
    if mu <= 0:
        raise UnstableRegimeError(
            f"fleet M={scenario.m_fleet} does not exceed mean demand Np={scenario.mean:g}; "
            "the queue is unstable and the bound diverges"
        )
    return LemmaParams(mu, sigma2, mu / sigma2)


def _log_expm1(x: float) -> float:
    """log(e^x - 1) for x > 0 without overflow."""
    return x + math.log1p(-math.exp(-x)) if x > 30.0 else math.log(math.expm1(x))


def log_waiting_bound(scenario: FleetScenario, k: int) -> float:
    """Natural log of the unclamped bound."""
    if int(k) != k or k < 1:
        raise InvalidInputError("k must be an integer >= 1")
    lp = lemma_params(scenario)
    return (
        math.log(0.5)
        - (k - 1) * scenario.m_fleet * lp.alpha
        - _log_expm1(lp.mu * lp.alpha / 2.0)
    )


def waiting_bound(scenario: FleetScenario, k: int) -> float:
    """Upper bound on P(X_n > kM), clamped to 1."""
    lb = log_waiting_bound(scenario, k)
    return 1.0 if lb >= 0.0 else math.exp(lb)


def min_fleet_planned(scenario: FleetScenario, target: QosTarget) -> int:
    """Smallest M with mu > 0 whose bound is strictly below epsilon."""
    n = scenario.n_users
    k = target.k_extra_days
    lo = math.floor(scenario.mean) + 1

    def ok(m: int) -> bool:
        return waiting_bound(scenario.with_fleet(m), k) < target.epsilon

    m = smallest_satisfying(ok, lo, n, lo)
    if m is None:
        raise InfeasibleError(
            f"no fleet size up to N={n} brings the waiting bound below {target.epsilon:g} "
            f"for k={k}"
        )
    return m


def bound_point(n: int, m: int, k: int, p: float) -> BoundPoint:
    scenario = FleetScenario(n, p, m)
    try:
        lb = log_waiting_bound(scenario, k)
    except UnstableRegimeError:
        return BoundPoint(p, 1.0, saturated=True)
    if lb >= 0.0:
        return BoundPoint(p, 1.0)
    if lb < _LOG_UNDERFLOW:
        return BoundPoint(p, 0.0, underflow=True)
    return BoundPoint(p, math.exp(lb))


def bound_curve(n: int, m: int, k: int, p_grid: Sequence[float]) -> BoundCurve:
    """Evaluate the bound over a grid of request probabilities.

    Grid points where the fleet no longer exceeds mean demand saturate at 1.0
    instead of raising, so the curve can be plotted across the whole grid.
    """
    grid = list(p_grid)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidInputError("p grid must be strictly ascending")
    return BoundCurve(n, m, k, [bound_point(n, m, k, p) for p in grid])


def bound_curves(n: int, m: int, ks: Iterable[int], p_grid: Sequence[float]) -> list[BoundCurve]:
    return [bound_curve(n, m, k, p_grid) for k in ks]
