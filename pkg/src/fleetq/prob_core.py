"""Binomial tail probabilities and fleet sizing for spontaneous requests.

Each of ``N`` members independently asks for a shared vehicle on a given day
with probability ``p``, so daily demand is ``X ~ Bin(N, p)``.  A fleet of
``M`` vehicles turns a request away when ``X > M``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal, Optional

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import InvalidInputError

# Request probability estimated from the 100 km column of the Irish travel
# survey exceedance table, and the rounder working value used for sizing.
P_SURVEY_100KM = 0.0886
P_WORKING = 0.1

Method = Literal["exact", "normal"]


@dataclass(frozen=True)
class FleetScenario:
    n_users: int
    p_request: float
    m_fleet: Optional[int] = None

    def __post_init__(self):
        if isinstance(self.n_users, bool) or int(self.n_users) != self.n_users or self.n_users < 1:
            raise InvalidInputError("n_users must be a positive integer")
        if not (0.0 < self.p_request < 1.0):
            raise InvalidInputError("p must be in (0,1)")
        if self.m_fleet is not None:
            if int(self.m_fleet) != self.m_fleet or not (0 <= self.m_fleet <= self.n_users):
                raise InvalidInputError("m_fleet must be an integer in [0, n_users]")

    @property
    def mean(self) -> float:
        return self.n_users * self.p_request

    @property
    def variance(self) -> float:
        return self.n_users * self.p_request * (1.0 - self.p_request)

    def with_fleet(self, m: int) -> "FleetScenario":
        return FleetScenario(self.n_users, self.p_request, m)


@dataclass(frozen=True)
class QosTarget:
    epsilon: float
    k_extra_days: int = 1

    def __post_init__(self):
        if not (0.0 < self.epsilon < 1.0):
            raise InvalidInputError("epsilon must be in (0,1)")
        if int(self.k_extra_days) != self.k_extra_days or self.k_extra_days < 1:
            raise InvalidInputError("k must be an integer >= 1")


def _require_fleet(scenario: FleetScenario) -> int:
    if scenario.m_fleet is None:
        raise InvalidInputError("scenario has no fleet size m_fleet")
    return scenario.m_fleet


def binomial_tail_exact(scenario: FleetScenario) -> float:
    """P(X > M) summed term by term in log space.

    Binomial coefficients go through log-gamma so that populations in the
    tens of thousands neither overflow nor underflow.
    """
    m = _require_fleet(scenario)
    n, p = scenario.n_users, scenario.p_request
    if m >= n:
        return 0.0
    j = np.arange(m + 1, n + 1, dtype=float)
    log_terms = (
        gammaln(n + 1.0) - gammaln(j + 1.0) - gammaln(n - j + 1.0)
        + j * math.log(p) + (n - j) * math.log1p(-p)
    )
    return float(min(1.0, max(0.0, math.exp(logsumexp(log_terms)))))


def normal_tail(x: float) -> float:
    """Standard normal survivor function, P(Z > x)."""
    if not math.isfinite(x):
        raise InvalidInputError("normal_tail needs a finite argument")
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def standardized_margin(scenario: FleetScenario) -> float:
    """r = (M - Np) / sqrt(Np(1-p))."""
    m = _require_fleet(scenario)
    return (m - scenario.mean) / math.sqrt(scenario.variance)


def binomial_tail_normal(scenario: FleetScenario) -> float:
    # No continuity correction: M = 116 at N = 1000, p = 0.1 depends on it.
    return normal_tail(standardized_margin(scenario))


def normal_rule_of_thumb(scenario: FleetScenario) -> bool:
    """True when N >= 9 max(p/(1-p), (1-p)/p), the usual validity check for
    approximating a binomial by a normal."""
    p = scenario.p_request
    return scenario.n_users >= 9.0 * max(p / (1.0 - p), (1.0 - p) / p)


TAILS: dict[str, Callable[[FleetScenario], float]] = {
    "exact": binomial_tail_exact,
    "normal": binomial_tail_normal,
}


def smallest_satisfying(ok: Callable[[int], bool], lo: int, hi: int, start: int) -> Optional[int]:
    """Smallest integer in [lo, hi] for which the monotone predicate ``ok``
    holds (False ... False True ... True), or None.

    Expands geometrically from ``start`` to bracket the switch point, then
    bisects.
    """
    if lo > hi:
        return None
    start = min(max(start, lo), hi)
    if ok(start):
        # search downwards for a failing point
        good, step = start, 1
        while True:
            cand = good - step
            if cand < lo:
                bad = lo - 1
                break
            if not ok(cand):
                bad = cand
                break
            good, step = cand, step * 2
    else:
        bad, step = start, 1
        while True:
            cand = bad + step
            if cand > hi:
                if not ok(hi):
                    return None
                good = hi
                break
            if ok(cand):
                good = cand
                break
            bad, step = cand, step * 2
    while good - bad > 1:
        mid = (good + bad) // 2
        if ok(mid):
            good = mid
        else:
            bad = mid
    return good


def min_fleet_spontaneous(scenario: FleetScenario, target: QosTarget, method: Method = "exact") -> int:
    """Smallest M in [0, N] whose rejection probability is strictly below epsilon.

    M = N is always accepted because demand can never exceed N, even when the
    normal approximation assigns it positive tail mass.
    """
    try:
        tail = TAILS[method]
    except KeyError:
        raise InvalidInputError(f"unknown method {method!r}; use 'exact' or 'normal'") from None
    n = scenario.n_users

    def ok(m: int) -> bool:
        return m >= n or tail(scenario.with_fleet(m)) < target.epsilon

    m = smallest_satisfying(ok, 0, n, math.ceil(scenario.mean))
    assert m is not None  # ok(n) is always true
    return m
