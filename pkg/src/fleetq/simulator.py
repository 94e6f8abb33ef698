"""Seeded day-by-day simulation of the shared-fleet reservation queue.

Every morning the whole fleet is back in the pool and up to ``M`` outstanding
requests are served, oldest request-day first.  New requests arrive during the
day and cannot be served before the next morning.  A request made on day ``d``
and served on the morning of day ``s`` has waited ``s - d - 1`` extra days.

Randomness: replicate ``i`` of a run with base seed ``b`` uses a PCG64
generator (numpy) seeded with ``replicate_seed(b, i)``, the ``i+1``-th output
of a SplitMix64 stream started at ``b``.
"""
from __future__ import annotations

import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.stats import binom

from .errors import InvalidInputError, OracleSizeError
from .prob_core import FleetScenario

_MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15
Z99 = 2.5758293035489004  # two-sided 99% normal quantile

ORACLE_MAX_USERS = 12
ORACLE_MAX_HORIZON = 6


def splitmix64(x: int) -> int:
    z = (x + _GOLDEN_GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def replicate_seed(base_seed: int, replicate_index: int) -> int:
    if base_seed < 0 or replicate_index < 0:
        raise InvalidInputError("seeds and replicate indices must be non-negative")
    return splitmix64((base_seed + replicate_index * _GOLDEN_GAMMA) & _MASK64)


def make_rng(base_seed: int, replicate_index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(replicate_seed(base_seed, replicate_index)))


def sample_binomial(n: int, p: float, rng: np.random.Generator) -> int:
    """One Bin(n, p) draw: explicit Bernoulli trials for n <= 64, numpy's
    binomial sampler above that."""
    if n <= 0 or p <= 0.0:
        return 0
    if p >= 1.0:
        return n
    if n <= 64:
        return int(np.count_nonzero(rng.random(n) < p))
    return int(rng.binomial(n, p))


@dataclass(frozen=True)
class SimScenario:
    """Like FleetScenario but admits the degenerate p = 0 and p = 1."""

    n_users: int
    p_request: float
    m_fleet: int

    def __post_init__(self):
        if self.n_users < 1:
            raise InvalidInputError("n_users must be a positive integer")
        if not (0.0 <= self.p_request <= 1.0):
            raise InvalidInputError("p must be in [0,1]")
        if not (0 <= self.m_fleet <= self.n_users):
            raise InvalidInputError("m_fleet must be an integer in [0, n_users]")


@dataclass(frozen=True)
class SimConfig:
    scenario: Union[FleetScenario, SimScenario]
    horizon_days: int
    replications: int = 1
    base_seed: int = 0

    def __post_init__(self):
        if self.scenario.m_fleet is None:
            raise InvalidInputError("simulation needs a fleet size")
        if self.horizon_days < 1:
            raise InvalidInputError("horizon_days must be >= 1")
        if self.replications < 1:
            raise InvalidInputError("replications must be >= 1")
        if not (0 <= self.base_seed <= _MASK64):
            raise InvalidInputError("base_seed must be a 64-bit unsigned integer")


@dataclass
class SimulationResult:
    requests_total: int
    served_total: int
    residual_queue: int
    queue_trajectory: list[int]
    wait_histogram: dict[int, int]
    arrivals: list[int] = field(default_factory=list)

    def waiting_at_least(self, k: int) -> int:
        return sum(c for w, c in self.wait_histogram.items() if w >= k)

    def fraction_waiting_at_least(self, k: int, censor_conservative: bool = False) -> float:
        """Share of requests that waited ``k`` or more extra days.

        By default requests still queued at the horizon are left out (their
        wait is censored).  With ``censor_conservative`` they count as
        exceeding and the denominator becomes all requests.
        """
        num = self.waiting_at_least(k)
        den = self.served_total
        if censor_conservative:
            num += self.residual_queue
            den = self.requests_total
        return num / den if den else 0.0

    def days_exceeding(self, k: int, m: int) -> int:
        """Number of days ending with more than k*m outstanding requests."""
        return sum(1 for x in self.queue_trajectory if x > k * m)


def run_queue(m: int, arrivals: Sequence[int]) -> SimulationResult:
    """Serve a logged arrival sequence with a fleet of ``m`` (FIFO)."""
    queue: deque[list[int]] = deque()  # [arrival day, requests left]
    hist: dict[int, int] = {}
    trajectory = []
    outstanding = served_total = 0
    for day, a in enumerate(arrivals, start=1):
        capacity = m
        while capacity and queue:
            head = queue[0]
            take = min(capacity, head[1])
            wait = day - head[0] - 1
            hist[wait] = hist.get(wait, 0) + take
            capacity -= take
            head[1] -= take
            if not head[1]:
                queue.popleft()
        served_today = m - capacity
        served_total += served_today
        if a:
            queue.append([day, a])
        outstanding += a - served_today
        trajectory.append(outstanding)
    return SimulationResult(
        requests_total=int(sum(arrivals)),
        served_total=served_total,
        residual_queue=outstanding,
        queue_trajectory=trajectory,
        wait_histogram=dict(sorted(hist.items())),
        arrivals=list(arrivals),
    )


def draw_arrivals(config: SimConfig, replicate_index: int) -> list[int]:
    rng = make_rng(config.base_seed, replicate_index)
    sc = config.scenario
    return [sample_binomial(sc.n_users, sc.p_request, rng) for _ in range(config.horizon_days)]


def simulate(config: SimConfig, replicate_index: int = 0) -> SimulationResult:
    return run_queue(config.scenario.m_fleet, draw_arrivals(config, replicate_index))


def _simulate_star(args):
    return simulate(*args)


def run_replications(config: SimConfig, workers: int = 1) -> list[SimulationResult]:
    """All replications of ``config`` in replicate-index order."""
    jobs = [(config, i) for i in range(config.replications)]
    if workers <= 1:
        return [simulate(c, i) for c, i in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_simulate_star, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def _mean_and_halfwidth(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    if arr.size < 2:
        return float(arr.mean()), 0.0
    return float(arr.mean()), float(Z99 * arr.std(ddof=1) / math.sqrt(arr.size))


@dataclass(frozen=True)
class SweepRow:
    m: int
    k: int
    fraction: float
    replications: int
    ci_halfwidth: float


def summarize(results: Sequence[SimulationResult], k: int, censor_conservative: bool = False) -> tuple[float, float]:
    """Pooled fraction of requests waiting >= k extra days, and the 99% CI
    half-width estimated from the spread of per-replicate fractions."""
    if censor_conservative:
        num = sum(r.waiting_at_least(k) + r.residual_queue for r in results)
        den = sum(r.requests_total for r in results)
    else:
        num = sum(r.waiting_at_least(k) for r in results)
        den = sum(r.served_total for r in results)
    pooled = num / den if den else 0.0
    _, hw = _mean_and_halfwidth([r.fraction_waiting_at_least(k, censor_conservative) for r in results])
    return pooled, hw


def sweep_fleet(
    config: SimConfig,
    m_values: Sequence[int],
    k_values: Sequence[int],
    censor_conservative: bool = False,
) -> list[SweepRow]:
    """Exceedance fraction for every (M, k) pair.

    A request counts as failing when it was not served within ``k`` extra
    days, i.e. it waited ``k + 1`` or more; with ``k = 0`` that is every
    request not served on the morning after it was made.

    Arrivals for replicate ``i`` depend only on the seed, so every fleet size
    sees the same demand (common random numbers) and the curve in ``M`` is
    free of between-run noise.
    """
    logs = [draw_arrivals(config, i) for i in range(config.replications)]
    rows = []
    for m in m_values:
        if not (0 <= m <= config.scenario.n_users):
            raise InvalidInputError(f"fleet size {m} outside [0, N]")
        results = [run_queue(m, arr) for arr in logs]
        for k in k_values:
            frac, hw = summarize(results, k + 1, censor_conservative)
            rows.append(SweepRow(m, k, frac, config.replications, hw))
    return rows


def queue_exceedance(results: Sequence[SimulationResult], m: int, k: int) -> tuple[float, float]:
    """Pooled share of simulated days with X_n > kM and its 99% CI half-width
    (from per-replicate frequencies, which absorbs day-to-day correlation)."""
    per_rep = [r.days_exceeding(k, m) / len(r.queue_trajectory) for r in results]
    total_days = sum(len(r.queue_trajectory) for r in results)
    pooled = sum(r.days_exceeding(k, m) for r in results) / total_days
    _, hw = _mean_and_halfwidth(per_rep)
    return pooled, hw


# --- exhaustive oracle ------------------------------------------------------


@dataclass
class OracleResult:
    n: int
    p: float
    m: int
    horizon: int
    pmf: np.ndarray  # exact law of X_horizon via the recursion
    pmf_max_form: np.ndarray  # same law via max{0, C_1, ..., C_{h-1}} + A_h
    max_abs_diff: float

    def prob_exceeds(self, threshold: int) -> float:
        return float(self.pmf[threshold + 1:].sum())


def lindley_oracle(n: int, p: float, m: int, horizon: int, tol: float = 1e-12) -> OracleResult:
    """Exact distribution of the end-of-day queue ``X_horizon`` by brute force.

    All ``(n+1)**horizon`` arrival sequences are enumerated with their
    binomial weights.  The law is computed twice: by pushing each sequence
    through ``X_{j+1} = max(0, X_j - m) + A_{j+1}`` from an empty queue, and
    by the random-walk form ``max(0, C_1, ..., C_{h-1}) + A_h`` where
    ``C_j = sum_{i<=j} (A_i - m)``.  The two agree in distribution though not
    path by path; a mismatch above ``tol`` raises AssertionError.
    """
    if n > ORACLE_MAX_USERS or horizon > ORACLE_MAX_HORIZON:
        raise OracleSizeError(
            f"oracle limited to n <= {ORACLE_MAX_USERS} and horizon <= {ORACLE_MAX_HORIZON}"
        )
    if n < 1 or horizon < 1 or m < 0 or not (0.0 <= p <= 1.0):
        raise InvalidInputError("oracle needs n >= 1, horizon >= 1, m >= 0, p in [0,1]")

    pmf_a = binom.pmf(np.arange(n + 1), n, p)
    grids = np.meshgrid(*([np.arange(n + 1, dtype=np.int64)] * horizon), indexing="ij")
    seqs = [g.ravel() for g in grids]
    weight = np.ones(seqs[0].size)
    for a in seqs:
        weight = weight * pmf_a[a]

    x = seqs[0].copy()
    for a in seqs[1:]:
        x = np.maximum(x - m, 0) + a

    walk = np.zeros_like(x)
    running = np.zeros_like(x)
    for a in seqs[:-1]:
        running = running + (a - m)
        walk = np.maximum(walk, running)
    x_alt = walk + seqs[-1]

    size = n * horizon + 1
    pmf = np.bincount(x, weights=weight, minlength=size)
    pmf_alt = np.bincount(x_alt, weights=weight, minlength=size)
    diff = float(np.max(np.abs(pmf - pmf_alt)))
    if diff > tol:
        raise AssertionError(f"recursion and max-representation laws differ by {diff:.3e}")
    return OracleResult(n, p, m, horizon, pmf, pmf_alt, diff)

