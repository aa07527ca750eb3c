"""Finite-population Monte Carlo checks that never touch the quadrature path.

A population is a seeded i.i.d. sample from a distribution. Masses become
counts, clearing costs become order statistics, and the welfare bands are
checked agent by agent with the same predicates as the grid verifier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .distributions import JointDistribution
from .equilibrium import Boundary, PrioritySystem, Thresholds, priority_boundary
from .errors import CapacityError, DomainError
from .model import Agent, UtilityParams, ValueFunction
from .welfare import (
    Choice,
    band_violations,
    choose_priority_array,
    choose_single_array,
    compare_array,
)


@dataclass(frozen=True)
class Population:
    y: np.ndarray = field(repr=False)
    theta: np.ndarray = field(repr=False)
    seed: Optional[int] = None
    descriptor: dict = field(default_factory=dict)

    def __post_init__(self):
        for arr in (self.y, self.theta):
            arr.setflags(write=False)
            if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
                raise DomainError("population agents must lie in the unit square")

    @classmethod
    def from_arrays(cls, y, theta, **kw) -> "Population":
        return cls(np.array(y, dtype=float), np.array(theta, dtype=float), **kw)

    def __len__(self):
        return len(self.y)

    def __getitem__(self, i) -> Agent:
        return Agent(float(self.y[i]), float(self.theta[i]))

    def agents(self):
        for i in range(len(self)):
            yield self[i]


def sample_population(dist: JointDistribution, n: int, seed: int) -> Population:
    y, theta = dist.sample(n, seed)
    return Population(y, theta, seed=seed, descriptor=dist.descriptor())


@dataclass(frozen=True)
class SimulationResult:
    n: int
    counts: dict
    served_fraction: float
    standard_error: float
    # rows: income deciles (poorest first); columns: Choice codes 0..2
    decile_histogram: np.ndarray = field(repr=False)

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "counts": {c.name: self.counts[c] for c in Choice},
            "served_fraction": self.served_fraction,
            "standard_error": self.standard_error,
            "decile_histogram": self.decile_histogram.tolist(),
        }


def _summarise(pop: Population, choices: np.ndarray) -> SimulationResult:
    n = len(pop)
    counts = {c: int(np.count_nonzero(choices == c)) for c in Choice}
    served = (counts[Choice.FREE_QUEUE] + counts[Choice.PAID_QUEUE]) / n
    se = math.sqrt(served * (1.0 - served) / n)
    ranks = np.empty(n, dtype=np.int64)
    ranks[np.argsort(pop.y, kind="stable")] = np.arange(n)
    decile = ranks * 10 // n
    hist = np.zeros((10, len(Choice)), dtype=np.int64)
    np.add.at(hist, (decile, choices.astype(np.int64)), 1)
    return SimulationResult(n, counts, served, se, hist)


def simulate_boundary(pop: Population, boundary: Boundary, c1: float) -> SimulationResult:
    """Choices when the fast track is entered above ``boundary`` and the free line costs ``c1``."""
    return _summarise(pop, choose_priority_array(pop.y, pop.theta, boundary, c1))


def simulate_regime(
    pop: Population,
    v: ValueFunction,
    params: UtilityParams,
    regime: Union[float, PrioritySystem],
) -> SimulationResult:
    """Apply each agent's optimal choice under a single queue (``regime`` a
    float cost) or a priority system, and aggregate."""
    if len(pop) == 0:
        raise DomainError("empty population")
    if isinstance(regime, PrioritySystem):
        boundary = priority_boundary(v, regime)
        choices = choose_priority_array(pop.y, pop.theta, boundary, regime.c1, regime.is_collapsed)
    else:
        choices = choose_single_array(pop.theta, float(regime))
    return _summarise(pop, choices)


def _order_stat(values: np.ndarray, rho: float) -> tuple:
    """Value at which the top ``ceil(rho n)`` entries are retained, plus a
    distribution-free 3-standard-error interval from binomial order ranks."""
    n = len(values)
    s = np.sort(values)
    k = max(1, min(n, math.ceil(rho * n - 1e-9)))
    spread = 3.0 * math.sqrt(n * rho * (1.0 - rho))
    lo = s[max(0, n - k - math.ceil(spread))]
    hi = s[min(n - 1, n - k + math.ceil(spread))]
    return float(s[n - k]), (float(lo), float(hi))


def empirical_single_cost(pop: Population, rho: float, *, with_interval: bool = False):
    """Largest waiting cost that still lets ``ceil(rho n)`` agents through."""
    if len(pop) == 0:
        raise DomainError("empty population")
    if not 0.0 < rho < 1.0:
        raise CapacityError(f"capacity rho must lie in (0, 1), got {rho!r}")
    value, interval = _order_stat(np.asarray(pop.theta), rho)
    return (value, interval) if with_interval else value


def reservation_prices(pop: Population, v: ValueFunction) -> np.ndarray:
    """Highest price each agent would pay for the fast track at zero wait.

    Solves ``v(y) - v(y - r) = theta`` through the inverse of ``v``; agents
    whose valuation exceeds ``v(y) - v(0)`` would pay their whole income.
    """
    y, theta = np.asarray(pop.y), np.asarray(pop.theta)
    target = np.asarray(v.func(y), dtype=float) - theta
    v0 = float(v.func(0.0))
    keep = np.asarray(v.inverse(np.maximum(target, v0)), dtype=float)
    return np.where(target <= v0, y, np.clip(y - keep, 0.0, y))


def empirical_pure_price(pop: Population, v: ValueFunction, rho: float, *, with_interval: bool = False):
    """Price that clears the pure price system (c1 = 1, c2 = 0) in the sample."""
    if not 0.0 < rho < 1.0:
        raise CapacityError(f"capacity rho must lie in (0, 1), got {rho!r}")
    value, interval = _order_stat(reservation_prices(pop, v), rho)
    return (value, interval) if with_interval else value


def empirical_band_violations(
    pop: Population,
    v: ValueFunction,
    params: UtilityParams,
    c: float,
    system: PrioritySystem,
    thresholds: Thresholds,
    *,
    eps_band: float = 1e-6,
) -> list:
    """Sampled agents that break the income-band predicates."""
    if system.is_collapsed or thresholds.y_upper is None:
        return []
    boundary = priority_boundary(v, system)
    choices = choose_priority_array(pop.y, pop.theta, boundary, system.c1)
    labels = compare_array(pop.y, pop.theta, boundary, system.c1, c)
    return band_violations(
        pop.y, pop.theta, choices, labels, thresholds.y_lower.value, thresholds.y_upper.value, eps_band
    )
