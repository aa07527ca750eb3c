"""Agents, income-utility functions and the utilities of each access option.

An agent is a point ``(y, theta)`` in the unit square: income and valuation
of the service. Every option is priced in time (a waiting cost) and,
for the fast-track line, in money. Utilities are

    outside option     v(y) + t
    free queue         v(y) + theta + t - c
    paid queue         v(y - p) + theta + t - c2

with ``t`` the time endowment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import AffordabilityError, DomainError

SHAPE_GRID = 1001
SHAPE_TOL = 1e-12


def _check_unit(name, x):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"{name} must lie in [0, 1], got {x!r}")


@dataclass(frozen=True)
class Agent:
    y: float
    theta: float

    def __post_init__(self):
        _check_unit("income y", self.y)
        _check_unit("valuation theta", self.theta)


@dataclass(frozen=True)
class UtilityParams:
    """Holds the time endowment ``t``.

    It is 1 by default. Other finite values are accepted so callers can
    confirm that ``t`` cancels from every comparison.
    """

    t: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.t):
            raise DomainError(f"time endowment must be finite, got {self.t!r}")


def _sqrt(y):
    return np.sqrt(y)


def _sqrt_inv(u):
    return np.square(u)


def _log1p(y):
    return np.log1p(y)


def _log1p_inv(u):
    return np.expm1(u)


@dataclass(frozen=True)
class ValueFunction:
    """Strictly increasing, strictly concave utility of income on [0, 1].

    Use the constructors :meth:`sqrt`, :meth:`log1p`, :meth:`crra` or
    :meth:`from_callable`. ``inverse`` maps a utility level back to income;
    it is only needed by the Monte Carlo oracle and falls back to bisection
    when absent.
    """

    kind: str
    gamma: Optional[float] = None
    func: Callable = field(default=None, repr=False, compare=False)
    inv: Optional[Callable] = field(default=None, repr=False, compare=False)

    @classmethod
    def sqrt(cls) -> "ValueFunction":
        return cls("sqrt", None, _sqrt, _sqrt_inv)

    @classmethod
    def log1p(cls) -> "ValueFunction":
        return cls("log1p", None, _log1p, _log1p_inv)

    @classmethod
    def crra(cls, gamma: float) -> "ValueFunction":
        """``y**(1-gamma) / (1-gamma)``; finite at 0 because gamma < 1."""
        if not 0.0 < gamma < 1.0:
            raise DomainError(f"CRRA gamma must lie in (0, 1), got {gamma!r}")
        e = 1.0 - gamma
        return cls(
            "crra",
            float(gamma),
            lambda y: np.power(y, e) / e,
            lambda u: np.power(np.maximum(u, 0.0) * e, 1.0 / e),
        )

    @classmethod
    def from_callable(cls, func, inverse=None, name="custom") -> "ValueFunction":
        vf = cls(name, None, func, inverse)
        vf.check_shape()
        return vf

    @classmethod
    def from_descriptor(cls, kind: str, gamma: Optional[float] = None) -> "ValueFunction":
        if kind == "sqrt":
            return cls.sqrt()
        if kind == "log1p":
            return cls.log1p()
        if kind == "crra":
            if gamma is None:
                raise DomainError("CRRA value function needs gamma")
            return cls.crra(gamma)
        raise DomainError(f"unknown value function {kind!r}")

    def __call__(self, y):
        out = self.func(y)
        return float(out) if np.ndim(out) == 0 else out

    def inverse(self, u):
        """Income at which v equals ``u`` (``u`` within [v(0), v(1)])."""
        if self.inv is not None:
            return self.inv(u)
        u = np.asarray(u, dtype=float)
        lo = np.zeros_like(u)
        hi = np.ones_like(u)
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            below = self.func(mid) < u
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    def check_shape(self, n: int = SHAPE_GRID, tol: float = SHAPE_TOL) -> None:
        """Raise DomainError unless v is finite, increasing and concave on a grid."""
        y = np.linspace(0.0, 1.0, n)
        vy = np.asarray(self.func(y), dtype=float)
        if not np.all(np.isfinite(vy)):
            raise DomainError(f"{self.kind}: value function not finite on [0, 1]")
        if np.any(np.diff(vy) <= 0.0):
            raise DomainError(f"{self.kind}: value function not strictly increasing")
        # midpoint concavity on neighbouring grid points
        mid = np.asarray(self.func(0.5 * (y[:-1] + y[1:])), dtype=float)
        chord = 0.5 * (vy[:-1] + vy[1:])
        if np.any(mid - chord <= tol):
            raise DomainError(f"{self.kind}: value function not strictly concave")


def theta_star(v: ValueFunction, y, p):
    """Utility cost of paying ``p`` out of income ``y``: ``v(y) - v(y - p)``."""
    _check_unit("income y", y)
    _check_unit("price p", p)
    if np.any(np.asarray(p) > np.asarray(y)):
        raise AffordabilityError(f"price {p!r} exceeds income {y!r}")
    out = np.asarray(v.func(y), dtype=float) - np.asarray(v.func(np.subtract(y, p)), dtype=float)
    return float(out) if out.ndim == 0 else out


def utility_outside(v: ValueFunction, y: float, params: UtilityParams = UtilityParams()) -> float:
    _check_unit("income y", y)
    return v(y) + params.t


def utility_free_queue(
    v: ValueFunction, agent: Agent, params: UtilityParams, c: float
) -> float:
    _check_unit("waiting cost c", c)
    return v(agent.y) + agent.theta + params.t - c


def utility_paid_queue(
    v: ValueFunction, agent: Agent, params: UtilityParams, c2: float, p: float
) -> float:
    _check_unit("waiting cost c2", c2)
    _check_unit("price p", p)
    if p > agent.y:
        raise AffordabilityError(f"price {p} exceeds income {agent.y}")
    return v(agent.y - p) + agent.theta + params.t - c2
