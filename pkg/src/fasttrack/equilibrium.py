"""Market-clearing waiting costs and prices for the two allocation regimes.

Single queue: the waiting cost ``c`` solves ``P(theta >= c) = rho``.

Priority system ``(c1, c2, p)``: an agent who can afford ``p`` joins the
fast track when ``theta >= g(y) = theta*(y, p) + c2`` and ``g(y) <= c1``;
everyone else joins the free line when ``theta >= c1``. ``g`` is
nonincreasing in income, so the fast track is used exactly above the
income ``y_lower`` where ``g`` crosses ``c1``. Served mass is

    int_{y_lower}^1 P(theta >= g(y) | y) dF_y + int_0^{y_lower} P(theta >= c1 | y) dF_y

Any two of ``(c1, c2, p)`` pin down the third through bisection on this
monotone mass.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .distributions import JointDistribution
from .errors import (
    AffordabilityError,
    CapacityError,
    DegenerateSystemError,
    DomainError,
    InfeasibleError,
    NumericalError,
    UnsupportedDistributionError,
)
from .model import ValueFunction, _check_unit
from .numerics import bisect

XTOL = 1e-9
FTOL = 1e-8
SINGLE_FTOL = 1e-9
MAX_ITER = 200


@dataclass(frozen=True)
class SingleQueueEquilibrium:
    c: float
    rho: float
    residual: float
    iterations: int


@dataclass(frozen=True)
class PrioritySystem:
    """Transfer vector of the priority regime.

    ``c2 < c1`` is enforced. The single-queue limit ``c1 == c2, p == 0`` is
    only available through :meth:`collapsed`, in which case both lines are
    the same queue.
    """

    c1: float
    c2: float
    p: float
    is_collapsed: bool = False

    def __post_init__(self):
        for name in ("c1", "c2", "p"):
            _check_unit(name, getattr(self, name))
        if self.is_collapsed:
            if self.c1 != self.c2 or self.p != 0.0:
                raise DegenerateSystemError("a collapsed system needs c1 == c2 and p == 0")
        elif not self.c2 < self.c1:
            raise DegenerateSystemError(
                f"fast-track wait c2={self.c2} must be shorter than free wait c1={self.c1}"
            )

    @classmethod
    def collapsed(cls, c: float) -> "PrioritySystem":
        return cls(c, c, 0.0, is_collapsed=True)

    @classmethod
    def pure_price(cls, p: float) -> "PrioritySystem":
        return cls(1.0, 0.0, p)

    def as_dict(self) -> dict:
        return {"c1": self.c1, "c2": self.c2, "p": self.p, "collapsed": self.is_collapsed}


@dataclass(frozen=True)
class Boundary:
    """Nonincreasing valuation threshold ``g(y)`` for joining the fast track.

    ``raw`` is vectorised, unclipped and returns +inf below ``y_min`` (where
    the price is unaffordable). Calling the boundary on a scalar returns
    ``g(y)`` clipped to [0, 1] and raises AffordabilityError below ``y_min``.
    """

    func: Callable = field(repr=False)
    y_min: float = 0.0
    label: str = "boundary"

    def raw(self, y):
        y = np.asarray(y, dtype=float)
        safe = np.maximum(y, self.y_min)
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.asarray(self.func(safe), dtype=float)
        out = np.where(y >= self.y_min, g, np.inf)
        return float(out) if out.ndim == 0 else out

    def __call__(self, y):
        if np.any(np.asarray(y) < self.y_min):
            raise AffordabilityError(f"income {y!r} is below the price {self.y_min}")
        return np.clip(self.raw(y), 0.0, 1.0) if np.ndim(y) else min(1.0, max(0.0, self.raw(y)))


def priority_boundary(v: ValueFunction, system: PrioritySystem) -> Boundary:
    """``g(y) = v(y) - v(y - p) + c2`` for incomes ``y >= p``."""
    p, c2, f = system.p, system.c2, v.func
    return Boundary(lambda y: f(y) - f(y - p) + c2, y_min=p, label="paid")


def inverse_square_boundary(scale: float = 0.35) -> Boundary:
    """Geometric fixture ``y = scale / theta**2``, i.e. ``g(y) = sqrt(scale / y)``."""
    return Boundary(lambda y: np.sqrt(scale / y), y_min=0.0, label="inverse-square")


class ThresholdStatus(enum.Enum):
    INTERIOR = "interior"
    # boundary already at or below the level at the poorest paying income
    AT_LOWER = "at-lower"
    # boundary above the level even at income 1
    AT_UPPER = "at-upper"


@dataclass(frozen=True)
class Threshold:
    value: float
    status: ThresholdStatus

    @property
    def interior(self) -> bool:
        return self.status is ThresholdStatus.INTERIOR

    def as_dict(self) -> dict:
        return {"value": self.value, "status": self.status.value}


@dataclass(frozen=True)
class Thresholds:
    y_lower: Threshold
    y_upper: Optional[Threshold] = None

    @property
    def interior(self) -> bool:
        return self.y_lower.interior and self.y_upper is not None and self.y_upper.interior


def boundary_crossing(boundary: Boundary, level: float) -> Threshold:
    """Income at which ``boundary`` falls to ``level``, to machine precision."""
    lo, hi = boundary.y_min, 1.0
    if boundary.raw(lo) <= level:
        return Threshold(lo, ThresholdStatus.AT_LOWER)
    if boundary.raw(hi) > level:
        return Threshold(hi, ThresholdStatus.AT_UPPER)
    res = bisect(lambda y: boundary.raw(y) - level, lo, hi, xtol=0.0, ftol=0.0, max_iter=MAX_ITER)
    return Threshold(res.x, ThresholdStatus.INTERIOR)


def y_lower_threshold(v: ValueFunction, system: PrioritySystem) -> Threshold:
    """Income where the fast and free lines tie: ``theta*(y, p) = c1 - c2``."""
    return boundary_crossing(priority_boundary(v, system), system.c1)


def y_upper_threshold(v: ValueFunction, system: PrioritySystem, c: float) -> Threshold:
    """Income where the fast track ties with a single queue at cost ``c``."""
    _check_unit("single-queue cost c", c)
    if c < system.c2:
        raise DomainError(f"single-queue cost c={c} is below the fast-track wait c2={system.c2}")
    return boundary_crossing(priority_boundary(v, system), c)


def thresholds(v: ValueFunction, system: PrioritySystem, c: Optional[float] = None) -> Thresholds:
    upper = None
    if c is not None and c >= system.c2:
        upper = y_upper_threshold(v, system, c)
    return Thresholds(y_lower_threshold(v, system), upper)


def tail_mass(dist: JointDistribution, c: float) -> float:
    _check_unit("waiting cost c", c)
    return dist.tail_mass(c)


def solve_single_queue(
    dist: JointDistribution, rho: float, *, xtol: float = XTOL, ftol: float = SINGLE_FTOL
) -> SingleQueueEquilibrium:
    """Waiting cost ``c`` with ``P(theta >= c) = rho``."""
    if not 0.0 < rho < 1.0:
        raise CapacityError(f"capacity rho must lie in (0, 1), got {rho!r}")
    res = bisect(lambda c: dist.tail_mass(c) - rho, 0.0, 1.0, xtol=xtol, ftol=ftol, max_iter=MAX_ITER)
    if not res.converged:
        raise UnsupportedDistributionError(
            f"served mass jumps across rho={rho} near c={res.x:.9g} (atom in F?)"
        )
    return SingleQueueEquilibrium(res.x, rho, abs(res.residual), res.iterations)


@dataclass(frozen=True)
class ServedMass:
    paid: float
    free: float

    @property
    def total(self) -> float:
        return self.paid + self.free


def boundary_masses(dist: JointDistribution, boundary: Boundary, c1: float) -> ServedMass:
    """Fast-track and free-line mass for a boundary and free-line cost ``c1``."""
    y_low = boundary_crossing(boundary, c1).value
    paid = dist.mixed_mass(y_low, 1.0, boundary.raw)
    free = dist.mixed_mass(0.0, y_low, lambda y: np.full(np.shape(y), c1))
    return ServedMass(max(0.0, paid), max(0.0, free))


def _masses(dist, v, c1, c2, p) -> ServedMass:
    f = v.func
    boundary = Boundary(lambda y: f(y) - f(y - p) + c2, y_min=p)
    return boundary_masses(dist, boundary, c1)


def priority_masses(dist: JointDistribution, v: ValueFunction, system: PrioritySystem) -> ServedMass:
    if system.is_collapsed:
        return ServedMass(0.0, dist.tail_mass(system.c1))
    return _masses(dist, v, system.c1, system.c2, system.p)


def priority_clearing_mass(dist: JointDistribution, v: ValueFunction, system: PrioritySystem) -> float:
    """Total mass served under ``system``."""
    return priority_masses(dist, v, system).total


VARIABLES = ("c1", "c2", "p")


def solve_priority(
    dist: JointDistribution,
    v: ValueFunction,
    rho: float,
    fixed: dict,
    free: Optional[str] = None,
    *,
    xtol: float = XTOL,
    ftol: float = FTOL,
) -> PrioritySystem:
    """Solve the clearing condition for the one coordinate not in ``fixed``.

    Served mass is nonincreasing in each of ``c1``, ``c2`` and ``p``, so the
    free coordinate is found by bisection over its admissible interval:
    ``[c2, 1]`` for ``c1``, ``[0, c1]`` for ``c2`` and ``[0, 1]`` for ``p``.
    """
    if not 0.0 < rho < 1.0:
        raise CapacityError(f"capacity rho must lie in (0, 1), got {rho!r}")
    unknown = set(fixed) - set(VARIABLES)
    if unknown:
        raise DomainError(f"unknown coordinates {sorted(unknown)}")
    if len(fixed) != 2:
        raise DomainError(f"exactly two of c1, c2, p must be fixed, got {sorted(fixed)}")
    missing = next(name for name in VARIABLES if name not in fixed)
    if free is not None and free != missing:
        raise DomainError(f"free variable {free!r} conflicts with fixed {sorted(fixed)}")
    free = missing
    vals = {k: float(x) for k, x in fixed.items()}
    for k, x in vals.items():
        _check_unit(k, x)
    if "c1" in vals and "c2" in vals and not vals["c2"] < vals["c1"]:
        raise DegenerateSystemError(f"c2={vals['c2']} must be below c1={vals['c1']}")

    lo, hi = {"c1": (vals.get("c2"), 1.0), "c2": (0.0, vals.get("c1")), "p": (0.0, 1.0)}[free]

    def mass(x):
        return _masses(dist, v, **{**vals, free: x}).total

    m_lo, m_hi = mass(lo), mass(hi)
    if not (m_hi - ftol <= rho <= m_lo + ftol):
        raise InfeasibleError(
            f"no {free} in [{lo:.9g}, {hi:.9g}] clears rho={rho}: "
            f"achievable mass is [{m_hi:.9g}, {m_lo:.9g}]",
            mass_range=(m_hi, m_lo),
        )
    if free == "c1" and vals["p"] == 0.0:
        # free of charge the fast track absorbs every participant, so c1 is
        # not identified; report the single-queue limit
        return PrioritySystem.collapsed(vals["c2"])
    if abs(m_hi - rho) <= ftol:
        x = hi
    elif abs(m_lo - rho) <= ftol:
        x = lo
    else:
        res = bisect(lambda z: mass(z) - rho, lo, hi, xtol=xtol, ftol=ftol, max_iter=MAX_ITER)
        if not res.converged:
            raise NumericalError(
                f"clearing residual {abs(res.residual):.3g} above {ftol:.3g} after {res.iterations} steps",
                achieved=abs(res.residual),
            )
        x = res.x
    sol = {**vals, free: x}
    if not sol["c2"] < sol["c1"]:
        if sol["p"] == 0.0:
            # with no price both lines are the same queue
            return PrioritySystem.collapsed(sol["c2"])
        raise DegenerateSystemError(f"solution has c2={sol['c2']:.9g} >= c1={sol['c1']:.9g}")
    return PrioritySystem(sol["c1"], sol["c2"], sol["p"])


@dataclass
class SweepPoint:
    c2: float
    p: float
    system: Optional[PrioritySystem] = None
    paid_mass: float = math.nan
    free_mass: float = math.nan
    residual: float = math.nan
    thresholds: Optional[Thresholds] = None
    error: Optional[str] = None

    @property
    def feasible(self) -> bool:
        return self.system is not None


def manifold_sweep(
    dist: JointDistribution,
    v: ValueFunction,
    rho: float,
    grid: Sequence[tuple],
    *,
    single_c: Optional[float] = None,
    ftol: float = FTOL,
) -> list:
    """Solve ``c1`` for each ``(c2, p)`` on ``grid``.

    Infeasible points stay in the output with ``error`` set.
    """
    if not grid:
        raise DomainError("sweep grid is empty")
    if single_c is None:
        single_c = solve_single_queue(dist, rho).c
    out = []
    for c2, p in grid:
        point = SweepPoint(float(c2), float(p))
        try:
            system = solve_priority(dist, v, rho, {"c2": c2, "p": p}, "c1", ftol=ftol)
            split = priority_masses(dist, v, system)
            point.system = system
            point.paid_mass = split.paid
            point.free_mass = split.free
            point.residual = abs(split.total - rho)
            point.thresholds = thresholds(v, system, single_c)
        except (DomainError, NumericalError) as exc:
            point.error = f"{type(exc).__name__}: {exc}"
        out.append(point)
    return out
