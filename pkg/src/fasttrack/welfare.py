"""Individual choices under each regime and who gains from the fast track.

Scalar functions (``choose_priority``, ``regime_utilities``...) compare the
utilities of the options literally. The ``*_array`` variants classify whole
populations at once by working with surpluses over the outside option
(``theta - c1`` for the free line, ``theta - g(y)`` for the fast track),
which is what the grid and Monte Carlo checks use. Tests cross-check the
two routes against each other.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .equilibrium import (
    Boundary,
    PrioritySystem,
    Threshold,
    Thresholds,
    boundary_crossing,
    priority_boundary,
    thresholds as compute_thresholds,
)
from .model import (
    Agent,
    UtilityParams,
    ValueFunction,
    utility_free_queue,
    utility_outside,
    utility_paid_queue,
)

EPS_CMP = 1e-12
EPS_BAND = 1e-6


class Choice(enum.IntEnum):
    ABSTAIN = 0
    FREE_QUEUE = 1
    PAID_QUEUE = 2


class Comparison(enum.IntEnum):
    """Priority-regime utility relative to the single queue."""

    STRICT_LOSS = -1
    INDIFFERENT = 0
    STRICT_GAIN = 1


@dataclass(frozen=True)
class RegimeComparison:
    label: Comparison
    single_utility: float
    priority_utility: float


def _label(diff, eps=EPS_CMP):
    return np.where(diff > eps, 1, np.where(diff < -eps, -1, 0))


def choose_single(agent: Agent, c: float) -> Choice:
    return Choice.FREE_QUEUE if agent.theta >= c else Choice.ABSTAIN


def choose_priority(
    agent: Agent, v: ValueFunction, system: PrioritySystem, params: UtilityParams = UtilityParams()
) -> Choice:
    """Utility-maximising option; exact ties go PaidQueue > FreeQueue > Abstain."""
    if system.is_collapsed:
        return choose_single(agent, system.c1)
    options = [(Choice.ABSTAIN, utility_outside(v, agent.y, params))]
    options.append((Choice.FREE_QUEUE, utility_free_queue(v, agent, params, system.c1)))
    if agent.y >= system.p:
        options.append((Choice.PAID_QUEUE, utility_paid_queue(v, agent, params, system.c2, system.p)))
    best = max(u for _, u in options)
    return max(choice for choice, u in options if u >= best - EPS_CMP)


def regime_utilities(
    agent: Agent, v: ValueFunction, params: UtilityParams, c: float, system: PrioritySystem
) -> tuple:
    """Best attainable utility under (single queue at ``c``, ``system``)."""
    u0 = utility_outside(v, agent.y, params)
    single = max(u0, utility_free_queue(v, agent, params, c))
    if system.is_collapsed:
        return single, max(u0, utility_free_queue(v, agent, params, system.c1))
    priority = max(u0, utility_free_queue(v, agent, params, system.c1))
    if agent.y >= system.p:
        priority = max(priority, utility_paid_queue(v, agent, params, system.c2, system.p))
    return single, priority


def compare_regimes(
    agent: Agent, v: ValueFunction, params: UtilityParams, c: float, system: PrioritySystem
) -> RegimeComparison:
    single, priority = regime_utilities(agent, v, params, c, system)
    return RegimeComparison(Comparison(int(_label(priority - single))), single, priority)


def choose_single_array(theta, c: float) -> np.ndarray:
    return np.where(np.asarray(theta) >= c, Choice.FREE_QUEUE, Choice.ABSTAIN).astype(np.int8)


def choose_priority_array(y, theta, boundary: Boundary, c1: float, collapsed: bool = False) -> np.ndarray:
    if collapsed:
        return choose_single_array(theta, c1)
    theta = np.asarray(theta, dtype=float)
    gain_paid = theta - boundary.raw(y)
    gain_free = theta - c1
    best = np.maximum(0.0, np.maximum(gain_free, gain_paid))
    return np.where(
        gain_paid >= best - EPS_CMP,
        Choice.PAID_QUEUE,
        np.where(gain_free >= best - EPS_CMP, Choice.FREE_QUEUE, Choice.ABSTAIN),
    ).astype(np.int8)


def compare_array(y, theta, boundary: Boundary, c1: float, c: float, collapsed: bool = False) -> np.ndarray:
    """Comparison labels (-1, 0, 1) for whole populations."""
    theta = np.asarray(theta, dtype=float)
    single = np.maximum(0.0, theta - c)
    priority = np.maximum(0.0, theta - c1)
    if not collapsed:
        priority = np.maximum(priority, theta - boundary.raw(y))
    return _label(priority - single).astype(np.int8)


BANDS = ("low", "middle", "high")


@dataclass(frozen=True)
class Violation:
    y: float
    theta: float
    band: str
    choice: Choice
    label: Comparison

    def as_dict(self) -> dict:
        return {
            "y": self.y,
            "theta": self.theta,
            "band": self.band,
            "choice": self.choice.name,
            "label": self.label.name,
        }


def band_codes(y, y_lower: float, y_upper: float, eps_band: float = EPS_BAND) -> np.ndarray:
    """0/1/2 for low/middle/high income, -1 within ``eps_band`` of a threshold."""
    y = np.asarray(y, dtype=float)
    code = np.full(y.shape, -1, dtype=np.int8)
    code[y < y_lower - eps_band] = 0
    code[(y > y_lower + eps_band) & (y < y_upper - eps_band)] = 1
    code[y > y_upper + eps_band] = 2
    return code


# allowed (labels, choices) per band
_PREDICATES = {
    0: ({-1, 0}, {Choice.FREE_QUEUE, Choice.ABSTAIN}),
    1: ({-1, 0}, {Choice.PAID_QUEUE, Choice.ABSTAIN}),
    2: ({1, 0}, {Choice.PAID_QUEUE, Choice.ABSTAIN}),
}


def band_violations(y, theta, choices, labels, y_lower: float, y_upper: float, eps_band: float = EPS_BAND) -> list:
    """Agents whose choice or regime comparison contradicts their income band."""
    y = np.asarray(y, dtype=float)
    theta = np.asarray(theta, dtype=float)
    bands = band_codes(y, y_lower, y_upper, eps_band)
    bad = np.zeros(y.shape, dtype=bool)
    for code, (ok_labels, ok_choices) in _PREDICATES.items():
        in_band = bands == code
        bad |= in_band & ~(np.isin(labels, list(ok_labels)) & np.isin(choices, [int(c) for c in ok_choices]))
    return [
        Violation(float(y[i]), float(theta[i]), BANDS[bands[i]], Choice(int(choices[i])), Comparison(int(labels[i])))
        for i in np.flatnonzero(bad)
    ]


@dataclass
class WelfareReport:
    thresholds: Thresholds
    resolution: int
    counts: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)
    # middle-band agents who use the fast track yet strictly prefer the single queue
    middle_paid_losers: int = 0
    notice: Optional[str] = None

    @property
    def passed(self) -> bool:
        return not self.violations

    def rows(self):
        """(band, gain, loss, indifferent) count rows in a fixed order."""
        for band in (*BANDS, "excluded"):
            cnt = self.counts.get(band, {})
            yield band, cnt.get(1, 0), cnt.get(-1, 0), cnt.get(0, 0)


def _tally(bands, labels):
    counts = {}
    for code, name in ((0, "low"), (1, "middle"), (2, "high"), (-1, "excluded")):
        sel = labels[bands == code]
        counts[name] = {lab: int(np.count_nonzero(sel == lab)) for lab in (1, -1, 0)}
    return counts


def verify_income_bands(
    v: ValueFunction,
    params: UtilityParams,
    c: float,
    system: PrioritySystem,
    n: int = 200,
    *,
    thresholds: Optional[Thresholds] = None,
    eps_band: float = EPS_BAND,
) -> WelfareReport:
    """Check the three income bands on an ``n`` x ``n`` grid of agents.

    Pass ``thresholds`` to override the computed ones (used as a negative
    control).
    """
    if n < 2:
        raise ValueError(f"grid resolution must be >= 2, got {n}")
    th = thresholds if thresholds is not None else compute_thresholds(v, system, c)
    axis = np.linspace(0.0, 1.0, n)
    y, theta = (a.ravel() for a in np.meshgrid(axis, axis, indexing="ij"))
    boundary = priority_boundary(v, system)
    choices = choose_priority_array(y, theta, boundary, system.c1, system.is_collapsed)
    labels = compare_array(y, theta, boundary, system.c1, c, system.is_collapsed)

    y_upper = th.y_upper.value if th.y_upper is not None else 1.0
    bands = band_codes(y, th.y_lower.value, y_upper, eps_band)
    report = WelfareReport(th, n, counts=_tally(bands, labels))
    if system.is_collapsed or th.y_upper is None:
        report.notice = "degenerate partition: regimes coincide or c < c2, band checks skipped"
        return report
    if not th.interior:
        # a clamped threshold still splits incomes correctly; keep checking
        report.notice = (
            f"threshold on boundary: y_lower {th.y_lower.status.value}, "
            f"y_upper {th.y_upper.status.value}"
        )
    report.violations = band_violations(y, theta, choices, labels, th.y_lower.value, y_upper, eps_band)
    report.middle_paid_losers = int(
        np.count_nonzero((bands == 1) & (choices == Choice.PAID_QUEUE) & (labels == -1))
    )
    return report


@dataclass
class Geometry:
    """Boundary polylines in (theta, y) plus the labelled points P and P'."""

    curves: dict = field(default_factory=dict)
    points: dict = field(default_factory=dict)
    notices: list = field(default_factory=list)


def region_geometry(boundary: Boundary, c1: float, c: Optional[float], resolution: int = 200) -> Geometry:
    """Sample the allocation-region boundaries.

    Curves: ``theta=c``, ``theta=c1`` (vertical lines) and ``theta=g(y)``
    sampled on ``[max(y_min, y at which g = 1), 1]``. Points: ``P`` where
    ``g`` meets ``c1`` and ``P'`` where it meets ``c``; a point is omitted
    with a notice when the crossing is not interior.
    """
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    geo = Geometry()
    if c is not None:
        geo.curves["theta_c"] = (np.array([0.0, 1.0]), np.array([c, c]))
    geo.curves["theta_c1"] = (np.array([0.0, 1.0]), np.array([c1, c1]))
    start = boundary_crossing(boundary, 1.0).value
    ys = np.linspace(start, 1.0, resolution)
    geo.curves[boundary.label] = (ys, boundary.raw(ys))

    for name, level in (("P", c1), ("P'", c)):
        if level is None:
            continue
        cross = boundary_crossing(boundary, level)
        if cross.interior:
            geo.points[name] = (level, cross.value)
        else:
            geo.notices.append(f"{name} omitted: crossing of theta={level} is {cross.status.value}")
    return geo
