import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sp_integrate

from fasttrack.distributions import GaussianCopula, IndependentBeta, IndependentUniform
from fasttrack.equilibrium import (
    PrioritySystem,
    ThresholdStatus,
    boundary_crossing,
    boundary_masses,
    inverse_square_boundary,
    manifold_sweep,
    priority_boundary,
    priority_clearing_mass,
    priority_masses,
    solve_priority,
    solve_single_queue,
    tail_mass,
    thresholds,
    y_lower_threshold,
    y_upper_threshold,
)
from fasttrack.errors import (
    AffordabilityError,
    CapacityError,
    DegenerateSystemError,
    DomainError,
    InfeasibleError,
)
from fasttrack.model import ValueFunction, theta_star
from fasttrack.oracle import empirical_pure_price, sample_population, simulate_boundary, simulate_regime

UNIFORM = IndependentUniform()
SQRT = ValueFunction.sqrt()
LOG1P = ValueFunction.log1p()


def test_tail_mass_examples():
    assert tail_mass(UNIFORM, 0.65) == pytest.approx(0.35, abs=1e-15)
    for dist in (UNIFORM, IndependentBeta(2, 3, 2, 5), GaussianCopula(0.4, 2, 2, 3, 1)):
        assert tail_mass(dist, 0.0) == 1.0
    assert tail_mass(IndependentBeta(2, 3, 2, 2), 0.5) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(DomainError):
        tail_mass(UNIFORM, 1.5)


def test_solve_single_queue_examples():
    eq = solve_single_queue(UNIFORM, 0.35)
    assert eq.c == pytest.approx(0.65, abs=1e-9)
    assert eq.residual <= 1e-9
    assert solve_single_queue(UNIFORM, 0.5).c == pytest.approx(0.5, abs=1e-9)
    assert solve_single_queue(IndependentBeta(3, 1, 2, 2), 0.5).c == pytest.approx(0.5, abs=1e-9)
    for rho in (0.0, 1.0, -0.2):
        with pytest.raises(CapacityError):
            solve_single_queue(UNIFORM, rho)


def test_priority_system_invariants():
    with pytest.raises(DegenerateSystemError):
        PrioritySystem(0.5, 0.5, 0.1)
    with pytest.raises(DegenerateSystemError):
        PrioritySystem(0.4, 0.5, 0.1)
    with pytest.raises(DomainError):
        PrioritySystem(0.8, 0.1, 1.2)
    s = PrioritySystem.collapsed(0.65)
    assert s.c1 == s.c2 == 0.65 and s.p == 0.0 and s.is_collapsed
    with pytest.raises(DegenerateSystemError):
        PrioritySystem(0.6, 0.6, 0.1, is_collapsed=True)
    assert PrioritySystem.pure_price(0.3) == PrioritySystem(1.0, 0.0, 0.3)


def test_priority_boundary_examples():
    g = priority_boundary(SQRT, PrioritySystem(0.8, 0.1, 0.09))
    assert g(0.25) == pytest.approx(0.2, abs=1e-15)
    assert g(1.0) == pytest.approx(1 - math.sqrt(0.91) + 0.1, abs=1e-15)
    assert g(1.0) == pytest.approx(0.1461, abs=1e-4)
    assert priority_boundary(LOG1P, PrioritySystem(0.9, 0.3, 0.0))(0.8) == 0.3
    with pytest.raises(AffordabilityError):
        g(0.05)
    ys = np.linspace(0.09, 1.0, 50)
    vals = g(ys)
    assert np.all(np.diff(vals) <= 0) and np.all(vals >= 0.1)


def test_boundary_is_clipped_to_unit_interval():
    g = priority_boundary(SQRT, PrioritySystem(0.95, 0.9, 0.5))
    assert g.raw(0.5) > 1.0
    assert g(0.5) == 1.0


def test_y_lower_threshold_examples():
    th = y_lower_threshold(SQRT, PrioritySystem(0.8, 0.7, 0.09))
    assert th.status is ThresholdStatus.INTERIOR
    assert th.value == pytest.approx(0.25, abs=1e-14)
    th0 = y_lower_threshold(LOG1P, PrioritySystem(0.8, 0.3, 0.0))
    assert th0.status is ThresholdStatus.AT_LOWER
    # nobody pays when even the richest find the price too costly
    th_hi = y_lower_threshold(SQRT, PrioritySystem(0.3, 0.25, 0.9))
    assert th_hi.status is ThresholdStatus.AT_UPPER and th_hi.value == 1.0


def test_inverse_square_fixture_thresholds():
    b = inverse_square_boundary(0.35)
    lower = boundary_crossing(b, 0.8)
    upper = boundary_crossing(b, 0.65)
    assert lower.value == pytest.approx(0.35 / 0.8**2, abs=1e-15)  # 0.546875
    assert lower.value == pytest.approx(0.5468, abs=1e-4)
    assert upper.value == pytest.approx(0.35 / 0.65**2, abs=1e-15)
    assert upper.value == pytest.approx(0.8284, abs=1e-4)


def test_y_upper_threshold_examples():
    th = y_upper_threshold(SQRT, PrioritySystem(0.8, 0.65, 0.09), 0.75)
    assert th.status is ThresholdStatus.INTERIOR
    assert th.value == pytest.approx(0.25, abs=1e-14)
    # c == c2 with p = 0: theta* is identically 0 = target, every participant prefers paying
    flat = y_upper_threshold(SQRT, PrioritySystem(0.8, 0.5, 0.0), 0.5)
    assert flat.status is ThresholdStatus.AT_LOWER
    with pytest.raises(DomainError):
        y_upper_threshold(SQRT, PrioritySystem(0.8, 0.5, 0.1), 0.4)


def test_regime_collapse_mass_equals_tail():
    for c in (0.2, 0.65, 0.9):
        assert priority_clearing_mass(UNIFORM, SQRT, PrioritySystem.collapsed(c)) == pytest.approx(
            tail_mass(UNIFORM, c), abs=1e-12
        )


def test_pure_price_clearing_against_reservation_price_quantile():
    system = solve_priority(UNIFORM, SQRT, 0.35, {"c1": 1.0, "c2": 0.0}, "p")
    assert 0.0 < system.p < 1.0
    split = priority_masses(UNIFORM, SQRT, system)
    assert split.free == pytest.approx(0.0, abs=1e-12)
    assert split.paid == pytest.approx(0.35, abs=1e-8)
    pop = sample_population(UNIFORM, 1_000_000, seed=5)
    p_emp, (lo, hi) = empirical_pure_price(pop, SQRT, 0.35, with_interval=True)
    assert lo <= system.p <= hi


def test_clearing_mass_matches_quadpack_oracle():
    # uniform F: paid mass is int_{y_lower}^1 (1 - g(y)) dy, free mass y_lower (1 - c1)
    system = PrioritySystem(0.8, 0.3, 0.3)
    yl = y_lower_threshold(SQRT, system).value
    paid_ref, _ = sp_integrate.quad(lambda y: 1 - (math.sqrt(y) - math.sqrt(y - 0.3) + 0.3), yl, 1, epsabs=1e-13)
    split = priority_masses(UNIFORM, SQRT, system)
    assert split.paid == pytest.approx(paid_ref, abs=1e-10)
    assert split.free == pytest.approx(yl * 0.2, abs=1e-12)


def test_clearing_mass_matches_monte_carlo():
    n = 1_000_000
    for dist, system in [
        (UNIFORM, PrioritySystem(0.8, 0.1, 0.09)),
        (GaussianCopula(0.5, 2, 2, 2, 2), PrioritySystem(0.7, 0.3, 0.35)),
        (IndependentBeta(2, 3, 2, 2), PrioritySystem(0.75, 0.2, 0.25)),
    ]:
        m = priority_clearing_mass(dist, SQRT, system)
        sim = simulate_regime(sample_population(dist, n, seed=17), SQRT, None, system)
        assert abs(sim.served_fraction - m) <= 3 * math.sqrt(m * (1 - m) / n), (dist, system)


def test_figure_fixture_is_not_market_clearing():
    split = boundary_masses(UNIFORM, inverse_square_boundary(0.35), 0.8)
    # closed form: 0.453125 - 2 sqrt(0.35) (1 - sqrt(0.546875)) + 0.546875 * 0.2
    exact = 0.453125 - 2 * math.sqrt(0.35) * (1 - math.sqrt(0.546875)) + 0.546875 * 0.2
    assert split.total == pytest.approx(exact, abs=1e-10)
    assert split.total == pytest.approx(0.254, abs=1e-3)


def test_solve_priority_collapse_limit():
    # p = 0: mass is P(theta >= c2); solving c2 with c1 = c + eps pushes both to c
    for eps in (1e-2, 1e-3, 1e-4):
        s = solve_priority(UNIFORM, SQRT, 0.35, {"c1": 0.65 + eps, "p": 0.0}, "c2")
        assert s.c2 == pytest.approx(0.65, abs=1e-8)
        assert s.c1 - 0.65 == pytest.approx(eps)
    # solving c1 at p = 0 is unidentified; c2 = c returns the collapsed system
    s = solve_priority(UNIFORM, SQRT, 0.35, {"c2": 0.65, "p": 0.0}, "c1")
    assert s.is_collapsed and s.c1 == 0.65


def test_solve_priority_infeasible_spec_point_reports_range():
    # c2 = 0.1, p = 0.09 is too cheap: the fast track alone serves ~0.749 even at c1 = 1
    with pytest.raises(InfeasibleError) as info:
        solve_priority(UNIFORM, SQRT, 0.35, {"c2": 0.1, "p": 0.09}, "c1")
    lo, hi = info.value.mass_range
    assert lo == pytest.approx(0.749, abs=1e-3) and hi == pytest.approx(0.9, abs=1e-9)
    assert "achievable mass" in str(info.value)


def test_solve_priority_free_c1_has_c1_above_single_cost():
    s = solve_priority(UNIFORM, SQRT, 0.35, {"c2": 0.38, "p": 0.36}, "c1")
    assert abs(priority_clearing_mass(UNIFORM, SQRT, s) - 0.35) <= 1e-8
    assert s.c1 > 0.65


def test_solve_priority_each_free_variable_round_trips():
    base = solve_priority(UNIFORM, LOG1P, 0.35, {"c2": 0.38, "p": 0.42}, "c1")
    s_c2 = solve_priority(UNIFORM, LOG1P, 0.35, {"c1": base.c1, "p": base.p}, "c2")
    s_p = solve_priority(UNIFORM, LOG1P, 0.35, {"c1": base.c1, "c2": base.c2}, "p")
    assert s_c2.c2 == pytest.approx(0.38, abs=1e-6)
    assert s_p.p == pytest.approx(0.42, abs=1e-6)


def test_solve_priority_argument_errors():
    with pytest.raises(CapacityError):
        solve_priority(UNIFORM, SQRT, 1.0, {"c1": 1, "c2": 0})
    with pytest.raises(DomainError):
        solve_priority(UNIFORM, SQRT, 0.3, {"c1": 1})
    with pytest.raises(DomainError):
        solve_priority(UNIFORM, SQRT, 0.3, {"c1": 1, "c2": 0}, "c2")
    with pytest.raises(DegenerateSystemError):
        solve_priority(UNIFORM, SQRT, 0.3, {"c1": 0.5, "c2": 0.5})


def test_manifold_sweep_reports_and_splits():
    p_pure = solve_priority(UNIFORM, SQRT, 0.35, {"c1": 1.0, "c2": 0.0}, "p").p
    grid = [(0.1, 0.09), (0.38, 0.36), (0.0, p_pure), (0.65 - 1e-3, 0.0), (0.65, 0.0)]
    pts = manifold_sweep(UNIFORM, SQRT, 0.35, grid)
    assert len(pts) == len(grid)
    infeasible, ok, pure, near_collapse, collapse = pts
    assert not infeasible.feasible and "InfeasibleError" in infeasible.error
    for pt in (ok, pure, collapse):
        assert pt.feasible
        assert abs(pt.paid_mass + pt.free_mass - 0.35) <= 1e-8
    assert pure.system.c1 == pytest.approx(1.0, abs=1e-8)
    assert pure.free_mass == pytest.approx(0.0, abs=1e-9)
    assert not near_collapse.feasible
    assert collapse.system.is_collapsed and collapse.system.c1 == pytest.approx(0.65)
    with pytest.raises(DomainError):
        manifold_sweep(UNIFORM, SQRT, 0.35, [])


def test_c1_exceeds_c_and_thresholds_ordered():
    c = solve_single_queue(UNIFORM, 0.35).c
    for c2, p in [(0.3, 0.44), (0.38, 0.36), (0.42, 0.31)]:
        s = solve_priority(UNIFORM, SQRT, 0.35, {"c2": c2, "p": p})
        th = thresholds(SQRT, s, c)
        assert priority_masses(UNIFORM, SQRT, s).paid > 0
        assert s.c1 > c
        assert th.interior and th.y_lower.value < th.y_upper.value
        assert theta_star(SQRT, th.y_lower.value, p) == pytest.approx(s.c1 - c2, abs=1e-12)
        assert theta_star(SQRT, th.y_upper.value, p) == pytest.approx(c - c2, abs=1e-12)


dists = st.sampled_from([UNIFORM, IndependentBeta(2, 3, 2, 2), GaussianCopula(0.5, 2, 2, 2, 2)])


@settings(max_examples=40, deadline=None)
@given(
    dist=dists,
    c2=st.floats(0.0, 0.6),
    gap=st.floats(0.02, 0.4),
    p=st.floats(0.0, 0.6),
    which=st.sampled_from(["c1", "c2", "p"]),
    step=st.floats(1e-3, 0.2),
)
def test_clearing_mass_nonincreasing_in_each_cost(dist, c2, gap, p, which, step):
    c1 = min(1.0, c2 + gap)
    base = {"c1": c1, "c2": c2, "p": p}
    bumped = dict(base)
    bumped[which] = base[which] + step
    if bumped[which] > 1.0 or not bumped["c2"] < bumped["c1"]:
        return
    m0 = priority_clearing_mass(dist, LOG1P, PrioritySystem(**base))
    m1 = priority_clearing_mass(dist, LOG1P, PrioritySystem(**bumped))
    assert m1 <= m0 + 1e-9
