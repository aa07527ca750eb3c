import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fasttrack.errors import AffordabilityError, DomainError
from fasttrack.model import (
    Agent,
    UtilityParams,
    ValueFunction,
    theta_star,
    utility_free_queue,
    utility_outside,
    utility_paid_queue,
)

SQRT = ValueFunction.sqrt()
LOG1P = ValueFunction.log1p()
T1 = UtilityParams()


def test_theta_star_examples():
    assert theta_star(SQRT, 0.25, 0.09) == pytest.approx(0.1, abs=1e-15)
    assert theta_star(SQRT, 0.7, 0.0) == 0.0
    assert theta_star(LOG1P, 0.7, 0.0) == 0.0
    assert theta_star(LOG1P, 1.0, 0.5) == pytest.approx(math.log(2) - math.log(1.5), abs=1e-15)
    assert theta_star(LOG1P, 1.0, 0.5) == pytest.approx(0.2876821, abs=1e-7)


def test_theta_star_errors():
    with pytest.raises(AffordabilityError):
        theta_star(SQRT, 0.2, 0.3)
    with pytest.raises(DomainError):
        theta_star(SQRT, 1.2, 0.1)
    with pytest.raises(DomainError):
        theta_star(SQRT, 0.5, -0.1)


def test_theta_star_vectorised():
    y = np.array([0.25, 0.5, 1.0])
    out = theta_star(SQRT, y, 0.09)
    assert out.shape == (3,)
    assert out[0] == pytest.approx(0.1)


def test_utility_outside_examples():
    assert utility_outside(SQRT, 0.25, T1) == 1.5
    assert utility_outside(SQRT, 0.0, T1) == 1.0
    assert utility_outside(LOG1P, 1.0, T1) == pytest.approx(1 + math.log(2))
    with pytest.raises(DomainError):
        utility_outside(SQRT, -0.01, T1)


def test_utility_free_queue_examples():
    assert utility_free_queue(SQRT, Agent(0.25, 0.8), T1, 0.65) == pytest.approx(1.65, abs=1e-15)
    a = Agent(0.4, 0.3)
    assert utility_free_queue(SQRT, a, T1, 0.3) == pytest.approx(utility_outside(SQRT, 0.4, T1), abs=1e-15)
    u = utility_free_queue(SQRT, Agent(1.0, 0.0), T1, 0.5)
    assert u == 1.5 and u < utility_outside(SQRT, 1.0, T1) == 2.0


def test_utility_paid_queue_examples():
    assert utility_paid_queue(SQRT, Agent(0.25, 0.8), T1, 0.1, 0.09) == pytest.approx(2.1, abs=1e-15)
    a = Agent(0.6, 0.7)
    assert utility_paid_queue(SQRT, a, T1, 0.4, 0.0) == utility_free_queue(SQRT, a, T1, 0.4)
    # theta equals theta* + c2 = 0.1 + 0.1 exactly -> indifferent with staying out
    assert theta_star(SQRT, 0.25, 0.09) + 0.1 == pytest.approx(0.2, abs=1e-15)
    u = utility_paid_queue(SQRT, Agent(0.25, 0.2), T1, 0.1, 0.09)
    assert u == pytest.approx(1.5, abs=1e-15)
    assert u == pytest.approx(utility_outside(SQRT, 0.25, T1), abs=1e-15)
    with pytest.raises(AffordabilityError):
        utility_paid_queue(SQRT, Agent(0.05, 0.9), T1, 0.1, 0.09)


def test_agent_domain():
    with pytest.raises(DomainError):
        Agent(1.1, 0.5)
    with pytest.raises(DomainError):
        Agent(0.5, -0.1)


@pytest.mark.parametrize("vf", [SQRT, LOG1P, ValueFunction.crra(0.3), ValueFunction.crra(0.9)])
def test_builtin_value_functions_pass_shape_checks(vf):
    vf.check_shape()
    assert math.isfinite(vf(0.0))


def test_value_function_rejects_bad_shapes():
    with pytest.raises(DomainError), np.errstate(divide="ignore"):
        ValueFunction.from_callable(lambda y: np.log(y))  # -inf at 0
    with pytest.raises(DomainError):
        ValueFunction.from_callable(lambda y: 2.0 * y)  # linear, not strictly concave
    with pytest.raises(DomainError):
        ValueFunction.from_callable(lambda y: -np.sqrt(y))  # decreasing
    with pytest.raises(DomainError):
        ValueFunction.crra(1.0)
    with pytest.raises(DomainError):
        ValueFunction.from_descriptor("log")


def test_inverse_round_trip():
    y = np.linspace(0.0, 1.0, 11)
    for vf in (SQRT, LOG1P, ValueFunction.crra(0.4)):
        assert np.allclose(vf.inverse(vf.func(y)), y, atol=1e-12)
    custom = ValueFunction.from_callable(lambda y: np.sqrt(y) + np.log1p(y))
    assert np.allclose(custom.inverse(custom.func(y)), y, atol=1e-12)


value_functions = st.one_of(
    st.just(SQRT),
    st.just(LOG1P),
    st.floats(0.05, 0.95).map(ValueFunction.crra),
)


@settings(max_examples=200, deadline=None)
@given(vf=value_functions, p=st.floats(0.01, 0.5), y=st.floats(0.0, 1.0), dy=st.floats(1e-3, 0.5))
def test_theta_star_decreasing_in_income(vf, p, y, dy):
    y1 = max(y, p)
    y2 = min(1.0, y1 + dy)
    if y2 <= y1:
        return
    assert theta_star(vf, y2, p) < theta_star(vf, y1, p) + 1e-12


@settings(max_examples=200, deadline=None)
@given(vf=value_functions, y=st.floats(0.02, 1.0), p=st.floats(0.0, 1.0), dp=st.floats(1e-3, 0.5))
def test_theta_star_increasing_in_price(vf, y, p, dp):
    p1 = min(p, y)
    p2 = min(y, p1 + dp)
    if p2 <= p1:
        return
    assert theta_star(vf, y, p2) > theta_star(vf, y, p1)
    assert theta_star(vf, y, p1) >= 0.0


@settings(max_examples=200, deadline=None)
@given(
    y=st.floats(0.0, 1.0),
    theta=st.floats(0.0, 1.0),
    c=st.floats(0.0, 1.0),
    c2=st.floats(0.0, 1.0),
    p=st.floats(0.0, 1.0),
    t=st.floats(-50.0, 50.0),
)
def test_time_endowment_cancels_from_comparisons(y, theta, c, c2, p, t):
    p = min(p, y)
    a = Agent(y, theta)

    def signs(params):
        u = [
            utility_outside(SQRT, y, params),
            utility_free_queue(SQRT, a, params, c),
            utility_paid_queue(SQRT, a, params, c2, p),
        ]
        # compare through differences so the sign is not hostage to rounding of t
        return [np.sign(round(u[i] - u[j], 9)) for i in range(3) for j in range(3)]

    assert signs(UtilityParams(1.0)) == signs(UtilityParams(t))


@settings(max_examples=200, deadline=None)
@given(y=st.floats(0.0, 1.0), theta=st.floats(0.0, 1.0), c=st.floats(0.0, 1.0))
def test_free_queue_preferred_iff_theta_at_least_c(y, theta, c):
    a = Agent(y, theta)
    gain = utility_free_queue(SQRT, a, T1, c) - utility_outside(SQRT, y, T1)
    if abs(theta - c) > 1e-12:
        assert (gain >= 0) == (theta >= c)


@settings(max_examples=200, deadline=None)
@given(y=st.floats(0.0, 1.0), theta=st.floats(0.0, 1.0), c2=st.floats(0.0, 1.0), p=st.floats(0.0, 1.0))
def test_paid_queue_preferred_iff_theta_clears_boundary(y, theta, c2, p):
    p = min(p, y)
    a = Agent(y, theta)
    gain = utility_paid_queue(LOG1P, a, T1, c2, p) - utility_outside(LOG1P, y, T1)
    edge = theta_star(LOG1P, y, p) + c2
    if abs(theta - edge) > 1e-12:
        assert (gain >= 0) == (theta >= edge)
