from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lavrentiev.func_model import (
    PiecewiseLinear,
    StepFunction,
    from_json,
    from_name,
    make_line,
    make_sqrt_quarter_half,
    minimizing_sequence_member,
    random_lipschitz_candidate,
)


def test_parabolas():
    q, h = make_sqrt_quarter_half()
    assert q(1.0) == 0.25
    assert h(0.25) == 0.25
    assert q.deriv(0.25) == 0.25
    assert h.deriv(0.25) == 0.5
    assert np.isnan(q.deriv(0.0))


def test_minimizing_sequence_member():
    u1 = minimizing_sequence_member(1)
    assert u1(0.25) == 0.3125
    assert minimizing_sequence_member(4).deriv(0.25) == 0.875
    for n in (1, 7, 200):
        u = minimizing_sequence_member(n)
        assert u.boundary_left == 0.0 and u.boundary_right == 1.0
    with pytest.raises(ValueError):
        minimizing_sequence_member(0)
    with pytest.raises(ValueError):
        minimizing_sequence_member(2.5)


@pytest.mark.parametrize("n", [1, 3, 50])
def test_u_n_sup_distance_to_sqrt(n):
    x = np.linspace(0, 1, 100_001)
    d = np.abs(minimizing_sequence_member(n)(x) - np.sqrt(x))
    assert d.max() == pytest.approx(1 / (4 * n), rel=1e-12)
    assert x[d.argmax()] == 0.5


@pytest.mark.parametrize("name", ["sqrt", "sqrt_quarter", "sqrt_half", "u_n(5)", "line(0,1)", "line(0.5,2)"])
def test_finite_difference_matches_deriv(name):
    u = from_name(name)
    x = np.linspace(0.05, 0.95, 37)
    h = 1e-6
    fd = (u(x + h) - u(x - h)) / (2 * h)
    assert np.allclose(fd, u.deriv(x), rtol=1e-6, atol=1e-6)


def test_names_round_trip():
    for name in ["sqrt", "sqrt_quarter", "sqrt_half", "u_n(12)", "line(0,1)", "line(-1,2.5)"]:
        u = from_name(name)
        assert from_json(u.to_json()).name == u.name
    with pytest.raises(ValueError):
        from_name("exp")


def test_piecewise_linear_basics():
    p = PiecewiseLinear([0, 0.25, 1], [0, 0.75, 1])
    assert p(0.25) == 0.75
    assert p.deriv(0.25) == pytest.approx(1 / 3)  # right-hand slope at a knot
    assert p.deriv(0.1) == 3.0
    assert p.lipschitz_bound == 3.0
    assert p.integral_of_derivative() == 1.0
    assert from_json(p.to_json())(0.6) == p(0.6)
    with pytest.raises(ValueError):
        PiecewiseLinear([0, 0.5, 0.5, 1], [0, 1, 1, 1])
    with pytest.raises(ValueError):
        PiecewiseLinear([0.1, 1], [0, 1])


def test_step_function_exact():
    s = StepFunction([0, Fraction(1, 3), 1], [Fraction(3), Fraction(-1)])
    assert s.integral() == Fraction(1) - Fraction(2, 3)
    assert s.integral(Fraction(1, 6), Fraction(1, 2)) == Fraction(1, 2) - Fraction(1, 6)
    assert s.value_at(Fraction(1, 3)) == -1
    assert s.value_at(1) == -1
    F = s.antiderivative()
    assert F(1.0) == pytest.approx(1 / 3, abs=1e-15)
    assert np.allclose(F.slopes, [3, -1])


def test_random_candidate_examples():
    assert np.array_equal(random_lipschitz_candidate(3, 2, 10).values, [0.0, 1.0])
    a = random_lipschitz_candidate(7, 5, 10)
    b = random_lipschitz_candidate(7, 5, 10)
    assert np.array_equal(a.knots, b.knots) and np.array_equal(a.values, b.values)
    with pytest.raises(ValueError):
        random_lipschitz_candidate(0, 5, 0.5)
    with pytest.raises(ValueError):
        random_lipschitz_candidate(0, 1, 5)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 12), st.floats(1.0, 50.0))
def test_random_candidate_admissible(seed, knots, cap):
    u = random_lipschitz_candidate(seed, knots, cap)
    assert u.values[0] == 0.0 and u.values[-1] == 1.0
    assert np.all(np.abs(u.slopes) <= cap)
    assert u.integral_of_derivative() == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 10))
def test_lipschitz_bound_holds_on_pairs(seed, knots):
    u = random_lipschitz_candidate(seed, knots, 10.0)
    rng = np.random.default_rng(seed)
    x, y = rng.uniform(0, 1, (2, 200))
    assert np.all(np.abs(u(x) - u(y)) <= u.lipschitz_bound * np.abs(x - y) + 1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.fractions(-5, 5, max_denominator=20), min_size=1, max_size=8))
def test_step_antiderivative_matches_exact_integral(values):
    m = len(values)
    bps = [Fraction(i, m) for i in range(m + 1)]
    s = StepFunction(bps, values)
    F = s.antiderivative()
    for b in bps:
        assert F(float(b)) == pytest.approx(float(s.integral(0, b)), abs=1e-12)
