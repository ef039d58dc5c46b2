import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from lavrentiev.func_model import PiecewiseLinear, RealFunc, make_line, make_sqrt, random_lipschitz_candidate
from lavrentiev.lavrentiev_core import bounded_spec, f_only_spec, lavrentiev_spec
from lavrentiev.smoothing import (
    Certificate,
    InfiniteEnergyError,
    MollifierKernel,
    Schedule,
    ScheduleExhausted,
    approximate,
    boundary_correct,
    default_kernel,
    derivative_deviation,
    l1_deriv_distance,
    mollify,
    no_gap_report,
    smooth_stages,
    sup_distance,
    truncate_derivative,
    truncation_tail,
    verify_certificate,
    write_curves_csv,
)

# normalization of exp(-1/(1-t^2)) on (-1, 1), from scipy.integrate.quad
Z_ORACLE = quad(lambda t: math.exp(-1 / (1 - t * t)), -1, 1, epsabs=1e-14, epsrel=1e-14)[0]


def const(c):
    return RealFunc(lambda x: np.full_like(np.asarray(x, dtype=float), c),
                    lambda x: np.zeros_like(np.asarray(x, dtype=float)), lipschitz_bound=0.0)


# ---------------------------------------------------------------- kernel

def test_kernel_normalization_and_shape():
    k = default_kernel()
    assert k.Z == pytest.approx(Z_ORACLE, rel=1e-12)
    assert k.Z == pytest.approx(0.443993816168, rel=1e-11)
    assert k.eta_weights.sum() == pytest.approx(1.0, abs=1e-10)
    t = np.linspace(-1.5, 1.5, 301)
    assert np.all(k.eta(t) >= 0)
    assert np.all(k.eta(t[np.abs(t) >= 1]) == 0)
    assert np.allclose(k.eta(t), k.eta(-t))


def test_kernel_derivative_matches_finite_differences():
    k = MollifierKernel()
    t = np.linspace(-0.95, 0.95, 39)
    h = 1e-6
    fd = (k.eta(t + h) - k.eta(t - h)) / (2 * h)
    assert np.allclose(fd, k.eta_deriv(t), atol=1e-6)


# ---------------------------------------------------------------- stage 1

@pytest.mark.parametrize("k", [1, 2, 4, 8])
def test_truncation_of_sqrt(k):
    u = make_sqrt()
    _, uk = truncate_derivative(u, k)
    dist, _ = sup_distance(u, uk)
    assert dist == pytest.approx(1 / (2 * k), abs=1e-9)
    assert uk.lipschitz_bound == k
    x = np.linspace(0, 1, 101)
    closed = np.where(x <= 1 / (4 * k * k), 0.0, np.sqrt(x) - 1 / (2 * k))
    assert np.allclose(uk(x), closed, atol=1e-15)
    # stage-1 bound is attained for this monotone tail
    assert dist == pytest.approx(truncation_tail(u, k), rel=1e-8)


def test_truncation_line_is_identity():
    u = make_line()
    _, uk = truncate_derivative(u, 2)
    x = np.linspace(0, 1, 101)
    assert np.array_equal(uk(x), u(x))


def test_truncation_piecewise_linear():
    u = PiecewiseLinear([0, 0.5, 1], [0, 1.5, 1])  # slopes 3 and -1
    v, uk = truncate_derivative(u, 2)
    assert v(0.25) == 0.0 and v(0.75) == -1.0
    assert np.allclose(uk.slopes, [0, -1])
    assert uk(0.0) == 0.0


def test_truncation_general_path_matches_closed_form():
    # u_n has no closed-form truncation and goes through the table
    from lavrentiev.func_model import minimizing_sequence_member
    u = minimizing_sequence_member(10)
    _, uk = truncate_derivative(u, 3)
    dist, _ = sup_distance(u, uk)
    assert dist <= truncation_tail(u, 3) + 1e-6  # table interpolation error
    x = np.linspace(0.2, 1, 9)
    assert np.allclose(uk.deriv(x), u.deriv(x))


def test_truncation_rejects_nonpositive_k():
    with pytest.raises(ValueError):
        truncate_derivative(make_sqrt(), 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 7), st.floats(0.5, 8))
def test_stage1_bound_for_random_pl(seed, knots, k):
    u = random_lipschitz_candidate(seed, knots, 10)
    _, uk = truncate_derivative(u, k)
    dist, _ = sup_distance(u, uk)
    assert dist <= truncation_tail(u, k) + 1e-12


# ---------------------------------------------------------------- stage 2

def test_mollify_constant():
    for n in (1, 7, 100):
        m = mollify(const(0.3), n)
        assert np.allclose(m(np.linspace(0, 1, 11)), 0.3, atol=1e-12)


def test_mollify_line():
    n = 10
    m = mollify(make_line(), n)
    inner = np.linspace(1 / n, 1 - 1 / n, 101)
    assert np.allclose(m(inner), inner, atol=1e-12)
    x = np.linspace(0, 1, 1001)
    assert np.max(np.abs(m(x) - x)) <= 1 / n


@pytest.mark.parametrize("k,n", [(1, 10), (2, 40), (4, 320)])
def test_stage2_bounds_for_sqrt(k, n):
    _, uk = truncate_derivative(make_sqrt(), k)
    ukn = mollify(uk, n)
    dist, _ = sup_distance(ukn, uk)
    assert dist <= k / n
    x = np.linspace(0, 1, 10_000)
    assert np.max(np.abs(ukn.deriv(x))) <= k
    assert ukn.kind == "mollified" and ukn.lipschitz_bound == k


def test_mollified_derivative_matches_finite_differences():
    _, uk = truncate_derivative(make_sqrt(), 2)
    ukn = mollify(uk, 40)
    x = np.linspace(0.01, 0.99, 50)
    h = 1e-6
    fd = (ukn(x + h) - ukn(x - h)) / (2 * h)
    assert np.allclose(fd, ukn.deriv(x), atol=1e-5)


@pytest.mark.parametrize("k,n", [(2, 40), (4, 320)])
def test_derivative_deviation_away_from_jumps(k, n):
    _, uk = truncate_derivative(make_sqrt(), k)
    ukn = mollify(uk, n)
    dev, _ = derivative_deviation(uk, ukn, n, exclude_jumps=True)
    assert dev <= 2 * k / n


@pytest.mark.parametrize("k,n", [(2, 40), (4, 320)])
def test_derivative_deviation_near_jump_is_about_half_the_jump(k, n):
    # u_k' jumps from 0 to k at 1/(4k^2); the mollified derivative passes
    # through the middle there, so the pointwise gap is about k/2.
    _, uk = truncate_derivative(make_sqrt(), k)
    ukn = mollify(uk, n)
    dev, where = derivative_deviation(uk, ukn, n)
    assert abs(where - 1 / (4 * k * k)) <= 1 / n
    assert dev == pytest.approx(k / 2, rel=0.1)


# ---------------------------------------------------------------- stage 3

def test_boundary_correct_example():
    base = RealFunc(lambda x: 0.02 + 0.95 * np.asarray(x, dtype=float),
                    lambda x: np.full_like(np.asarray(x, dtype=float), 0.95), lipschitz_bound=0.95)
    phi = boundary_correct(base, 0.0, 1.0)
    assert phi(0.0) == 0.0 and phi(1.0) == pytest.approx(1.0, abs=1e-15)
    x = np.linspace(0, 1, 1001)
    assert np.max(np.abs(phi(x) - base(x))) <= 0.05 + 1e-15
    assert np.allclose(phi.deriv(x), 1.0)


def test_boundary_correct_no_op_and_zero():
    m = make_line()
    phi = boundary_correct(m, 0.0, 1.0)
    x = np.linspace(0, 1, 11)
    assert np.array_equal(phi(x), m(x))
    z = boundary_correct(const(0.0), 0.0, 0.0)
    assert np.all(z(x) == 0.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-2, 2), st.floats(-2, 2))
def test_stage3_exact_and_bounded(seed, A, B):
    u = random_lipschitz_candidate(seed, 5, 10)
    _, uk = truncate_derivative(u, 4)
    ukn = mollify(uk, 50)
    phi = boundary_correct(ukn, A, B)
    assert abs(phi(0.0) - A) <= 1e-12 and abs(phi(1.0) - B) <= 1e-12
    x = np.linspace(0, 1, 2001)
    bound = abs(ukn(0.0) - A) + abs(B - ukn(1.0))
    assert np.max(np.abs(phi(x) - ukn(x))) <= bound + 1e-12


# ---------------------------------------------------------------- certificates

def test_certificate_identity():
    u = make_sqrt()
    cert = verify_certificate(u, u, bounded_spec(), 1e-3)
    assert cert.energy_gap_log == -math.inf
    assert cert.l1_deriv_distance == 0.0
    assert max(cert.boundary_residuals) == 0.0
    assert cert.passed


def test_l1_constant_offset():
    u = make_line()
    v = make_line(0.0, 1.3)
    assert l1_deriv_distance(u, v) == pytest.approx(0.3, abs=1e-12)


def test_certificate_at_k4_n320():
    u = make_sqrt()
    st_ = smooth_stages(u, 4, 320)
    cert = verify_certificate(u, st_["phi"], bounded_spec(), 0.5)
    stage_bound = 1 / 8 + 4 / 320 + abs(st_["u_kn"](0.0)) + abs(1 - st_["u_kn"](1.0))
    assert cert.sup_distance <= stage_bound + cert.sup_pad
    assert cert.passed
    assert not verify_certificate(u, st_["phi"], bounded_spec(), 0.1).passed


def test_approximate_sqrt():
    phi, cert = approximate(make_sqrt(), bounded_spec(), 0.05)
    assert cert.passed and cert.sup_distance < 0.05
    assert max(cert.boundary_residuals) < 1e-10
    assert cert.k_used == 16 and cert.n_used == math.ceil(16**2 / 0.05)


def test_approximate_line_first_step():
    phi, cert = approximate(make_line(), bounded_spec(), 0.01)
    assert (cert.k_used, cert.n_used) == (2, 400)
    assert cert.energy_gap < 1e-3


def test_approximate_guards():
    with pytest.raises(ValueError):
        approximate(make_sqrt(), bounded_spec(), 0.0)
    divergent = f_only_spec(lambda xi: np.square(xi))  # integral of exp(1/(4x)) diverges
    with pytest.raises(InfiniteEnergyError):
        approximate(make_sqrt(), divergent, 0.1)


def test_schedule_exhaustion_carries_best():
    with pytest.raises(ScheduleExhausted) as info:
        approximate(make_sqrt(), bounded_spec(), 0.05, schedule=Schedule(k0=2, steps=2))
    assert isinstance(info.value.best, Certificate)
    assert not info.value.best.passed


def test_lavrentiev_spec_records_vacated_energy_guarantee():
    u = make_line()
    phi = smooth_stages(u, 2, 80)["phi"]
    cert = verify_certificate(u, phi, lavrentiev_spec(), 0.05)
    assert not cert.l3_guaranteed and cert.notes
    # energies near e^2000 differ by far more than epsilon
    assert not cert.passed


def test_end_to_end_monotone():
    gaps, l1s = [], []
    for eps in (0.1, 0.05, 0.01):
        _, cert = approximate(make_sqrt(), bounded_spec(), eps)
        assert cert.passed
        gaps.append(cert.energy_gap)
        l1s.append(cert.l1_deriv_distance)
    assert gaps[0] > gaps[1] > gaps[2]
    assert l1s[0] > l1s[1] > l1s[2]


def test_no_gap_report():
    corpus = [("sqrt", make_sqrt()), ("line", make_line()),
              ("pl", PiecewiseLinear([0, 0.5, 1], [0, 0.8, 1]))]
    rep = no_gap_report(corpus, bounded_spec(), 0.05)
    assert rep.passed
    assert len(rep.energies) == 3


def test_curves_csv(tmp_path):
    u = make_sqrt()
    path = tmp_path / "c.csv"
    write_curves_csv(path, u, smooth_stages(u, 2, 40), grid_size=11, header=["h"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# h"
    assert lines[1].startswith("x,u,u_prime")
    assert len(lines) == 13
