import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate
from scipy.special import beta

from bubbletower.core import (Bubble, NonlinearityParams, F0_minus_F, F_array, F_eval, bubble_deriv,
                              bubble_eval, bubble_grad, c0_of, critical_exponent, f0_minus_f, f_eval,
                              inequality_ratios, load_calibration, universal_constants)
from bubbletower.errors import InvalidArgument
from bubbletower.quadrature import sphere_area


def test_bubble_peak_and_decay():
    b = Bubble((0.0, 0.0, 0.0), 10.0, 3)
    assert bubble_eval(b, np.zeros(3)) == pytest.approx(b.peak)
    assert b.peak == pytest.approx(3 ** 0.25 * math.sqrt(10.0))
    far = bubble_eval(b, np.array([100.0, 0, 0]))
    # |y|^{2-n} tail with amplitude c0 lam^{-(n-2)/2}
    assert far * 100.0 == pytest.approx(c0_of(3) / math.sqrt(10.0), rel=1e-5)


@pytest.mark.parametrize("n", [3, 4, 6])
def test_bubble_solves_critical_equation(n):
    b = Bubble((0.1,) + (0.0,) * (n - 1), 2.0, n)
    y = np.full(n, 0.3)
    h = 1e-3
    lap = sum(bubble_eval(b, y + h * e) - 2 * bubble_eval(b, y) + bubble_eval(b, y - h * e)
              for e in np.eye(n)) / h ** 2
    p = critical_exponent(n)
    assert -lap == pytest.approx(bubble_eval(b, y) ** p, rel=1e-5)


def test_bubble_derivatives_match_finite_differences():
    n, lam = 5, 3.0
    a = np.array([0.1, -0.2, 0.0, 0.05, 0.3])
    y = np.array([0.4, 0.1, -0.3, 0.2, 0.0])
    b = Bubble(tuple(a), lam, n)
    h = 1e-6
    dl = (bubble_eval(Bubble(tuple(a), lam * (1 + h), n), y)
          - bubble_eval(Bubble(tuple(a), lam * (1 - h), n), y)) / (2 * h)
    assert bubble_deriv(b, y, "scaled_dlambda") == pytest.approx(dl, rel=1e-7)
    e = np.zeros(n)
    e[2] = h
    da = (bubble_eval(Bubble(tuple(a + e), lam, n), y) - bubble_eval(Bubble(tuple(a - e), lam, n), y)) / (2 * h)
    assert bubble_deriv(b, y, "scaled_dcenter", 2) == pytest.approx(da / lam, rel=1e-6)
    g = np.array([(bubble_eval(b, y + h * v) - bubble_eval(b, y - h * v)) / (2 * h) for v in np.eye(n)])
    np.testing.assert_allclose(bubble_grad(b, y), g, rtol=1e-6)


def test_bubble_rejects_bad_input():
    with pytest.raises(InvalidArgument):
        Bubble((0.0, 0.0), 1.0, 3)
    with pytest.raises(InvalidArgument):
        Bubble((0.0, 0.0, 0.0), -1.0, 3)
    with pytest.raises(InvalidArgument):
        Bubble((0.0,) * 2, 1.0, 2)
    with pytest.raises(InvalidArgument):
        bubble_deriv(Bubble((0.0,) * 3, 1.0, 3), np.zeros(3), "scaled_dcenter", 5)


def test_f_reduces_to_pure_power_at_eps_zero():
    pr = NonlinearityParams(0.0, 4)
    u = np.array([-3.0, -0.5, 0.0, 0.2, 7.0])
    np.testing.assert_allclose(f_eval(pr, u), np.abs(u) ** 2 * u)


@given(st.floats(1e-3, 1e3), st.floats(0.0, 0.3), st.sampled_from([3, 4, 5, 8]))
@settings(max_examples=60, deadline=None)
def test_f_is_odd_and_damped(u, eps, n):
    pr = NonlinearityParams(eps, n)
    assert f_eval(pr, -u) == -f_eval(pr, u)
    assert 0 <= f_eval(pr, u) <= f_eval(NonlinearityParams(0.0, n), u) * (1 + 1e-15)


@given(st.floats(1e-4, 1e4), st.floats(1e-6, 0.3))
@settings(max_examples=60, deadline=None)
def test_f_derivatives_by_finite_differences(u, eps):
    pr = NonlinearityParams(eps, 4)
    h = 1e-5 * u
    d1 = (f_eval(pr, u + h) - f_eval(pr, u - h)) / (2 * h)
    d2 = (f_eval(pr, u + h, 1) - f_eval(pr, u - h, 1)) / (2 * h)
    assert f_eval(pr, u, 1) == pytest.approx(d1, rel=1e-6)
    assert f_eval(pr, u, 2) == pytest.approx(d2, rel=1e-5)


def test_f0_minus_f_is_accurate_for_tiny_eps():
    pr = NonlinearityParams(1e-30, 3)
    u = 5.0
    expect = u ** 5 * 1e-30 * math.log(math.log(math.e + u))
    assert f0_minus_f(pr, u) == pytest.approx(expect, rel=1e-12)


@pytest.mark.parametrize("s", [1e-3, 0.7, 12.0, 3e4])
def test_F_matches_adaptive_quadrature(s):
    pr = NonlinearityParams(0.15, 3)
    ref, _ = integrate.quad(lambda t: f_eval(pr, t), 0, s, epsabs=0, epsrel=1e-13, limit=200)
    assert F_eval(pr, s) == pytest.approx(ref, rel=1e-11)
    assert F_array(pr, np.array([s, -s])) == pytest.approx([ref, ref], rel=1e-10)
    diff = F0_minus_F(pr, np.array([s]))[0]
    assert diff == pytest.approx(s ** 6 / 6 - ref, rel=1e-8)


def _beta_constants(n):
    """Closed forms through the beta function."""
    k = (n * (n - 2)) ** (n / 2)
    area = sphere_area(n)
    S = k * area * beta(n / 2, n / 2) / 2
    cbar1 = k * area / n  # B(n/2, 1) = 2/n
    return S, cbar1


@pytest.mark.parametrize("n", range(3, 9))
def test_universal_constants_against_beta_functions(n):
    c = universal_constants(n)
    S, cbar1 = _beta_constants(n)
    assert c.Sn_pow == pytest.approx(S, rel=1e-11)
    assert c.cbar1 == pytest.approx(cbar1, rel=1e-11)
    assert c.Gamma1 == pytest.approx((n - 2) * S / (2 * n), rel=1e-9)
    assert c.Gamma2 == pytest.approx(2 * c.Gamma1 / (c.cbar1 * (n - 2)))
    assert c.c0 == pytest.approx((n * (n - 2)) ** ((n - 2) / 4))


def test_closed_form_constant_agrees_only_in_dimension_four():
    residuals = {n: universal_constants(n).gamma1_closed_residual for n in range(3, 9)}
    assert residuals[4] < 1e-12
    for n in (3, 5, 6, 7, 8):
        # the two forms differ by the factor (n-2)/2
        assert residuals[n] == pytest.approx(abs(2 / (n - 2) - 1), rel=1e-9)


def test_universal_constants_rejects_unsupported_dims():
    with pytest.raises(InvalidArgument):
        universal_constants(9)


def test_calibration_is_shipped_and_bounds_hold_on_grid():
    cal = load_calibration()
    assert set(cal) == set(range(3, 9))
    rng = np.random.default_rng(4)
    for n in (3, 6):
        U = 10 ** rng.uniform(-4, 4, 500) * rng.choice([-1, 1], 500)
        V = 10 ** rng.uniform(-4, 4, 500) * rng.choice([-1, 1], 500)
        r = inequality_ratios(n, np.full(500, 0.1), U, V)
        assert np.all(r["1"] <= 1) and np.all(r["7.3"] <= 1)
        for key, bound in cal[n].items():
            assert np.all(r[key] <= bound)
