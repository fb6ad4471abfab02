import math

import numpy as np
import pytest
from scipy.special import gamma

from bubbletower.core import Bubble, bubble_eval, critical_exponent, universal_constants
from bubbletower.errors import InvalidArgument
from bubbletower.greenfn import box, unit_ball
from bubbletower.quadrature import (QuadratureSpec, hint_breakpoints, integrate_domain,
                                    integrate_radial, sphere_area)


def test_sphere_area_low_dims():
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)


@pytest.mark.parametrize("n", [3, 5, 8])
def test_radial_gaussian_over_space(n):
    res = integrate_radial(lambda r: np.exp(-r * r), math.inf, n, QuadratureSpec(tol=1e-12))
    assert res.converged
    assert res.value == pytest.approx(math.pi ** (n / 2), rel=1e-11)


def test_radial_ball_volume_and_rmin():
    res = integrate_radial(lambda r: np.ones_like(r), 1.0, 4)
    assert res.value == pytest.approx(math.pi ** 2 / 2, rel=1e-12)
    shell = integrate_radial(lambda r: np.ones_like(r), 1.0, 3, r_min=0.5, sphere=False)
    assert shell.value == pytest.approx((1 - 0.125) / 3, rel=1e-12)


@pytest.mark.parametrize("lam", [1e3, 1e12, 1e25])
def test_radial_peak_with_hints(lam):
    n = 4
    p = critical_exponent(n)
    b = Bubble((0.0,) * n, lam, n)
    spec = QuadratureSpec(tol=1e-11, atol=0.0, hints=[((0.0,), lam)])
    res = integrate_radial(lambda r: bubble_eval(b, np.outer(r, np.eye(n)[0])) ** (p + 1),
                           math.inf, n, spec)
    assert res.value == pytest.approx(universal_constants(n).Sn_pow, rel=1e-10)


def test_hint_breakpoints_are_relative():
    pts = hint_breakpoints([(0.0, 1e-40)], 1.0)
    assert pts[0] == 0.0 and pts[-1] == 1.0
    assert pts[1] < 1e-39
    assert np.all(np.diff(pts) > 0)


def test_domain_ball_polynomial():
    # int_B |y|^2 = n/(n+2) |B|
    n = 3
    res = integrate_domain(lambda y: np.sum(y * y, axis=-1), unit_ball(n), QuadratureSpec(tol=1e-9))
    assert res.value == pytest.approx(3 / 5 * 4 * math.pi / 3, rel=1e-9)


def test_domain_off_center_peak_in_ball():
    n = 3
    b = Bubble((0.3, -0.2, 0.1), 200.0, n)
    p = critical_exponent(n)
    spec = QuadratureSpec(tol=1e-7, hints=[(b.center, b.scale)])
    res = integrate_domain(lambda y: bubble_eval(b, y) ** (p + 1), unit_ball(n), spec)
    # the mass outside the ball is O(lam^{-n}) relative
    assert res.value == pytest.approx(universal_constants(n).Sn_pow, rel=1e-5)


def test_domain_whole_space_gaussian():
    res = integrate_domain(lambda y: np.exp(-np.sum((y - 0.5) ** 2, axis=-1)), None,
                           QuadratureSpec(tol=1e-8, hints=[((0.5, 0.5, 0.5), 1.0)]), dim=3)
    assert res.value == pytest.approx(math.pi ** 1.5, rel=1e-7)


def test_domain_box_monomial():
    d = box((0.0, 0.0, 0.0), (1.0, 2.0, 1.0), 16)
    res = integrate_domain(lambda y: y[:, 0] * y[:, 1] ** 2, d, QuadratureSpec(tol=1e-10))
    assert res.value == pytest.approx(0.5 * 8 / 3, rel=1e-10)


def test_spec_validation_and_digest():
    with pytest.raises(InvalidArgument):
        QuadratureSpec(tol=0)
    with pytest.raises(InvalidArgument):
        QuadratureSpec(order=2)
    with pytest.raises(InvalidArgument):
        QuadratureSpec(hints=[((0.0,), -1.0)])
    a, b = QuadratureSpec(tol=1e-8), QuadratureSpec(tol=1e-8)
    assert a.digest() == b.digest() != QuadratureSpec(tol=1e-9).digest()
    assert a.replace(tol=1e-9).digest() == QuadratureSpec(tol=1e-9).digest()
    with pytest.raises(InvalidArgument):
        integrate_domain(lambda y: y[:, 0], None)


def test_unit_ball_volume_matches_gamma_formula():
    # angular cells multiply quickly with dimension; keep the tolerance moderate
    n = 5
    res = integrate_domain(lambda y: np.ones(len(y)), unit_ball(n), QuadratureSpec(tol=1e-6))
    assert res.value == pytest.approx(math.pi ** (n / 2) / gamma(n / 2 + 1), rel=1e-10)
