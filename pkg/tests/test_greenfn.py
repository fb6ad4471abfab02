import numpy as np
import pytest

from bubbletower.core import Bubble, bubble_eval, c0_of
from bubbletower.errors import InvalidArgument
from bubbletower.greenfn import (FieldCache, ProjectedBubble, ball_grid_solve, box, green_H,
                                 green_H_grad, harmonic_solve, load_field, robin, robin_grad,
                                 robin_hess, save_field, unit_ball)


def _fd_laplacian(f, y, h=1e-3):
    n = len(y)
    return sum(f(y + h * e) - 2 * f(y) + f(y - h * e) for e in np.eye(n)) / h ** 2


@pytest.mark.parametrize("n", [3, 5, 7])
def test_ball_H_is_symmetric_harmonic_and_matches_kernel_on_sphere(n):
    dom = unit_ball(n)
    rng = np.random.default_rng(n)
    x = rng.uniform(-0.3, 0.3, n)
    y = rng.uniform(-0.3, 0.3, n)
    assert green_H(dom, x, y) == pytest.approx(green_H(dom, y, x), rel=1e-14)
    assert abs(_fd_laplacian(lambda z: green_H(dom, x, z), y)) < 1e-4
    z = rng.normal(size=n)
    z /= np.linalg.norm(z)
    # on the boundary H(x, .) equals the singular kernel
    q = 1.0 + np.sum(x * x) - 2 * x @ z
    assert q ** ((2 - n) / 2) == pytest.approx(np.linalg.norm(z - x) ** (2 - n), rel=1e-12)


def test_ball_H_gradients_by_finite_differences():
    n = 4
    dom = unit_ball(n)
    x = np.array([0.2, -0.1, 0.05, 0.3])
    y = np.array([-0.3, 0.25, 0.1, 0.0])
    h = 1e-6
    for slot, which in (("first", 0), ("second", 1)):
        fd = []
        for e in np.eye(n) * h:
            args_p = (x + e, y) if which == 0 else (x, y + e)
            args_m = (x - e, y) if which == 0 else (x, y - e)
            fd.append((green_H(dom, *args_p) - green_H(dom, *args_m)) / (2 * h))
        np.testing.assert_allclose(green_H_grad(dom, x, y, slot), fd, rtol=1e-7)


@pytest.mark.parametrize("n", [3, 6])
def test_robin_derivatives(n):
    dom = unit_ball(n)
    x = np.linspace(-0.2, 0.3, n)
    assert robin(dom, x) == pytest.approx(green_H(dom, x, x))
    h = 1e-6
    g = [(robin(dom, x + e) - robin(dom, x - e)) / (2 * h) for e in np.eye(n) * h]
    np.testing.assert_allclose(robin_grad(dom, x), g, rtol=1e-7)
    H = np.column_stack([(robin_grad(dom, x + e) - robin_grad(dom, x - e)) / (2 * h)
                         for e in np.eye(n) * h])
    np.testing.assert_allclose(robin_hess(dom, x), H, rtol=1e-6, atol=1e-8)


def test_box_H_is_nearly_symmetric():
    dom = box(resolution=32)
    x = np.array([0.1, -0.2, 0.15])
    y = np.array([-0.25, 0.1, 0.0])
    a, b = green_H(dom, x, y), green_H(dom, y, x)
    assert a == pytest.approx(b, rel=5e-3)
    assert harmonic_solve(dom, x).laplacian_residual() < 1e-8


def test_domain_validation():
    with pytest.raises(InvalidArgument):
        box(resolution=8)
    with pytest.raises(InvalidArgument):
        box((0, 0, 0), (1, -1, 1))
    with pytest.raises(InvalidArgument):
        green_H(unit_ball(3), np.array([1.5, 0, 0]), np.zeros(3))
    with pytest.raises(InvalidArgument):
        green_H_grad(unit_ball(3), np.zeros(3), np.zeros(3), slot="third")
    with pytest.raises(InvalidArgument):
        harmonic_solve(unit_ball(3), np.zeros(3))


def test_field_round_trip_and_cache(tmp_path):
    dom = box(resolution=16)
    x = np.array([0.1, 0.0, -0.1])
    fld = harmonic_solve(dom, x)
    save_field(tmp_path / "f.hfld", fld)
    back = load_field(tmp_path / "f.hfld")
    np.testing.assert_array_equal(back.values, fld.values)
    assert back.anchor == fld.anchor and back.domain == dom
    cache = FieldCache(tmp_path / "cache")
    first = cache.get(dom, x)
    assert cache.path(dom, x).exists()
    np.testing.assert_array_equal(cache.get(dom, x).values, first.values)
    (tmp_path / "bad").write_bytes(b"nonsense")
    with pytest.raises(InvalidArgument):
        load_field(tmp_path / "bad")


def test_projected_bubble_vanishes_on_sphere_when_centred():
    n = 3
    b = Bubble((0.0,) * n, 5.0, n)
    dom = unit_ball(n)
    exact = ProjectedBubble(b, dom, "grid_exact")
    lead = ProjectedBubble(b, dom)
    assert exact.radial
    edge = np.array([1.0 - 1e-12, 0.0, 0.0])
    assert abs(exact.value(edge)) < 1e-9
    # leading-order remainder differs from the exact constant by O(lam^{-2})
    rel = abs(lead.phi(np.zeros(n)) / exact.phi(np.zeros(n)) - 1)
    assert rel == pytest.approx((1 + 5.0 ** -2) ** 0.5 - 1, rel=1e-12)


def test_projected_bubble_derivative_by_finite_differences():
    n = 3
    a = np.array([0.1, -0.05, 0.2])
    lam = 30.0
    dom = unit_ball(n)
    y = np.array([0.3, 0.1, -0.2])
    pb = ProjectedBubble(Bubble(tuple(a), lam, n), dom)
    h = 1e-6
    up = ProjectedBubble(Bubble(tuple(a), lam * (1 + h), n), dom).value(y)
    dn = ProjectedBubble(Bubble(tuple(a), lam * (1 - h), n), dom).value(y)
    assert pb.deriv(y, "scaled_dlambda") == pytest.approx((up - dn) / (2 * h), rel=1e-6)
    e = np.array([0.0, h, 0.0])
    up = ProjectedBubble(Bubble(tuple(a + e), lam, n), dom).value(y)
    dn = ProjectedBubble(Bubble(tuple(a - e), lam, n), dom).value(y)
    assert pb.deriv(y, "scaled_dcenter", 1) == pytest.approx((up - dn) / (2 * h) / lam, rel=1e-5)


def test_projected_bubble_rejects_bad_modes():
    b = Bubble((0.1, 0.0, 0.0), 2.0, 3)
    with pytest.raises(InvalidArgument):
        ProjectedBubble(b, unit_ball(3), "magic")
    with pytest.raises(InvalidArgument):
        ProjectedBubble(b, unit_ball(3), "grid_exact")
    with pytest.raises(InvalidArgument):
        ProjectedBubble(b, unit_ball(4))


def test_ball_grid_solve_tracks_closed_form():
    x = np.array([0.2, 0.0, -0.1])
    errs = []
    for N in (16, 32):
        ax, v = ball_grid_solve(x, N)
        i = np.argmin(np.abs(ax - 0.25))
        j = np.argmin(np.abs(ax - 0.0))
        pt = np.array([ax[i], ax[j], ax[j]])
        errs.append(abs(v[i, j, j] - green_H(unit_ball(3), x, pt)))
    assert errs[1] < errs[0] and errs[1] < 1e-3
    assert np.isnan(v[0, 0, 0])
    with pytest.raises(InvalidArgument):
        ball_grid_solve(x, 16, n=4)


def test_kernel_amplitude_matches_bubble_tail():
    # far from the centre the bubble approaches c0 lam^{-(n-2)/2} |y-a|^{2-n}
    n = 5
    lam = 1e4
    b = Bubble((0.0,) * n, lam, n)
    y = np.array([0.5, 0, 0, 0, 0])
    assert bubble_eval(b, y) == pytest.approx(c0_of(n) * lam ** (-(n - 2) / 2) * 0.5 ** (2 - n), rel=1e-6)
