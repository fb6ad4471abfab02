import numpy as np
import pytest

from bubbletower.errors import InvalidArgument
from bubbletower.greenfn import robin, robin_grad, unit_ball
from bubbletower.reduced import (ReducedPoint, Region, critical_point_closed_form, critical_point_newton,
                                 phi_props, psi, psi_hat, psi_hat_grad, psi_hat_hess, rho_from_s,
                                 s_from_rho, stable_critical_certify, tower_prediction)


def _point(n, k, seed=0):
    rng = np.random.default_rng(seed)
    s = rng.uniform(0.5, 2.0, k)
    sig = rng.uniform(-0.5, 0.5, (k - 1, n))
    xi = rng.uniform(-0.2, 0.2, n)
    return ReducedPoint(s, sig, xi)


def _fd4(f, x, i, h):
    e = np.zeros_like(x)
    e[i] = h
    return (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h)


def _as_fn(pt, dom, fn):
    k, n = pt.k, pt.n

    def wrap(v):
        q = ReducedPoint(v[:k], v[k:k + (k - 1) * n].reshape(k - 1, n), v[k + (k - 1) * n:])
        return fn(q, dom)
    return wrap


def test_s_and_rho_round_trip():
    rho = np.array([3.0, 1.5, 0.2])
    np.testing.assert_allclose(rho_from_s(s_from_rho(rho)), rho)


@pytest.mark.parametrize("n,k", [(3, 1), (4, 3), (6, 2)])
def test_psi_hat_is_psi_in_new_variables(n, k):
    dom = unit_ball(n)
    pt = _point(n, k)
    assert psi_hat(pt, dom) == pytest.approx(psi(rho_from_s(pt.s), pt.sigma, pt.xi, dom), rel=1e-12)


@pytest.mark.parametrize("n,k", [(3, 2), (5, 3), (8, 2)])
def test_gradient_and_hessian_by_finite_differences(n, k):
    dom = unit_ball(n)
    pt = _point(n, k, seed=n)
    x = pt.vector()
    f = _as_fn(pt, dom, psi_hat)
    g = psi_hat_grad(pt, dom)
    for i in range(x.size):
        h = 1e-4 * max(abs(x[i]), 0.1)
        assert g[i] == pytest.approx(_fd4(f, x, i, h), rel=1e-7, abs=1e-9 * max(1.0, abs(g).max()))
    H = psi_hat_hess(pt, dom)
    gf = _as_fn(pt, dom, psi_hat_grad)
    for i in range(x.size):
        h = 1e-4 * max(abs(x[i]), 0.1)
        np.testing.assert_allclose(H[:, i], _fd4(gf, x, i, h), rtol=1e-6, atol=1e-7 * np.abs(H).max())
    np.testing.assert_allclose(H, H.T)


@pytest.mark.parametrize("n,k", [(3, 1), (4, 2), (6, 4)])
def test_closed_form_zeroes_the_s_gradient(n, k):
    dom = unit_ball(n)
    sig = np.full((k - 1, n), 0.1)
    xi = np.linspace(-0.1, 0.2, n)
    s = critical_point_closed_form(k, sig, xi, dom)
    g = psi_hat_grad(ReducedPoint(s, sig, xi), dom)[:k]
    assert np.max(np.abs(g * s)) < 1e-10


def test_newton_recovers_closed_form():
    n, k = 5, 3
    dom = unit_ball(n)
    sig = np.zeros((k - 1, n))
    xi = np.zeros(n)
    s = critical_point_closed_form(k, sig, xi, dom)
    for f in (2.0, 0.5):
        out = critical_point_newton(ReducedPoint(s * f, sig, xi), dom)
        np.testing.assert_allclose(out.s, s, rtol=1e-10)
        assert out.inertia[2] == 0


def test_full_newton_finds_the_centre():
    n, k = 6, 2
    dom = unit_ball(n)
    start = ReducedPoint((1.3, 0.9), np.full((1, n), 0.1), np.full(n, 0.05))
    out = critical_point_newton(start, dom, fix="none")
    assert np.max(np.abs(out.sigma)) < 1e-8 and np.max(np.abs(out.xi)) < 1e-8
    np.testing.assert_allclose(out.s, critical_point_closed_form(k, None, np.zeros(n), dom), rtol=1e-8)
    with pytest.raises(InvalidArgument):
        critical_point_newton(start, dom, fix="xi")


def test_prediction_rates_and_limits():
    dom = unit_ball(6)
    out = tower_prediction(1e-6, 2, np.zeros(6), dom)
    assert out["lambdas"][0] > out["lambdas"][1]
    assert set(out["k2_limits"]) == {"Lambda", "scale_residual", "gamma2_residual"}
    np.testing.assert_allclose(out["C"], out["rho"] ** 4)
    with pytest.raises(InvalidArgument):
        tower_prediction(2.0, 2, np.zeros(6), dom)


def test_phi_properties():
    pr = phi_props(1.0, 4)
    assert pr["d1"] == 0.0 and pr["d2"] == pytest.approx(-2.0)
    assert pr["value"] == pytest.approx(0.25)
    with pytest.raises(InvalidArgument):
        phi_props(0.0, 4)


def test_degree_of_robin_gradient_is_one():
    dom = unit_ball(3)
    rep = stable_critical_certify(lambda x: robin_grad(dom, x), Region.ball((0, 0, 0), 0.5), dom, starts=16)
    assert rep.certified and rep.degree == 1 and len(rep.zeros) == 1


def test_degree_of_reflection_and_degenerate_cases():
    reg = Region.box((-1, -1, -1), (1, 1, 1))
    rep = stable_critical_certify(lambda x: x * np.array([1.0, 1.0, -1.0]), reg, starts=8)
    assert rep.degree == -1 and rep.certified
    # two opposite zeros cancel
    g = lambda x: np.array([x[0] ** 2 - 0.25, x[1], x[2]])
    rep = stable_critical_certify(g, reg, starts=32)
    assert rep.degree == 0 and not rep.certified and len(rep.zeros) == 2
    with pytest.raises(InvalidArgument):
        stable_critical_certify(lambda x: x, Region.ball((0, 0, 0), 1.5), unit_ball(3))


def test_robin_is_minimal_at_the_centre_of_the_ball():
    dom = unit_ball(4)
    assert robin(dom, np.zeros(4)) == 1.0
    assert robin(dom, np.array([0.1, 0, 0, 0])) > 1.0
