import math

import numpy as np
import pytest

from bubbletower.core import Bubble
from bubbletower.energy import (PairingDirection, TowerConfig, dirichlet_energy, energy_expansion_terms,
                                energy_numeric, gradient_pairing_expansion, gradient_pairing_numeric,
                                pohozaev_check, tower_eval)
from bubbletower.errors import InvalidArgument
from bubbletower.greenfn import unit_ball
from bubbletower.interaction import BubblePair


def _centred(n, eps, k=1):
    sig = tuple((0.0,) * n for _ in range(k - 1))
    return TowerConfig(n, k, eps, (0.0,) * n, (1.0,) * k, (1.0,) * k, sig)


def test_config_validation():
    with pytest.raises(InvalidArgument):
        TowerConfig(4, 1, 1.5, (0.0,) * 4, (1.0,), (1.0,))
    with pytest.raises(InvalidArgument):
        TowerConfig(4, 2, 1e-3, (0.0,) * 4, (1.0,), (1.0, 1.0))
    with pytest.raises(InvalidArgument):
        TowerConfig(4, 2, 1e-3, (0.0,) * 4, (1.0, 1.0), (1.0, 1.0), ((0.0,) * 3,))
    with pytest.raises(InvalidArgument):
        TowerConfig(4, 1, 1e-3, (0.0,) * 4, (-1.0,), (1.0,))
    with pytest.raises(InvalidArgument):
        PairingDirection(1, "scaled_dcenter")
    with pytest.raises(InvalidArgument):
        PairingDirection(3).check(_centred(4, 1e-3, 2))


def test_scale_schedule_and_window():
    n, k, eps = 5, 3, 1e-6
    cfg = TowerConfig(n, k, eps, (0.1,) + (0.0,) * 4, (1.0, 1.1, 0.9), (1.0, 2.0, 0.5),
                      ((0.2,) + (0.0,) * 4, (0.0, 0.5, 0.0, 0.0, 0.0)))
    base = eps / cfg.L
    for j, lam in enumerate(cfg.lambdas, start=1):
        assert lam == pytest.approx(cfg.rho[j - 1] * base ** (-(2 * (k - j) + 1) / (n - 2)), rel=1e-12)
    assert np.all(np.diff(cfg.lambdas) < 0)
    np.testing.assert_allclose(cfg.centers[1], np.array(cfg.xi) + np.array(cfg.sigma[0]) / cfg.lambdas[1])
    assert list(cfg.gammas) == [-1.0, 1.0, -1.0]
    assert cfg.in_window(0.4)
    assert cfg.window_violations(0.6) == ["rho_2", "rho_3"]


def test_dirichlet_energy_pairing_matches_gradients():
    cfg = _centred(4, 1e-3)
    dom = unit_ball(4)
    a = dirichlet_energy(cfg, dom).value
    b = dirichlet_energy(cfg, dom, method="gradient").value
    assert a == pytest.approx(b, rel=1e-6)
    with pytest.raises(InvalidArgument):
        dirichlet_energy(cfg, dom, method="fourier")


def test_tower_alternates_sign():
    cfg = _centred(3, 1e-3, 2)
    dom = unit_ball(3)
    # rung 1 carries gamma_1 = -1 and is the most concentrated
    assert tower_eval(cfg, dom, np.zeros(3)) < 0
    assert tower_eval(cfg, dom, np.array([0.05, 0, 0])) > 0


def test_radial_and_general_paths_agree():
    dom = unit_ball(3)
    cfg = _centred(3, 1e-2)
    off = cfg.replace(xi=(1e-7, 0.0, 0.0))
    assert energy_numeric(cfg, dom).path == "radial"
    assert energy_numeric(off, dom).path == "unit_ball"
    assert energy_numeric(off, dom).value == pytest.approx(energy_numeric(cfg, dom).value, rel=1e-8)


def test_energy_excess_approaches_expansion():
    dom = unit_ball(4)
    gaps = []
    for eps in (1e-3, 1e-6, 1e-10):
        cfg = _centred(4, eps)
        t = energy_expansion_terms(cfg, dom)
        ex = energy_numeric(cfg, dom).excess
        gaps.append(abs(ex / (t["loglog"] + t["const"] + t["psi"]) - 1))
    assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 0.01


def test_lambda_pairing_matches_expansion():
    dom = unit_ball(4)
    d = PairingDirection(1, "scaled_dlambda")
    errs = [abs(gradient_pairing_numeric(_centred(4, e), dom, d).value
                / gradient_pairing_expansion(_centred(4, e), dom, d) - 1) for e in (1e-3, 1e-6)]
    assert errs[1] < errs[0] < 0.05


def test_centre_pairing_vanishes_by_symmetry():
    r = gradient_pairing_numeric(_centred(4, 1e-3), unit_ball(4), PairingDirection(1, "scaled_dcenter", 2))
    assert r.value == 0.0 and r.path == "radial-symmetry"


def test_amplitude_pairing_tracks_defect():
    dom = unit_ball(4)
    base = _centred(4, 1e-8)
    d = PairingDirection(1)
    hi = base.replace(alpha=(1.05,))
    lo = base.replace(alpha=(0.95,))
    # the pure-power defect dominates away from alpha = 1
    for cfg in (hi, lo):
        num = gradient_pairing_numeric(cfg, dom, d).value
        assert num == pytest.approx(gradient_pairing_expansion(cfg, dom, d), rel=0.05)


def test_pohozaev_self_converges():
    dom = unit_ball(3)
    gaps = [abs(pohozaev_check(Bubble((0.0,) * 3, lam, 3), dom).numeric
                - pohozaev_check(Bubble((0.0,) * 3, lam, 3), dom).expansion) for lam in (20, 80, 320)]
    assert gaps[0] > gaps[1] > gaps[2]
    # remainder O(lam^{-2}) in three dimensions
    assert math.log(gaps[1] / gaps[2], 4) > 1.5


def test_pohozaev_cross_identity_and_log():
    dom = unit_ball(3)
    pr = BubblePair(Bubble((0.0,) * 3, 200.0, 3), Bubble((0.0,) * 3, 5.0, 3))
    r = pohozaev_check(pr, dom, variant="cross_p")
    assert abs(r.identity_gap) < 1e-8 * abs(r.numeric)
    ratios = [pohozaev_check(Bubble((0.0,) * 3, lam, 3), dom, variant="log", eps=1e-3)
              for lam in (20, 320)]
    assert 0.8 < ratios[0].numeric / ratios[0].expansion < ratios[1].numeric / ratios[1].expansion < 1
    with pytest.raises(InvalidArgument):
        pohozaev_check(Bubble((0.0,) * 3, 20.0, 3), dom, variant="log")
    with pytest.raises(InvalidArgument):
        pohozaev_check(Bubble((0.0,) * 3, 20.0, 3), dom, variant="cross")
