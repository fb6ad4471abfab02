"""Numerical checks for sign-changing bubble towers of the slightly subcritical
problem ``-Delta u = |u|^{p-1} u [ln(e + |u|)]^{-eps}`` on bounded domains.

Modules:

* ``core``: bubbles, the damped nonlinearity, dimensional constants
* ``quadrature``: adaptive integration for sharply concentrated integrands
* ``greenfn``: Green's function regular parts, Robin function, projected bubbles
* ``interaction``: the bubble-bubble interaction quantity and integral
* ``energy``: tower energy, gradient pairings and Pohozaev-type integrals
* ``reduced``: the reduced energy, its critical points and degree certification
* ``suites``: batch verification suites behind the ``bubbletower`` command
"""

from .core import (Bubble, NonlinearityParams, UniversalConstants, bubble_eval, critical_exponent,
                   f_eval, universal_constants)
from .energy import (PairingDirection, TowerConfig, energy_expansion, energy_numeric,
                     gradient_pairing_expansion, gradient_pairing_numeric, pohozaev_check)
from .errors import (AccuracyFailure, BubbleTowerError, ConsistencyFailure, InvalidArgument,
                     NoConvergence)
from .greenfn import ProjectedBubble, box, green_H, robin, unit_ball
from .interaction import BubblePair, eps_ij, interaction_integral
from .quadrature import QuadratureSpec, integrate_domain, integrate_radial
from .reduced import (ReducedPoint, Region, critical_point_closed_form, critical_point_newton, psi,
                      psi_hat, psi_hat_grad, stable_critical_certify, tower_prediction)
from .suites import SuiteConfig, fit_order, run_suite

__version__ = "0.1.0"

__all__ = [
    "AccuracyFailure", "Bubble", "BubblePair", "BubbleTowerError", "ConsistencyFailure",
    "InvalidArgument", "NoConvergence", "NonlinearityParams", "PairingDirection",
    "ProjectedBubble", "QuadratureSpec", "ReducedPoint", "Region", "SuiteConfig", "TowerConfig",
    "UniversalConstants", "box", "bubble_eval", "critical_exponent", "critical_point_closed_form",
    "critical_point_newton", "energy_expansion", "energy_numeric", "eps_ij", "f_eval", "fit_order",
    "gradient_pairing_expansion", "gradient_pairing_numeric", "green_H", "integrate_domain",
    "integrate_radial", "interaction_integral", "pohozaev_check", "psi", "psi_hat", "psi_hat_grad",
    "robin", "run_suite", "stable_critical_certify", "tower_prediction", "universal_constants",
    "unit_ball",
]
