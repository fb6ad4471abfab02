"""Bubble-bubble interaction: the quantity eps_ij, its derivatives and the
coupling integral over R^n.

For two bubbles ``(a_i, lam_i)``, ``(a_j, lam_j)`` in dimension ``n``

    eps_ij = (lam_i/lam_j + lam_j/lam_i + lam_i lam_j |a_i - a_j|^2)^{-(n-2)/2}

and ``int delta_i^p delta_j = cbar1 eps_ij (1 + o(1))`` as ``eps_ij -> 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Bubble, bubble_eval, critical_exponent
from .errors import AccuracyFailure, InvalidArgument
from .quadrature import IntegralResult, QuadratureSpec, integrate_domain, integrate_radial

__all__ = [
    "BubblePair",
    "eps_ij",
    "eps_ij_derivs",
    "eps_ladder_asymptotic",
    "eps_ladder_exact",
    "interaction_integral",
]


@dataclass(frozen=True)
class BubblePair:
    b_i: Bubble
    b_j: Bubble

    def __post_init__(self):
        if self.b_i.dim != self.b_j.dim:
            raise InvalidArgument("bubbles of a pair must share the dimension")

    @property
    def dim(self) -> int:
        return self.b_i.dim

    @property
    def same_center(self) -> bool:
        return self.b_i.center == self.b_j.center

    def swapped(self) -> "BubblePair":
        return BubblePair(self.b_j, self.b_i)


def _bracket(pair: BubblePair):
    li, lj = pair.b_i.scale, pair.b_j.scale
    d2 = float(np.sum((pair.b_i.a - pair.b_j.a) ** 2))
    return li, lj, d2, li / lj + lj / li + li * lj * d2


def eps_ij(pair: BubblePair) -> float:
    n = pair.dim
    return _bracket(pair)[3] ** (-(n - 2) / 2)


def eps_ij_derivs(pair: BubblePair) -> dict:
    """Scaled derivatives ``lam_i d/dlam_i``, ``lam_j d/dlam_j`` and ``(1/lam_i) d/da_i``."""
    n = pair.dim
    li, lj, d2, br = _bracket(pair)
    e_pow = br ** (-n / 2)  # eps^{n/(n-2)}
    half = 0.5 * (n - 2)
    return {
        "scaled_dlambda_i": -half * (li / lj - lj / li + li * lj * d2) * e_pow,
        "scaled_dlambda_j": -half * (lj / li - li / lj + li * lj * d2) * e_pow,
        "scaled_dcenter_i": -(n - 2) * lj * (pair.b_i.a - pair.b_j.a) * e_pow,
    }


def eps_ladder_asymptotic(cfg, i: int) -> float:
    """Leading term of ``eps_{i,i+1}`` on the tower schedule (rungs numbered from 1)."""
    if not 1 <= i <= cfg.k - 1:
        raise InvalidArgument(f"rung index must be in [1, {cfg.k - 1}]")
    n = cfg.n
    rho = cfg.rho
    sig = cfg.sigma_full[i]  # sigma_{i+1}
    ratio = (rho[i] / rho[i - 1]) ** ((n - 2) / 2)
    return cfg.eps / cfg.L * ratio * (1.0 + float(sig @ sig)) ** (-(n - 2) / 2)


def eps_ladder_exact(cfg, i: int) -> float:
    """``eps_{i,i+1}`` in the regrouped form with ``t = lam_{i+1}/lam_i``."""
    if not 1 <= i <= cfg.k - 1:
        raise InvalidArgument(f"rung index must be in [1, {cfg.k - 1}]")
    n = cfg.n
    lam = cfg.lambdas
    s = cfg.sigma_full
    t = lam[i] / lam[i - 1]
    w = t * s[i - 1] - s[i]
    return t ** ((n - 2) / 2) / (1.0 + t * t + float(w @ w)) ** ((n - 2) / 2)


def interaction_integral(pair: BubblePair, spec: QuadratureSpec | None = None) -> IntegralResult:
    """Quadrature of ``int_{R^n} delta_i^p delta_j``."""
    n = pair.dim
    p = critical_exponent(n)
    bi, bj = pair.b_i, pair.b_j
    if pair.same_center:
        spec = spec or QuadratureSpec(tol=1e-11, atol=0.0)
        c = bi.a
        spec = spec.with_hints([((0.0,), bi.scale), ((0.0,), bj.scale)])

        def g(r):
            y = c + np.outer(r, np.eye(n)[0])
            return bubble_eval(bi, y) ** p * bubble_eval(bj, y)

        res = integrate_radial(g, math.inf, n, spec)
    else:
        # polar cells in n-1 angles: keep the default modest
        spec = spec or QuadratureSpec(tol=1e-7, atol=0.0)
        spec = spec.with_hints([(bi.center, bi.scale), (bj.center, bj.scale)])
        res = integrate_domain(lambda y: bubble_eval(bi, y) ** p * bubble_eval(bj, y),
                               None, spec, dim=n)
    if not res.converged:
        raise AccuracyFailure("interaction integral did not converge", res.error, res.value)
    return res
