"""Sign-changing tower ansatz, its energy and gradient pairings.

A tower with ``k`` rungs in dimension ``n`` is

    V = sum_j (-1)^j alpha_j P delta_{(xi_j, lam_j)},
    lam_j = (eps/|ln eps|)^{-(2(k-j)+1)/(n-2)} rho_j,   xi_j = xi + sigma_j/lam_j,

with rungs numbered ``j = 1..k`` and ``sigma_1 = 0``.

Energies and pairings are computed without differentiating ``V``: the
Dirichlet part is rewritten as ``int delta_i^p P delta_j`` sums.  When the
domain is the unit ball and every rung is centred at the origin, a radial
path integrates the *excess* over the leading constants directly, term by
term, so that quantities of size ``1e-40`` are resolved to full relative
precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import betainc

from .core import (Bubble, NonlinearityParams, F0_minus_F, bubble_eval, critical_exponent,
                   f0_minus_f, universal_constants)
from .errors import AccuracyFailure, InvalidArgument
from .greenfn import DomainModel, ProjectedBubble, green_H, green_H_grad
from .interaction import BubblePair, eps_ij, eps_ij_derivs
from .quadrature import IntegralResult, QuadratureSpec, integrate_domain, integrate_radial, sphere_area
from .reduced import psi

__all__ = [
    "REGIME_THRESHOLD",
    "TowerConfig",
    "PairingDirection",
    "EnergyResult",
    "PairingResult",
    "PohozaevResult",
    "tower_eval",
    "energy_numeric",
    "energy_expansion",
    "energy_expansion_terms",
    "dirichlet_energy",
    "gradient_pairing_numeric",
    "gradient_pairing_expansion",
    "pohozaev_check",
]

# lam * d(xi, boundary) below this is reported as outside the asymptotic regime
REGIME_THRESHOLD = 50.0


@dataclass(frozen=True)
class TowerConfig:
    """Parameters of the tower.  ``sigma`` lists ``sigma_2..sigma_k``."""

    n: int
    k: int
    eps: float
    xi: tuple
    alpha: tuple
    rho: tuple
    sigma: tuple = ()

    def __post_init__(self):
        n, k = int(self.n), int(self.k)
        if n < 3 or k < 1:
            raise InvalidArgument("need n >= 3 and k >= 1")
        if not 0 < self.eps < 1:
            raise InvalidArgument("eps must lie in (0, 1)")
        xi = tuple(float(v) for v in np.atleast_1d(self.xi))
        alpha = tuple(float(v) for v in np.atleast_1d(self.alpha))
        rho = tuple(float(v) for v in np.atleast_1d(self.rho))
        if len(xi) != n or len(alpha) != k or len(rho) != k:
            raise InvalidArgument("xi needs n entries, alpha and rho need k entries")
        if min(alpha) <= 0 or min(rho) <= 0:
            raise InvalidArgument("amplitudes and rates must be positive")
        sig = np.zeros((k - 1, n)) if len(self.sigma) == 0 else np.asarray(self.sigma, dtype=float)
        if sig.shape != (k - 1, n):
            raise InvalidArgument(f"sigma must have shape ({k - 1}, {n})")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "eps", float(self.eps))
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "sigma", tuple(tuple(r) for r in sig))
        lam = self.lambdas
        if np.any(np.diff(lam) >= 0):
            raise InvalidArgument("scales must decrease strictly along the rungs")

    @property
    def L(self) -> float:
        return -math.log(self.eps)

    @property
    def p(self) -> float:
        return critical_exponent(self.n)

    @property
    def lambdas(self) -> np.ndarray:
        j = np.arange(1, self.k + 1)
        expo = -(2 * (self.k - j) + 1) / (self.n - 2)
        return np.exp(expo * math.log(self.eps / self.L) + np.log(self.rho))

    @property
    def sigma_full(self) -> np.ndarray:
        """``(k, n)`` array of offsets including ``sigma_1 = 0``."""
        return np.vstack([np.zeros((1, self.n)), np.asarray(self.sigma).reshape(self.k - 1, self.n)])

    @property
    def centers(self) -> np.ndarray:
        return np.asarray(self.xi) + self.sigma_full / self.lambdas[:, None]

    @property
    def gammas(self) -> np.ndarray:
        return (-1.0) ** np.arange(1, self.k + 1)

    def bubbles(self) -> list[Bubble]:
        return [Bubble(tuple(c), lam, self.n) for c, lam in zip(self.centers, self.lambdas)]

    def window_violations(self, eta: float) -> list[str]:
        out = []
        for j in range(self.k):
            if not abs(self.alpha[j] - 1) < eta:
                out.append(f"alpha_{j + 1}")
            if not eta < self.rho[j] < 1 / eta:
                out.append(f"rho_{j + 1}")
            if np.linalg.norm(self.sigma_full[j]) > 1 / eta:
                out.append(f"sigma_{j + 1}")
        return out

    def in_window(self, eta: float) -> bool:
        return not self.window_violations(eta)

    def replace(self, **kw) -> "TowerConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class PairingDirection:
    """Test direction: ``P delta_i``, ``lam_i dP delta_i/dlam_i`` or
    ``(1/lam_i) dP delta_i/d(xi_i)_j``.  ``i`` counts rungs from 1, ``j``
    counts coordinates from 0."""

    i: int
    kind: str = "bubble"
    j: int | None = None

    def __post_init__(self):
        if self.i < 1:
            raise InvalidArgument("rung index starts at 1")
        if self.kind not in ("bubble", "scaled_dlambda", "scaled_dcenter"):
            raise InvalidArgument(f"unknown direction kind {self.kind!r}")
        if self.kind == "scaled_dcenter" and (self.j is None or self.j < 0):
            raise InvalidArgument("scaled_dcenter needs a coordinate index j >= 0")

    def check(self, cfg: TowerConfig):
        if self.i > cfg.k or (self.j is not None and self.j >= cfg.n):
            raise InvalidArgument("direction index out of range for this tower")


@dataclass(frozen=True)
class EnergyResult:
    value: float
    excess: float  # value minus sum_i (alpha_i^2/2 - alpha_i^{p+1}/(p+1)) S
    error: float
    converged: bool
    path: str

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class PairingResult:
    value: float
    error: float
    converged: bool
    path: str

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class PohozaevResult:
    numeric: float
    expansion: float
    shift: float  # numeric minus its O(1) constant (self/log variants: the whole numeric otherwise)
    error: float
    in_regime: bool
    identity_gap: float | None = None


# ---------------------------------------------------------------------------
# pointwise assembly


class _Tower:
    """Projected bubbles of a tower and helpers to evaluate them on batches."""

    def __init__(self, n, bubbles, dom: DomainModel, mode: str):
        if dom.dim != n:
            raise InvalidArgument("domain and tower dimensions differ")
        self.n = n
        self.p = critical_exponent(n)
        self.dom = dom
        self.pbs = [ProjectedBubble(b, dom, mode) for b in bubbles]
        self.radial = dom.kind == "unit_ball" and all(pb.radial for pb in self.pbs)
        if self.radial:
            origin = np.zeros(n)
            self.phi0 = np.array([float(pb.phi(origin)) for pb in self.pbs])

    @property
    def scales(self):
        return [pb.bubble.scale for pb in self.pbs]

    def fields(self, y):
        D = np.stack([bubble_eval(pb.bubble, y) for pb in self.pbs])
        if self.radial:
            Phi = np.broadcast_to(self.phi0[:, None], D.shape)
        else:
            Phi = np.stack([pb.phi(y) for pb in self.pbs])
        return D, Phi

    def regime(self) -> float:
        return min(pb.bubble.scale * float(self.dom.distance_to_boundary(pb.bubble.a)) for pb in self.pbs)

    def integrate(self, fn, spec: QuadratureSpec) -> IntegralResult:
        n = self.n
        if self.radial:
            e1 = np.eye(n)[0]
            hints = [((0.0,), lam) for lam in self.scales]
            return integrate_radial(lambda r: fn(r[:, None] * e1), 1.0, n, spec.with_hints(hints))
        hints = [(pb.bubble.center, pb.bubble.scale) for pb in self.pbs]
        return integrate_domain(fn, self.dom, spec.with_hints(hints))


def _radial_default():
    return QuadratureSpec(tol=1e-10, atol=0.0)


def _domain_default():
    return QuadratureSpec(tol=1e-6, atol=0.0)


def _spec_for(tw: _Tower, spec):
    if spec is not None:
        return spec
    return _radial_default() if tw.radial else _domain_default()


def _one_minus_pow(t, p, signed):
    """``1 - |1-t|^p`` (``signed=False``) or ``1 - f_0(1-t)`` without cancellation."""
    t = np.asarray(t, dtype=float)
    below = t < 1.0
    tb = np.where(below, t, 0.0)
    ta = np.where(below, 1.0, t)
    small = -np.expm1(p * np.log1p(-tb))
    big = 1.0 + (ta - 1.0) ** p if signed else 1.0 - (ta - 1.0) ** p
    return np.where(below, small, big)


def _pow_excess(x, q, signed):
    """``|1+x|^q - 1`` or ``f(1+x) - 1`` with ``f(u) = |u|^{q-1} u``, accurate for small ``x``."""
    above = x > -1.0
    xa = np.where(above, x, 0.0)
    small = np.expm1(q * np.log1p(xa))
    xb = np.where(above, -2.0, x)
    big = np.abs(1.0 + xb) ** q
    return np.where(above, small, -1.0 - big if signed else big - 1.0)


def _dominant_split(cP):
    """Split ``V = sum_i cP_i`` as ``a + b`` with ``a`` the largest term in modulus."""
    m = np.argmax(np.abs(cP), axis=0)
    idx = np.arange(cP.shape[1])
    a = cP[m, idx]
    rest = cP.copy()
    rest[m, idx] = 0.0
    return a, rest.sum(axis=0), rest


def _ratio(b, a):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(a != 0, b / np.where(a != 0, a, 1.0), 0.0)


def _cross_F0(cP, p):
    """``sum_i F_0(cP_i) - F_0(sum_i cP_i)`` without cancellation."""
    if cP.shape[0] == 1:
        return np.zeros(cP.shape[1])
    a, b, rest = _dominant_split(cP)
    others = (np.abs(rest) ** (p + 1)).sum(axis=0)
    return (others - np.abs(a) ** (p + 1) * _pow_excess(_ratio(b, a), p + 1, False)) / (p + 1)


def _cross_f0(cP, p):
    """``f_0(sum_i cP_i) - sum_i f_0(cP_i)`` without cancellation."""
    if cP.shape[0] == 1:
        return np.zeros(cP.shape[1])
    a, b, rest = _dominant_split(cP)
    fa = np.abs(a) ** (p - 1) * a
    return fa * _pow_excess(_ratio(b, a), p, True) - (np.abs(rest) ** (p - 1) * rest).sum(axis=0)


def _pair_sum(c, D, Dp):
    """``1/2 sum_{i != j} c_i c_j D_i^p D_j``."""
    out = np.zeros(D.shape[1])
    for i in range(D.shape[0]):
        for j in range(i + 1, D.shape[0]):
            out += 0.5 * c[i] * c[j] * (Dp[i] * D[j] + Dp[j] * D[i])
    return out


def _tail(n, lam, S):
    """``int_{|y|>1} delta_{(0,lam)}^{p+1}`` via the regularised incomplete beta function."""
    il2 = lam ** -2.0
    return S * betainc(n / 2, n / 2, il2 / (1.0 + il2))


def _check_result(res: IntegralResult, what: str, strict: bool):
    if strict and not res.converged:
        raise AccuracyFailure(f"{what} quadrature did not converge", res.error, res.value)


def _tower(cfg: TowerConfig, dom: DomainModel, mode: str) -> _Tower:
    return _Tower(cfg.n, cfg.bubbles(), dom, mode)


def tower_eval(cfg: TowerConfig, dom: DomainModel, y, mode: str = "leading_order"):
    """``V(y)`` for points ``y`` of shape ``(..., n)``."""
    tw = _tower(cfg, dom, mode)
    y = np.asarray(y, dtype=float)
    c = cfg.gammas * np.asarray(cfg.alpha)
    vals = sum(ci * pb.value(y) for ci, pb in zip(c, tw.pbs))
    return vals if np.ndim(vals) else float(vals)


# ---------------------------------------------------------------------------
# energy


def _energy_density(cfg, tw: _Tower, params):
    p = tw.p
    alpha = np.asarray(cfg.alpha)
    c = cfg.gammas * alpha
    wpow = alpha ** (p + 1) / (p + 1)

    def dens(y):
        D, Phi = tw.fields(y)
        P = D - Phi
        V = c @ P
        Dp = D ** p
        cDp = c @ Dp
        t1 = _pair_sum(c, D, Dp)
        t2 = -0.5 * cDp * (c @ Phi)
        # F_0(alpha delta) - F_0(alpha P delta), bubble by bubble
        t3 = wpow @ (D * Dp * _one_minus_pow(Phi / D, p + 1, signed=False))
        # sum_i F_0(c_i P_i) - F_0(V): interaction part of the potential
        t4 = _cross_F0(c[:, None] * P, p)
        t5 = F0_minus_F(params, V)
        return t1 + t2 + t3 + t4 + t5

    return dens


def energy_numeric(cfg: TowerConfig, dom: DomainModel, spec: QuadratureSpec | None = None,
                   mode: str = "leading_order", strict: bool = True) -> EnergyResult:
    """Quadrature of ``I_eps(V) = 1/2 int |grad V|^2 - int F_eps(V)``.

    ``excess`` is measured from ``sum_i (alpha_i^2/2 - alpha_i^{p+1}/(p+1)) S``.
    """
    consts = universal_constants(cfg.n)
    S, p = consts.Sn_pow, consts.p
    tw = _tower(cfg, dom, mode)
    spec = _spec_for(tw, spec)
    params = NonlinearityParams(cfg.eps, cfg.n)
    alpha = np.asarray(cfg.alpha)
    w = 0.5 * alpha ** 2 - alpha ** (p + 1) / (p + 1)
    base = float(w.sum() * S)
    dens = _energy_density(cfg, tw, params)
    if tw.radial:
        res = tw.integrate(dens, spec)
        _check_result(res, "energy", strict)
        tails = sum(wi * _tail(cfg.n, lam, S) for wi, lam in zip(w, tw.scales))
        excess = res.value - tails
        return EnergyResult(base + excess, excess, res.error, res.converged, "radial")

    def full(y):
        D, _ = tw.fields(y)
        return dens(y) + w @ D ** (p + 1)

    res = tw.integrate(full, spec)
    _check_result(res, "energy", strict)
    return EnergyResult(res.value, res.value - base, res.error, res.converged, dom.kind)


def dirichlet_energy(cfg: TowerConfig, dom: DomainModel, spec: QuadratureSpec | None = None,
                     mode: str = "leading_order", method: str = "pairing") -> IntegralResult:
    """``1/2 int |grad V|^2`` by the delta^p pairing or by direct gradients."""
    tw = _tower(cfg, dom, mode)
    spec = _spec_for(tw, spec)
    c = cfg.gammas * np.asarray(cfg.alpha)
    p = tw.p
    if method == "pairing":
        def fn(y):
            D, Phi = tw.fields(y)
            return 0.5 * (c @ D ** p) * (c @ (D - Phi))
    elif method == "gradient":
        def fn(y):
            g = sum(ci * pb.grad(y) for ci, pb in zip(c, tw.pbs))
            return 0.5 * np.sum(g * g, axis=-1)
    else:
        raise InvalidArgument("method must be 'pairing' or 'gradient'")
    return tw.integrate(fn, spec)


def energy_expansion_terms(cfg: TowerConfig, dom: DomainModel, consts=None) -> dict:
    """Leading terms of the tower energy, returned separately.

    The logarithmic terms are written at ``alpha = 1``.
    """
    n, k, eps, L = cfg.n, cfg.k, cfg.eps, cfg.L
    consts = consts or universal_constants(n)
    S, p = consts.Sn_pow, consts.p
    alpha = np.asarray(cfg.alpha)
    coef = (n - 2) * S / (2 * n)
    odd = 2 * (k - np.arange(1, k + 1)) + 1
    return {
        "alpha": float(np.sum(0.5 * alpha ** 2 - alpha ** (p + 1) / (p + 1)) * S),
        "loglog": k * coef * eps * math.log(L) * (1 + 1 / L),
        "const": coef * eps * float(np.sum(np.log(odd / 2))),
        "psi": eps / L * psi(cfg.rho, cfg.sigma, cfg.xi, dom, consts),
    }


def energy_expansion(cfg: TowerConfig, dom: DomainModel, consts=None) -> float:
    return float(sum(energy_expansion_terms(cfg, dom, consts).values()))


# ---------------------------------------------------------------------------
# gradient pairings


def _direction_field(tw: _Tower, d: PairingDirection):
    pb = tw.pbs[d.i - 1]
    if d.kind == "bubble":
        return pb.value
    return lambda y: pb.deriv(y, d.kind, d.j)


def gradient_pairing_numeric(cfg: TowerConfig, dom: DomainModel, d: PairingDirection,
                             spec: QuadratureSpec | None = None, mode: str = "leading_order",
                             strict: bool = True) -> PairingResult:
    """``<grad I_eps(V), w> = int grad V . grad w - int f_eps(V) w``.

    The integrand is regrouped so that every piece is small where it is
    evaluated: the amplitude defect, the projection defect, the interaction
    of the rungs and the log damping.
    """
    d.check(cfg)
    tw = _tower(cfg, dom, mode)
    spec = _spec_for(tw, spec)
    if tw.radial and d.kind == "scaled_dcenter":
        # odd in one coordinate about the common centre
        return PairingResult(0.0, 0.0, True, "radial-symmetry")
    p = tw.p
    params = NonlinearityParams(cfg.eps, cfg.n)
    alpha = np.asarray(cfg.alpha)
    gam = cfg.gammas
    c = gam * alpha
    w_fn = _direction_field(tw, d)

    def fn(y):
        D, Phi = tw.fields(y)
        P = D - Phi
        V = c @ P
        Dp = D ** p
        b = (gam * (alpha - alpha ** p)) @ Dp
        b = b + (gam * alpha ** p) @ (Dp * _one_minus_pow(Phi / D, p, signed=True))
        b = b - _cross_f0(c[:, None] * P, p)
        b = b + f0_minus_f(params, V)
        return b * w_fn(y)

    res = tw.integrate(fn, spec)
    _check_result(res, "pairing", strict)
    return PairingResult(res.value, res.error, res.converged, "radial" if tw.radial else dom.kind)


def gradient_pairing_expansion(cfg: TowerConfig, dom: DomainModel, d: PairingDirection,
                               consts=None) -> float:
    """Displayed leading terms of the pairing, all remainders dropped."""
    d.check(cfg)
    n = cfg.n
    consts = consts or universal_constants(n)
    S, cb, p = consts.Sn_pow, consts.cbar1, consts.p
    i = d.i - 1
    alpha, gam, lam = np.asarray(cfg.alpha), cfg.gammas, cfg.lambdas
    xs = cfg.centers
    bubbles = cfg.bubbles()
    ai, gi, li = alpha[i], gam[i], lam[i]
    if d.kind == "bubble":
        return float(gi * ai * (1 - ai ** (p - 1)) * S)
    others = [j for j in range(cfg.k) if j != i]
    if d.kind == "scaled_dlambda":
        val = gi * consts.Gamma1 * ai ** p * cfg.eps / math.log(li)
        val += (n - 2) * cb * gi * ai / 2 * (1 - 2 * ai ** (p - 1)) * green_H(dom, xs[i], xs[i]) / li ** (n - 2)
        for j in others:
            der = eps_ij_derivs(BubblePair(bubbles[i], bubbles[j]))["scaled_dlambda_i"]
            h = green_H(dom, xs[i], xs[j]) / (li * lam[j]) ** ((n - 2) / 2)
            val += cb * gam[j] * alpha[j] * (1 - alpha[j] ** (p - 1) - ai ** (p - 1)) * (der + (n - 2) / 2 * h)
        return float(val)
    jc = d.j
    dH = green_H_grad(dom, xs[i], xs[i], "first")[jc]
    val = gi * (ai ** p - ai / 2) * cb / li ** (n - 1) * dH
    for j in others:
        der = eps_ij_derivs(BubblePair(bubbles[i], bubbles[j]))["scaled_dcenter_i"][jc]
        dHa = green_H_grad(dom, xs[i], xs[j], "first")[jc] / (li * lam[j]) ** ((n - 2) / 2)
        val += cb * gam[j] * alpha[j] * (1 - alpha[j] ** (p - 1) - ai ** (p - 1)) * (der - dHa / li)
    return float(val)


# ---------------------------------------------------------------------------
# Pohozaev-type integrals


def _pair_parts(b):
    if isinstance(b, BubblePair):
        return b.b_i, b.b_j
    return b, None


def _self_expansion(b: Bubble, dom, consts):
    n = b.dim
    R = green_H(dom, b.a, b.a)
    return -(n - 2) / 2 * consts.Sn_pow + n * consts.cbar1 * R / b.scale ** (n - 2)


def _cross_terms(bi: Bubble, bj: Bubble, dom, xi):
    n = bi.dim
    li, lj = bi.scale, bj.scale
    pair = BubblePair(bi, bj)
    e = eps_ij(pair)
    der = eps_ij_derivs(pair)
    scale = (li * lj) ** ((n - 2) / 2)
    h = green_H(dom, bi.a, bj.a) / scale
    br = li / lj + lj / li + li * lj * float(np.sum((bi.a - bj.a) ** 2))
    # unscaled centre derivatives of eps_ij
    de_dxi = -(n - 2) * li * lj * (bi.a - bj.a) * br ** (-n / 2)
    de_dxj = -de_dxi
    dHa = green_H_grad(dom, bi.a, bj.a, "first") / scale
    dHb = green_H_grad(dom, bi.a, bj.a, "second") / scale
    return dict(e=e, h=h, dli=der["scaled_dlambda_i"], dlj=der["scaled_dlambda_j"],
                mi=float((bi.a - xi) @ (de_dxi - dHa)), mj=float((bj.a - xi) @ (de_dxj - dHb)))


def pohozaev_check(b, dom: DomainModel, xi=None, variant: str = "self",
                   spec: QuadratureSpec | None = None, *, mode: str = "leading_order",
                   eps: float | None = None, alpha: float = 1.0, gamma: float = -1.0,
                   threshold: float = REGIME_THRESHOLD) -> PohozaevResult:
    """Quadrature of a Pohozaev-type integral next to its expansion.

    ``variant``:

    * ``self``: ``int P delta^p (x - xi) . grad P delta``
    * ``cross``: ``int P delta_j^p (x - xi) . grad P delta_i`` for a pair
    * ``cross_p``: ``p int |P delta_i|^{p-1} P delta_j (x - xi) . grad P delta_i``;
      ``identity_gap`` compares it with ``-n int P delta_i^p P delta_j`` minus the
      ``cross`` integral of the swapped pair
    * ``log``: ``int [f_eps - f_0](alpha gamma P delta) (x - xi) . grad P delta``
      (needs ``eps``)
    """
    bi, bj = _pair_parts(b)
    n = bi.dim
    consts = universal_constants(n)
    S, cb, p = consts.Sn_pow, consts.cbar1, consts.p
    xi = np.zeros(n) if xi is None else np.asarray(xi, dtype=float)
    if variant in ("cross", "cross_p") and bj is None:
        raise InvalidArgument(f"variant {variant!r} needs a BubblePair")
    if variant not in ("self", "cross", "cross_p", "log"):
        raise InvalidArgument(f"unknown variant {variant!r}")
    bubbles = [bi] if bj is None else [bi, bj]
    tw = _Tower(n, bubbles, dom, mode)
    radial = tw.radial and not np.any(xi)
    spec = spec or (_radial_default() if radial else _domain_default())
    pi = tw.pbs[0]
    in_regime = tw.regime() >= threshold

    def f0(u):
        return np.abs(u) ** (p - 1) * u

    def lever(pb, y):
        return np.sum((y - xi) * pb.grad(y), axis=-1)

    def run(fn):
        res = tw.integrate(fn, spec) if radial else integrate_domain(
            fn, dom, spec.with_hints([(q.bubble.center, q.bubble.scale) for q in tw.pbs]))
        if not res.converged:
            raise AccuracyFailure(f"{variant} integral did not converge", res.error, res.value)
        return res

    if variant == "self":
        expansion = _self_expansion(bi, dom, consts)
        if radial:
            # split off int_B delta^p r delta' analytically (boundary flux and tail)
            def fn(y):
                D = bubble_eval(bi, y)
                t = float(pi.phi(np.zeros(n))) / D
                return -D ** p * _one_minus_pow(t, p, signed=True) * lever(pi, y)

            res = run(fn)
            d1 = bubble_eval(bi, np.eye(n)[0])
            shift = (n - 2) / 2 * _tail(n, bi.scale, S) + sphere_area(n) * d1 ** (p + 1) / (p + 1) + res.value
            return PohozaevResult(shift - (n - 2) / 2 * S, expansion, shift, res.error, in_regime)
        res = run(lambda y: f0(pi.value(y)) * lever(pi, y))
        return PohozaevResult(res.value, expansion, res.value + (n - 2) / 2 * S, res.error, in_regime)

    if variant == "log":
        if eps is None:
            raise InvalidArgument("the log variant needs eps")
        params = NonlinearityParams(eps, n)
        res = run(lambda y: -f0_minus_f(params, alpha * gamma * pi.value(y)) * lever(pi, y))
        L = math.log((n - 2) / 2 * math.log(bi.scale))
        expansion = (n - 2) / 2 * gamma * alpha ** p * S * eps * L
        return PohozaevResult(res.value, expansion, res.value, res.error, in_regime)

    pj = tw.pbs[1]
    t = _cross_terms(bi, bj, dom, xi)
    if variant == "cross":
        expansion = (-(n - 2) / 2 * cb * (t["e"] - t["h"]) - cb * (t["dlj"] + (n - 2) / 2 * t["h"])
                     + cb * t["mj"])
        res = run(lambda y: f0(pj.value(y)) * lever(pi, y))
        return PohozaevResult(res.value, expansion, res.value, res.error, in_regime)

    expansion = (-(n + 2) / 2 * cb * (t["e"] - t["h"]) + cb * (t["dli"] + (n - 2) / 2 * t["h"])
                 - cb * t["mi"])
    res = run(lambda y: p * np.abs(pi.value(y)) ** (p - 1) * pj.value(y) * lever(pi, y))
    a = run(lambda y: f0(pi.value(y)) * pj.value(y))
    swapped = run(lambda y: f0(pi.value(y)) * lever(pj, y))
    rhs = -n * a.value - swapped.value
    return PohozaevResult(res.value, expansion, res.value, res.error + n * a.error + swapped.error,
                          in_regime, identity_gap=res.value - rhs)
