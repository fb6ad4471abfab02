"""Standard bubbles, the log-damped nonlinearity and the dimensional constants.

Throughout, ``n`` is the dimension, ``p = (n+2)/(n-2)`` the critical exponent
and ``c0 = (n(n-2))^{(n-2)/4}``, so that

    delta_{(a, lam)}(y) = c0 lam^{(n-2)/2} / (1 + lam^2 |y-a|^2)^{(n-2)/2}

solves ``-Delta u = u^p`` on R^n.  The nonlinearity is

    f_eps(u) = |u|^{p-1} u / ln(e + |u|)^eps

whose antiderivative ``F_eps`` has no closed form.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import AccuracyFailure, ConsistencyFailure, InvalidArgument
from .quadrature import QuadratureSpec, gauss_legendre, integrate_radial

__all__ = [
    "SUPPORTED_DIMS",
    "Bubble",
    "NonlinearityParams",
    "UniversalConstants",
    "critical_exponent",
    "c0_of",
    "bubble_eval",
    "bubble_deriv",
    "bubble_grad",
    "f_eval",
    "f0_minus_f",
    "F_eval",
    "F_array",
    "F0_minus_F",
    "universal_constants",
    "inequality_ratios",
    "calibrate_inequalities",
    "load_calibration",
]

SUPPORTED_DIMS = range(3, 9)


def critical_exponent(n: int) -> float:
    return (n + 2) / (n - 2)


def c0_of(n: int) -> float:
    return (n * (n - 2)) ** ((n - 2) / 4)


def _check_dim(n):
    if int(n) != n or n < 3:
        raise InvalidArgument(f"dimension must be an integer >= 3, got {n}")


@dataclass(frozen=True)
class Bubble:
    center: tuple
    scale: float
    dim: int

    def __post_init__(self):
        _check_dim(self.dim)
        c = tuple(float(x) for x in np.atleast_1d(self.center))
        if len(c) != self.dim:
            raise InvalidArgument(f"center has {len(c)} coordinates, expected {self.dim}")
        if not self.scale > 0:
            raise InvalidArgument("scale must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def a(self) -> np.ndarray:
        return np.array(self.center)

    @property
    def peak(self) -> float:
        return c0_of(self.dim) * self.scale ** ((self.dim - 2) / 2)


@dataclass(frozen=True)
class NonlinearityParams:
    eps: float
    dim: int

    def __post_init__(self):
        _check_dim(self.dim)
        if not self.eps >= 0:
            raise InvalidArgument("eps must be >= 0")

    @property
    def p(self) -> float:
        return critical_exponent(self.dim)


def _points(b: Bubble, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != b.dim:
        raise InvalidArgument(f"point has {y.shape[-1]} coordinates, expected {b.dim}")
    return y


def bubble_eval(b: Bubble, y) -> np.ndarray | float:
    """Bubble value at ``y`` (shape ``(..., n)``)."""
    y = _points(b, y)
    n, lam = b.dim, b.scale
    d2 = np.sum((y - b.a) ** 2, axis=-1)
    out = c0_of(n) * lam ** ((n - 2) / 2) * (1.0 + lam * lam * d2) ** (-(n - 2) / 2)
    return out if np.ndim(out) else float(out)


def bubble_deriv(b: Bubble, y, which: str = "scaled_dlambda", j: int | None = None):
    """Scaled parameter derivatives of the bubble.

    ``which="scaled_dlambda"`` gives ``lam * d(delta)/d(lam)``;
    ``which="scaled_dcenter"`` with coordinate ``j`` gives ``(1/lam) d(delta)/d(a_j)``.
    """
    y = _points(b, y)
    n, lam = b.dim, b.scale
    diff = y - b.a
    q = lam * lam * np.sum(diff ** 2, axis=-1)
    d = c0_of(n) * lam ** ((n - 2) / 2) * (1.0 + q) ** (-(n - 2) / 2)
    if which == "scaled_dlambda":
        out = 0.5 * (n - 2) * d * (1.0 - q) / (1.0 + q)
    elif which == "scaled_dcenter":
        if j is None or not 0 <= j < n:
            raise InvalidArgument(f"coordinate index must be in [0, {n})")
        out = (n - 2) * lam * diff[..., j] * d / (1.0 + q)
    else:
        raise InvalidArgument(f"unknown derivative {which!r}")
    return out if np.ndim(out) else float(out)


def bubble_grad(b: Bubble, y) -> np.ndarray:
    """Spatial gradient of the bubble, shape ``(..., n)``."""
    y = _points(b, y)
    n, lam = b.dim, b.scale
    diff = y - b.a
    q = lam * lam * np.sum(diff ** 2, axis=-1)
    d = c0_of(n) * lam ** ((n - 2) / 2) * (1.0 + q) ** (-(n - 2) / 2)
    return -(n - 2) * (lam * lam * d / (1.0 + q))[..., None] * diff


# ---------------------------------------------------------------------------
# nonlinearity


def f_eval(params: NonlinearityParams, u, order: int = 0):
    """``f_eps`` and its first two derivatives, by explicit differentiation."""
    p, eps = params.p, params.eps
    u = np.asarray(u, dtype=float)
    a = np.abs(u)
    s = np.sign(u)
    L = np.log(math.e + a)
    damp = L ** (-eps)
    with np.errstate(divide="ignore", invalid="ignore"):
        if order == 0:
            out = s * a ** p * damp
        elif order == 1:
            out = p * a ** (p - 1) * damp - eps * a ** p * damp / (L * (math.e + a))
        elif order == 2:
            ea = math.e + a
            mag = (p * (p - 1) * a ** (p - 2) * damp
                   - 2 * p * eps * a ** (p - 1) * damp / (L * ea)
                   + eps * a ** p * damp / (L * ea ** 2) * ((eps + 1) / L + 1.0))
            out = np.where(a > 0, s * mag, 0.0)
        else:
            raise InvalidArgument("order must be 0, 1 or 2")
    return out if np.ndim(out) else float(out)


def f0_minus_f(params: NonlinearityParams, u):
    """``f_0(u) - f_eps(u)`` evaluated without cancellation."""
    p, eps = params.p, params.eps
    u = np.asarray(u, dtype=float)
    a = np.abs(u)
    lnL = np.log(np.log(math.e + a))
    out = np.sign(u) * a ** p * -np.expm1(-eps * lnL)
    return out if np.ndim(out) else float(out)


# Panels on [0, 1] in tau for F(s) = |s|^{p+1} int_0^1 tau^p w(|s| tau) dtau.
# Ratio-4 geometric panels keep w smooth in each panel for any |s|.
_TAU_EDGES = np.concatenate([[0.0], 4.0 ** np.arange(-14, 1)])


@lru_cache(maxsize=8)
def _tau_rule(m: int):
    x, w = gauss_legendre(m)
    a, b = _TAU_EDGES[:-1, None], _TAU_EDGES[1:, None]
    t = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
    wt = (0.5 * (b - a) * w).ravel()
    return t, wt


def _F_core(params, s, diff, m=12, chunk=4096):
    p, eps = params.p, params.eps
    s = np.abs(np.atleast_1d(np.asarray(s, dtype=float)))
    out = np.empty_like(s)
    err = np.empty_like(s)
    rules = (_tau_rule(m), _tau_rule(max(3, m // 2)))
    for lo in range(0, s.size, chunk):
        ss = s[lo:lo + chunk, None]
        q = []
        for t, wt in rules:
            lnL = np.log(np.log(math.e + ss * t[None, :]))
            w = -np.expm1(-eps * lnL) if diff else np.exp(-eps * lnL)
            q.append((t ** p * w) @ wt)
        scale = ss[:, 0] ** (p + 1)
        out[lo:lo + chunk] = q[0] * scale
        err[lo:lo + chunk] = np.abs(q[0] - q[1]) * scale
    return out, err


def F_array(params: NonlinearityParams, s):
    """Vectorised ``F_eps`` on an array (composite Gauss rule, even in ``s``)."""
    if params.eps == 0:
        return np.abs(np.asarray(s, dtype=float)) ** (params.p + 1) / (params.p + 1)
    return _F_core(params, s, diff=False)[0].reshape(np.shape(s))


def F0_minus_F(params: NonlinearityParams, s):
    """``F_0(s) - F_eps(s)`` without cancellation (vectorised)."""
    if params.eps == 0:
        return np.zeros(np.shape(s))
    return _F_core(params, s, diff=True)[0].reshape(np.shape(s))


@lru_cache(maxsize=4096)
def _F_scalar(eps, n, s, tol, order):
    params = NonlinearityParams(eps, n)
    m = max(order, 6)
    while True:
        val, err = _F_core(params, s, diff=False, m=m)
        val, err = float(val[0]), float(err[0])
        if err <= tol * max(1.0, abs(val)) or m >= 96:
            return val, err
        m *= 2


def F_eval(params: NonlinearityParams, s: float, spec: QuadratureSpec | None = None) -> float:
    """Antiderivative ``F_eps(s) = int_0^s f_eps``.

    Raises :class:`AccuracyFailure` when the rule cannot reach ``spec.tol``.
    """
    spec = spec or QuadratureSpec()
    s = abs(float(s))
    if s == 0.0:
        return 0.0
    if params.eps == 0:
        return s ** (params.p + 1) / (params.p + 1)
    val, err = _F_scalar(float(params.eps), params.dim, s, spec.tol, spec.order)
    if err > spec.tol * max(1.0, abs(val)):
        raise AccuracyFailure("antiderivative quadrature did not converge", err, val)
    return val


# ---------------------------------------------------------------------------
# dimensional constants


@dataclass(frozen=True)
class UniversalConstants:
    """Constants attached to the bubble family in dimension ``dim``.

    ``Sn_pow`` is the integral of ``delta^{p+1}`` over R^n.  ``Gamma1`` is the
    log-weighted defining integral.  ``gamma1_closed`` is
    ``(n-2)^2 Sn_pow / (4n)`` and ``gamma1_closed_residual`` its relative gap
    to ``Gamma1``; ``gamma1_balance_residual`` compares ``Gamma1`` with
    ``(n-2) Sn_pow/(2n)``, the value forced by differentiating the radial
    log integral in the scale (see the consistency check below).
    """

    dim: int
    c0: float
    Sn_pow: float
    cbar1: float
    Gamma1: float
    Gamma2: float
    quad_tol: float
    gamma1_closed: float
    gamma1_closed_residual: float
    gamma1_balance_residual: float

    @property
    def p(self) -> float:
        return critical_exponent(self.dim)


def _radial(g, n, spec):
    res = integrate_radial(g, math.inf, n, spec)
    if not res.converged:
        raise AccuracyFailure("radial constant did not converge", res.error, res.value)
    return res


@lru_cache(maxsize=None)
def universal_constants(n: int, spec: QuadratureSpec | None = None) -> UniversalConstants:
    """Quadrature values of ``S_n^{n/2}``, ``cbar1``, ``Gamma1`` and ``Gamma2``.

    Raises :class:`ConsistencyFailure` if the log-weighted integral disagrees
    with ``(n-2) S_n^{n/2} / (2n)``.  That value follows from
    ``int delta^p ln(delta) lam d(delta)/d(lam) = (n-2)^2 S_n^{n/2}/(4n)`` together
    with ``c0 (1-|y|^2)/(1+|y|^2)^{n/2} = 2/(n-2) lam d(delta)/d(lam)``.
    """
    if n not in SUPPORTED_DIMS:
        raise InvalidArgument(f"supported dimensions are 3..8, got {n}")
    spec = spec or QuadratureSpec(tol=1e-13, atol=0.0)
    c0 = c0_of(n)
    p = critical_exponent(n)

    def bubble(r):
        return c0 * (1.0 + r * r) ** (-(n - 2) / 2)

    s_res = _radial(lambda r: bubble(r) ** (p + 1), n, spec)
    c_res = _radial(lambda r: (1.0 + r * r) ** (-(n + 2) / 2), n, spec)
    g_res = _radial(lambda r: c0 * bubble(r) ** p * np.log(bubble(r))
                    * (1.0 - r * r) / (1.0 + r * r) ** (n / 2), n, spec)
    S = s_res.value
    cbar1 = c0 ** (2 * n / (n - 2)) * c_res.value
    g1 = g_res.value
    closed = (n - 2) ** 2 * S / (4 * n)
    balance = (n - 2) * S / (2 * n)
    tol = max(s_res.error / S, c_res.error / c_res.value, g_res.error / abs(g1))
    bal_res = abs(g1 - balance) / balance
    if bal_res > max(1e-8, 100 * tol):
        raise ConsistencyFailure(f"Gamma1 integral {g1} disagrees with (n-2)S/(2n) = {balance}")
    return UniversalConstants(
        dim=n, c0=c0, Sn_pow=S, cbar1=cbar1, Gamma1=g1,
        Gamma2=2.0 * g1 / (cbar1 * (n - 2)), quad_tol=tol,
        gamma1_closed=closed,
        gamma1_closed_residual=abs(g1 - closed) / closed,
        gamma1_balance_residual=bal_res,
    )


# ---------------------------------------------------------------------------
# inequality battery for f_eps


def _lnln(a):
    return np.log(np.log(math.e + a))


def inequality_ratios(n: int, eps, U, V) -> dict[str, np.ndarray]:
    """Ratios ``lhs / rhs`` for the five pointwise bounds on ``f_eps``.

    Keys and the bound each ratio must respect:

    * ``"1"``: ``|f_eps(U) - f_0(U)| / (eps |U|^p lnln(e+|U|))`` <= 1
    * ``"7.1"``: ``|f_eps(U+V) - f_eps(U)| / ((|U|^{p-1}+|V|^{p-1})|V|)`` <= c
    * ``"7.2"``: ``|f_eps'(U)| / |U|^{p-1}`` <= c
    * ``"7.3"``: ``|f_eps'(U) - f_0'(U)| / (eps |U|^{p-1}(p lnln + 1/ln))`` <= 1
    * ``"7.4"``: derivative increments against the case-split right-hand side
    * ``"7.5"``: ``|f_eps''(U)| / |U|^{p-2}`` <= c
    """
    eps = np.asarray(eps, dtype=float)
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    p = critical_exponent(n)
    pe = NonlinearityParams(0.0, n)
    a, b = np.abs(U), np.abs(V)

    def fe(u, order=0):
        return _f_vec(eps, n, u, order)

    out = {}
    out["1"] = np.abs(_f_diff_vec(eps, n, U)) / (eps * a ** p * _lnln(a))
    out["7.1"] = np.abs(fe(U + V) - fe(U)) / ((a ** (p - 1) + b ** (p - 1)) * b)
    out["7.2"] = np.abs(fe(U, 1)) / a ** (p - 1)
    out["7.3"] = (np.abs(fe(U, 1) - f_eval(pe, U, 1))
                  / (eps * a ** (p - 1) * (p * _lnln(a) + 1.0 / np.log(math.e + a))))
    lhs = np.abs(fe(U + V, 1) - fe(U, 1))
    if n <= 6:
        out["7.4"] = lhs / ((a ** (p - 2) + b ** (p - 2)) * b)
    else:
        out["7.4"] = lhs / (b ** (p - 1) + eps * a ** (p - 1))
    out["7.5"] = np.abs(fe(U, 2)) / a ** (p - 2)
    return out


def _f_vec(eps, n, u, order):
    # f_eval with an array of eps values
    p = critical_exponent(n)
    a = np.abs(u)
    s = np.sign(u)
    L = np.log(math.e + a)
    damp = L ** (-eps)
    if order == 0:
        return s * a ** p * damp
    if order == 1:
        return p * a ** (p - 1) * damp - eps * a ** p * damp / (L * (math.e + a))
    ea = math.e + a
    mag = (p * (p - 1) * a ** (p - 2) * damp
           - 2 * p * eps * a ** (p - 1) * damp / (L * ea)
           + eps * a ** p * damp / (L * ea ** 2) * ((eps + 1) / L + 1.0))
    return s * mag


def _f_diff_vec(eps, n, u):
    p = critical_exponent(n)
    a = np.abs(u)
    return np.sign(u) * a ** p * -np.expm1(-eps * _lnln(a))


# Ranges shared by calibration and the randomized battery.
INEQ_EPS_MAX = 0.2
INEQ_LOG10_RANGE = (-4.0, 4.0)
INEQ_SAFETY = 1.5


def calibrate_inequalities(n: int, points: int = 161) -> dict[str, float]:
    """Empirical supremum of each constant-bearing ratio times the safety factor.

    The grid is a tensor product of log-spaced magnitudes (both signs) for
    ``U`` and ``V`` and a handful of ``eps`` values in ``(0, 0.2]``.
    """
    mags = 10.0 ** np.linspace(*INEQ_LOG10_RANGE, points)
    vals = np.concatenate([-mags[::-1], mags])
    epss = np.array([1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.15, 0.2])
    sup = {}
    for e in epss:
        U, V = np.meshgrid(vals, vals, indexing="ij")
        r = inequality_ratios(n, np.full(U.shape, e), U, V)
        for key in ("7.1", "7.2", "7.4", "7.5"):
            m = float(np.nanmax(np.where(np.isfinite(r[key]), r[key], np.nan)))
            sup[key] = max(sup.get(key, 0.0), m)
    return {k: INEQ_SAFETY * v for k, v in sup.items()}


def load_calibration() -> dict[int, dict[str, float]]:
    """Frozen calibration constants shipped with the package."""
    text = resources.files("bubbletower").joinpath("data/calibration.json").read_text()
    raw = json.loads(text)
    return {int(k): v for k, v in raw["constants"].items()}
