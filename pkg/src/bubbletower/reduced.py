"""Reduced energy of the tower and its critical points.

In the rates ``rho`` the reduced energy reads

    Psi = cbar1 R(xi) / (2 rho_k^{n-2}) + A sum_i ln(rho_i) / (2(k-i)+1)
          + cbar1 sum_{i>=2} (rho_i/rho_{i-1})^{(n-2)/2} (1+|sigma_i|^2)^{-(n-2)/2}

with ``A = (n-2)^2 S / (2n)`` and ``R`` the Robin function.  With
``s_i = rho_{i+1}/rho_i`` (``i < k``) and ``s_k = rho_k`` it separates in the
``s_i`` and has one critical point in closed form.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import UniversalConstants, critical_exponent, universal_constants
from .errors import InvalidArgument, NoConvergence
from .greenfn import DomainModel, robin, robin_grad, robin_hess

__all__ = [
    "ReducedPoint",
    "DegreeReport",
    "Region",
    "psi",
    "psi_hat",
    "psi_hat_grad",
    "psi_hat_hess",
    "rho_from_s",
    "s_from_rho",
    "reduced_point",
    "critical_point_closed_form",
    "critical_point_newton",
    "alpha_critical",
    "phi_props",
    "tower_prediction",
    "stable_critical_certify",
]

GRAD_TOL = 1e-10


def _consts(n, consts):
    return consts if consts is not None else universal_constants(n)


def _A(consts: UniversalConstants) -> float:
    n = consts.dim
    return (n - 2) ** 2 * consts.Sn_pow / (2 * n)


def _sigma_array(sigma, k, n):
    sig = np.zeros((k - 1, n)) if sigma is None or len(sigma) == 0 else np.asarray(sigma, dtype=float)
    return sig.reshape(k - 1, n)


def psi(rho, sigma, xi, dom: DomainModel, consts: UniversalConstants | None = None) -> float:
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise InvalidArgument("rates must be positive")
    n, k = dom.dim, rho.size
    consts = _consts(n, consts)
    cb = consts.cbar1
    sig = _sigma_array(sigma, k, n)
    odd = 2 * (k - np.arange(1, k + 1)) + 1
    val = cb * robin(dom, np.asarray(xi, dtype=float)) / (2 * rho[-1] ** (n - 2))
    val += _A(consts) * float(np.sum(np.log(rho) / odd))
    if k > 1:
        ratio = rho[1:] / rho[:-1]
        val += cb * float(np.sum(ratio ** ((n - 2) / 2) * (1 + np.sum(sig ** 2, axis=1)) ** (-(n - 2) / 2)))
    return float(val)


def rho_from_s(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    k = s.size
    rho = np.empty(k)
    rho[-1] = s[-1]
    for i in range(k - 2, -1, -1):
        rho[i] = rho[i + 1] / s[i]
    return rho


def s_from_rho(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    return np.concatenate([rho[1:] / rho[:-1], rho[-1:]])


def _weights(k):
    """``B_q`` with ``sum_{l=k-q+1}^k 1/(2l-1)``; ``B_k`` is the full sum."""
    inv = 1.0 / (2 * np.arange(1, k + 1) - 1)
    return np.array([inv[k - q:].sum() for q in range(1, k + 1)])


@dataclass(frozen=True)
class ReducedPoint:
    s: tuple
    sigma: tuple
    xi: tuple
    value: float | None = None
    grad: tuple | None = None
    hessian: tuple | None = None
    inertia: tuple | None = None  # (positive, negative, zero) eigenvalue counts
    min_abs_eig: float | None = None
    iterations: int | None = None

    def __post_init__(self):
        s = tuple(float(v) for v in np.atleast_1d(self.s))
        if min(s) <= 0:
            raise InvalidArgument("s must be positive")
        xi = tuple(float(v) for v in np.atleast_1d(self.xi))
        sig = _sigma_array(self.sigma, len(s), len(xi))
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "sigma", tuple(tuple(r) for r in sig))

    @property
    def k(self) -> int:
        return len(self.s)

    @property
    def n(self) -> int:
        return len(self.xi)

    def vector(self) -> np.ndarray:
        return np.concatenate([self.s, np.ravel(self.sigma), self.xi])


def _unpack(x, k, n):
    s = x[:k]
    sig = x[k:k + (k - 1) * n].reshape(k - 1, n)
    xi = x[k + (k - 1) * n:]
    return s, sig, xi


def reduced_point(s, sigma, xi, dom: DomainModel, consts=None, **extra) -> ReducedPoint:
    """Build a :class:`ReducedPoint` with its value and gradient cached."""
    pt = ReducedPoint(s, sigma, xi)
    return ReducedPoint(pt.s, pt.sigma, pt.xi, psi_hat(pt, dom, consts),
                        tuple(psi_hat_grad(pt, dom, consts)), **extra)


def psi_hat(pt: ReducedPoint, dom: DomainModel, consts=None) -> float:
    n, k = pt.n, pt.k
    consts = _consts(n, consts)
    cb, A = consts.cbar1, _A(consts)
    s = np.asarray(pt.s)
    sig = np.asarray(pt.sigma).reshape(k - 1, n)
    B = _weights(k)
    val = cb * robin(dom, np.asarray(pt.xi)) / (2 * s[-1] ** (n - 2)) + A * B[-1] * math.log(s[-1])
    if k > 1:
        w = (1 + np.sum(sig ** 2, axis=1)) ** (-(n - 2) / 2)
        val += float(np.sum(-A * B[:-1] * np.log(s[:-1]) + cb * s[:-1] ** ((n - 2) / 2) * w))
    return float(val)


def psi_hat_grad(pt: ReducedPoint, dom: DomainModel, consts=None) -> np.ndarray:
    """Gradient ordered as ``(s_1..s_k, sigma_2..sigma_k flattened, xi)``."""
    n, k = pt.n, pt.k
    consts = _consts(n, consts)
    cb, A = consts.cbar1, _A(consts)
    s = np.asarray(pt.s)
    sig = np.asarray(pt.sigma).reshape(k - 1, n)
    xi = np.asarray(pt.xi)
    B = _weights(k)
    R = robin(dom, xi)
    gs = np.empty(k)
    gs[-1] = (A * B[-1] - (n - 2) * cb * R / (2 * s[-1] ** (n - 2))) / s[-1]
    q2 = 1 + np.sum(sig ** 2, axis=1)
    sq = s[:-1]
    gs[:-1] = (-A * B[:-1] + cb * (n - 2) / 2 * sq ** ((n - 2) / 2) * q2 ** (-(n - 2) / 2)) / sq
    gsig = -(n - 2) * cb * (sq ** ((n - 2) / 2) * q2 ** (-n / 2))[:, None] * sig
    gxi = cb * robin_grad(dom, xi) / (2 * s[-1] ** (n - 2))
    return np.concatenate([gs, gsig.ravel(), gxi])


def psi_hat_hess(pt: ReducedPoint, dom: DomainModel, consts=None) -> np.ndarray:
    n, k = pt.n, pt.k
    consts = _consts(n, consts)
    cb, A = consts.cbar1, _A(consts)
    s = np.asarray(pt.s)
    sig = np.asarray(pt.sigma).reshape(k - 1, n)
    xi = np.asarray(pt.xi)
    B = _weights(k)
    R = robin(dom, xi)
    m = k + (k - 1) * n + n
    H = np.zeros((m, m))
    sk = s[-1]
    H[k - 1, k - 1] = (n - 2) * (n - 1) * cb * R / (2 * sk ** n) - A * B[-1] / sk ** 2
    for q in range(k - 1):
        sq = s[q]
        sg = sig[q]
        q2 = 1 + sg @ sg
        w = q2 ** (-(n - 2) / 2)
        H[q, q] = A * B[q] / sq ** 2 + cb * (n - 2) * (n - 4) / 4 * sq ** ((n - 6) / 2) * w
        blk = slice(k + q * n, k + (q + 1) * n)
        cross = -(n - 2) ** 2 / 2 * cb * sq ** ((n - 4) / 2) * q2 ** (-n / 2) * sg
        H[q, blk] = cross
        H[blk, q] = cross
        H[blk, blk] = -(n - 2) * cb * sq ** ((n - 2) / 2) * (
            q2 ** (-n / 2) * np.eye(n) - n * q2 ** (-n / 2 - 1) * np.outer(sg, sg))
    xb = slice(k + (k - 1) * n, m)
    cx = -(n - 2) * cb * robin_grad(dom, xi) / (2 * sk ** (n - 1))
    H[k - 1, xb] = cx
    H[xb, k - 1] = cx
    H[xb, xb] = cb * robin_hess(dom, xi) / (2 * sk ** (n - 2))
    return H


def critical_point_closed_form(k: int, sigma, xi, dom: DomainModel, consts=None) -> np.ndarray:
    """The unique critical point of ``Psi_hat`` in ``s`` at fixed ``(sigma, xi)``."""
    n = dom.dim
    if k < 1:
        raise InvalidArgument("k must be >= 1")
    consts = _consts(n, consts)
    S, cb = consts.Sn_pow, consts.cbar1
    sig = _sigma_array(sigma, k, n)
    B = _weights(k)
    s = np.empty(k)
    base = (n - 2) * S / (n * cb)
    q2 = 1 + np.sum(sig ** 2, axis=1)
    s[:-1] = (base * B[:-1] * q2 ** ((n - 2) / 2)) ** (2 / (n - 2))
    s[-1] = (robin(dom, np.asarray(xi, dtype=float)) / (base * B[-1])) ** (1 / (n - 2))
    return s


def _inertia(H, tol=1e-12):
    ev = np.linalg.eigvalsh(0.5 * (H + H.T))
    scale = max(1.0, float(np.max(np.abs(ev))))
    pos = int(np.sum(ev > tol * scale))
    neg = int(np.sum(ev < -tol * scale))
    return (pos, neg, ev.size - pos - neg), float(np.min(np.abs(ev)))


def critical_point_newton(start: ReducedPoint, dom: DomainModel, consts=None, fix: str = "sigma_xi",
                          tol: float = GRAD_TOL, max_iter: int = 100) -> ReducedPoint:
    """Damped Newton on ``psi_hat_grad``.

    ``fix="sigma_xi"`` moves ``s`` only; ``fix="none"`` moves every variable.
    The iteration runs in ``ln s`` (same zeros; ``s > 0`` is automatic and the
    ``s_k`` equation has no inflection there).  Steps are halved until the
    gradient norm drops and ``xi`` stays inside the domain.  The loop stops
    when the gradient is below ``tol`` or the ``ln s`` gradient reaches its
    rounding floor (large ``n``: the terms of the gradient are ~1e6).
    """
    if fix not in ("sigma_xi", "none"):
        raise InvalidArgument("fix must be 'sigma_xi' or 'none'")
    n, k = start.n, start.k
    consts = _consts(n, consts)
    y = start.vector()
    y[:k] = np.log(y[:k])
    free = np.arange(k) if fix == "sigma_xi" else np.arange(y.size)

    def point(v):
        s, sig, xi = _unpack(v, k, n)
        return ReducedPoint(np.exp(s), sig, xi)

    def scaled_grad(v):
        g = psi_hat_grad(point(v), dom, consts)
        g[:k] *= np.exp(v[:k])
        return g

    trace = []
    g = scaled_grad(y)[free]
    gn = float(np.linalg.norm(g))
    it = 0
    # below this the scaled gradient is pure rounding noise
    floor = 256 * np.finfo(float).eps * _A(consts) * float(_weights(k).max())
    while float(np.linalg.norm(psi_hat_grad(point(y), dom, consts)[free])) >= tol and gn > floor:
        if it >= max_iter:
            raise NoConvergence(f"Newton stalled at |grad| = {gn:.3e}", trace)
        pt = point(y)
        s = np.asarray(pt.s)
        raw = psi_hat_grad(pt, dom, consts)
        H = psi_hat_hess(pt, dom, consts)
        J = np.ones(y.size)
        J[:k] = s
        H = H * np.outer(J, J)
        H[np.arange(k), np.arange(k)] += s * raw[:k]
        try:
            step = np.linalg.solve(H[np.ix_(free, free)], g)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence("singular Hessian", trace) from exc
        # at most a factor e per step in any s_i
        big = float(np.max(np.abs(step[free < k]), initial=0.0))
        t = min(1.0, 1.0 / big) if big > 0 else 1.0
        while True:
            cand = y.copy()
            cand[free] -= t * step
            if bool(dom.contains(_unpack(cand, k, n)[2])):
                gc = scaled_grad(cand)[free]
                gcn = float(np.linalg.norm(gc))
                if gcn < gn:
                    break
            t *= 0.5
            if t < 1e-12:
                raise NoConvergence("line search failed", trace)
        y, g, gn = cand, gc, gcn
        it += 1
        trace.append((it, t, gn))
    pt = point(y)
    Hf = psi_hat_hess(pt, dom, consts)[np.ix_(free, free)]
    inertia, mabs = _inertia(Hf)
    return reduced_point(pt.s, pt.sigma, pt.xi, dom, consts, hessian=tuple(map(tuple, Hf)),
                         inertia=inertia, min_abs_eig=mabs, iterations=it)


def alpha_critical(n: int, k: int = 1) -> tuple:
    """Amplitudes at the reduced critical point: all equal to one."""
    critical_exponent(n)
    return (1.0,) * k


def phi_props(alpha: float, n: int) -> dict:
    """``phi(a) = a^2/2 - a^{p+1}/(p+1)`` and its first two derivatives."""
    if not alpha > 0:
        raise InvalidArgument("alpha must be positive")
    p = critical_exponent(n)
    return {
        "value": alpha ** 2 / 2 - alpha ** (p + 1) / (p + 1),
        "d1": alpha - alpha ** p,
        "d2": 1 - p * alpha ** (p - 1),
    }


def tower_prediction(eps: float, k: int, xi0, dom: DomainModel, consts=None) -> dict:
    """Blow-up rates predicted by the closed-form critical point."""
    n = dom.dim
    if not 0 < eps < 1:
        raise InvalidArgument("eps must lie in (0, 1)")
    consts = _consts(n, consts)
    xi0 = np.asarray(xi0, dtype=float)
    s = critical_point_closed_form(k, None, xi0, dom, consts)
    rho = rho_from_s(s)
    L = -math.log(eps)
    j = np.arange(1, k + 1)
    lam = np.exp(-(2 * (k - j) + 1) / (n - 2) * math.log(eps / L) + np.log(rho))
    out = {
        "lambdas": lam,
        "rho": rho,
        "C": rho ** (n - 2),
        "sup_norm_scale": (L / eps) ** (k - 0.5),
        "rung_ratios": lam[:-1] / lam[1:],
    }
    if k == 2:
        R = robin(dom, xi0)
        Lam = 2.0 / math.sqrt(R)
        out["k2_limits"] = {
            "Lambda": Lam,
            "scale_residual": abs(lam[0] / lam[1] ** 3 - Lam ** (4 / (n - 2))),
            "gamma2_residual": abs(consts.Gamma2 * eps * lam[1] ** (n - 2) / (3 * math.log(lam[1])) - Lam ** -2),
        }
    return out


# ---------------------------------------------------------------------------
# degree certification


@dataclass(frozen=True)
class Region:
    """A ball ``(center, radius)`` or box ``(lower, upper)`` in R^n."""

    kind: str
    a: tuple
    b: tuple | float

    @classmethod
    def ball(cls, center, radius) -> "Region":
        return cls("ball", tuple(map(float, center)), float(radius))

    @classmethod
    def box(cls, lower, upper) -> "Region":
        return cls("box", tuple(map(float, lower)), tuple(map(float, upper)))

    @property
    def dim(self) -> int:
        return len(self.a)

    def contains(self, x, slack=0.0) -> bool:
        x = np.asarray(x)
        if self.kind == "ball":
            return float(np.linalg.norm(x - np.asarray(self.a))) <= self.b * (1 + slack)
        lo, hi = np.asarray(self.a), np.asarray(self.b)
        pad = slack * (hi - lo)
        return bool(np.all(x >= lo - pad) and np.all(x <= hi + pad))

    def interior_samples(self, rng, m) -> np.ndarray:
        n = self.dim
        if self.kind == "ball":
            d = rng.standard_normal((m, n))
            d /= np.linalg.norm(d, axis=1)[:, None]
            r = self.b * rng.random(m) ** (1 / n)
            pts = np.asarray(self.a) + r[:, None] * d
        else:
            lo, hi = np.asarray(self.a), np.asarray(self.b)
            pts = lo + (hi - lo) * rng.random((m, n))
        return np.vstack([self.center()[None, :], pts])

    def boundary_samples(self, rng, m) -> np.ndarray:
        n = self.dim
        if self.kind == "ball":
            d = np.vstack([np.eye(n), -np.eye(n), rng.standard_normal((m, n))])
            d /= np.linalg.norm(d, axis=1)[:, None]
            return np.asarray(self.a) + self.b * d
        lo, hi = np.asarray(self.a), np.asarray(self.b)
        pts = lo + (hi - lo) * rng.random((m, n))
        face = rng.integers(0, n, m)
        side = rng.integers(0, 2, m)
        pts[np.arange(m), face] = np.where(side == 1, hi[face], lo[face])
        return pts

    def center(self) -> np.ndarray:
        if self.kind == "ball":
            return np.asarray(self.a)
        return 0.5 * (np.asarray(self.a) + np.asarray(self.b))


@dataclass(frozen=True)
class DegreeReport:
    zeros: tuple  # ((point, sign), ...)
    degree: int
    boundary_min: float
    certified: bool
    notes: tuple = ()


def _fd_jacobian(g, x, h=1e-6):
    n = x.size
    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h * max(1.0, abs(x[j]))
        J[:, j] = (np.asarray(g(x + e)) - np.asarray(g(x - e))) / (2 * e[j])
    return J


def _newton_zero(g, jac, x, region, tol, max_iter=100):
    gx = np.asarray(g(x), dtype=float)
    for _ in range(max_iter):
        nrm = float(np.linalg.norm(gx))
        if nrm < tol:
            return x
        try:
            step = np.linalg.solve(jac(x), gx)
        except np.linalg.LinAlgError:
            return None
        t = 1.0
        while t > 1e-10:
            cand = x - t * step
            if region.contains(cand, slack=0.05):
                gc = np.asarray(g(cand), dtype=float)
                if np.linalg.norm(gc) < nrm:
                    break
            t *= 0.5
        else:
            return None
        x, gx = cand, gc
    return x if np.linalg.norm(gx) < tol else None


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("BUBBLETOWER_THREADS", "1")))
    except ValueError:
        return 1


def stable_critical_certify(g, region: Region, dom: DomainModel | None = None, *, jac=None,
                            starts: int = 64, boundary_points: int = 512, seed: int = 0,
                            zero_tol: float = 1e-10, dedup: float = 1e-6,
                            boundary_threshold: float = 1e-6, det_threshold: float = 1e-10) -> DegreeReport:
    """Brouwer degree of the field ``g`` on ``region`` by zero enumeration.

    Zeros are located by multistart damped Newton, merged within ``dedup`` and
    signed by the Jacobian determinant.  A degenerate zero or a small field on
    the boundary sample makes the report uncertifiable.
    """
    if dom is not None:
        if region.dim != dom.dim:
            raise InvalidArgument("region and domain dimensions differ")
        for x in region.boundary_samples(np.random.default_rng(seed), 64):
            if not dom.contains(x) or dom.distance_to_boundary(x) <= 0:
                raise InvalidArgument("region must lie compactly inside the domain")
    jac = jac or (lambda x: _fd_jacobian(g, x))
    rng = np.random.default_rng(seed)
    x0s = region.interior_samples(rng, starts)
    with ThreadPoolExecutor(_threads()) as ex:
        found = list(ex.map(lambda x: _newton_zero(g, jac, np.array(x, dtype=float), region, zero_tol), x0s))
    zeros = []
    for z in found:
        if z is None or not region.contains(z):
            continue
        if any(np.linalg.norm(z - q) < dedup for q in zeros):
            continue
        zeros.append(z)
    zeros.sort(key=tuple)
    notes = []
    signed = []
    degenerate = False
    for z in zeros:
        det = float(np.linalg.det(jac(z)))
        if abs(det) < det_threshold:
            degenerate = True
            notes.append(f"degenerate zero at {np.round(z, 8).tolist()} (det {det:.3e})")
            sign = 0
        else:
            sign = 1 if det > 0 else -1
        signed.append((tuple(float(v) for v in z), sign))
    bvals = [float(np.linalg.norm(g(x))) for x in region.boundary_samples(rng, boundary_points)]
    bmin = min(bvals)
    degree = sum(s for _, s in signed)
    if bmin <= boundary_threshold:
        notes.append("field nearly vanishes on the boundary sample")
    if degree == 0:
        notes.append("degree zero")
    certified = not degenerate and bmin > boundary_threshold and degree != 0
    return DegreeReport(tuple(signed), degree, bmin, certified, tuple(notes))
