"""Green's function regular parts, Robin functions and projected bubbles.

For a domain Omega the Green's function of the Laplacian splits as
``G(x, y) = |x-y|^{2-n} - H(x, y)`` with ``H(x, .)`` harmonic and equal to
``|x-y|^{2-n}`` on the boundary.  Two backends are provided:

* the unit ball in any dimension, where the image-charge formula
  ``H(x, y) = (|x|^2 |y|^2 - 2 x.y + 1)^{(2-n)/2}`` is exact;
* an axis-aligned box in three dimensions, where ``H(x, .)`` is a
  second-order finite-difference solution.  The 7-point Dirichlet Laplacian is
  diagonalised by the type-I discrete sine transform, so a solve costs a
  couple of FFTs and is accurate to rounding.

The projected bubble ``P delta`` is the bubble minus its harmonic extension
from the boundary.  ``leading_order`` replaces the harmonic extension by
``c0 H(a, .) / lam^{(n-2)/2}``; ``grid_exact`` uses the true extension (closed
form for a bubble centred in the ball, a grid solve on the box).
"""

from __future__ import annotations

import hashlib
import os
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.fft import dstn, idstn
from scipy.interpolate import RegularGridInterpolator

from .core import Bubble, bubble_deriv, bubble_eval, bubble_grad, c0_of
from .errors import AccuracyFailure, InvalidArgument

__all__ = [
    "DomainModel",
    "unit_ball",
    "box",
    "HarmonicField",
    "harmonic_solve",
    "harmonic_extension",
    "green_H",
    "green_H_grad",
    "robin",
    "robin_grad",
    "robin_hess",
    "ProjectedBubble",
    "projected_bubble_eval",
    "FieldCache",
    "save_field",
    "load_field",
    "ball_grid_solve",
]

MIN_RESOLUTION = 16


@dataclass(frozen=True)
class DomainModel:
    kind: str
    dim: int
    lower: tuple | None = None
    upper: tuple | None = None
    resolution: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("unit_ball", "box"):
            raise InvalidArgument(f"unknown domain kind {self.kind!r}")
        if self.dim < 3:
            raise InvalidArgument("dimension must be >= 3")
        if self.kind == "box":
            if self.dim != 3:
                raise InvalidArgument("box domains are solved on grids in dimension 3 only")
            lo = tuple(float(v) for v in self.lower)
            hi = tuple(float(v) for v in self.upper)
            if len(lo) != 3 or len(hi) != 3 or any(b <= a for a, b in zip(lo, hi)):
                raise InvalidArgument("box corners must satisfy lower < upper in 3 coordinates")
            res = self.resolution if self.resolution is not None else 32
            res = tuple(int(r) for r in np.broadcast_to(res, (3,)))
            if min(res) < MIN_RESOLUTION:
                raise InvalidArgument(f"grid resolution must be >= {MIN_RESOLUTION} per axis")
            object.__setattr__(self, "lower", lo)
            object.__setattr__(self, "upper", hi)
            object.__setattr__(self, "resolution", res)

    # geometry -----------------------------------------------------------
    def contains(self, x) -> np.ndarray | bool:
        x = np.asarray(x, dtype=float)
        if self.kind == "unit_ball":
            out = np.sum(x * x, axis=-1) < 1.0
        else:
            out = np.all((x > np.array(self.lower)) & (x < np.array(self.upper)), axis=-1)
        return out if np.ndim(out) else bool(out)

    def distance_to_boundary(self, x) -> np.ndarray | float:
        x = np.asarray(x, dtype=float)
        if self.kind == "unit_ball":
            out = 1.0 - np.sqrt(np.sum(x * x, axis=-1))
        else:
            out = np.min(np.minimum(x - np.array(self.lower), np.array(self.upper) - x), axis=-1)
        return out if np.ndim(out) else float(out)

    def check_interior(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise InvalidArgument(f"point has {x.shape[-1]} coordinates, expected {self.dim}")
        if not np.all(self.contains(x)):
            raise InvalidArgument("point outside the domain")
        return x

    def key(self) -> str:
        text = repr((self.kind, self.dim, self.lower, self.upper, self.resolution))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    @property
    def spacing(self) -> np.ndarray:
        return (np.array(self.upper) - np.array(self.lower)) / np.array(self.resolution)

    def grid_axes(self):
        return [np.linspace(lo, hi, r + 1) for lo, hi, r in zip(self.lower, self.upper, self.resolution)]

    def with_resolution(self, res) -> "DomainModel":
        return DomainModel("box", 3, self.lower, self.upper, res)


def unit_ball(n: int) -> DomainModel:
    return DomainModel("unit_ball", n)


def box(lower=(-1.0, -1.0, -1.0), upper=(1.0, 1.0, 1.0), resolution=32) -> DomainModel:
    return DomainModel("box", 3, tuple(lower), tuple(upper), resolution)


# ---------------------------------------------------------------------------
# finite differences on the box


def _boundary_mask(shape):
    m = np.zeros(shape, dtype=bool)
    for ax in range(len(shape)):
        idx = [slice(None)] * len(shape)
        idx[ax] = 0
        m[tuple(idx)] = True
        idx[ax] = -1
        m[tuple(idx)] = True
    return m


def _laplacian_interior(u, h):
    out = np.zeros(tuple(s - 2 for s in u.shape))
    core = u[1:-1, 1:-1, 1:-1]
    for ax in range(3):
        lo = [slice(1, -1)] * 3
        hi = [slice(1, -1)] * 3
        lo[ax] = slice(0, -2)
        hi[ax] = slice(2, None)
        out += (u[tuple(lo)] - 2 * core + u[tuple(hi)]) / h[ax] ** 2
    return out


@lru_cache(maxsize=16)
def _dst_eigs(res, h):
    lam = np.zeros(tuple(r - 1 for r in res))
    for ax in range(3):
        k = np.arange(1, res[ax])
        mu = (2.0 - 2.0 * np.cos(np.pi * k / res[ax])) / h[ax] ** 2
        shape = [1, 1, 1]
        shape[ax] = -1
        lam = lam + mu.reshape(shape)
    return lam


def _solve_dirichlet(dom: DomainModel, boundary_fn, tol=1e-9):
    """Discrete harmonic function on the box grid with the given boundary data."""
    axes = dom.grid_axes()
    X = np.meshgrid(*axes, indexing="ij")
    pts = np.stack(X, axis=-1)
    mask = _boundary_mask(pts.shape[:3])
    u = np.zeros(pts.shape[:3])
    u[mask] = boundary_fn(pts[mask])
    h = tuple(dom.spacing)
    # right-hand side: boundary neighbours moved across
    rhs = _laplacian_interior(u, np.array(h))  # interior of u is zero here
    eig = _dst_eigs(dom.resolution, h)
    inner = idstn(dstn(rhs, type=1) / eig, type=1)
    u[1:-1, 1:-1, 1:-1] = inner
    resid = np.max(np.abs(_laplacian_interior(u, np.array(h))))
    scale = max(np.max(np.abs(u[mask])), 1e-300) / min(h) ** 2
    if resid > tol * scale:
        raise AccuracyFailure("grid harmonic solve residual above tolerance", resid / scale)
    return u, resid / scale


@dataclass(frozen=True, eq=False)
class HarmonicField:
    """Grid values of a harmonic function on a box, with trilinear lookup."""

    anchor: tuple
    domain: DomainModel
    values: np.ndarray
    residual: float = 0.0
    _interp: dict = field(default_factory=dict, repr=False)

    def _interpolator(self, name):
        if name not in self._interp:
            axes = self.domain.grid_axes()
            if name == "value":
                data = self.values
            else:
                j = int(name[-1])
                data = np.gradient(self.values, axes[j], axis=j, edge_order=2)
            self._interp[name] = RegularGridInterpolator(axes, data, method="linear")
        return self._interp[name]

    def evaluate(self, y):
        y = np.asarray(y, dtype=float)
        out = self._interpolator("value")(y.reshape(-1, 3)).reshape(y.shape[:-1])
        return out if np.ndim(out) else float(out)

    def gradient(self, y):
        y = np.asarray(y, dtype=float)
        flat = y.reshape(-1, 3)
        g = np.stack([self._interpolator(f"grad{j}")(flat) for j in range(3)], axis=-1)
        return g.reshape(y.shape)

    def laplacian_residual(self) -> float:
        return float(np.max(np.abs(_laplacian_interior(self.values, self.domain.spacing))))


def _kernel(n):
    def g(x, y):
        return np.sum((y - x) ** 2, axis=-1) ** ((2 - n) / 2)
    return g


@lru_cache(maxsize=128)
def _harmonic_solve_cached(dom: DomainModel, anchor: tuple) -> HarmonicField:
    x = np.array(anchor)
    ker = _kernel(3)
    vals, res = _solve_dirichlet(dom, lambda y: ker(x, y))
    return HarmonicField(anchor, dom, vals, res)


def harmonic_solve(dom: DomainModel, x) -> HarmonicField:
    """Regular part ``H(x, .)`` on the box grid for the anchor ``x``."""
    if dom.kind != "box":
        raise InvalidArgument("harmonic_solve needs a box domain")
    x = dom.check_interior(x)
    return _harmonic_solve_cached(dom, tuple(float(v) for v in x))


def harmonic_extension(dom: DomainModel, g) -> HarmonicField:
    """Grid harmonic extension of boundary data ``g(points) -> values`` (box only)."""
    if dom.kind != "box":
        raise InvalidArgument("grid extension needs a box domain")
    vals, res = _solve_dirichlet(dom, g)
    return HarmonicField((), dom, vals, res)


# ---------------------------------------------------------------------------
# on-disk cache: header (magic, dims, resolution, anchor) + float64 values


_MAGIC = b"HFLD0001"


def save_field(path, fld: HarmonicField):
    res = fld.domain.resolution
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<i", 3))
        fh.write(struct.pack("<3i", *res))
        fh.write(struct.pack("<3d", *fld.anchor))
        fh.write(struct.pack("<3d", *fld.domain.lower))
        fh.write(struct.pack("<3d", *fld.domain.upper))
        np.ascontiguousarray(fld.values, dtype="<f8").tofile(fh)


def load_field(path) -> HarmonicField:
    with open(path, "rb") as fh:
        if fh.read(8) != _MAGIC:
            raise InvalidArgument("not a harmonic field file")
        (dims,) = struct.unpack("<i", fh.read(4))
        res = struct.unpack("<3i", fh.read(12))
        anchor = struct.unpack("<3d", fh.read(24))
        lo = struct.unpack("<3d", fh.read(24))
        hi = struct.unpack("<3d", fh.read(24))
        vals = np.fromfile(fh, dtype="<f8").reshape(tuple(r + 1 for r in res))
    dom = DomainModel("box", dims, lo, hi, res)
    return HarmonicField(anchor, dom, vals, 0.0)


class FieldCache:
    """Directory of solved fields keyed by (domain hash, anchor, resolution)."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def path(self, dom, x):
        tag = hashlib.sha256(np.asarray(x, dtype="<f8").tobytes()).hexdigest()[:16]
        r = "x".join(map(str, dom.resolution))
        return self.directory / f"{dom.key()}_{tag}_{r}.hfld"

    def get(self, dom, x) -> HarmonicField:
        p = self.path(dom, x)
        if p.exists():
            return load_field(p)
        fld = harmonic_solve(dom, x)
        tmp = p.with_suffix(f".tmp{os.getpid()}")
        save_field(tmp, fld)
        os.replace(tmp, p)
        return fld


# ---------------------------------------------------------------------------
# H, R and their derivatives


def green_H(dom: DomainModel, x, y):
    """Regular part ``H(x, y)``; ``y`` may be an array of points."""
    x = dom.check_interior(x)
    y = np.asarray(y, dtype=float)
    if dom.kind == "unit_ball":
        n = dom.dim
        q = np.sum(x * x, axis=-1) * np.sum(y * y, axis=-1) - 2 * np.sum(x * y, axis=-1) + 1.0
        out = q ** ((2 - n) / 2)
        return out if np.ndim(out) else float(out)
    dom.check_interior(y)
    return harmonic_solve(dom, x).evaluate(y)


def green_H_grad(dom: DomainModel, x, y, slot: str = "first"):
    """Gradient of ``H`` in its first or second argument."""
    x = dom.check_interior(x)
    y = np.asarray(y, dtype=float)
    if slot not in ("first", "second"):
        raise InvalidArgument("slot must be 'first' or 'second'")
    if dom.kind == "unit_ball":
        n = dom.dim
        xx = np.sum(x * x, axis=-1)[..., None]
        yy = np.sum(y * y, axis=-1)[..., None]
        q = xx * yy - 2 * np.sum(x * y, axis=-1)[..., None] + 1.0
        if slot == "first":
            return (2 - n) * q ** (-n / 2) * (yy * x - y)
        return (2 - n) * q ** (-n / 2) * (xx * y - x)
    dom.check_interior(y)
    if slot == "second":
        return harmonic_solve(dom, x).gradient(y)
    # symmetry: d/dx H(x, y) = d/dx H(y, x) with the field anchored at y
    y2 = np.atleast_2d(y)
    out = np.stack([harmonic_solve(dom, yi).gradient(x) for yi in y2])
    return out.reshape(y.shape)


def robin(dom: DomainModel, x):
    x = dom.check_interior(x)
    if dom.kind == "unit_ball":
        out = (1.0 - np.sum(x * x, axis=-1)) ** (2 - dom.dim)
        return out if np.ndim(out) else float(out)
    return green_H(dom, x, x)


def robin_grad(dom: DomainModel, x) -> np.ndarray:
    x = dom.check_interior(x)
    if dom.kind == "unit_ball":
        n = dom.dim
        return 2 * (n - 2) * x * (1.0 - x @ x) ** (1 - n)
    # both slots contribute equally at y = x
    return 2.0 * harmonic_solve(dom, x).gradient(x)


def robin_hess(dom: DomainModel, x, step: float = 1e-4) -> np.ndarray:
    x = dom.check_interior(x)
    n = dom.dim
    if dom.kind == "unit_ball":
        t = 1.0 - x @ x
        return 2 * (n - 2) * (t ** (1 - n) * np.eye(n) + 2 * (n - 1) * t ** (-n) * np.outer(x, x))
    hess = np.zeros((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = step
        hess[:, j] = (robin_grad(dom, x + e) - robin_grad(dom, x - e)) / (2 * step)
    return 0.5 * (hess + hess.T)


# ---------------------------------------------------------------------------
# projected bubbles


@dataclass(frozen=True, eq=False)
class ProjectedBubble:
    bubble: Bubble
    domain: DomainModel
    mode: str = "leading_order"
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.mode not in ("leading_order", "grid_exact"):
            raise InvalidArgument(f"unknown projection mode {self.mode!r}")
        if self.bubble.dim != self.domain.dim:
            raise InvalidArgument("bubble and domain dimensions differ")
        self.domain.check_interior(self.bubble.a)
        if self.mode == "grid_exact" and self.domain.kind == "unit_ball" and np.any(self.bubble.a != 0):
            raise InvalidArgument("exact projection on the ball is available for centred bubbles only")

    @property
    def radial(self) -> bool:
        """True when ``phi`` is constant (bubble centred in the ball)."""
        return self.domain.kind == "unit_ball" and not np.any(self.bubble.a)

    def _amp(self):
        n = self.bubble.dim
        return c0_of(n) * self.bubble.scale ** (-(n - 2) / 2)

    def _exact_ball_const(self):
        n, lam = self.bubble.dim, self.bubble.scale
        return c0_of(n) * lam ** ((n - 2) / 2) * (1.0 + lam * lam) ** (-(n - 2) / 2)

    def _box_field(self, which="value", j=None):
        key = (which, j)
        if key not in self._cache:
            b = self.bubble
            if which == "value":
                g = lambda y: bubble_eval(b, y)
            else:
                g = lambda y: bubble_deriv(b, y, which, j)
            self._cache[key] = harmonic_extension(self.domain, g)
        return self._cache[key]

    def phi(self, y):
        """Projection remainder ``delta - P delta``."""
        y = np.asarray(y, dtype=float)
        if self.mode == "leading_order":
            return self._amp() * green_H(self.domain, self.bubble.a, y)
        if self.domain.kind == "unit_ball":
            return np.full(y.shape[:-1], self._exact_ball_const()) if y.ndim > 1 else self._exact_ball_const()
        return self._box_field().evaluate(y)

    def value(self, y):
        return bubble_eval(self.bubble, y) - self.phi(y)

    def grad(self, y):
        """Spatial gradient of ``P delta``."""
        y = np.asarray(y, dtype=float)
        g = bubble_grad(self.bubble, y)
        if self.mode == "leading_order":
            return g - self._amp() * green_H_grad(self.domain, self.bubble.a, y, "second")
        if self.domain.kind == "unit_ball":
            return g
        return g - self._box_field().gradient(y)

    def deriv(self, y, which="scaled_dlambda", j=None):
        """Scaled parameter derivative of ``P delta`` (see ``bubble_deriv``)."""
        y = np.asarray(y, dtype=float)
        b = self.bubble
        n, lam = b.dim, b.scale
        base = bubble_deriv(b, y, which, j)
        if self.mode == "leading_order":
            if which == "scaled_dlambda":
                return base + 0.5 * (n - 2) * self._amp() * green_H(self.domain, b.a, y)
            dH = green_H_grad(self.domain, b.a, y, "first")[..., j]
            return base - self._amp() * dH / lam
        if self.domain.kind == "unit_ball":
            c = self._exact_ball_const()
            if which == "scaled_dlambda":
                return base - c * 0.5 * (n - 2) * (1 - lam * lam) / (1 + lam * lam)
            # d/da_j of the boundary trace at a=0 is C y_j, extended harmonically
            C = c0_of(n) * (n - 2) * lam ** ((n + 2) / 2) * (1 + lam * lam) ** (-n / 2)
            return base - C * y[..., j] / lam
        return base - self._box_field(which, j).evaluate(y)


def projected_bubble_eval(pb: ProjectedBubble, y):
    return pb.value(y)


# ---------------------------------------------------------------------------
# ball-inscribed grid solve (Shortley-Weller), used to cross-check the kernel


def ball_grid_solve(x, resolution: int, n: int = 3):
    """Finite-difference ``H(x, .)`` on the unit ball, second order.

    The grid covers ``[-1, 1]^3`` with ``resolution`` cells per axis; nodes
    inside the ball are unknowns and arms that cross the sphere are shortened
    to the exact intersection (Shortley-Weller).  Returns ``(axes, values)``
    with ``nan`` outside the ball.
    """
    if n != 3:
        raise InvalidArgument("grid solves are three-dimensional")
    x = np.asarray(x, dtype=float)
    N = int(resolution)
    h = 2.0 / N
    ax = np.linspace(-1.0, 1.0, N + 1)
    P = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), axis=-1)
    inside = np.sum(P * P, axis=-1) < 1.0 - 1e-12
    idx = -np.ones(inside.shape, dtype=np.int64)
    idx[inside] = np.arange(int(inside.sum()))
    ker = _kernel(3)
    rows, cols, vals = [], [], []
    rhs = np.zeros(int(inside.sum()))
    nodes = np.argwhere(inside)
    diag = np.zeros(len(nodes))
    me = idx[tuple(nodes.T)]
    for d in range(3):
        for sgn in (-1, 1):
            nb = nodes.copy()
            nb[:, d] += sgn
            nb_in = inside[tuple(nb.T)]
            # arm length: h if neighbour is inside, else distance to the sphere
            p = P[tuple(nodes.T)]
            e = np.zeros(3)
            e[d] = sgn
            b = p @ e
            disc = b * b + 1.0 - np.sum(p * p, axis=1)
            t_sphere = -b + np.sqrt(np.maximum(disc, 0.0))
            arm = np.where(nb_in, h, np.minimum(t_sphere, h))
            arm = np.maximum(arm, 1e-14)
            # other arm on the same axis
            nb2 = nodes.copy()
            nb2[:, d] -= sgn
            nb2_in = inside[tuple(nb2.T)]
            b2 = -b
            t2 = -b2 + np.sqrt(np.maximum(b2 * b2 + 1.0 - np.sum(p * p, axis=1), 0.0))
            arm2 = np.where(nb2_in, h, np.minimum(t2, h))
            arm2 = np.maximum(arm2, 1e-14)
            coef = 2.0 / (arm * (arm + arm2))
            diag -= coef
            inn = nb_in
            rows.append(me[inn])
            cols.append(idx[tuple(nb[inn].T)])
            vals.append(coef[inn])
            out = ~nb_in
            q = p[out] + (arm[out])[:, None] * e
            rhs[me[out]] -= coef[out] * ker(x, q)
    rows.append(me)
    cols.append(me)
    vals.append(diag)
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(len(nodes), len(nodes)))
    # Jacobi-preconditioned BiCGSTAB: the matrix is a diagonally dominant M-matrix
    M = sp.diags(1.0 / A.diagonal())
    sol, info = spla.bicgstab(A, rhs, M=M, rtol=1e-13, atol=0.0, maxiter=20 * N * N)
    resid = np.max(np.abs(A @ sol - rhs)) / max(np.max(np.abs(rhs)), 1e-300)
    if resid > 1e-8:
        raise AccuracyFailure("ball grid solve did not converge", resid)
    full = np.full(inside.shape, np.nan)
    full[inside] = sol
    return ax, full
