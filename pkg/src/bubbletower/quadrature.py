"""Adaptive integration for integrands concentrated at several small scales.

Two engines live here:

* :func:`integrate_radial` for profiles ``g(r)`` integrated against
  ``r^{n-1} dr`` times the area of the unit sphere.
* :func:`integrate_domain` for general integrands on the unit ball, on a
  box, or on the whole space.

Both use composite Gauss-Legendre panels.  The error of a panel is estimated
by comparing the rule of the requested order with the rule of half that order,
which is deliberately pessimistic.  Concentration hints ``(center, scale)``
place panel breakpoints geometrically around each center down to widths
below ``1/scale``, so peaks of width ``1e-12`` next to structure of width one
are resolved without relying on adaptivity to discover them.
"""

from __future__ import annotations

import hashlib
import heapq
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import gamma as _gamma

from .errors import InvalidArgument

__all__ = [
    "QuadratureSpec",
    "IntegralResult",
    "sphere_area",
    "gauss_legendre",
    "integrate_radial",
    "integrate_domain",
    "hint_breakpoints",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Integration policy.

    ``tol`` is relative; ``atol`` is an absolute floor (defaults to ``tol``, so
    convergence means ``error <= tol * max(1, |value|)``).  Pass ``atol=0`` for
    purely relative accuracy on integrals that are tiny by construction.
    """

    tol: float = 1e-10
    max_depth: int = 40
    order: int = 16
    hints: tuple = ()
    atol: float | None = None
    angular_order: int = 8
    max_cells: int = 4000

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidArgument("tolerance must be positive")
        if self.max_depth < 1:
            raise InvalidArgument("max_depth must be >= 1")
        if self.order < 3 or self.angular_order < 3:
            raise InvalidArgument("rule order must be >= 3")
        hints = []
        for h in self.hints:
            center, scale = h
            if not scale > 0:
                raise InvalidArgument("hint scale must be positive")
            hints.append((tuple(float(c) for c in np.atleast_1d(center)), float(scale)))
        object.__setattr__(self, "hints", tuple(hints))

    @property
    def floor(self) -> float:
        return self.tol if self.atol is None else self.atol

    def with_hints(self, hints) -> "QuadratureSpec":
        return QuadratureSpec(self.tol, self.max_depth, self.order, tuple(hints),
                              self.atol, self.angular_order, self.max_cells)

    def replace(self, **kw) -> "QuadratureSpec":
        base = dict(tol=self.tol, max_depth=self.max_depth, order=self.order,
                    hints=self.hints, atol=self.atol,
                    angular_order=self.angular_order, max_cells=self.max_cells)
        base.update(kw)
        return QuadratureSpec(**base)

    def digest(self) -> str:
        """Short stable hash used to tag report rows."""
        text = repr((self.tol, self.max_depth, self.order, self.hints,
                     self.atol, self.angular_order, self.max_cells))
        return hashlib.sha256(text.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class IntegralResult:
    value: float
    error: float
    cells: int
    converged: bool

    def __float__(self):
        return float(self.value)


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2) / float(_gamma(n / 2))


@lru_cache(maxsize=None)
def gauss_legendre(m: int):
    x, w = np.polynomial.legendre.leggauss(m)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _converged(err, value, spec):
    return err <= max(spec.floor, spec.tol * abs(value))


def hint_breakpoints(anchors: Sequence[tuple[float, float]], upper: float,
                     lo_pow: int = -3) -> np.ndarray:
    """Geometric breakpoints on ``[0, upper]`` around ``(distance, width)`` anchors.

    For each anchor the points ``d +/- w 2^j`` (``j >= lo_pow``) are added until
    they leave the interval.  ``upper`` must be finite.
    """
    pts = {0.0, float(upper)}
    for d, w in anchors:
        if w <= 0:
            continue
        j = lo_pow
        while True:
            step = w * 2.0 ** j
            added = False
            for q in (d + step, d - step):
                if 0.0 < q < upper:
                    pts.add(q)
                    added = True
            if not added and (d + step >= upper and d - step <= 0):
                break
            j += 1
            if j > 400:
                break
        if 0.0 < d < upper:
            pts.add(d)
    out = np.array(sorted(pts))
    # merge points closer than a relative 1e-12 (purely relative: scales may be ~1e-40)
    keep = [out[0]]
    for q in out[1:]:
        if q - keep[-1] > 1e-12 * abs(q):
            keep.append(q)
    return np.array(keep)


# ---------------------------------------------------------------------------
# radial engine


class _Panel:
    __slots__ = ("a", "b", "mapped", "depth", "value", "error")

    def __init__(self, a, b, mapped, depth):
        self.a, self.b, self.mapped, self.depth = a, b, mapped, depth
        self.value = 0.0
        self.error = 0.0


def _panel_nodes(panels, m):
    """Nodes (in r) and weights (including the r=t/(1-t) Jacobian) for panels."""
    x, w = gauss_legendre(m)
    a = np.array([p.a for p in panels])[:, None]
    b = np.array([p.b for p in panels])[:, None]
    t = 0.5 * (b - a) * x[None, :] + 0.5 * (a + b)
    wt = 0.5 * (b - a) * w[None, :]
    mapped = np.array([p.mapped for p in panels])[:, None]
    r = np.where(mapped, t / (1.0 - t), t)
    jac = np.where(mapped, 1.0 / (1.0 - t) ** 2, 1.0)
    return r, wt * jac


def _eval_panels(g, panels, n, m_hi, m_lo):
    if not panels:
        return
    r_hi, w_hi = _panel_nodes(panels, m_hi)
    r_lo, w_lo = _panel_nodes(panels, m_lo)
    k_hi = r_hi.size
    allr = np.concatenate([r_hi.ravel(), r_lo.ravel()])
    vals = np.asarray(g(allr), dtype=float)
    if vals.shape != allr.shape:
        vals = np.broadcast_to(vals, allr.shape)
    f_hi = vals[:k_hi].reshape(r_hi.shape) * r_hi ** (n - 1)
    f_lo = vals[k_hi:].reshape(r_lo.shape) * r_lo ** (n - 1)
    q_hi = np.sum(f_hi * w_hi, axis=1)
    q_lo = np.sum(f_lo * w_lo, axis=1)
    for p, qh, ql in zip(panels, q_hi, q_lo):
        p.value = float(qh)
        p.error = float(abs(qh - ql))


def integrate_radial(g: Callable[[np.ndarray], np.ndarray], r_max: float, n: int,
                     spec: QuadratureSpec | None = None, *,
                     sphere: bool = True, r_min: float = 0.0) -> IntegralResult:
    """Integrate a radial profile: ``area(S^{n-1}) * int_{r_min}^{r_max} g(r) r^{n-1} dr``.

    ``g`` must accept and return 1-d arrays.  ``r_max`` may be ``inf``; the
    far tail is then integrated in ``t`` with ``r = t/(1-t)``.  Hints are read
    as ``(center, scale)`` pairs; ``|center|`` is the radius of the feature and
    ``1/scale`` its width.  Set ``sphere=False`` to drop the sphere area.
    """
    spec = spec or QuadratureSpec()
    if n < 1:
        raise InvalidArgument("dimension must be positive")
    infinite = math.isinf(r_max)
    anchors = [(float(np.linalg.norm(c)), 1.0 / s) for c, s in spec.hints] or [(0.0, 1.0)]
    widths = [w for _, w in anchors]
    if infinite:
        reach = max(max(d for d, _ in anchors) + 1e3 * max(widths), 1e3 * min(widths), 1.0)
        cut = reach
    else:
        cut = float(r_max)
    pts = hint_breakpoints(anchors, cut)
    pts = pts[pts >= r_min]
    if r_min > 0 and pts[0] > r_min:
        pts = np.concatenate([[r_min], pts])
    panels = [_Panel(a, b, False, 0) for a, b in zip(pts[:-1], pts[1:]) if b > a]
    if infinite:
        t0 = cut / (1.0 + cut)
        panels.append(_Panel(t0, 1.0, True, 0))

    m_hi = spec.order
    m_lo = max(2, m_hi // 2)
    _eval_panels(g, panels, n, m_hi, m_lo)

    heap = [(-p.error, i, p) for i, p in enumerate(panels)]
    heapq.heapify(heap)
    counter = len(panels)
    total = math.fsum(p.value for p in panels)
    err = math.fsum(p.error for p in panels)
    done = []
    while heap and not _converged(err, total, spec) and counter < spec.max_cells * 4:
        _, _, worst = heapq.heappop(heap)
        if worst.depth >= spec.max_depth:
            done.append(worst)
            continue
        a, b = worst.a, worst.b
        if not worst.mapped and a > 0 and b / a > 4.0:
            mid = math.sqrt(a * b)
        else:
            mid = 0.5 * (a + b)
        kids = [_Panel(a, mid, worst.mapped, worst.depth + 1),
                _Panel(mid, b, worst.mapped, worst.depth + 1)]
        _eval_panels(g, kids, n, m_hi, m_lo)
        for kid in kids:
            heapq.heappush(heap, (-kid.error, counter, kid))
            counter += 1
        live = [h[2] for h in heap] + done
        live.sort(key=lambda p: (p.mapped, p.a))
        total = math.fsum(p.value for p in live)
        err = math.fsum(p.error for p in live)
    live = [h[2] for h in heap] + done
    live.sort(key=lambda p: (p.mapped, p.a))
    total = math.fsum(p.value for p in live)
    err = math.fsum(p.error for p in live)
    scale = sphere_area(n) if sphere else 1.0
    return IntegralResult(total * scale, err * scale, len(live), _converged(err, total, spec))


# ---------------------------------------------------------------------------
# domain engine


def _orthonormal_frame(axis: np.ndarray) -> np.ndarray:
    """Orthogonal matrix whose first column is ``axis`` (normalised)."""
    n = axis.size
    a = axis / np.linalg.norm(axis)
    m = np.eye(n)
    m[:, 0] = a
    q, _ = np.linalg.qr(m)
    if q[:, 0] @ a < 0:
        q = -q
    return q


def _directions(angles: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit vectors and area Jacobian from hyperspherical angles.

    ``angles`` has shape ``(m, n-1)``: polar angles in ``[0, pi]`` followed by
    the azimuth in ``[0, 2 pi]``.
    """
    m = angles.shape[0]
    om = np.empty((m, n))
    jac = np.ones(m)
    sprod = np.ones(m)
    for j in range(n - 2):
        th = angles[:, j]
        om[:, j] = sprod * np.cos(th)
        jac *= np.sin(th) ** (n - 2 - j)
        sprod = sprod * np.sin(th)
    ph = angles[:, n - 2]
    om[:, n - 2] = sprod * np.cos(ph)
    om[:, n - 1] = sprod * np.sin(ph)
    return om, jac


def _tensor_rule(lo, hi, m):
    x, w = gauss_legendre(m)
    d = lo.size
    grids = [0.5 * (hi[j] - lo[j]) * x + 0.5 * (hi[j] + lo[j]) for j in range(d)]
    wts = [0.5 * (hi[j] - lo[j]) * w for j in range(d)]
    pts = np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1).reshape(-1, d)
    ww = wts[0]
    for j in range(1, d):
        ww = np.multiply.outer(ww, wts[j])
    return pts, np.asarray(ww).ravel()


class _Polar:
    """Polar integration about ``center`` over a star-shaped region."""

    def __init__(self, f, n, center, axis, ray_length, spec, anchors, infinite):
        self.f, self.n, self.spec = f, n, spec
        self.center = center
        self.frame = _orthonormal_frame(axis)
        self.ray_length = ray_length
        self.infinite = infinite
        if infinite:
            widths = [w for _, w in anchors]
            cut = max(max(d for d, _ in anchors) + 1e3 * max(widths), 1e3 * min(widths), 1.0)
        else:
            cut = ray_length.upper
        self.cut = cut
        self.breaks = hint_breakpoints(anchors, cut)

    def _ray_integrals(self, dirs, m):
        """Radial integrals along ``dirs``; returns (hi, lo, per-panel error)."""
        n = self.n
        x, w = gauss_legendre(m)
        xl, wl = gauss_legendre(max(2, m // 2))
        rmax = self.ray_length(self.center, dirs) if not self.infinite else np.full(len(dirs), np.inf)
        br = self.breaks
        npan = br.size - 1 + (1 if self.infinite else 0)
        out_hi = np.zeros(len(dirs))
        out_lo = np.zeros(len(dirs))
        perr = np.zeros(npan)
        for which, (xx, ww) in enumerate(((x, w), (xl, wl))):
            a = br[:-1][None, :]
            b = br[1:][None, :]
            if not self.infinite:
                a = np.minimum(a, rmax[:, None])
                b = np.minimum(b, rmax[:, None])
            r = 0.5 * (b - a)[..., None] * xx + 0.5 * (a + b)[..., None]
            wt = 0.5 * (b - a)[..., None] * ww
            if self.infinite:
                r = np.broadcast_to(r, (len(dirs),) + r.shape[1:])
                wt = np.broadcast_to(wt, r.shape)
                t0 = self.cut / (1.0 + self.cut)
                t = 0.5 * (1.0 - t0) * xx + 0.5 * (1.0 + t0)
                rt = np.broadcast_to(t / (1.0 - t), (len(dirs), xx.size))
                wtt = np.broadcast_to(0.5 * (1.0 - t0) * ww / (1.0 - t) ** 2, (len(dirs), xx.size))
                r = np.concatenate([r, rt[:, None, :]], axis=1)
                wt = np.concatenate([wt, wtt[:, None, :]], axis=1)
            pts = self.center[None, None, None, :] + r[..., None] * dirs[:, None, None, :]
            vals = np.asarray(self.f(pts.reshape(-1, n)), dtype=float).reshape(r.shape)
            vals = np.where(wt > 0, vals, 0.0)
            contrib = vals * r ** (n - 1) * wt
            panel_sums = contrib.sum(axis=2)
            if which == 0:
                out_hi = panel_sums.sum(axis=1)
                hi_pan = panel_sums
            else:
                out_lo = panel_sums.sum(axis=1)
                perr = np.abs(hi_pan - panel_sums)
        return out_hi, out_lo, perr

    def cell(self, lo, hi):
        n = self.n
        qa = self.spec.angular_order
        res = []
        for m_ang in (qa, max(2, qa // 2)):
            ang, wang = _tensor_rule(lo, hi, m_ang)
            om, jac = _directions(ang, n)
            dirs = om @ self.frame.T
            r_hi, _, perr = self._ray_integrals(dirs, self.spec.order)
            weights = wang * jac
            res.append((float(r_hi @ weights), np.abs(perr).T @ weights if m_ang == qa else None))
        val, pe = res[0]
        return val, abs(res[0][0] - res[1][0]), pe


def _ball_ray_length(center, dirs):
    c = np.asarray(center)
    b = dirs @ c
    disc = b * b + 1.0 - c @ c
    return -b + np.sqrt(np.maximum(disc, 0.0))


_ball_ray_length.upper = 2.0


def integrate_domain(f: Callable[[np.ndarray], np.ndarray], dom, spec: QuadratureSpec | None = None,
                     dim: int | None = None) -> IntegralResult:
    """Integrate ``f`` (points of shape ``(m, n)`` to values ``(m,)``) over a domain.

    ``dom`` is a :class:`~bubbletower.greenfn.DomainModel` or ``None`` for the
    whole space (then ``dim`` is required).  The ball and the whole space use
    polar coordinates about the sharpest hint; a box uses axis-aligned cells
    pre-refined toward every hint.
    """
    spec = spec or QuadratureSpec()
    if dom is None:
        if dim is None:
            raise InvalidArgument("dim is required for whole-space integrals")
        n = dim
        kind = "space"
    else:
        n = dom.dim
        kind = dom.kind
    if kind == "box":
        return _integrate_box(f, dom, spec)
    if n < 2:
        raise InvalidArgument("polar engine needs n >= 2")
    hints = list(spec.hints)
    if hints:
        hints.sort(key=lambda h: -h[1])
        center = np.array(hints[0][0], dtype=float)
        if center.size != n:
            raise InvalidArgument("hint center has wrong dimension")
    else:
        center = np.zeros(n)
    if kind == "unit_ball" and center @ center >= 1.0:
        raise InvalidArgument("polar center must lie inside the ball")
    others = [np.array(c) - center for c, _ in hints[1:]]
    others = [o for o in others if np.linalg.norm(o) > 0]
    axis = max(others, key=np.linalg.norm) if others else np.eye(n)[0]
    anchors = [(float(np.linalg.norm(np.array(c) - center)), 1.0 / s) for c, s in hints] or [(0.0, 1.0)]
    if kind == "unit_ball":
        anchors.append((0.0, 1.0))
    polar = _Polar(f, n, center, axis, _ball_ray_length, spec, anchors, kind == "space")

    lo0 = np.zeros(n - 1)
    hi0 = np.full(n - 1, math.pi)
    hi0[-1] = 2 * math.pi
    # start with the azimuth split in four and each polar angle in two
    cells = []
    splits = [2] * (n - 2) + [4]
    for idx in np.ndindex(*splits):
        lo = lo0 + (hi0 - lo0) * np.array(idx) / np.array(splits)
        hi = lo + (hi0 - lo0) / np.array(splits)
        cells.append([lo, hi, 0])

    def evaluate(cell_list):
        out = []
        for lo, hi, depth in cell_list:
            v, e, pe = polar.cell(lo, hi)
            out.append((lo, hi, depth, v, e, pe))
        return out

    evaluated = evaluate(cells)
    for _ in range(spec.max_cells):
        total = math.fsum(c[3] for c in evaluated)
        ang_err = math.fsum(c[4] for c in evaluated)
        rad_pan = np.sum([c[5] for c in evaluated], axis=0)
        rad_err = float(rad_pan.sum())
        err = ang_err + rad_err
        if _converged(err, total, spec) or len(evaluated) >= spec.max_cells:
            break
        if rad_err >= ang_err:
            worst = float(rad_pan.max())
            br = polar.breaks
            npan_finite = br.size - 1
            new = []
            for i in range(npan_finite):
                new.append(br[i])
                if rad_pan[i] >= 0.25 * worst:
                    a, b = br[i], br[i + 1]
                    new.append(math.sqrt(a * b) if a > 0 and b / a > 4 else 0.5 * (a + b))
            new.append(br[-1])
            if polar.infinite and rad_pan[-1] >= 0.25 * worst:
                polar.cut *= 4.0
                new.append(polar.cut)
            if len(new) == br.size:
                break
            polar.breaks = np.array(sorted(set(new)))
            if polar.breaks.size > 64 * (2 ** 6) or polar.breaks.size > 4000:
                break
            evaluated = evaluate([[c[0], c[1], c[2]] for c in evaluated])
        else:
            evaluated.sort(key=lambda c: -c[4])
            worst = evaluated[0][4]
            keep, split = [], []
            for c in evaluated:
                if c[4] >= 0.25 * worst and c[2] < spec.max_depth and len(split) < 16:
                    split.append(c)
                else:
                    keep.append(c)
            if not split:
                break
            kids = []
            for lo, hi, depth, *_ in split:
                ax = int(np.argmax((hi - lo) / (hi0 - lo0)))
                mid = 0.5 * (lo[ax] + hi[ax])
                h1 = hi.copy()
                h1[ax] = mid
                l2 = lo.copy()
                l2[ax] = mid
                kids += [[lo.copy(), h1, depth + 1], [l2, hi.copy(), depth + 1]]
            evaluated = keep + evaluate(kids)
            evaluated.sort(key=lambda c: tuple(c[0]))
    evaluated.sort(key=lambda c: tuple(c[0]))
    total = math.fsum(c[3] for c in evaluated)
    err = math.fsum(c[4] for c in evaluated) + float(np.sum([c[5] for c in evaluated]))
    return IntegralResult(total, err, len(evaluated) * (polar.breaks.size - 1), _converged(err, total, spec))


def _integrate_box(f, dom, spec):
    n = dom.dim
    lower = np.asarray(dom.lower, dtype=float)
    upper = np.asarray(dom.upper, dtype=float)
    m = min(spec.order, 8)
    m_lo = max(2, m // 2)

    def rule(lo, hi):
        p1, w1 = _tensor_rule(lo, hi, m)
        p2, w2 = _tensor_rule(lo, hi, m_lo)
        v = np.asarray(f(np.concatenate([p1, p2])), dtype=float)
        q1 = float(v[: len(w1)] @ w1)
        q2 = float(v[len(w1):] @ w2)
        return q1, abs(q1 - q2)

    def split(lo, hi):
        mid = 0.5 * (lo + hi)
        kids = []
        for corner in np.ndindex(*([2] * n)):
            c = np.array(corner)
            kids.append((np.where(c == 0, lo, mid), np.where(c == 0, mid, hi)))
        return kids

    cells = [(lower, upper, 0)]
    # geometric pre-refinement toward each hint
    for c, s in spec.hints:
        c = np.asarray(c, dtype=float)
        width = 1.0 / s
        changed = True
        while changed:
            changed = False
            nxt = []
            for lo, hi, d in cells:
                half = 0.5 * np.max(hi - lo)
                near = np.all(c >= lo - 2 * half) and np.all(c <= hi + 2 * half)
                if near and half > width and d < spec.max_depth and np.all(c >= lo - half) and np.all(c <= hi + half):
                    nxt += [(a, b, d + 1) for a, b in split(lo, hi)]
                    changed = True
                else:
                    nxt.append((lo, hi, d))
            cells = nxt
            if len(cells) > spec.max_cells:
                break
    evaluated = []
    for lo, hi, d in cells:
        v, e = rule(lo, hi)
        evaluated.append([lo, hi, d, v, e])
    heap = [(-c[4], i) for i, c in enumerate(evaluated)]
    heapq.heapify(heap)
    alive = {i: c for i, c in enumerate(evaluated)}
    counter = len(evaluated)
    total = math.fsum(c[3] for c in alive.values())
    err = math.fsum(c[4] for c in alive.values())
    while heap and not _converged(err, total, spec) and len(alive) < spec.max_cells:
        _, i = heapq.heappop(heap)
        lo, hi, d, v, e = alive[i]
        if d >= spec.max_depth:
            continue
        del alive[i]
        for a, b in split(lo, hi):
            vv, ee = rule(a, b)
            alive[counter] = [a, b, d + 1, vv, ee]
            heapq.heappush(heap, (-ee, counter))
            counter += 1
        total = math.fsum(alive[j][3] for j in sorted(alive))
        err = math.fsum(alive[j][4] for j in sorted(alive))
    total = math.fsum(alive[j][3] for j in sorted(alive))
    err = math.fsum(alive[j][4] for j in sorted(alive))
    return IntegralResult(total, err, len(alive), _converged(err, total, spec))
