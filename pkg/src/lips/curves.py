"""Bifurcation curves of the period-two equation in the (p, q) half-plane.

* ``L0``: multiple fixed points, ``(p, q) = (f'(y), f'(y) y + f(y))``.
* off-diagonal part of the apparent contour: double period-two roots
  ``y != w``.  With ``p = sqrt(f'(y) f'(w))`` the contour is the zero set of

      F(y, w) = f(w) - f(y) + sqrt(f'(w) f'(y)) (y - w)

  and ``q = p w + f(y)``.  ``F`` vanishes to third order on the diagonal,
  so the tracer works with ``G = F / (w - y)**3``, whose zero set meets the
  diagonal only at flip points.
* ``l_plus`` / ``l_minus``: a root sits at ``y = +-1`` with partner ``w``;
  ``p`` is the chord slope of f between ``+-1`` and ``w``.
* ``fixed_escape_plus`` / ``fixed_escape_minus``: the fixed point itself
  reaches ``y = +-1``, ``q = +-p + f(+-1)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import DegeneracyError, DomainError
from .jets import ModelFunction

KINDS = ("L0", "Lambda0_offdiagonal", "l_plus", "l_minus",
         "fixed_escape_plus", "fixed_escape_minus")

STRIP = 1e-3
RESIDUAL_TOL = 1e-10
NONDEGENERATE_TOL = 1e-6
SLOPE_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class PlanarCurve:
    """Ordered samples in (p, q) with their preimages.

    ``branch`` labels connected pieces; consecutive samples with the same
    label are joined.  For one-parameter curves ``y`` or ``w`` carries the
    parameter and the other column the fixed value.
    """

    kind: str
    p: np.ndarray
    q: np.ndarray
    y: np.ndarray
    w: np.ndarray
    branch: np.ndarray
    ends: tuple = ()  # (branch, "start"/"end", end type) triples

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown curve kind {self.kind!r}")
        for name in ("p", "q", "y", "w", "branch"):
            object.__setattr__(self, name, np.asarray(getattr(self, name)))
        if self.p.size and not np.all(self.p > 0):
            raise DomainError("curve samples must have p > 0")

    def __len__(self):
        return int(self.p.size)

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.p, self.q])

    def branches(self):
        """Yield index arrays of the connected pieces."""
        for b in np.unique(self.branch):
            yield np.nonzero(self.branch == b)[0]

    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        """Start and end points of all polyline segments, shape (m, 2) each."""
        a, b = [], []
        pts = self.points
        for idx in self.branches():
            if idx.size > 1:
                a.append(pts[idx[:-1]])
                b.append(pts[idx[1:]])
        if not a:
            return np.zeros((0, 2)), np.zeros((0, 2))
        return np.concatenate(a), np.concatenate(b)


@dataclass(frozen=True)
class SingularPoint:
    kind: str  # cusp, flip2, endpoint_tangency, self_intersection
    p: float
    q: float
    preimage: tuple
    residuals: dict = field(default_factory=dict)
    warning: str | None = None

    @property
    def location(self) -> tuple[float, float]:
        return (self.p, self.q)


# L0 ----------------------------------------------------------------------

def trace_L0(f: ModelFunction, n: int = 801) -> PlanarCurve:
    if n < 2:
        raise DomainError("n must be >= 2")
    y = np.linspace(-1.0, 1.0, n)
    d1 = f.deriv(y, 1)
    return PlanarCurve("L0", d1, d1 * y + f(y), y, y.copy(), np.zeros(n, dtype=int),
                       ((0, "start", "y=-1"), (0, "end", "y=1")))


# escape curves -------------------------------------------------------------

def chord_slope_integral(f: ModelFunction, end: float, w: float) -> float:
    """``int_0^1 f'(end + s (w - end)) ds``, the chord slope between ``end`` and ``w``."""
    val, _ = quad(lambda s: float(f.deriv(end + s * (w - end), 1)), 0.0, 1.0,
                  epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def trace_l_pm(f: ModelFunction, sign: int, n: int = 801) -> PlanarCurve:
    """Parameters where a period-two root sits at ``y = sign`` with partner ``w``."""
    if sign not in (1, -1):
        raise DomainError("sign must be +1 or -1")
    if n < 2:
        raise DomainError("n must be >= 2")
    end = float(sign)
    w = np.linspace(-1.0, 1.0, n)
    p = np.array([chord_slope_integral(f, end, wi) for wi in w])
    q = p * w + f(end)
    kind = "l_plus" if sign > 0 else "l_minus"
    return PlanarCurve(kind, p, q, np.full(n, end), w, np.zeros(n, dtype=int))


def trace_fixed_escape(f: ModelFunction, sign: int, p_range: tuple[float, float],
                       n: int = 201) -> PlanarCurve:
    """Line ``q = sign*p + f(sign)`` on which the fixed point reaches ``y = sign``."""
    if sign not in (1, -1):
        raise DomainError("sign must be +1 or -1")
    p0, p1 = p_range
    if not 0 < p0 < p1:
        raise DomainError("p_range must satisfy 0 < p0 < p1")
    p = np.linspace(p0, p1, n)
    end = float(sign)
    q = sign * p + f(end)
    kind = "fixed_escape_plus" if sign > 0 else "fixed_escape_minus"
    return PlanarCurve(kind, p, q, np.full(n, end), np.full(n, end), np.zeros(n, dtype=int))


# off-diagonal contour ------------------------------------------------------

def contour_F(f: ModelFunction, y, w):
    """``f(w) - f(y) + sqrt(f'(w) f'(y)) (y - w)`` evaluated directly."""
    return f(w) - f(y) + np.sqrt(f.deriv(w, 1) * f.deriv(y, 1)) * (y - w)


def cusp_residual(f: ModelFunction, y, w):
    """Second y-derivative of the period-two residual on the contour (up to a positive factor)."""
    d1y, d1w = f.deriv(y, 1), f.deriv(w, 1)
    return f.deriv(w, 2) * d1y**2 - d1w * f.deriv(y, 2) * np.sqrt(d1w * d1y)


def cusp_cubic(f: ModelFunction, y, w):
    """Third y-derivative on the contour; nonzero at an ordinary cusp."""
    d1y, d1w = f.deriv(y, 1), f.deriv(w, 1)
    r = np.sqrt(d1w * d1y)
    return (f.deriv(w, 3) * d1y**3 - 3 * f.deriv(w, 2) * f.deriv(y, 2) * d1y * r
            + f.deriv(y, 3) * d1w**2 * d1y)


def _G(f: ModelFunction, y: float, w: float) -> float:
    d = w - y
    b = f.chord(y, w) - math.sqrt(f.deriv(y, 1) * f.deriv(w, 1))
    return b / (d * d)


def _G_grad(f: ModelFunction, y: float, w: float) -> tuple[float, float, float]:
    d = w - y
    d1y, d1w = f.deriv(y, 1), f.deriv(w, 1)
    r = math.sqrt(d1y * d1w)
    F = d * (f.chord(y, w) - r)
    Fy = -d1y + r - d * r * f.deriv(y, 2) / (2 * d1y)
    Fw = d1w - r - d * r * f.deriv(w, 2) / (2 * d1w)
    d3, d4 = d**3, d**4
    return F / d3, Fy / d3 + 3 * F / d4, Fw / d3 - 3 * F / d4


def _pq(f: ModelFunction, y, w):
    p = np.sqrt(f.deriv(y, 1) * f.deriv(w, 1))
    return p, p * w + f(y)


def _inside(y, w, strip):
    return y >= -1.0 and w <= 1.0 and w - y >= strip


def _correct(f, x, t, x_pred, tol=1e-11, max_iter=12):
    """Newton on {G = 0, t.(x - x_pred) = 0}.

    Converged once a step drops below ``tol`` plus the rounding noise of G,
    which grows like ``1/(w - y)**2`` next to the diagonal.
    """
    y, w = x_pred
    for _ in range(max_iter):
        try:
            g, gy, gw = _G_grad(f, y, w)
        except ValueError:
            return None
        a = np.array([[gy, gw], [t[0], t[1]]])
        rhs = -np.array([g, t[0] * (y - x_pred[0]) + t[1] * (w - x_pred[1])])
        try:
            dy, dw = np.linalg.solve(a, rhs)
        except np.linalg.LinAlgError:
            return None
        y, w = y + dy, w + dw
        if not (math.isfinite(y) and math.isfinite(w)) or w - y <= 0:
            return None
        if abs(dy) + abs(dw) < tol + 1e-15 / (w - y) ** 2:
            return np.array([y, w])
    return None


def _tangent(f, x, prev_t=None):
    _, gy, gw = _G_grad(f, x[0], x[1])
    t = np.array([gw, -gy])
    nrm = np.hypot(*t)
    if nrm == 0:
        return None
    t /= nrm
    if prev_t is not None and t @ prev_t < 0:
        t = -t
    return t


def _boundary_point(f, x_in, x_out, strip):
    """Exact crossing of the contour with the edge of the traced region."""
    y0, w0 = x_in
    y1, w1 = x_out
    cands = []
    if y1 < -1.0:
        cands.append(("y=-1", (y0 + 1.0) / (y0 - y1)))
    if w1 > 1.0:
        cands.append(("w=1", (1.0 - w0) / (w1 - w0)))
    if w1 - y1 < strip:
        gap0, gap1 = w0 - y0, w1 - y1
        cands.append(("diagonal", (gap0 - strip) / (gap0 - gap1)))
    name, _ = min(cands, key=lambda c: c[1])
    if name == "y=-1":
        g = lambda w: _G(f, -1.0, w)
        pt = lambda s: (-1.0, s)
        lo, hi = sorted((w0, w1))
    elif name == "w=1":
        g = lambda y: _G(f, y, 1.0)
        pt = lambda s: (s, 1.0)
        lo, hi = sorted((y0, y1))
    else:
        m0, m1 = 0.5 * (y0 + w0), 0.5 * (y1 + w1)
        g = lambda m: _G(f, m - strip / 2, m + strip / 2)
        pt = lambda s: (s - strip / 2, s + strip / 2)
        lo, hi = sorted((m0, m1))
    # widen until the 1-D restriction brackets a zero
    span = max(hi - lo, 1e-6)
    for _ in range(30):
        a, b = lo - span, hi + span
        if name == "w=1":
            a, b = max(a, -1.0), min(b, 1.0 - strip)
        elif name == "y=-1":
            a, b = max(a, -1.0 + strip), min(b, 1.0)
        else:
            a, b = max(a, -1.0 + strip / 2), min(b, 1.0 - strip / 2)
        ga, gb = g(a), g(b)
        if ga == 0:
            return name, np.array(pt(a))
        if gb == 0:
            return name, np.array(pt(b))
        if ga * gb < 0:
            # pick the zero nearest the crossing estimate
            s = brentq(g, a, b, xtol=1e-15)
            return name, np.array(pt(s))
        span *= 2
    return name, None


def _continue(f, x0, t0, strip, h0, h_min, h_max, max_steps):
    pts = [x0]
    x, t, h = x0, t0, h0
    end = "max_steps"
    for _ in range(max_steps):
        x_pred = x + h * t
        x_new = _correct(f, x, t, x_pred)
        if x_new is None or np.hypot(*(x_new - x)) > 2 * h:
            if h <= h_min:
                end = "stalled"
                break
            h = max(h / 2, h_min)
            continue
        if not _inside(x_new[0], x_new[1], strip):
            name, xb = _boundary_point(f, x, x_new, strip)
            if xb is not None:
                pts.append(xb)
            end = name
            break
        if len(pts) > 10 and np.hypot(*(x_new - x0)) < 0.5 * h:
            pts.append(x0.copy())
            end = "closed"
            break
        t_new = _tangent(f, x_new, t)
        if t_new is None:
            end = "singular"
            break
        pts.append(x_new)
        x, t = x_new, t_new
        h = min(h * 1.3, h_max)
    return pts, end


def _seed_points(f, seeds, strip, n_line=400):
    out = []
    for c in np.linspace(-1.0, 1.0, seeds):
        # vertical lines y = c and horizontal lines w = c
        for vertical in (True, False):
            if vertical:
                s = np.linspace(c + strip, 1.0, n_line)
                g = lambda v: _G(f, c, v)
                mk = lambda v: (c, v)
            else:
                s = np.linspace(-1.0, c - strip, n_line)
                g = lambda v: _G(f, v, c)
                mk = lambda v: (v, c)
            if s[-1] <= s[0]:
                continue
            vals = np.array([g(v) for v in s])
            for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
                out.append(np.array(mk(brentq(g, s[i], s[i + 1], xtol=1e-15))))
            out.extend(np.array(mk(v)) for v in s[vals == 0])
    return out


def _polyline_distance(x, pts):
    if len(pts) == 1:
        return float(np.hypot(*(pts[0] - x)))
    a, b = pts[:-1], pts[1:]
    ab = b - a
    t = np.clip(np.einsum("ij,ij->i", x - a, ab) / np.maximum(np.einsum("ij,ij->i", ab, ab), 1e-300),
                0.0, 1.0)
    d = a + t[:, None] * ab - x
    return float(np.min(np.hypot(d[:, 0], d[:, 1])))


def _near(x, branches, tol):
    return any(_polyline_distance(x, pts) < tol for pts in branches)


def trace_Lambda0(f: ModelFunction, seeds: int = 20, strip: float = STRIP, step: float = 1e-2,
                  merge_flips: bool = True) -> PlanarCurve:
    """Off-diagonal branches of the apparent contour, traced in the ``y < w`` triangle.

    The swap ``(y, w) -> (w, y)`` maps the contour to itself with the same
    ``(p, q)``, so the other triangle adds nothing.  Branch ends reaching the
    diagonal strip next to a flip point are closed off with that flip point.
    """
    if seeds < 10:
        raise DomainError("seeds must be >= 10")
    if f.is_affine:
        raise DegeneracyError("affine f: the contour function vanishes identically")
    branches, ends = [], []
    for x0 in _seed_points(f, seeds, strip):
        if _near(x0, branches, 0.1 * step):
            continue
        t0 = _tangent(f, x0)
        if t0 is None:
            continue
        fwd, e_fwd = _continue(f, x0, t0, strip, step, 1e-7, step, 100000)
        if e_fwd == "closed":
            branches.append(np.array(fwd))
            ends.append(("closed", "closed"))
            continue
        bwd, e_bwd = _continue(f, x0, -t0, strip, step, 1e-7, step, 100000)
        pts = np.array(bwd[::-1] + fwd[1:])
        branches.append(pts)
        ends.append((e_bwd, e_fwd))

    flips = [s.preimage[0] for s in find_flips(f)] if merge_flips else []
    ys, ws, bs, end_info = [], [], [], []
    for k, (pts, (e0, e1)) in enumerate(zip(branches, ends)):
        if merge_flips:
            pts, e0, e1 = _merge_flip_ends(pts, e0, e1, flips, strip)
        ys.append(pts[:, 0])
        ws.append(pts[:, 1])
        bs.append(np.full(len(pts), k))
        end_info += [(k, "start", e0), (k, "end", e1)]
    if not branches:
        empty = np.zeros(0)
        return PlanarCurve("Lambda0_offdiagonal", empty, empty, empty, empty,
                           np.zeros(0, dtype=int), ())
    y = np.concatenate(ys)
    w = np.concatenate(ws)
    p, q = _pq(f, y, w)
    return PlanarCurve("Lambda0_offdiagonal", p, q, y, w, np.concatenate(bs), tuple(end_info))


def _merge_flip_ends(pts, e0, e1, flips, strip):
    def flip_near(x):
        m = 0.5 * (x[0] + x[1])
        near = [yf for yf in flips if abs(yf - m) < 50 * strip]
        return min(near, key=lambda yf: abs(yf - m)) if near else None

    if e0 == "diagonal":
        yf = flip_near(pts[0])
        if yf is not None:
            pts = np.vstack([[yf, yf], pts])
            e0 = "flip"
    if e1 == "diagonal":
        yf = flip_near(pts[-1])
        if yf is not None:
            pts = np.vstack([pts, [yf, yf]])
            e1 = "flip"
    return pts, e0, e1


# independent residual checks ------------------------------------------------

def curve_residuals(f: ModelFunction, curve: PlanarCurve) -> np.ndarray:
    """Largest defining-equation residual at each sample, evaluated from scratch."""
    y, w, p, q = curve.y, curve.w, curve.p, curve.q
    if curve.kind == "L0":
        d1 = f.deriv(y, 1)
        return np.maximum(np.abs(p - d1), np.abs(q - (d1 * y + f(y))))
    if curve.kind == "Lambda0_offdiagonal":
        return np.maximum.reduce([np.abs(contour_F(f, y, w)),
                                  np.abs(p - np.sqrt(f.deriv(y, 1) * f.deriv(w, 1))),
                                  np.abs(q - (p * w + f(y)))])
    # escape curves: a root of the period-two residual at y = +-1 with partner w
    partner = (q - f(y)) / p
    phi = -p * y + q - f(partner)
    return np.maximum.reduce([np.abs(phi), np.abs(q - (p * w + f(y))), np.abs(partner - w)])


# singularities ------------------------------------------------------------

def flip_function(f: ModelFunction, y):
    """``-2 f''' + 3 f''**2 / f'``; zeros on L0 are codimension-two flips."""
    return -2 * f.deriv(y, 3) + 3 * f.deriv(y, 2) ** 2 / f.deriv(y, 1)


def flip_nondegeneracy(f: ModelFunction, y):
    d1, d2 = f.deriv(y, 1), f.deriv(y, 2)
    return -2 * f.deriv(y, 5) + (15 * d2 / d1) * (f.deriv(y, 4) - 2 * d2**3 / d1**2)


def _flip_derivative(f: ModelFunction, y):
    d1, d2, d3, d4 = (f.deriv(y, k) for k in (1, 2, 3, 4))
    return -2 * d4 + 6 * d2 * d3 / d1 - 3 * d2**3 / d1**2


def find_flips(f: ModelFunction, grid: int = 2001) -> list[SingularPoint]:
    """Roots of the flip function on [-1, 1], grid scan plus Newton."""
    if f.is_affine:
        return []
    ys = np.linspace(-1.0, 1.0, grid)
    k = flip_function(f, ys)
    cands = list(ys[k == 0])
    s = np.sign(k)
    g = lambda y: float(flip_function(f, y))
    for i in np.nonzero(s[:-1] * s[1:] < 0)[0]:
        cands.append(brentq(g, ys[i], ys[i + 1], xtol=1e-15))
    # touching zeros: local minima of |k| without a sign change
    ak = np.abs(k)
    scale = max(1.0, float(np.max(ak)))
    for i in range(1, grid - 1):
        if ak[i] < ak[i - 1] and ak[i] < ak[i + 1] and s[i - 1] == s[i] == s[i + 1] \
                and ak[i] < 1e-3 * scale:
            y = ys[i]
            for _ in range(50):
                dk = float(_flip_derivative(f, y))
                if dk == 0:
                    break
                y_new = y - g(y) / dk
                if abs(y_new - y) < 1e-15:
                    break
                y = y_new
            if abs(g(y)) < 1e-9 and -1 <= y <= 1:
                cands.append(y)
    out = []
    for y in sorted(cands):
        # Newton polish on the flip function
        for _ in range(3):
            dk = float(_flip_derivative(f, y))
            if dk == 0:
                break
            y_n = y - g(y) / dk
            if -1.0 <= y_n <= 1.0 and abs(g(y_n)) <= abs(g(y)):
                y = y_n
        if out and abs(y - out[-1].preimage[0]) < 1e-9:
            continue
        nd = float(flip_nondegeneracy(f, y))
        d1 = float(f.deriv(y, 1))
        warning = None
        if abs(nd) <= NONDEGENERATE_TOL:
            warning = "degenerate flip: fifth-derivative condition vanishes"
            warnings.warn(f"degenerate flip at y={y}", RuntimeWarning, stacklevel=2)
        out.append(SingularPoint("flip2", d1, d1 * y + float(f(y)), (float(y),),
                                 {"flip": g(y), "nondegeneracy": nd}, warning))
    return out


def _cusp_system(f, y, w):
    d1y, d1w = f.deriv(y, 1), f.deriv(w, 1)
    d2y, d2w = f.deriv(y, 2), f.deriv(w, 2)
    d3y, d3w = f.deriv(y, 3), f.deriv(w, 3)
    r = math.sqrt(d1y * d1w)
    ry, rw = r * d2y / (2 * d1y), r * d2w / (2 * d1w)
    c = d2w * d1y**2 - d1w * d2y * r
    cy = 2 * d2w * d1y * d2y - d1w * (d3y * r + d2y * ry)
    cw = d3w * d1y**2 - (d2w * d2y * r + d1w * d2y * rw)
    return c, cy, cw


def _newton_cusp(f, y, w, strip, max_iter=40):
    dy = dw = math.inf
    for _ in range(max_iter):
        try:
            g, gy, gw = _G_grad(f, y, w)
            c, cy, cw = _cusp_system(f, y, w)
        except ValueError:
            return None
        try:
            dy, dw = np.linalg.solve([[gy, gw], [cy, cw]], [-g, -c])
        except np.linalg.LinAlgError:
            return None
        y, w = y + dy, w + dw
        if not (math.isfinite(y) and math.isfinite(w)) or w - y < strip / 2:
            return None
        if abs(y) > 1.5 or abs(w) > 1.5:
            return None
        if abs(dy) + abs(dw) < 1e-12:
            return y, w
    return (y, w) if abs(dy) + abs(dw) < 1e-10 else None


def _cusp_point(f, y, w, warning=None):
    p, q = _pq(f, y, w)
    res = {"F": float(contour_F(f, y, w)), "cusp": float(cusp_residual(f, y, w)),
           "cubic": float(cusp_cubic(f, y, w))}
    if warning is None and abs(res["cubic"]) <= NONDEGENERATE_TOL:
        warning = "degenerate cusp: third derivative vanishes"
    return SingularPoint("cusp", float(p), float(q), (float(y), float(w)), res, warning)


def find_cusps(f: ModelFunction, lambda0: PlanarCurve, strip: float = STRIP) -> list[SingularPoint]:
    """Sign changes of the cusp residual along the traced contour, Newton-polished."""
    if f.is_affine or len(lambda0) == 0:
        return []
    out = []
    for idx in lambda0.branches():
        y, w = lambda0.y[idx], lambda0.w[idx]
        off = w - y > strip / 2
        c = np.where(off, cusp_residual(f, y, w), np.nan)
        for i in range(len(idx) - 1):
            if not (off[i] and off[i + 1]):
                continue
            if c[i] == 0 or c[i] * c[i + 1] < 0:
                sol = _newton_cusp(f, 0.5 * (y[i] + y[i + 1]), 0.5 * (w[i] + w[i + 1]), strip)
                if sol is None:
                    out.append(_cusp_point(f, y[i], w[i], "unresolved: Newton did not converge"))
                    continue
                if any(abs(sol[0] - s.preimage[0]) + abs(sol[1] - s.preimage[1]) < 1e-9
                       for s in out):
                    continue
                out.append(_cusp_point(f, *sol))
    return out


def cusp_seed_oracle(f: ModelFunction, n: int = 50, strip: float = STRIP) -> list[tuple[float, float]]:
    """Cusp preimages found by Newton from an ``n x n`` grid of seeds with ``y < w``."""
    sols: list[tuple[float, float]] = []
    grid = np.linspace(-1.0, 1.0, n)
    for y0 in grid:
        for w0 in grid:
            if w0 - y0 < strip:
                continue
            sol = _newton_cusp(f, y0, w0, strip)
            if sol is None:
                continue
            y, w = sol
            if not (-1 - 1e-12 <= y and w <= 1 + 1e-12 and w - y >= strip):
                continue
            if abs(_G(f, y, w)) > 1e-8 or abs(cusp_residual(f, y, w)) > 1e-9:
                continue
            if all(abs(y - a) + abs(w - b) > 1e-7 for a, b in sols):
                sols.append((y, w))
    return sorted(sols)


def _seg_intersections(a0, a1, b0, b1):
    """Proper crossings between segment sets; returns (i, j, s, t) arrays."""
    da = a1 - a0
    db = b1 - b0
    out = []
    for i in range(len(a0)):
        r = da[i]
        qp = b0 - a0[i]
        den = r[0] * db[:, 1] - r[1] * db[:, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (qp[:, 0] * db[:, 1] - qp[:, 1] * db[:, 0]) / den
            t = (qp[:, 0] * r[1] - qp[:, 1] * r[0]) / den
        hit = (den != 0) & (s >= 0) & (s < 1) & (t >= 0) & (t < 1)
        for j in np.nonzero(hit)[0]:
            out.append((i, int(j), float(s[j]), float(t[j])))
    return out


def find_self_intersections(curves: PlanarCurve | Sequence[PlanarCurve],
                            f: ModelFunction | None = None,
                            end_tol: float = 1e-9) -> list[SingularPoint]:
    """Transversal crossings among the polylines of one or more curves.

    Crossings at shared polyline ends (e.g. a contour branch leaving L0 at a
    flip) are not self-intersections and are skipped.  With ``f`` given,
    crossings between two off-diagonal contour samples are refined by Newton
    on the four equations ``G(a) = G(b) = 0``, ``(p, q)(a) = (p, q)(b)``.
    """
    if isinstance(curves, PlanarCurve):
        curves = [curves]
    polys = []
    for c in curves:
        for idx in c.branches():
            if idx.size > 1:
                polys.append((c, idx))
    out: list[SingularPoint] = []
    for ia in range(len(polys)):
        for ib in range(ia, len(polys)):
            ca, idx_a = polys[ia]
            cb, idx_b = polys[ib]
            pa, pb = ca.points[idx_a], cb.points[idx_b]
            for i, j, s, t in _seg_intersections(pa[:-1], pa[1:], pb[:-1], pb[1:]):
                if ia == ib and abs(i - j) <= 1:
                    continue
                x = pa[i] + s * (pa[i + 1] - pa[i])
                if _at_shared_end(x, pa, pb, end_tol):
                    continue
                if ia == ib and j < i:
                    continue
                da = pa[i + 1] - pa[i]
                db = pb[j + 1] - pb[j]
                sin = abs(da[0] * db[1] - da[1] * db[0]) / (np.hypot(*da) * np.hypot(*db))
                pre = (float(ca.y[idx_a[i]]), float(ca.w[idx_a[i]]),
                       float(cb.y[idx_b[j]]), float(cb.w[idx_b[j]]))
                res = {"sin_angle": float(sin)}
                kinds = {ca.kind, cb.kind}
                if f is not None and kinds == {"L0", "Lambda0_offdiagonal"}:
                    # a branch leaving L0 at a flip touches it tangentially there;
                    # only a refined crossing away from the diagonal is genuine
                    c0, i0, s0, c1, i1, s1 = ((ca, idx_a[i], s, cb, idx_b[j], t)
                                              if ca.kind == "L0" else (cb, idx_b[j], t, ca, idx_a[i], s))
                    z = np.array([c0.y[i0] + s0 * (c0.y[i0 + 1] - c0.y[i0]),
                                  c1.y[i1] + s1 * (c1.y[i1 + 1] - c1.y[i1]),
                                  c1.w[i1] + s1 * (c1.w[i1 + 1] - c1.w[i1])])
                    sol = _newton_L0_crossing(f, z)
                    if sol is None or sol[2] - sol[1] < STRIP:
                        continue
                    pre = tuple(float(v) for v in sol)
                    x = np.array([float(f.deriv(sol[0], 1)),
                                  float(f.deriv(sol[0], 1) * sol[0] + f(sol[0]))])
                    res["newton"] = 1.0
                if f is not None and ca.kind == cb.kind == "Lambda0_offdiagonal":
                    ya = ca.y[idx_a[i]] + s * (ca.y[idx_a[i + 1]] - ca.y[idx_a[i]])
                    wa = ca.w[idx_a[i]] + s * (ca.w[idx_a[i + 1]] - ca.w[idx_a[i]])
                    yb = cb.y[idx_b[j]] + t * (cb.y[idx_b[j + 1]] - cb.y[idx_b[j]])
                    wb = cb.w[idx_b[j]] + t * (cb.w[idx_b[j + 1]] - cb.w[idx_b[j]])
                    sol = _newton_crossing(f, np.array([ya, wa, yb, wb]))
                    if sol is not None:
                        pre = tuple(float(v) for v in sol)
                        pq = _pq(f, sol[0], sol[1])
                        x = np.array([float(pq[0]), float(pq[1])])
                        res["newton"] = 1.0
                warning = None
                if sin < 1e-3:
                    warning = "near-tangential crossing"
                dup = any(np.hypot(x[0] - o.p, x[1] - o.q) < 1e-9 for o in out)
                if not dup:
                    out.append(SingularPoint("self_intersection", float(x[0]), float(x[1]),
                                             pre, res, warning))
    return out


def _at_shared_end(x, pa, pb, tol):
    ends_a = (pa[0], pa[-1])
    ends_b = (pb[0], pb[-1])
    for ea in ends_a:
        for eb in ends_b:
            if np.hypot(*(ea - eb)) < tol and np.hypot(*(x - ea)) < 1e-6:
                return True
    return False


def _newton_crossing(f, z, max_iter=30):
    def eqs(z):
        ya, wa, yb, wb = z
        pa, qa = _pq(f, ya, wa)
        pb, qb = _pq(f, yb, wb)
        return np.array([_G(f, ya, wa), _G(f, yb, wb), pa - pb, qa - qb])

    try:
        for _ in range(max_iter):
            r = eqs(z)
            jac = np.empty((4, 4))
            for k in range(4):
                dz = np.zeros(4)
                dz[k] = 1e-7
                jac[:, k] = (eqs(z + dz) - eqs(z - dz)) / 2e-7
            step = np.linalg.solve(jac, -r)
            z = z + step
            if np.max(np.abs(step)) < 1e-12:
                return z
    except (ValueError, np.linalg.LinAlgError):
        return None
    return None


def _newton_L0_crossing(f, z, max_iter=30):
    """Solve L0(y0) = contour image of (y, w) with G(y, w) = 0."""
    def eqs(z):
        y0, y, w = z
        p, q = _pq(f, y, w)
        d1 = f.deriv(y0, 1)
        return np.array([d1 - p, d1 * y0 + f(y0) - q, _G(f, y, w)])

    try:
        for _ in range(max_iter):
            r = eqs(z)
            jac = np.empty((3, 3))
            for k in range(3):
                dz = np.zeros(3)
                dz[k] = 1e-7
                jac[:, k] = (eqs(z + dz) - eqs(z - dz)) / 2e-7
            step = np.linalg.solve(jac, -r)
            z = z + step
            if z[2] - z[1] <= 0:
                return None
            if np.max(np.abs(step)) < 1e-11:
                return z
    except (ValueError, np.linalg.LinAlgError):
        return None
    return None


# endpoint tangency --------------------------------------------------------

def lambda0_tangent(f: ModelFunction, y: float, w: float) -> np.ndarray:
    """Tangent direction of the contour image in (p, q) at preimage (y, w)."""
    _, gy, gw = _G_grad(f, y, w)
    dy, dw = gw, -gy
    d1y, d1w = f.deriv(y, 1), f.deriv(w, 1)
    p = math.sqrt(d1y * d1w)
    dp = 0.5 * p * (f.deriv(y, 2) / d1y * dy + f.deriv(w, 2) / d1w * dw)
    dq = dp * w + p * dw + d1y * dy
    return np.array([dp, dq])


def l_tangent(f: ModelFunction, sign: int, w: float) -> np.ndarray:
    """``d(p, q)/dw`` along l_plus (sign=+1) or l_minus (sign=-1)."""
    end = float(sign)
    p = f.chord(end, w)
    dp = (f.deriv(w, 1) - p) / (w - end) if w != end else 0.5 * f.deriv(end, 2)
    return np.array([dp, dp * w + p])


def _sin_between(a, b):
    return abs(a[0] * b[1] - a[1] * b[0]) / (np.hypot(*a) * np.hypot(*b))


def endpoint_tangency(f: ModelFunction, lambda0: PlanarCurve, l: PlanarCurve) -> list[SingularPoint]:
    """Tangency of the contour and an escape curve at each shared endpoint."""
    sign = {"l_plus": 1, "l_minus": -1}.get(l.kind)
    if sign is None:
        raise DomainError("second curve must be l_plus or l_minus")
    target = "w=1" if sign > 0 else "y=-1"
    out = []
    for b, where, kind in lambda0.ends:
        if kind != target:
            continue
        idx = np.nonzero(lambda0.branch == b)[0]
        k = idx[0] if where == "start" else idx[-1]
        y, w = float(lambda0.y[k]), float(lambda0.w[k])
        # the contour's interior root is the escape curve's partner parameter
        w_l = y if sign > 0 else w
        t_c = lambda0_tangent(f, y, w)
        t_l = l_tangent(f, sign, w_l)
        p_l = f.chord(float(sign), w_l)
        q_l = p_l * w_l + float(f(float(sign)))
        gap = float(np.hypot(lambda0.p[k] - p_l, lambda0.q[k] - q_l))
        diff = float(_sin_between(t_c, t_l))
        res = {"slope_lambda0": float(t_c[1] / t_c[0]) if t_c[0] else math.inf,
               "slope_l": float(t_l[1] / t_l[0]) if t_l[0] else math.inf,
               "difference": diff, "gap": gap}
        warning = None if diff < SLOPE_TOL and gap < 1e-9 else "endpoint not tangent"
        out.append(SingularPoint("endpoint_tangency", float(lambda0.p[k]), float(lambda0.q[k]),
                                 (y, w), res, warning))
    return out


def all_curves(f: ModelFunction, p_range: tuple[float, float], n: int = 801,
               seeds: int = 20) -> list[PlanarCurve]:
    """Every curve across which the cycle count can change."""
    return [trace_L0(f, n), trace_Lambda0(f, seeds), trace_l_pm(f, 1, n), trace_l_pm(f, -1, n),
            trace_fixed_escape(f, 1, p_range, n), trace_fixed_escape(f, -1, p_range, n)]
