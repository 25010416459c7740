"""Return map of the lips polycycle and its period-one / period-two roots.

In blown-up parameters the return map on the section ``[-1, 1]`` is
``Delta(y) = f^{-1}(-p*y + q)``.  It reverses orientation, so limit cycles
are fixed points (one-sided cycles) and period-two orbits (two-sided
cycles).  Both are zeros of

    phi(y) = -p*y + q - f(w),   w = (q - f(y)) / p,

where ``w = Delta^{-1}(y)`` is the partner point of ``y``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import kernels
from .blowup import BlownParams
from .errors import DegeneracyError, DomainError, EscapeError
from .jets import Jet, ModelFunction, compose, eval_inverse_jet

EXTENSION_MARGIN = 0.5
ROOT_TOL = 1e-12
EDGE_TOL = 1e-9
FIXED_MATCH = 1e-9
SIMPLE_TOL = 1e-6
DEGENERATE_TOL = 1e-10


@dataclass(frozen=True)
class ReturnSystem:
    """Model function plus blown-up parameters; ``delta`` is metadata only."""

    f: ModelFunction
    bp: BlownParams

    @classmethod
    def at(cls, f: ModelFunction, p: float, q: float, delta: float = 0.0) -> "ReturnSystem":
        return cls(f, BlownParams(delta, float(p), float(q)))

    @property
    def p(self) -> float:
        return self.bp.p

    @property
    def q(self) -> float:
        return self.bp.q

    @property
    def scale(self) -> float:
        return max(1.0, abs(self.q), self.p)

    def partner(self, y):
        """``Delta^{-1}(y) = (q - f(y)) / p``."""
        return (self.q - self.f(y)) / self.p

    def admissible_interval(self) -> tuple[float, float] | None:
        """Points of [-1, 1] whose partner also lies in [-1, 1]."""
        f = self.f
        lo_v = max(self.q - self.p, f.lo)
        hi_v = min(self.q + self.p, f.hi)
        if lo_v > hi_v:
            return None
        return f.inverse(lo_v), f.inverse(hi_v)


@dataclass(frozen=True)
class FixedPoint:
    y: float
    slope: float  # Delta'(y) = -p / f'(y)


@dataclass(frozen=True)
class Root:
    y: float
    multiplicity: int  # 1, 2, or 3 meaning "3 or more"
    is_fixed: bool
    escape: bool

    @property
    def multiplicity_label(self) -> str:
        return ">=3" if self.multiplicity >= 3 else str(self.multiplicity)


@dataclass(frozen=True)
class RootReport:
    fixed_root: FixedPoint | None
    period2_roots: tuple[Root, ...]
    escape_flags: bool

    @property
    def cycles(self) -> int:
        """Limit cycles: the fixed point plus one per partner pair."""
        nonfixed = sum(not r.is_fixed for r in self.period2_roots)
        return int(self.fixed_root is not None) + nonfixed // 2

    @property
    def all_simple(self) -> bool:
        return all(r.multiplicity == 1 for r in self.period2_roots)


def poincare_map(sys: ReturnSystem, y: float) -> float:
    v = -sys.p * y + sys.q
    f = sys.f
    if not f.lo <= v <= f.hi:
        raise EscapeError(f"-p*y + q = {v} leaves the range [{f.lo}, {f.hi}] of f")
    return f.inverse(v)


def return_slope(sys: ReturnSystem, y: float) -> float:
    """``Delta'(y)``; always negative."""
    return -sys.p / float(sys.f.deriv(poincare_map(sys, y), 1))


def fixed_point(sys: ReturnSystem) -> FixedPoint | None:
    """The unique zero of the increasing function ``f(y) + p*y - q`` on [-1, 1]."""
    f, p, q = sys.f, sys.p, sys.q
    g = lambda y: float(f(y)) + p * y - q
    g_lo, g_hi = g(-1.0), g(1.0)
    if g_lo > 0 or g_hi < 0:
        return None
    if g_lo == 0:
        y = -1.0
    elif g_hi == 0:
        y = 1.0
    else:
        y = brentq(g, -1.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        # one Newton polish; keep it only if it improves the residual
        y_n = y - g(y) / (float(f.deriv(y, 1)) + p)
        if -1.0 <= y_n <= 1.0 and abs(g(y_n)) < abs(g(y)):
            y = y_n
    return FixedPoint(y, -p / float(f.deriv(y, 1)))


def period2_residual(sys: ReturnSystem, y):
    """``phi(y)``; its zeros on [-1, 1] are the limit cycles."""
    w = sys.partner(y)
    if np.any(np.abs(w) > 1.0 + EXTENSION_MARGIN) or np.any(np.abs(y) > 1.0 + EXTENSION_MARGIN):
        raise EscapeError("partner point beyond the extension margin of f")
    return -sys.p * y + sys.q - sys.f(w)


def residual_jet(sys: ReturnSystem, y0: float, order: int = 3) -> Jet:
    """Exact jet of ``phi`` at ``y0`` from the jets of f at ``y0`` and at its partner."""
    f, p, q = sys.f, sys.p, sys.q
    fy = f.derivs(y0, order)
    w_jet = Jet(y0, tuple([(q - fy[0]) / p] + [-v / p for v in fy[1:]]))
    fw = Jet(w_jet.values[0], tuple(f.derivs(w_jet.values[0], order)))
    fw_of_y = compose(fw, w_jet).values
    lin = [-p * y0 + q, -p] + [0.0] * (order - 1)
    return Jet(y0, tuple(a - b for a, b in zip(lin, fw_of_y)))


def _multiplicity(sys: ReturnSystem, y: float) -> int:
    return min(multiplicity_from_jet(residual_jet(sys, y, 3), sys.scale), 3)


def _polish(phi, a: float, b: float, fa: float, fb: float) -> float:
    if fa == 0:
        return a
    if fb == 0:
        return b
    return brentq(phi, a, b, xtol=ROOT_TOL * 1e-3, rtol=4 * np.finfo(float).eps)


def find_period2_roots(sys: ReturnSystem, grid_n: int = 4001) -> RootReport:
    """All limit-cycle roots of ``phi`` on the admissible part of [-1, 1].

    Sign changes on a uniform grid are polished by Brent's method; grid
    extrema of ``phi`` without a sign change are refined to catch touching
    (even) roots and close root pairs that fall inside one grid step.
    """
    if grid_n < 100:
        raise DomainError("grid_n must be >= 100")
    fixed = fixed_point(sys)
    span = sys.admissible_interval()
    if span is None:
        return RootReport(fixed, (), False)
    ylo, yhi = span
    scale = sys.scale
    phi = lambda y: float(period2_residual(sys, y))

    if yhi - ylo <= 1e-12:
        roots = [fixed.y] if fixed is not None else []
    else:
        ys = np.linspace(ylo, yhi, grid_n)
        vals = kernels.residual(sys.f.kernel_spec(), sys.p, sys.q, ys)
        if np.count_nonzero(np.abs(vals) < DEGENERATE_TOL) * 2 > grid_n:
            raise DegeneracyError("period-two residual vanishes on most of the section "
                                  "(affine f with p = 1?)")
        roots = [float(y) for y in ys[vals == 0]]
        # a root sitting on the end of the admissible interval (on an escape curve)
        for k in (0, grid_n - 1):
            if vals[k] != 0 and abs(phi(float(ys[k]))) < ROOT_TOL * scale:
                roots.append(float(ys[k]))
        s = np.sign(vals)
        for i in np.nonzero(s[:-1] * s[1:] < 0)[0]:
            roots.append(_polish(phi, ys[i], ys[i + 1], vals[i], vals[i + 1]))
        # extrema of phi that do not cross zero on the grid
        av = np.abs(vals)
        for i in range(1, grid_n - 1):
            if not (av[i] <= av[i - 1] and av[i] <= av[i + 1] and av[i] < 1e-4 * scale):
                continue
            if s[i] == 0 or s[i - 1] != s[i] or s[i + 1] != s[i]:
                continue
            sg = s[i]
            res = minimize_scalar(lambda y: sg * phi(y), bounds=(ys[i - 1], ys[i + 1]),
                                  method="bounded", options={"xatol": 1e-14})
            ye, fe = float(res.x), phi(float(res.x))
            if np.sign(fe) == -sg:
                roots.append(_polish(phi, ys[i - 1], ye, vals[i - 1], fe))
                roots.append(_polish(phi, ye, ys[i + 1], fe, vals[i + 1]))
            elif abs(fe) < 1e-11 * scale:
                roots.append(ye)
        if fixed is not None and not any(abs(r - fixed.y) <= FIXED_MATCH for r in roots):
            roots.append(fixed.y)

    roots = _dedupe(sorted(roots))
    roots = _complete_pairs(sys, roots, ylo, yhi, fixed)
    out = []
    for y in roots:
        is_fixed = fixed is not None and abs(y - fixed.y) <= FIXED_MATCH
        w = float(sys.partner(y))
        edge = 1.0 - abs(y) <= EDGE_TOL or 1.0 - abs(w) <= EDGE_TOL
        out.append(Root(y, _multiplicity(sys, y), is_fixed, edge))
    return RootReport(fixed, tuple(out), any(r.escape for r in out))


def _dedupe(roots: list[float], tol: float = 1e-10) -> list[float]:
    out: list[float] = []
    for r in roots:
        if not out or r - out[-1] > tol:
            out.append(r)
    return out


def _complete_pairs(sys, roots, ylo, yhi, fixed):
    """Add the partner of any non-fixed root that the scan missed."""
    extra = []
    for y in roots:
        if fixed is not None and abs(y - fixed.y) <= FIXED_MATCH:
            continue
        w = float(sys.partner(y))
        if any(abs(w - r) <= 1e-8 for r in roots + extra):
            continue
        if ylo - 1e-12 <= w <= yhi + 1e-12:
            extra.append(min(max(w, ylo), yhi))
    return _dedupe(sorted(roots + extra)) if extra else roots


def displacement_jet(sys: ReturnSystem, y0: float, order: int) -> Jet:
    """Jet at ``y0`` of ``V(y) = f^{-1}(-p*y + q) + f(y)/p - q/p``.

    ``V`` vanishes exactly at the fixed points of the return map; its
    derivatives are ``(-p)^m (f^{-1})^(m)(-p*y0 + q) + f^(m)(y0)/p``.
    """
    f, p, q = sys.f, sys.p, sys.q
    v0 = -p * y0 + q
    if not f.lo <= v0 <= f.hi:
        raise EscapeError(f"-p*y0 + q = {v0} leaves the range of f")
    inv = eval_inverse_jet(f, v0, order)
    lin = Jet(y0, tuple([v0, -p] + [0.0] * (order - 1)))
    inv_of_lin = compose(inv, lin).values
    fy = f.derivs(y0, order)
    vals = [inv_of_lin[0] + (fy[0] - q) / p]
    vals += [inv_of_lin[m] + fy[m] / p for m in range(1, order + 1)]
    return Jet(float(y0), tuple(vals))


def multiplicity_from_jet(jet: Jet, scale: float = 1.0, tol: float = SIMPLE_TOL) -> int:
    """Order of the first Taylor coefficient above ``tol*scale`` (capped at the jet order)."""
    t = jet.taylor()
    for k in range(1, jet.order + 1):
        if abs(t[k]) > tol * scale:
            return k
    return jet.order + 1


__all__ = [
    "ReturnSystem", "FixedPoint", "Root", "RootReport", "poincare_map", "return_slope",
    "fixed_point", "period2_residual", "residual_jet", "find_period2_roots",
    "displacement_jet", "multiplicity_from_jet", "EXTENSION_MARGIN",
]
