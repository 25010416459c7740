"""Blow-up of the origin of (eps, delta, lambda) into the (p, q) half-plane.

``p = C1(eps) / C2(delta)`` and ``q = lambda / C2(delta)``.  All ratios
are formed in log space because ``C(delta) ~ exp(-pi/sqrt(delta))``
underflows long before delta reaches the scales of interest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, RangeError
from .jets import ModelFunction
from .normalform import Params, log_coeff

EPS_MAX = 10.0


@dataclass(frozen=True)
class BlownParams:
    delta: float
    p: float
    q: float

    def __post_init__(self):
        if not self.p > 0:
            raise DomainError("p must be positive")
        if self.delta < 0:
            raise DomainError("delta must be >= 0")


@dataclass(frozen=True)
class DomainD:
    """Rectangle ``[p0, p1] x [-qmax, qmax]`` outside which all roots are simple."""

    p0: float
    p1: float
    qmax: float

    def contains(self, p, q):
        p, q = np.asarray(p), np.asarray(q)
        return (p >= self.p0) & (p <= self.p1) & (np.abs(q) <= self.qmax)


def blow_up(nu: Params) -> BlownParams:
    if not (nu.eps > 0 and nu.delta > 0):
        raise DomainError("blow-up is defined only for eps > 0 and delta > 0")
    lc2 = log_coeff(nu.delta)
    return BlownParams(nu.delta, math.exp(log_coeff(nu.eps) - lc2), nu.lam * math.exp(-lc2))


def _solve_eps(target: float, eps_max: float = EPS_MAX) -> float:
    """Invert the strictly increasing ``log C`` by bisection (relative 1e-14)."""
    lo, hi = 0.0, eps_max
    if target > log_coeff(hi):
        raise RangeError("p exceeds the attainable range C1((0, eps_max]) / C2(delta)")
    if target == -math.inf:
        raise RangeError("p must be positive")
    while hi - lo > 1e-14 * hi:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if log_coeff(mid) < target:
            lo = mid
        else:
            hi = mid
    # the bracket end with the smaller residual (lo = 0 has none)
    if lo > 0 and abs(log_coeff(lo) - target) < abs(log_coeff(hi) - target):
        return lo
    return hi


def blow_down(bp: BlownParams, eps_max: float = EPS_MAX) -> Params:
    """Inverse of :func:`blow_up`; the half-plane ``delta = 0`` maps to the origin."""
    if bp.delta == 0:
        return Params(0.0, 0.0, 0.0)
    lc2 = log_coeff(bp.delta)
    eps = _solve_eps(math.log(bp.p) + lc2, eps_max)
    if 1.0 < eps <= 1.0 + 1e-13:
        eps = 1.0  # bisection round-off at the neighbourhood bound
    if eps > 1.0:
        raise RangeError(f"p = {bp.p} needs eps = {eps:.6g}, outside the neighbourhood |eps| <= 1")
    lam = bp.q * math.exp(lc2)
    return Params(eps, bp.delta, lam)


@dataclass(frozen=True)
class HornRow:
    delta: float
    eps: float
    eps_ratio: float          # eps/delta -> 1
    opening: float            # (eps - delta)/delta**1.5 -> 2 ln p / pi
    scaled_lambda: float      # lambda * exp(pi/sqrt(delta)) stays bounded

    @staticmethod
    def predicted_opening(p: float) -> float:
        return 2.0 * math.log(p) / math.pi


def horn_asymptotics(p: float, q: float, deltas: Sequence[float]) -> list[HornRow]:
    """Preimages of the vertical segment over ``(p, q)`` as ``delta -> 0``."""
    if not p > 0:
        raise DomainError("p must be positive")
    rows = []
    for d in deltas:
        if not d > 0:
            raise DomainError("deltas must be positive")
        lc2 = log_coeff(d)
        eps = _solve_eps(math.log(p) + lc2)
        # lambda = q C2(delta); scale in logs to avoid underflow
        scaled = q * math.exp(lc2 + math.pi / math.sqrt(d)) if q else 0.0
        rows.append(HornRow(d, eps, eps / d, (eps - d) / d**1.5, scaled))
    return rows


def _extremum(g, sign: float) -> float:
    ys = np.linspace(-1.0, 1.0, 4001)
    vals = sign * g(ys)
    i = int(np.argmin(vals))
    best = vals[i]
    lo, hi = ys[max(i - 1, 0)], ys[min(i + 1, len(ys) - 1)]
    if hi > lo:
        res = minimize_scalar(lambda y: sign * float(g(y)), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        best = min(best, res.fun)
    return sign * best


def select_domain_D(f: ModelFunction) -> DomainD:
    """Compact box containing all multiple-root parameters."""
    d1 = lambda y: f.deriv(y, 1)
    min_d1 = _extremum(d1, 1.0)
    max_d1 = _extremum(d1, -1.0)
    max_abs_f = _extremum(lambda y: np.abs(f(y)), -1.0)
    return DomainD(float(0.5 * min_d1), float(1.25 * max_d1), float(1.25 * (max_d1 + max_abs_f)))
