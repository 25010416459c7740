"""Saddle-node normal forms, their transition maps and the singular strata.

Near each saddle-node the unfolding is conjugate to

    x' = (x**2 + eps) / (1 + a1*x),   y' = +-y,

and the passage from ``x = -1`` to ``x = +1`` multiplies ``y`` by
``exp(+-int_{-1}^{1} (1 + a1*x) / (x**2 + eps) dx)``.  The odd part of the
integrand integrates to zero, so the result is independent of ``a1`` and
equals ``1/C(eps)`` with ``C(eps) = exp(-(2/sqrt(eps)) * arctan(1/sqrt(eps)))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, NumericalError, OutOfScopeError


@dataclass(frozen=True)
class Params:
    """Original unfolding parameters (eps, delta, lambda)."""

    eps: float
    delta: float
    lam: float

    def __post_init__(self):
        for name in ("eps", "delta", "lam"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite")
            if abs(v) > 1.0:
                raise DomainError(f"|{name}| = {abs(v)} exceeds the neighbourhood bound 1")


@dataclass(frozen=True)
class NormalFormConfig:
    a1: float = 0.0
    a2: float = 0.0

    def __post_init__(self):
        if abs(self.a1) >= 1.0 or abs(self.a2) >= 1.0:
            raise DomainError("|a1| and |a2| must be < 1")


def log_coeff(x: float) -> float:
    """``log C(x)``; finite even where ``C(x)`` underflows."""
    if not x > 0:
        raise DomainError(f"transition coefficient needs a positive parameter, got {x}")
    s = math.sqrt(x)
    return -(2.0 / s) * math.atan(1.0 / s)


def coeff_C1(eps: float) -> float:
    return math.exp(log_coeff(eps))


def coeff_C2(delta: float) -> float:
    return math.exp(log_coeff(delta))


@dataclass(frozen=True)
class Transition:
    value: float
    in_section: bool  # image within |y| <= 1


def transition_1(y: float, eps: float) -> Transition:
    """Passage past the repelling saddle-node: ``y -> y / C1(eps)``."""
    if abs(y) > 1.0:
        raise DomainError("|y| must be <= 1 on the entry section")
    v = y / coeff_C1(eps)
    return Transition(v, abs(v) <= 1.0)


def transition_2(y: float, delta: float) -> Transition:
    """Passage past the attracting saddle-node: ``y -> C2(delta) * y``."""
    if abs(y) > 1.0:
        raise DomainError("|y| must be <= 1 on the entry section")
    v = coeff_C2(delta) * y
    return Transition(v, abs(v) <= 1.0)


def g_map(y: float, lam: float) -> float:
    """Orientation-reversing connection map between the saddle-nodes."""
    return -y + lam


# independent check by direct integration ----------------------------------

def _rk4_time(x, y, h, eps, a1):
    def rhs(x, y):
        return (x * x + eps) / (1.0 + a1 * x), y

    k1x, k1y = rhs(x, y)
    k2x, k2y = rhs(x + 0.5 * h * k1x, y + 0.5 * h * k1y)
    k3x, k3y = rhs(x + 0.5 * h * k2x, y + 0.5 * h * k2y)
    k4x, k4y = rhs(x + h * k3x, y + h * k3y)
    return (x + h * (k1x + 2 * k2x + 2 * k3x + k4x) / 6,
            y + h * (k1y + 2 * k2y + 2 * k3y + k4y) / 6)


def _rk4_to_section(x, y, eps, a1):
    # one step with x as the independent variable lands exactly on x = 1
    def rhs(x, y):
        return y * (1.0 + a1 * x) / (x * x + eps)

    h = 1.0 - x
    k1 = rhs(x, y)
    k2 = rhs(x + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(x + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(x + h, y + h * k3)
    return y + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6


def _integrate(eps, y0, a1, h, max_steps):
    x, y = -1.0, y0
    steps = 0
    while True:
        xn, yn = _rk4_time(x, y, h, eps, a1)
        steps += 1
        if xn >= 1.0:
            return _rk4_to_section(x, y, eps, a1), steps
        if steps > max_steps:
            raise NumericalError("step cap exceeded in transition integration")
        x, y = xn, yn


@dataclass(frozen=True)
class TransitionCheck:
    eps: float
    a1: float
    y0: float
    empirical: float
    analytic: float
    rel_err: float


def verify_transition_ode(eps: float, y0: float, config: NormalFormConfig = NormalFormConfig(),
                          rtol: float = 1e-9, max_steps: int = 10**7) -> TransitionCheck:
    """Integrate the O1 normal form from ``(-1, y0)`` to ``x = 1`` with RK4.

    The time step is halved until two successive results agree to ``rtol``.
    """
    if not eps > 0:
        raise DomainError("eps must be positive")
    if abs(y0) > 1.0:
        raise DomainError("|y0| must be <= 1")
    analytic = y0 / coeff_C1(eps)
    if y0 == 0.0:
        return TransitionCheck(eps, config.a1, y0, 0.0, 0.0, 0.0)
    h = 0.1
    prev, total = None, 0
    while True:
        val, steps = _integrate(eps, y0, config.a1, h, max_steps - total)
        total += steps
        if prev is not None and abs(val - prev) <= rtol * abs(val):
            break
        prev = val
        h /= 2
    return TransitionCheck(eps, config.a1, y0, val, analytic, abs(val - analytic) / abs(analytic))


# strata outside the positive quadrant --------------------------------------

@dataclass(frozen=True)
class Stratum:
    label: int
    description: str

    def __str__(self):
        return f"{self.label}: {self.description}"


STRATA = {
    1: "two saddle-nodes connected by a separatrix",
    2: "two saddle-nodes without connection",
    3: "two saddles connected by a separatrix, one stable and one unstable node",
    4: "two saddles without connection, a stable and an unstable node",
    5: "saddle and saddle-node connected by a separatrix, and also a stable node",
    6: "saddle, saddle-node and a stable node without connection",
    7: "a saddle and a stable node",
    8: "a saddle and a saddle-node connected by a separatrix, and also an unstable node",
    9: "a saddle, a saddle-node and an unstable node without connections",
    10: "a saddle-node",
    11: "saddle and an unstable node",
}


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


# (sign eps, sign delta, lambda == 0) -> label; None for "any lambda"
_TABLE = {
    (0, 0, True): 1, (0, 0, False): 2,
    (-1, -1, True): 3, (-1, -1, False): 4,
    (-1, 0, True): 5, (-1, 0, False): 6,
    (-1, 1, None): 7,
    (0, -1, True): 8, (0, -1, False): 9,
    (0, 1, None): 10, (1, 0, None): 10,
    (1, -1, None): 11,
}


def classify_stratum(nu: Params) -> Stratum:
    """Phase-portrait stratum for parameters with a singular point."""
    se, sd = _sign(nu.eps), _sign(nu.delta)
    if se > 0 and sd > 0:
        raise OutOfScopeError("eps > 0 and delta > 0: no singular points; "
                              "use the limit-cycle modules (blowup, poincare)")
    label = _TABLE.get((se, sd, None)) or _TABLE[(se, sd, nu.lam == 0)]
    return Stratum(label, STRATA[label])
