"""Model transition functions and their derivative stacks (jets).

Two closed-form families are supported so that derivatives up to order 6
are exact: polynomials and the sine-perturbed identity ``y + a*sin(b*y)``.
Jets of the inverse function are obtained by series reversion of the
forward Taylor expansion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import least_squares

from .errors import DomainError, NumericalError

MAX_ORDER = 6
MONOTONE_GRID = 2001


@dataclass(frozen=True)
class Jet:
    """Derivatives ``[g(c), g'(c), ..., g^(m)(c)]`` of some function at ``c``."""

    center: float
    values: tuple[float, ...]

    def __post_init__(self):
        if not 2 <= len(self.values) <= MAX_ORDER + 1:
            raise DomainError(f"jet order must be in 1..{MAX_ORDER}, got {len(self.values) - 1}")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @property
    def order(self) -> int:
        return len(self.values) - 1

    def taylor(self) -> np.ndarray:
        """Taylor coefficients ``g^(k)(c) / k!``."""
        return np.array([v / math.factorial(k) for k, v in enumerate(self.values)])

    @classmethod
    def from_taylor(cls, center: float, coeffs: Sequence[float]) -> "Jet":
        return cls(center, tuple(c * math.factorial(k) for k, c in enumerate(coeffs)))


def _trunc_mul(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    return np.convolve(a, b)[: n + 1]


def compose(outer: Jet, inner: Jet) -> Jet:
    """Jet of ``outer o inner`` at ``inner.center``.

    ``outer`` must be centred at ``inner.values[0]``; the result has the
    smaller of the two orders.
    """
    n = min(outer.order, inner.order)
    if not math.isclose(outer.center, inner.values[0], rel_tol=1e-12, abs_tol=1e-12):
        raise DomainError("outer jet is not centred at the inner jet's value")
    a = inner.taylor()[: n + 1].copy()
    a[0] = 0.0
    b = outer.taylor()
    out = np.zeros(n + 1)
    power = np.zeros(n + 1)
    power[0] = 1.0
    for k in range(n + 1):
        out += b[k] * power
        power = _trunc_mul(power, a, n)
        power = np.pad(power, (0, n + 1 - len(power)))
    return Jet.from_taylor(inner.center, out)


def invert_taylor(c: np.ndarray) -> np.ndarray:
    """Series reversion: coefficients of g with f(g(u)) = u, f(0) = g(0) = 0.

    ``c`` holds ``[0, c1, c2, ...]`` with ``c1 != 0``.
    """
    n = len(c) - 1
    d = np.zeros(n + 1)
    d[1] = 1.0 / c[1]
    for k in range(2, n + 1):
        # coefficient of u^k in sum_{j>=2} c_j g^j with d_k still zero
        acc = 0.0
        power = d.copy()
        for j in range(2, k + 1):
            power = _trunc_mul(power, d, n)
            acc += c[j] * power[k]
        d[k] = -acc / c[1]
    return d


@dataclass(frozen=True)
class ModelFunction:
    """A strictly increasing transition map ``f`` on ``[-1, 1]``.

    Use :func:`polynomial`, :func:`sine`, :func:`identity` or
    :func:`reference` rather than the constructor.  ``degenerate=True``
    admits affine maps, which the generic theory excludes.
    """

    kind: str
    coeffs: tuple[float, ...] = ()
    a: float = 0.0
    b: float = 0.0
    degenerate: bool = False
    _poly_derivs: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind == "poly":
            c = np.trim_zeros(np.asarray(self.coeffs, dtype=float), "b")
            if len(c) < 2:
                raise DomainError("polynomial must have degree >= 1")
            object.__setattr__(self, "coeffs", tuple(float(x) for x in c))
            ders = [c]
            for _ in range(MAX_ORDER + 1):
                ders.append(P.polyder(ders[-1]) if len(ders[-1]) > 1 else np.zeros(1))
            object.__setattr__(self, "_poly_derivs", tuple(ders))
        elif self.kind == "sine":
            object.__setattr__(self, "a", float(self.a))
            object.__setattr__(self, "b", float(self.b))
        else:
            raise DomainError(f"unknown model function kind {self.kind!r}")
        self._check_monotone()
        if not self.degenerate and not self._is_nonaffine():
            raise DomainError("affine model function requires degenerate=True")

    # evaluation -------------------------------------------------------
    def deriv(self, y, k: int = 0):
        """k-th derivative at ``y`` (scalar or array), exact for 0 <= k <= 7."""
        y = np.asarray(y, dtype=float)
        if self.kind == "poly":
            # Horner in ascending order so compiled kernels reproduce it bit for bit
            c = self._poly_derivs[k]
            r = np.full_like(y, c[-1])
            for ck in c[-2::-1]:
                r = r * y + ck
        else:
            r = self.a * self.b**k * np.sin(self.b * y + k * math.pi / 2)
            if k == 0:
                r = r + y
            elif k == 1:
                r = r + 1.0
        return r if r.ndim else float(r)

    def __call__(self, y):
        return self.deriv(y, 0)

    def chord(self, y, w):
        """Divided difference ``(f(w) - f(y)) / (w - y)``, free of cancellation.

        Equals ``f'(y)`` on the diagonal.
        """
        y, w = np.broadcast_arrays(np.asarray(y, dtype=float), np.asarray(w, dtype=float))
        if self.kind == "poly":
            # (w**k - y**k)/(w - y) = sum_j y**j w**(k-1-j), built up by h_k = w*h_{k-1} + y**(k-1)
            h = np.zeros_like(y)
            ypow = np.ones_like(y)
            r = np.zeros_like(y)
            for ck in self.coeffs[1:]:
                h = w * h + ypow
                ypow = ypow * y
                r = r + ck * h
        else:
            d = w - y
            half = 0.5 * self.b * d
            ratio = np.where(d == 0, 1.0, np.sin(half) / np.where(half == 0, 1.0, half))
            r = 1.0 + self.a * self.b * np.cos(0.5 * self.b * (w + y)) * ratio
        return r if r.ndim else float(r)

    def derivs(self, y: float, order: int) -> list[float]:
        return [float(self.deriv(y, k)) for k in range(order + 1)]

    @property
    def lo(self) -> float:
        return float(self(-1.0))

    @property
    def hi(self) -> float:
        return float(self(1.0))

    def inverse(self, v: float, tol: float = 1e-15, max_iter: int = 100) -> float:
        """Solve ``f(y) = v`` on [-1, 1] by Newton safeguarded with bisection."""
        lo_v, hi_v = self.lo, self.hi
        span = hi_v - lo_v
        if v < lo_v - 1e-14 * span or v > hi_v + 1e-14 * span:
            raise DomainError(f"value {v} outside the range [{lo_v}, {hi_v}] of f")
        if v <= lo_v:
            return -1.0
        if v >= hi_v:
            return 1.0
        a, b = -1.0, 1.0
        y = -1.0 + 2.0 * (v - lo_v) / span
        for _ in range(max_iter):
            r = self(y) - v
            if r == 0.0:
                return y
            if r > 0:
                b = y
            else:
                a = y
            step = r / self.deriv(y, 1)
            y_new = y - step
            if not a < y_new < b:
                y_new = 0.5 * (a + b)
            if abs(y_new - y) <= tol * max(1.0, abs(y)) or b - a <= tol:
                return y_new
            y = y_new
        raise NumericalError(f"inverse of f did not converge for v={v}")

    # validation -------------------------------------------------------
    def _check_monotone(self):
        ys = np.linspace(-1.0, 1.0, MONOTONE_GRID)
        d1 = self.deriv(ys, 1)
        if np.any(d1 <= 0):
            raise DomainError("model function is not strictly increasing on [-1, 1]")
        if self.kind == "poly":
            # f' >= min(endpoints) - max|f''| * h/2 on every subinterval
            c2 = np.abs(self._poly_derivs[2])
            bound = float(np.sum(c2))
            h = ys[1] - ys[0]
            floor = np.minimum(d1[:-1], d1[1:]) - bound * h / 2
            if np.any(floor <= 0):
                raise DomainError("monotonicity of f cannot be certified on [-1, 1]")

    def _is_nonaffine(self) -> bool:
        ys = np.linspace(-1.0, 1.0, MONOTONE_GRID)
        return bool(np.any(self.deriv(ys, 2) != 0) or np.any(self.deriv(ys, 3) != 0))

    @property
    def is_affine(self) -> bool:
        return not self._is_nonaffine()

    def kernel_spec(self) -> tuple:
        """``(kind, coeffs, a, b)`` tuple understood by the hot kernels."""
        if self.kind == "poly":
            return (0, np.array(self.coeffs), 0.0, 0.0)
        return (1, np.zeros(1), self.a, self.b)

    def spec(self) -> dict:
        if self.kind == "poly":
            return {"kind": "poly", "coeffs": list(self.coeffs)}
        return {"kind": "sine", "a": self.a, "b": self.b}


def polynomial(coeffs: Sequence[float], degenerate: bool = False) -> ModelFunction:
    """Polynomial with ascending coefficients ``coeffs``."""
    return ModelFunction("poly", tuple(coeffs), degenerate=degenerate)


def sine(a: float, b: float) -> ModelFunction:
    """``y + a*sin(b*y)``."""
    return ModelFunction("sine", a=a, b=b)


def identity() -> ModelFunction:
    return polynomial([0.0, 1.0], degenerate=True)


def reference() -> ModelFunction:
    """The cubic ``y + y**3/3`` used throughout the tests."""
    return polynomial([0.0, 1.0, 0.0, 1.0 / 3.0])


def from_spec(spec: dict) -> ModelFunction:
    kind = spec.get("kind")
    if kind == "poly":
        return polynomial(spec["coeffs"], degenerate=bool(spec.get("degenerate", False)))
    if kind == "sine":
        return sine(spec["a"], spec["b"])
    if kind in ("identity", "identity-affine"):
        return identity()
    if kind == "reference":
        return reference()
    raise DomainError(f"unknown model function kind {kind!r}")


def _check_order(order: int):
    if not isinstance(order, (int, np.integer)) or not 1 <= order <= MAX_ORDER:
        raise DomainError(f"order must be an integer in 1..{MAX_ORDER}, got {order!r}")


def eval_jet(f: ModelFunction, y0: float, order: int) -> Jet:
    """Exact jet of ``f`` at ``y0`` up to ``order``."""
    _check_order(order)
    if not -1.0 - 1e-12 <= y0 <= 1.0 + 1e-12:
        raise DomainError(f"y0={y0} outside [-1, 1]")
    jet = Jet(float(y0), tuple(f.derivs(y0, order)))
    assert jet.values[1] > 0
    return jet


def eval_inverse_jet(f: ModelFunction, q: float, order: int) -> Jet:
    """Jet of ``f^{-1}`` at ``q``."""
    _check_order(order)
    y = f.inverse(q)
    fwd = eval_jet(f, y, order).taylor()
    fwd[0] = 0.0
    d = invert_taylor(fwd)
    d[0] = y
    return Jet.from_taylor(float(q), d)


# genericity ------------------------------------------------------------

def _local_taylor(f: ModelFunction, y0: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Taylor polynomials of f and f^{-1} after moving y0 and f(y0) to 0."""
    fwd = eval_jet(f, y0, n).taylor()
    fwd[0] = 0.0
    inv = invert_taylor(fwd)
    return fwd, inv


def _conjugacy_residual(x: np.ndarray, fwd: np.ndarray, inv: np.ndarray) -> np.ndarray:
    # coefficients of f(alpha(x)) - alpha^{-1}(f^{-1}(x)), truncated at degree n
    b1, b2 = x
    n = len(fwd) - 1
    comp = np.zeros(n + 1)
    power = np.array([1.0])
    alpha = np.array([b2, b1])
    for k in range(n + 1):
        m = min(len(power), n + 1)
        comp[:m] += fwd[k] * power[:m]
        power = np.convolve(power, alpha)
    rhs = inv.copy()
    rhs[0] -= b2
    rhs /= b1
    return comp - rhs


def conjugacy_residual(f: ModelFunction, y0: float, n: int) -> tuple[float, tuple[float, float]]:
    """Smallest residual of an orientation-reversing affine conjugacy of n-jets.

    Returns ``(residual, (b1, b2))`` minimising the Euclidean norm of the
    coefficient mismatch over ``b1 < 0``.
    """
    fwd, inv = _local_taylor(f, y0, n)
    # brute-force scan, then polish the three best cells
    b1s, b2s = np.meshgrid(np.linspace(-4.0, -0.25, 61), np.linspace(-1.0, 1.0, 41))
    comp = np.zeros((n + 1,) + b1s.shape)
    power = np.zeros_like(comp)
    power[0] = 1.0
    for k in range(n + 1):
        comp += fwd[k] * power
        nxt = np.zeros_like(power)
        nxt[0] = power[0] * b2s
        nxt[1:] = power[1:] * b2s + power[:-1] * b1s
        power = nxt
    rhs = np.broadcast_to(inv.reshape(-1, 1, 1), comp.shape).copy()
    rhs[0] -= b2s
    norms = np.linalg.norm(comp - rhs / b1s, axis=0).ravel()
    best = (math.inf, (math.nan, math.nan))
    for idx in np.argsort(norms)[:3]:
        sol = least_squares(_conjugacy_residual, [b1s.flat[idx], b2s.flat[idx]], args=(fwd, inv),
                            bounds=([-1e3, -1e3], [-1e-3, 1e3]),
                            xtol=1e-15, ftol=1e-15, gtol=1e-15)
        r = float(np.linalg.norm(sol.fun))
        if r < best[0]:
            best = (r, (float(sol.x[0]), float(sol.x[1])))
    return best


@dataclass(frozen=True)
class GenericityEntry:
    y0: float
    nonaffine_order: int | None  # minimal n for condition (i)
    conjugacy_order: int | None  # minimal n for condition (ii)
    conjugacy_residuals: tuple[float, ...]  # residual for n = 1..6

    @property
    def order(self) -> int | None:
        """Minimal n at which both conditions hold, if any."""
        if self.nonaffine_order is None or self.conjugacy_order is None:
            return None
        return max(self.nonaffine_order, self.conjugacy_order)


@dataclass(frozen=True)
class GenericityReport:
    entries: tuple[GenericityEntry, ...]
    tolerance: float

    @property
    def certified(self) -> bool:
        return all(e.order is not None for e in self.entries)

    def summary(self) -> str:
        lines = []
        for e in self.entries:
            verdict = f"n={e.order}" if e.order is not None else "genericity not certified at order <= 6"
            lines.append(f"y0={e.y0:+.6f}: (i) n={e.nonaffine_order} (ii) n={e.conjugacy_order} -> {verdict}")
        return "\n".join(lines)


def check_genericity(f: ModelFunction, y0s: Sequence[float] | None = None,
                     tol: float = 1e-8) -> GenericityReport:
    """Check the two jet conditions of the cyclicity bound at each y0."""
    if y0s is None:
        y0s = np.linspace(-1.0, 1.0, 9)
    entries = []
    for y0 in y0s:
        y0 = float(y0)
        vals = f.derivs(y0, MAX_ORDER)
        scale = max(1.0, max(abs(v) for v in vals[1:]))
        n_i = next((n for n in range(2, MAX_ORDER + 1) if abs(vals[n]) > 1e-12 * scale), None)
        residuals = []
        n_ii = None
        for n in range(1, MAX_ORDER + 1):
            r, _ = conjugacy_residual(f, y0, n)
            residuals.append(r)
            if n_ii is None and r > tol:
                n_ii = n
        entries.append(GenericityEntry(y0, n_i, n_ii, tuple(residuals)))
    return GenericityReport(tuple(entries), tol)
