"""Cyclicity bound for the polycycle through ``y0`` via the displacement derivatives.

With the displacement map ``V(y) = f^{-1}(-p*y + q) + f(y)/p - q/p`` the
derivatives at ``y0`` are

    h_m(p, q) = (-p)^m (f^{-1})^(m)(f(y0) + q) + f^(m)(y0) / p,

where ``q`` is measured from the value that puts the argument of ``f^{-1}``
at ``f(y0)`` (for ``y0 = 0`` and ``f(0) = 0`` this is the plain ``q``).  The
polycycle has cyclicity at most ``n`` when ``h_1 = ... = h_n = 0`` has no
solution near the polycycle; the smallest such ``n`` is searched on a grid
and refined by least-squares descent from the grid minima.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import minimum_filter
from scipy.optimize import least_squares

from .errors import DomainError
from .jets import MAX_ORDER, ModelFunction, check_genericity, eval_inverse_jet

TOLERANCE = 1e-8
GRID_P = 241
GRID_Q = 121
DESCENTS = 8


@dataclass(frozen=True)
class Witness:
    """A point where ``h_1 = ... = h_m = 0`` holds to the tolerance."""

    m: int
    p: float
    q: float
    residual: float  # max_{k <= m} |h_k(p, q)|


@dataclass(frozen=True)
class CyclicityReport:
    y0: float
    n: int | None  # None means not certified up to order MAX_ORDER
    witnesses: tuple[Witness, ...]
    certificate: float  # min over the domain of max_{m <= n} |h_m|; nan if uncertified
    p_range: tuple[float, float]
    q_range: tuple[float, float]
    tolerance: float
    generic: bool
    notes: tuple[str, ...] = field(default=())

    @property
    def certified(self) -> bool:
        return self.n is not None

    @property
    def verdict(self) -> str:
        return f"cyclicity <= {self.n}" if self.certified else f"not certified <= {MAX_ORDER}"

    def summary(self) -> str:
        lines = [
            f"y0: {self.y0:.17g}",
            f"verdict: {self.verdict}",
            f"certificate: {self.certificate:.6g}",
            f"tolerance: {self.tolerance:.6g}",
            f"generic jets at y0: {self.generic}",
            f"p range: [{self.p_range[0]:.6g}, {self.p_range[1]:.6g}]",
            f"q range: [{self.q_range[0]:.6g}, {self.q_range[1]:.6g}]",
        ]
        for w in self.witnesses:
            lines.append(f"witness m={w.m}: p={w.p:.12g} q={w.q:.12g} max|h|={w.residual:.3g}")
        lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines)


class DisplacementSystem:
    """The functions ``h_1..h_order`` of ``(p, q)`` for a fixed ``y0``."""

    def __init__(self, f: ModelFunction, y0: float, order: int = MAX_ORDER):
        if not -1.0 <= y0 <= 1.0:
            raise DomainError(f"y0={y0} outside [-1, 1]")
        self.f, self.y0, self.order = f, float(y0), order
        self.v0 = float(f(self.y0))
        self.fm = np.array(f.derivs(self.y0, order)[1:])  # f^(m)(y0), m = 1..order

    def inverse_derivs(self, q) -> np.ndarray:
        """``(f^{-1})^(m)(f(y0) + q)`` for m = 1..order, shape (len(q), order)."""
        q = np.atleast_1d(np.asarray(q, dtype=float))
        return np.array([eval_inverse_jet(self.f, self.v0 + qi, self.order).values[1:] for qi in q])

    def h(self, p, q, upto: int | None = None) -> np.ndarray:
        """``h_m(p, q)`` for m = 1..upto; scalar inputs give a vector."""
        upto = upto or self.order
        inv = self.inverse_derivs(q)[0, :upto]
        m = np.arange(1, upto + 1)
        return (-p) ** m * inv + self.fm[:upto] / p

    def h_grid(self, ps: np.ndarray, qs: np.ndarray) -> np.ndarray:
        """All ``h_m`` on the grid, shape (order, len(ps), len(qs))."""
        inv = self.inverse_derivs(qs)  # (nq, order)
        m = np.arange(1, self.order + 1)[:, None, None]
        return (-ps[None, :, None]) ** m * inv.T[:, None, :] + self.fm[:, None, None] / ps[None, :, None]


def derivative_scale(f: ModelFunction, order: int = MAX_ORDER) -> float:
    """``max |f^(m)|`` over [-1, 1] and m = 1..order, at least 1."""
    ys = np.linspace(-1.0, 1.0, 201)
    return max(1.0, max(max(abs(v) for v in f.derivs(y, order)[1:]) for y in ys))


def default_q_radius(f: ModelFunction) -> float:
    return 0.25 * (f.hi - f.lo)


def cyclicity_bound(f: ModelFunction, y0: float = 0.0, p_range: tuple[float, float] = (0.25, 4.0),
                    q_radius: float | None = None, scale_factor: float = 1.0,
                    grid: tuple[int, int] = (GRID_P, GRID_Q)) -> CyclicityReport:
    """Smallest ``n <= 6`` for which ``h_1..h_n`` have no common zero on the search domain."""
    p0, p1 = map(float, p_range)
    if not 0 < p0 < p1:
        raise DomainError("p_range must satisfy 0 < p0 < p1")
    if q_radius is None:
        q_radius = default_q_radius(f)
    if q_radius <= 0:
        raise DomainError("q_radius must be positive")
    sysm = DisplacementSystem(f, y0)
    notes = []
    # keep the argument of f^{-1} inside the range of f
    margin = 1e-9 * (f.hi - f.lo)
    q0 = max(-q_radius, f.lo - sysm.v0 + margin)
    q1 = min(q_radius, f.hi - sysm.v0 - margin)
    if (q0, q1) != (-q_radius, q_radius):
        notes.append("q range clipped to the range of f")
    tol = TOLERANCE * derivative_scale(f) * scale_factor

    gen = check_genericity(f, [y0])
    generic = gen.certified
    if not generic:
        notes.append("jets of f at y0 are not generic; certification refused")

    ps = np.linspace(p0, p1, grid[0])
    qs = np.linspace(q0, q1, grid[1])
    habs = np.abs(sysm.h_grid(ps, qs))

    witnesses = []
    for n in range(1, MAX_ORDER + 1):
        worst = habs[:n].max(axis=0)
        best = _descend(sysm, worst, ps, qs, n, (p0, p1), (q0, q1))
        if best[0] > tol:
            if not generic:
                break
            return CyclicityReport(float(y0), n, tuple(witnesses), best[0], (p0, p1), (q0, q1),
                                   tol, generic, tuple(notes))
        witnesses.append(Witness(n, best[1], best[2], best[0]))
    return CyclicityReport(float(y0), None, tuple(witnesses), float("nan"), (p0, p1), (q0, q1),
                           tol, generic, tuple(notes))


def _descend(sysm: DisplacementSystem, worst: np.ndarray, ps, qs, n, pb, qb):
    """Minimum of ``max_{m<=n} |h_m|``: grid minima polished by least squares."""
    local = worst == minimum_filter(worst, size=3, mode="nearest")
    cand = np.flatnonzero(local)
    cand = cand[np.argsort(worst.ravel()[cand])][:DESCENTS]
    i, j = np.unravel_index(int(np.argmin(worst)), worst.shape)
    best = (float(worst[i, j]), float(ps[i]), float(qs[j]))
    lo, hi = [pb[0], qb[0]], [pb[1], qb[1]]
    for c in cand:
        i, j = np.unravel_index(c, worst.shape)
        sol = least_squares(lambda x: sysm.h(x[0], x[1], n), [ps[i], qs[j]], bounds=(lo, hi),
                            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200)
        val = float(np.max(np.abs(sysm.h(sol.x[0], sol.x[1], n))))
        if val < best[0]:
            best = (val, float(sol.x[0]), float(sol.x[1]))
    return best


__all__ = ["Witness", "CyclicityReport", "DisplacementSystem", "cyclicity_bound",
           "derivative_scale", "default_q_radius", "TOLERANCE"]
