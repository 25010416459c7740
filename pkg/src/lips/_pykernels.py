"""Pure-NumPy implementation of the hot kernels.

This is the reference the compiled ``_ckernels`` extension mirrors
operation for operation (same Horner order, same bisection schedule), so
both backends return identical counts up to last-ulp differences in ``sin``.

A model function is passed as ``(kind, coeffs, a, b)`` with kind 0 for an
ascending-coefficient polynomial and 1 for ``y + a*sin(b*y)``.
"""

from __future__ import annotations

import numpy as np

KIND_POLY = 0
KIND_SINE = 1

ROOT_WIDTH = 1e-13
FIXED_MATCH = 1e-8
EDGE_TOL = 1e-9
DEGENERATE_TOL = 1e-10
MAX_BISECT = 100
INV_ITERS = 64
POINT_WIDTH = 1e-12

STATUS_OK = 0
STATUS_PARITY = 1
STATUS_DEGENERATE = 2
STATUS_UNMATCHED_FIXED = 3


def fval(fs, y):
    kind, c, a, b = fs
    if kind == KIND_POLY:
        r = np.full(np.shape(y), c[-1])
        for ck in c[-2::-1]:
            r = r * y + ck
        return r
    return y + a * np.sin(b * y)


def residual(fs, p, q, y):
    """Period-two residual ``-p*y + q - f((q - f(y))/p)``."""
    return (-p * y + q) - fval(fs, (q - fval(fs, y)) / p)


def _finv(fs, v):
    # bisection on [-1, 1]; fixed schedule shared with the compiled kernel
    lo = np.full(np.shape(v), -1.0)
    hi = np.full(np.shape(v), 1.0)
    for _ in range(INV_ITERS):
        mid = 0.5 * (lo + hi)
        below = fval(fs, mid) < v
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _fixed(fs, p, q):
    lo = np.full(np.shape(p), -1.0)
    hi = np.full(np.shape(p), 1.0)
    for _ in range(INV_ITERS):
        mid = 0.5 * (lo + hi)
        below = fval(fs, mid) + p * mid - q < 0
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _bisect(fs, p, q, a, b, fa):
    a, b, fa = a.copy(), b.copy(), fa.copy()
    active = np.ones(a.shape, dtype=bool)
    for _ in range(MAX_BISECT):
        active &= (b - a) > ROOT_WIDTH
        if not active.any():
            break
        m = 0.5 * (a + b)
        stuck = (m <= a) | (m >= b)
        active &= ~stuck
        fm = residual(fs, p, q, m)
        hit = active & (fm == 0)
        a = np.where(hit, m, a)
        b = np.where(hit, m, b)
        active &= ~hit
        same = (fm < 0) == (fa < 0)
        move_a = active & same
        move_b = active & ~same
        a = np.where(move_a, m, a)
        fa = np.where(move_a, fm, fa)
        b = np.where(move_b, m, b)
    return 0.5 * (a + b)


def count_cells(fs, ps, qs, grid_n: int = 4001):
    """Count genuine period-two roots for a batch of parameter cells.

    Returns a dict of arrays ``nroots, cycles, fixed, escape, status``.
    Roots are sought on the admissible interval where both ``y`` and its
    partner ``(q - f(y))/p`` lie in [-1, 1].
    """
    ps = np.ascontiguousarray(ps, dtype=float)
    qs = np.ascontiguousarray(qs, dtype=float)
    m = ps.size
    flo = float(fval(fs, np.array(-1.0)))
    fhi = float(fval(fs, np.array(1.0)))
    lo_v = np.maximum(qs - ps, flo)
    hi_v = np.minimum(qs + ps, fhi)
    nonempty = lo_v <= hi_v

    nroots = np.zeros(m, dtype=np.int32)
    cycles = np.zeros(m, dtype=np.int32)
    fixed = np.zeros(m, dtype=np.uint8)
    escape = np.zeros(m, dtype=np.uint8)
    status = np.zeros(m, dtype=np.int8)

    idx = np.nonzero(nonempty)[0]
    if idx.size == 0:
        return dict(nroots=nroots, cycles=cycles, fixed=fixed, escape=escape, status=status)
    p, q = ps[idx], qs[idx]
    ylo = _finv(fs, lo_v[idx])
    yhi = _finv(fs, hi_v[idx])
    has_fixed = (flo - p - q <= 0) & (fhi + p - q >= 0)
    ystar = _fixed(fs, p, q)

    h = (yhi - ylo) / (grid_n - 1)
    steps = np.arange(grid_n, dtype=float)
    Y = ylo[:, None] + steps[None, :] * h[:, None]
    Y[:, -1] = yhi
    Phi = residual(fs, p[:, None], q[:, None], Y)
    # an admissible interval of zero width holds only the fixed point at +-1
    point = (yhi - ylo) <= POINT_WIDTH
    Phi[point] = 1.0
    degenerate = np.count_nonzero(np.abs(Phi) < DEGENERATE_TOL, axis=1) * 2 > grid_n

    exact = Phi == 0
    left, right = Phi[:, :-1], Phi[:, 1:]
    brackets = ~exact[:, :-1] & (((left > 0) & (right < 0)) | ((left < 0) & (right > 0)))
    er, ec = np.nonzero(exact)
    br, bc = np.nonzero(brackets)
    roots = _bisect(fs, p[br], q[br], Y[br, bc], Y[br, bc + 1], Phi[br, bc])
    rows = np.concatenate([er, br])
    rvals = np.concatenate([Y[er, ec], roots])

    is_fixed = has_fixed[rows] & (np.abs(rvals - ystar[rows]) <= FIXED_MATCH)
    w = (q[rows] - fval(fs, rvals)) / p[rows]
    edge = ((1.0 - np.abs(rvals)) <= EDGE_TOL) | (np.abs(w) >= 1.0 - EDGE_TOL)

    k = idx.size
    n_all = np.bincount(rows, minlength=k) + (point & has_fixed)
    n_fix = np.bincount(rows, weights=is_fixed, minlength=k).astype(np.int64) + (point & has_fixed)
    n_edge = np.bincount(rows, weights=edge, minlength=k) + point
    nonfixed = n_all - n_fix

    st = np.zeros(k, dtype=np.int8)
    st[(nonfixed % 2) == 1] = STATUS_PARITY
    st[has_fixed & (n_fix == 0)] = STATUS_UNMATCHED_FIXED
    st[degenerate] = STATUS_DEGENERATE
    cyc = has_fixed.astype(np.int64) + nonfixed // 2
    cyc[degenerate] = -1

    nroots[idx] = n_all
    cycles[idx] = cyc
    fixed[idx] = has_fixed
    escape[idx] = n_edge > 0
    status[idx] = st
    return dict(nroots=nroots, cycles=cycles, fixed=fixed, escape=escape, status=status)
