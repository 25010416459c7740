# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; operation-for-operation twin of ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, fabs

cnp.import_array()

DEF ROOT_WIDTH = 1e-13
DEF FIXED_MATCH = 1e-8
DEF EDGE_TOL = 1e-9
DEF DEGENERATE_TOL = 1e-10
DEF MAX_BISECT = 100
DEF INV_ITERS = 64
DEF POINT_WIDTH = 1e-12


cdef struct FSpec:
    int kind
    const double* c
    int n
    double a
    double b


cdef inline double fval(const FSpec* s, double y) noexcept nogil:
    cdef double r
    cdef int k
    if s.kind == 0:
        r = s.c[s.n - 1]
        for k in range(s.n - 2, -1, -1):
            r = r * y + s.c[k]
        return r
    return y + s.a * sin(s.b * y)


cdef inline double resid(const FSpec* s, double p, double q, double y) noexcept nogil:
    return (-p * y + q) - fval(s, (q - fval(s, y)) / p)


cdef double finv(const FSpec* s, double v) noexcept nogil:
    cdef double lo = -1.0, hi = 1.0, mid
    cdef int it
    for it in range(INV_ITERS):
        mid = 0.5 * (lo + hi)
        if fval(s, mid) < v:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


cdef double fixed_point(const FSpec* s, double p, double q) noexcept nogil:
    cdef double lo = -1.0, hi = 1.0, mid
    cdef int it
    for it in range(INV_ITERS):
        mid = 0.5 * (lo + hi)
        if fval(s, mid) + p * mid - q < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


cdef double bisect(const FSpec* s, double p, double q, double a, double b, double fa) noexcept nogil:
    cdef double m, fm
    cdef int it
    for it in range(MAX_BISECT):
        if not (b - a) > ROOT_WIDTH:
            break
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        fm = resid(s, p, q, m)
        if fm == 0:
            a = m
            b = m
            break
        if (fm < 0) == (fa < 0):
            a = m
            fa = fm
        else:
            b = m
    return 0.5 * (a + b)


cdef inline void classify(const FSpec* s, double p, double q, double r, bint has_fixed,
                          double ystar, long* n_all, long* n_fix, long* n_edge) noexcept nogil:
    cdef double w
    n_all[0] += 1
    if has_fixed and fabs(r - ystar) <= FIXED_MATCH:
        n_fix[0] += 1
    w = (q - fval(s, r)) / p
    if (1.0 - fabs(r)) <= EDGE_TOL or fabs(w) >= 1.0 - EDGE_TOL:
        n_edge[0] += 1


cdef void cell(const FSpec* s, double p, double q, int grid_n, double flo, double fhi,
               int* nroots, int* cycles, unsigned char* fixed, unsigned char* escape,
               signed char* status) noexcept nogil:
    cdef double lo_v = q - p if q - p > flo else flo
    cdef double hi_v = q + p if q + p < fhi else fhi
    cdef double ylo, yhi, ystar, h, y0, y1, f0, f1
    cdef bint has_fixed
    cdef long n_all = 0, n_fix = 0, n_edge = 0, nonfixed, small = 0
    cdef int i
    nroots[0] = 0
    cycles[0] = 0
    fixed[0] = 0
    escape[0] = 0
    status[0] = 0
    if not lo_v <= hi_v:
        return
    ylo = finv(s, lo_v)
    yhi = finv(s, hi_v)
    has_fixed = (flo - p - q <= 0) and (fhi + p - q >= 0)
    ystar = fixed_point(s, p, q)
    fixed[0] = has_fixed
    if (yhi - ylo) <= POINT_WIDTH:
        if has_fixed:
            nroots[0] = 1
            cycles[0] = 1
        escape[0] = 1
        return

    h = (yhi - ylo) / (grid_n - 1)
    y0 = ylo
    f0 = resid(s, p, q, y0)
    for i in range(grid_n):
        if fabs(f0) < DEGENERATE_TOL:
            small += 1
        if f0 == 0:
            classify(s, p, q, y0, has_fixed, ystar, &n_all, &n_fix, &n_edge)
        if i == grid_n - 1:
            break
        if i + 1 == grid_n - 1:
            y1 = yhi
        else:
            y1 = ylo + (i + 1) * h
        f1 = resid(s, p, q, y1)
        if f0 != 0 and ((f0 > 0 and f1 < 0) or (f0 < 0 and f1 > 0)):
            classify(s, p, q, bisect(s, p, q, y0, y1, f0), has_fixed, ystar,
                     &n_all, &n_fix, &n_edge)
        y0 = y1
        f0 = f1

    nonfixed = n_all - n_fix
    if nonfixed % 2 == 1:
        status[0] = 1
    if has_fixed and n_fix == 0:
        status[0] = 3
    nroots[0] = n_all
    escape[0] = n_edge > 0
    cycles[0] = has_fixed + nonfixed // 2
    if small * 2 > grid_n:
        status[0] = 2
        cycles[0] = -1


def residual(fs, p, q, y):
    """Vectorised period-two residual (broadcasts like the NumPy twin)."""
    cdef FSpec s
    cdef cnp.ndarray[double, ndim=1] c = np.ascontiguousarray(fs[1], dtype=float)
    pb, qb, yb = np.broadcast_arrays(np.asarray(p, dtype=float), np.asarray(q, dtype=float),
                                     np.asarray(y, dtype=float))
    shape = yb.shape
    cdef double[::1] pv = np.ascontiguousarray(pb).ravel()
    cdef double[::1] qv = np.ascontiguousarray(qb).ravel()
    cdef double[::1] yv = np.ascontiguousarray(yb).ravel()
    out = np.empty(yv.shape[0])
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    s.kind = fs[0]
    s.c = &c[0]
    s.n = c.shape[0]
    s.a = fs[2]
    s.b = fs[3]
    with nogil:
        for i in range(yv.shape[0]):
            ov[i] = resid(&s, pv[i], qv[i], yv[i])
    return out.reshape(shape)


def count_cells(fs, ps, qs, int grid_n=4001):
    """Count genuine period-two roots for a batch of cells (see ``_pykernels``)."""
    cdef FSpec s
    cdef cnp.ndarray[double, ndim=1] c = np.ascontiguousarray(fs[1], dtype=float)
    cdef double[::1] pv = np.ascontiguousarray(ps, dtype=float).ravel()
    cdef double[::1] qv = np.ascontiguousarray(qs, dtype=float).ravel()
    cdef Py_ssize_t m = pv.shape[0], i
    nroots = np.zeros(m, dtype=np.int32)
    cycles = np.zeros(m, dtype=np.int32)
    fixed = np.zeros(m, dtype=np.uint8)
    escape = np.zeros(m, dtype=np.uint8)
    status = np.zeros(m, dtype=np.int8)
    cdef int[::1] nr = nroots
    cdef int[::1] cy = cycles
    cdef unsigned char[::1] fx = fixed
    cdef unsigned char[::1] es = escape
    cdef signed char[::1] st = status
    cdef double flo, fhi
    s.kind = fs[0]
    s.c = &c[0]
    s.n = c.shape[0]
    s.a = fs[2]
    s.b = fs[3]
    with nogil:
        flo = fval(&s, -1.0)
        fhi = fval(&s, 1.0)
        for i in range(m):
            cell(&s, pv[i], qv[i], grid_n, flo, fhi, &nr[i], &cy[i], &fx[i], &es[i], &st[i])
    return dict(nroots=nroots, cycles=cycles, fixed=fixed, escape=escape, status=status)
