"""Brute-force cycle counts over the (p, q) plane and their agreement with the curves.

Counts are limit cycles: the fixed point (if it lies in [-1, 1]) plus one
per partner pair ``{y, w}`` of period-two roots with both points in
[-1, 1].  Across each kind of curve the count jumps by a fixed amount.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .blowup import DomainD
from .curves import PlanarCurve, SingularPoint
from .errors import DomainError
from .jets import ModelFunction
from .poincare import ReturnSystem, find_period2_roots

# cycle-count jump across each curve kind
JUMP = {
    "L0": 1,
    "Lambda0_offdiagonal": 2,
    "l_plus": 1,
    "l_minus": 1,
    "fixed_escape_plus": 1,
    "fixed_escape_minus": 1,
}

ESCAPE_KINDS = ("l_plus", "l_minus", "fixed_escape_plus", "fixed_escape_minus")


@dataclass(frozen=True, eq=False)
class CountGrid:
    """Cycle counts at cell centres; arrays are indexed ``[i_p, i_q]``."""

    domain: DomainD
    resolution: tuple[int, int]
    p: np.ndarray
    q: np.ndarray
    counts: np.ndarray       # -1 marks an indeterminate cell
    nroots: np.ndarray
    fixed_flags: np.ndarray
    escape_flags: np.ndarray
    status: np.ndarray

    @property
    def cell(self) -> tuple[float, float]:
        return float(self.p[1] - self.p[0]), float(self.q[1] - self.q[0])

    @property
    def diagonal(self) -> float:
        return float(np.hypot(*self.cell))

    @property
    def determinate(self) -> np.ndarray:
        return self.status == kernels._pykernels.STATUS_OK

    def distinct_counts(self) -> list[int]:
        return sorted(int(c) for c in np.unique(self.counts[self.determinate]))


def scan_grid(f: ModelFunction, d: DomainD, np_: int = 400, nq: int = 400, grid_n: int = 4001,
              threads: int | None = None) -> CountGrid:
    if np_ < 50 or nq < 50:
        raise DomainError("grid resolution must be at least 50 x 50")
    dp = (d.p1 - d.p0) / np_
    dq = 2 * d.qmax / nq
    p = d.p0 + (np.arange(np_) + 0.5) * dp
    q = -d.qmax + (np.arange(nq) + 0.5) * dq
    P, Q = np.meshgrid(p, q, indexing="ij")
    out = kernels.count_cells(f.kernel_spec(), P.ravel(), Q.ravel(), grid_n, threads=threads)
    shape = (np_, nq)
    return CountGrid(d, shape, p, q, out["cycles"].reshape(shape), out["nroots"].reshape(shape),
                     out["fixed"].reshape(shape).astype(bool),
                     out["escape"].reshape(shape).astype(bool), out["status"].reshape(shape))


def count_at(f: ModelFunction, p, q, grid_n: int = 4001) -> np.ndarray:
    """Cycle counts at arbitrary parameter points (same counting rule as the grid)."""
    p, q = np.broadcast_arrays(np.asarray(p, dtype=float), np.asarray(q, dtype=float))
    out = kernels.count_cells(f.kernel_spec(), p.ravel(), q.ravel(), grid_n)
    c = out["cycles"].astype(int)
    c[out["status"] != 0] = -1
    return c.reshape(p.shape)


# geometry helpers -------------------------------------------------------------

def _dense_points(curves: Sequence[PlanarCurve], spacing: float):
    """Points along every polyline no farther than ``spacing`` apart, with their curve index."""
    pts, owner = [], []
    for k, c in enumerate(curves):
        cp = c.points
        for idx in c.branches():
            seg = cp[idx]
            if len(seg) == 1:
                pts.append(seg)
                owner.append(np.full(1, k))
                continue
            for a, b in zip(seg[:-1], seg[1:]):
                m = max(int(np.ceil(np.hypot(*(b - a)) / spacing)), 1)
                t = np.linspace(0.0, 1.0, m, endpoint=False)[:, None]
                pts.append(a + t * (b - a))
                owner.append(np.full(m, k))
            pts.append(seg[-1:])
            owner.append(np.full(1, k))
    if not pts:
        return np.zeros((0, 2)), np.zeros(0, dtype=int)
    return np.concatenate(pts), np.concatenate(owner)


def _transition_pairs(grid: CountGrid):
    """Adjacent determinate cells (axis neighbours) whose counts differ."""
    c, ok = grid.counts, grid.determinate
    pairs = []
    for axis in (0, 1):
        sl_a = (slice(None, -1), slice(None)) if axis == 0 else (slice(None), slice(None, -1))
        sl_b = (slice(1, None), slice(None)) if axis == 0 else (slice(None), slice(1, None))
        diff = (c[sl_a] != c[sl_b]) & ok[sl_a] & ok[sl_b]
        ia, ja = np.nonzero(diff)
        ib, jb = (ia + 1, ja) if axis == 0 else (ia, ja + 1)
        pairs.append(np.column_stack([ia, ja, ib, jb]))
    return np.concatenate(pairs) if pairs else np.zeros((0, 4), dtype=int)


# consistency ------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    check: str          # "unexplained" or "jump"
    p: float
    q: float
    detail: str


@dataclass
class ConsistencyReport:
    transitions: int = 0
    explained: int = 0
    probes: int = 0
    probes_ok: int = 0
    jumps_by_kind: dict = field(default_factory=dict)  # kind -> {observed jump: count}
    indeterminate: int = 0
    violations: list = field(default_factory=list)

    @property
    def unexplained(self) -> int:
        return self.transitions - self.explained

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        lines = [f"transitions: {self.transitions}",
                 f"explained by a curve within one cell diagonal: {self.explained}",
                 f"unexplained: {self.unexplained}",
                 f"jump probes: {self.probes} ({self.probes_ok} with the predicted jump)",
                 f"indeterminate cells: {self.indeterminate}"]
        for kind, hist in sorted(self.jumps_by_kind.items()):
            obs = ", ".join(f"{j}: {n}" for j, n in sorted(hist.items()))
            lines.append(f"  {kind} (predicted {JUMP[kind]}): {obs}")
        lines.append(f"violations: {len(self.violations)}")
        for v in self.violations[:50]:
            lines.append(f"  {v.check} at p={v.p:.6g} q={v.q:.6g}: {v.detail}")
        return "\n".join(lines)


def curve_normals(c: PlanarCurve, scale: np.ndarray):
    """Unit normals (in cell-scaled coordinates) at interior samples of each branch."""
    out_idx, normals = [], []
    pts = c.points / scale
    for idx in c.branches():
        if idx.size < 3:
            continue
        t = pts[idx[2:]] - pts[idx[:-2]]
        nrm = np.hypot(t[:, 0], t[:, 1])
        good = nrm > 0
        n = np.column_stack([-t[:, 1], t[:, 0]])[good] / nrm[good, None]
        out_idx.append(idx[1:-1][good])
        normals.append(n)
    if not out_idx:
        return np.zeros(0, dtype=int), np.zeros((0, 2))
    return np.concatenate(out_idx), np.concatenate(normals)


# probe offsets as fractions of the isolation-limited offset
PROBE_SHRINK = (1.0, 0.1, 0.01, 0.001)
# cell units around a Lambda0 branch end where jump probes are skipped
END_EXCLUSION = 2.0


def diagram_consistency(grid: CountGrid, curves: Sequence[PlanarCurve], f: ModelFunction,
                        probe_stride: int = 4, probe_offset: float = 0.5,
                        isolation: float = 3.0, min_offset: float = 1e-3,
                        grid_n: int = 4001) -> ConsistencyReport:
    """Check the grid counts against the traced curves.

    (a) every pair of adjacent cells with different counts must lie within
    one cell diagonal of some curve; (b) at isolated curve samples inside
    the domain, probes at most ``probe_offset`` cell diagonals to either side
    (and never closer than ``isolation`` offsets to another curve) must differ
    by the jump predicted for that curve kind.  Each probe is repeated at the
    shrinking offsets ``PROBE_SHRINK`` and the jump is read where two
    consecutive offsets agree, so regions thinner than the polyline error
    are still resolved.
    """
    rep = ConsistencyReport()
    rep.indeterminate = int(np.count_nonzero(~grid.determinate))
    diag = grid.diagonal
    cell = np.array(grid.cell)

    pairs = _transition_pairs(grid)
    rep.transitions = len(pairs)
    dense, owner = _dense_points(curves, 0.05 * min(cell))
    tree = cKDTree(dense) if len(dense) else None
    if len(pairs):
        mid = 0.5 * (np.column_stack([grid.p[pairs[:, 0]], grid.q[pairs[:, 1]]])
                     + np.column_stack([grid.p[pairs[:, 2]], grid.q[pairs[:, 3]]]))
        if tree is not None:
            dist, _ = tree.query(mid)
        else:
            dist = np.full(len(mid), np.inf)
        ok = dist <= diag
        rep.explained = int(np.count_nonzero(ok))
        for (i, j, k, l), m in zip(pairs[~ok], mid[~ok]):
            rep.violations.append(Violation(
                "unexplained", float(m[0]), float(m[1]),
                f"count {grid.counts[i, j]} -> {grid.counts[k, l]} with no curve within {diag:.3g}"))

    # (b) jump magnitudes, probed in cell-scaled coordinates; the offset shrinks
    # to a third of the distance to any other curve so thin regions are probed too
    d = grid.domain
    scaled = dense / cell
    r0 = probe_offset * np.hypot(1.0, 1.0)
    trees = {k: cKDTree(scaled[owner == k]) for k in np.unique(owner)}
    branch_ends = _branch_end_points(curves) / cell
    probe_pts, meta = [], []
    for k, c in enumerate(curves):
        idx, normals = curve_normals(c, cell)
        idx, normals = idx[::probe_stride], normals[::probe_stride]
        if idx.size == 0:
            continue
        x_all = c.points[idx] / cell
        gap = np.full(len(idx), np.inf)
        for k2, tr in trees.items():
            if k2 != k:
                gap = np.minimum(gap, tr.query(x_all)[0])
        for x, i, n, g in zip(x_all, idx, normals, gap):
            r = min(r0, g / isolation)
            if r < min_offset:
                continue
            # Lambda0 ends tangentially on L0 or l+-; no single-curve jump there
            if len(branch_ends) and np.min(np.hypot(*(branch_ends - x).T)) < END_EXCLUSION:
                continue
            pa, pb = (x + r * n) * cell, (x - r * n) * cell
            if not (d.contains(pa[0], pa[1]) and d.contains(pb[0], pb[1])):
                continue
            own = trees[k].query_ball_point(x, isolation * r)
            if _folds_back(trees[k].data[own], x, n, r):
                continue
            for t in PROBE_SHRINK:
                probe_pts += [(x + t * r * n) * cell, (x - t * r * n) * cell]
            meta.append((c.kind, c.points[i]))
    if probe_pts:
        pp = np.array(probe_pts)
        counts = count_at(f, pp[:, 0], pp[:, 1], grid_n).reshape(-1, len(PROBE_SHRINK), 2)
        for (kind, at), c in zip(meta, counts):
            rep.probes += 1
            jump = _settled_jump(c)
            if jump is None:
                continue
            hist = rep.jumps_by_kind.setdefault(kind, {})
            hist[jump] = hist.get(jump, 0) + 1
            if jump == JUMP[kind]:
                rep.probes_ok += 1
            else:
                rep.violations.append(Violation(
                    "jump", float(at[0]), float(at[1]),
                    f"{kind}: counts {c[:, 0].tolist()} / {c[:, 1].tolist()}, "
                    f"predicted jump {JUMP[kind]}"))
    return rep


def _branch_end_points(curves):
    pts = []
    for c in curves:
        for b, where, kind in c.ends:
            if kind != "closed":
                seg = c.points[c.branch == b]
                pts.append(seg[0] if where == "start" else seg[-1])
    return np.array(pts).reshape(-1, 2)


def _settled_jump(c):
    """Jump at the smallest pair of consecutive offsets that agree; None if indeterminate."""
    if np.any(c < 0):
        return None
    jumps = np.abs(c[:, 0] - c[:, 1])
    for a, b in zip(jumps[::-1][:-1], jumps[::-1][1:]):
        if a == b:
            return int(a)
    return int(jumps[-1])


def _folds_back(pts, x, n, r):
    # points of the same curve that sit on the normal line at distance > r/4
    rel = pts - x
    along_normal = np.abs(rel @ n)
    return bool(np.any(along_normal > 0.25 * r))


# further checks ---------------------------------------------------------------

def resolution_stability(coarse: CountGrid, fine: CountGrid, curves: Sequence[PlanarCurve]):
    """Fine cells whose count differs from the coarse cell containing them,
    split into those within one coarse diagonal of a curve and the rest."""
    d = coarse.domain
    dp, dq = coarse.cell
    ip = np.clip(((fine.p - d.p0) // dp).astype(int), 0, coarse.resolution[0] - 1)
    iq = np.clip(((fine.q + d.qmax) // dq).astype(int), 0, coarse.resolution[1] - 1)
    mapped = coarse.counts[np.ix_(ip, iq)]
    ok = fine.determinate & coarse.determinate[np.ix_(ip, iq)]
    diff = (mapped != fine.counts) & ok
    i, j = np.nonzero(diff)
    pts = np.column_stack([fine.p[i], fine.q[j]])
    dense, _ = _dense_points(curves, 0.05 * min(fine.cell))
    if len(pts) == 0:
        return 0, np.zeros((0, 2))
    dist, _ = cKDTree(dense).query(pts)
    far = dist > coarse.diagonal
    return int(np.count_nonzero(~far)), pts[far]


@dataclass(frozen=True)
class EscapeCheck:
    kind: str
    p: float
    q: float
    on_curve_escape: bool       # a root sits at +-1 on the curve itself
    jump: int
    lost_root_margin: float     # distance to +-1 of the root lost across the curve


def escape_accounting(f: ModelFunction, curves: Sequence[PlanarCurve], d: DomainD,
                      stride: int = 40, offset: float = 1e-6) -> list[EscapeCheck]:
    """Across escape curves the lost cycle is the one whose root reaches +-1."""
    out = []
    for c in curves:
        if c.kind not in ESCAPE_KINDS:
            continue
        idx, normals = curve_normals(c, np.ones(2))
        for i, n in zip(idx[::stride], normals[::stride]):
            p, q = c.p[i], c.q[i]
            end = float(c.y[i])
            # skip the curve ends where other curves meet it
            if not d.contains(p, q) or abs(abs(float(c.w[i])) - 1.0) < 0.05:
                continue
            on = find_period2_roots(ReturnSystem.at(f, p, q))
            ra = find_period2_roots(ReturnSystem.at(f, p + offset * n[0], q + offset * n[1]))
            rb = find_period2_roots(ReturnSystem.at(f, p - offset * n[0], q - offset * n[1]))
            hi, lo = (ra, rb) if ra.cycles >= rb.cycles else (rb, ra)
            lost = [r.y for r in hi.period2_roots
                    if not any(abs(r.y - s.y) < 1e-4 for s in lo.period2_roots)]
            margin = min((abs(end - y) for y in lost), default=np.inf)
            out.append(EscapeCheck(c.kind, float(p), float(q), on.escape_flags,
                                   hi.cycles - lo.cycles, float(margin)))
    return out


@dataclass(frozen=True)
class LocalPattern:
    center: tuple[float, float]
    radius: float
    counts: dict  # count -> fraction of probe points


def local_pattern(f: ModelFunction, point: SingularPoint | tuple[float, float], radius: float,
                  n_r: int = 40, n_theta: int = 180, grid_n: int = 4001) -> LocalPattern:
    """Distribution of cycle counts on a polar probe grid around a point."""
    c = point.location if isinstance(point, SingularPoint) else point
    rr = radius * (np.arange(1, n_r + 1) / n_r)
    th = np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False)
    R, T = np.meshgrid(rr, th)
    P = c[0] + R * np.cos(T)
    Q = c[1] + R * np.sin(T)
    counts = count_at(f, P, Q, grid_n).ravel()
    vals, n = np.unique(counts, return_counts=True)
    return LocalPattern((float(c[0]), float(c[1])), radius,
                        {int(v): float(k) / counts.size for v, k in zip(vals, n)})
