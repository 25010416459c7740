import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lips import (DegeneracyError, PlanarCurve, endpoint_tangency, find_cusps, find_flips,
                  find_self_intersections, identity, polynomial, trace_L0, trace_Lambda0, trace_l_pm)
from lips.curves import (KINDS, _G, _pq, contour_F, curve_residuals, cusp_seed_oracle, flip_function,
                         trace_fixed_escape)


def test_L0_examples(ref):
    c = trace_L0(ref, 3)
    assert (c.p[1], c.q[1]) == (1.0, 0.0)
    # q = f'(1) + f(1) = 2 + fl(4/3): exact up to the rounding of that one sum
    assert c.p[2] == 2.0
    assert abs(c.q[2] - 10 / 3) <= np.spacing(10 / 3)
    ci = trace_L0(identity(), 5)
    assert np.all(ci.p == 1.0) and np.allclose(ci.q, 2 * ci.y)


def test_l_pm_examples(ref):
    lp = trace_l_pm(ref, 1, 5)
    assert lp.p[-1] == pytest.approx(float(ref.deriv(1.0, 1)), abs=1e-13)
    assert lp.q[-1] == pytest.approx(float(ref.deriv(1.0, 1) + ref(1.0)), abs=1e-13)
    assert lp.p[0] == pytest.approx(4 / 3, abs=1e-12)
    assert np.allclose(trace_l_pm(identity(), -1, 9).p, 1.0, atol=1e-13)


def test_l_pm_regular(ref):
    for sign in (1, -1):
        c = trace_l_pm(ref, sign, 801)
        t = np.diff(c.points, axis=0)
        assert np.all(np.hypot(t[:, 0], t[:, 1]) > 0)
        assert np.all(np.diff(c.w) > 0)
        assert not find_self_intersections(c)


def test_l_plus_and_minus_never_tangent(ref):
    crossings = find_self_intersections([trace_l_pm(ref, 1), trace_l_pm(ref, -1)])
    assert all(x.residuals["sin_angle"] > 1e-3 for x in crossings)


def test_residual_contract(ref, ref_curves):
    for c in ref_curves:
        assert np.all(curve_residuals(ref, c) < 1e-10), c.kind
        assert np.all(c.p > 0)


def test_residual_contract_on_fixtures(cusp_f, crossing_f):
    for f in (cusp_f, crossing_f):
        c = trace_Lambda0(f)
        assert np.all(curve_residuals(f, c) < 1e-10)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=100, max_size=100))
def test_contour_antisymmetry(ref, pairs):
    y, w = np.array(pairs).T
    assert np.all(np.abs(contour_F(ref, y, w) + contour_F(ref, w, y)) < 1e-14)


def test_lambda0_degenerate_for_affine():
    with pytest.raises(DegeneracyError):
        trace_Lambda0(identity())


def test_lambda0_branches_start_at_flips(ref):
    lam = trace_Lambda0(ref)
    flips = sorted(x.preimage[0] for x in find_flips(ref))
    assert len(set(lam.branch.tolist())) == 2
    for b, where, kind in lam.ends:
        if kind != "flip":
            continue
        idx = np.nonzero(lam.branch == b)[0]
        k = idx[0] if where == "start" else idx[-1]
        mid = 0.5 * (lam.y[k] + lam.w[k])
        assert min(abs(mid - y) for y in flips) < 1e-2


def test_lambda0_symmetric_under_swap(ref):
    lam = trace_Lambda0(ref)
    # the traced (y, w) with y < w and the swapped pair give the same (p, q)
    p2, q2 = _pq(ref, lam.w, lam.y)
    p1, q1 = _pq(ref, lam.y, lam.w)
    assert np.allclose(p1, p2, atol=1e-13)
    # q from the swapped chart uses the partner relation, which is symmetric on the contour
    assert np.allclose(q1, lam.q, atol=1e-12)


def test_diagonal_limit(ref):
    flip_y = 1 / math.sqrt(2)
    gaps = []
    for d in (1e-3, 1e-4):
        from scipy.optimize import brentq
        g = lambda m: _G(ref, m - d / 2, m + d / 2)
        ms = np.linspace(flip_y - 0.05, flip_y + 0.05, 201)
        vals = np.array([g(m) for m in ms])
        i = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0][0]
        m = brentq(g, ms[i], ms[i + 1], xtol=1e-15)
        p, q = _pq(ref, m - d / 2, m + d / 2)
        l0 = trace_L0(ref, 2)
        p0, q0 = float(ref.deriv(m, 1)), float(ref.deriv(m, 1) * m + ref(m))
        gaps.append(math.hypot(p - p0, q - q0))
    assert gaps[1] < gaps[0] < 1e-3


def test_flip_examples(ref):
    flips = find_flips(ref)
    assert len(flips) == 2
    for x, sgn in zip(sorted(flips, key=lambda s: s.preimage[0]), (-1, 1)):
        assert abs(x.preimage[0] - sgn / math.sqrt(2)) < 1e-9
        assert abs(x.residuals["nondegeneracy"] + 320 / 9) < 1e-6
        assert abs(flip_function(ref, x.preimage[0])) < 1e-9
        assert x.warning is None


def test_no_flip_where_third_derivative_dominates():
    f = polynomial([0, 1, 0, 1 / 6])
    assert all(abs(x.preimage[0]) > 0.5 for x in find_flips(f))
    assert flip_function(f, 0.0) == -2.0


def test_flips_of_fixtures(cusp_f, crossing_f):
    assert len(find_flips(cusp_f)) == 4
    assert len(find_flips(crossing_f)) == 2
    assert find_flips(identity()) == []


def test_reference_has_no_cusps(ref):
    lam = trace_Lambda0(ref)
    assert find_cusps(ref, lam) == []
    assert cusp_seed_oracle(ref, 50) == [] and cusp_seed_oracle(ref, 100) == []
    assert find_cusps(identity(), lam) == []


def test_cusp_fixture(cusp_f, cusp_lambda0):
    cusps = sorted(find_cusps(cusp_f, cusp_lambda0), key=lambda s: s.preimage[0])
    expect = [(-3 * math.pi / 10, math.pi / 10), (-math.pi / 10, 3 * math.pi / 10)]
    assert len(cusps) == 2
    for c, (y, w) in zip(cusps, expect):
        assert c.preimage == pytest.approx((y, w), abs=1e-9)
        assert c.p == pytest.approx(1.0, abs=1e-12)
        assert abs(c.residuals["F"]) < 1e-9 and abs(c.residuals["cusp"]) < 1e-9
        assert abs(c.residuals["cubic"]) > 1e-6
        assert c.residuals["cubic"] == pytest.approx(-18.75, rel=1e-9)
    seeds50 = cusp_seed_oracle(cusp_f, 50)
    seeds100 = cusp_seed_oracle(cusp_f, 100)
    assert len(seeds50) == len(seeds100) == 2
    assert np.allclose(seeds50, [c.preimage for c in cusps], atol=1e-9)


def test_crossing_fixture_cusp(crossing_f):
    lam = trace_Lambda0(crossing_f)
    cusps = find_cusps(crossing_f, lam)
    assert len(cusps) == len(cusp_seed_oracle(crossing_f, 50)) == 1
    assert abs(cusps[0].residuals["cubic"]) > 1e-6


def test_figure_eight_has_one_crossing():
    # start away from the crossing so it is an interior point of the polyline
    t = np.linspace(0.3, 0.3 + 2 * np.pi, 2001)
    p = 2 + np.sin(t)
    q = np.sin(t) * np.cos(t)
    c = PlanarCurve("L0", p, q, t, t, np.zeros_like(t, dtype=int))
    hits = find_self_intersections(c)
    assert len(hits) == 1
    assert hits[0].location == pytest.approx((2.0, 0.0), abs=1e-6)


def test_L0_has_no_self_intersections(ref):
    assert find_self_intersections(trace_L0(ref)) == []


def test_self_intersections_stable_under_refinement(ref, cusp_f, crossing_f):
    for f in (ref, cusp_f, crossing_f):
        counts = [len(find_self_intersections([trace_L0(f, 801 * k), trace_Lambda0(f, step=1e-2 / k)],
                                              f)) for k in (1, 2)]
        assert counts[0] == counts[1]


def test_crossing_fixture_L0_crossing(crossing_f):
    hits = find_self_intersections([trace_L0(crossing_f), trace_Lambda0(crossing_f)], crossing_f)
    assert len(hits) == 1
    assert hits[0].location == pytest.approx((1.00201, -1.05045), abs=1e-5)
    assert hits[0].residuals["sin_angle"] > 1e-3


def test_reference_endpoint_tangency(ref):
    lam = trace_Lambda0(ref)
    pts = endpoint_tangency(ref, lam, trace_l_pm(ref, 1)) + endpoint_tangency(ref, lam, trace_l_pm(ref, -1))
    assert len(pts) == 2
    for x in pts:
        assert x.warning is None
        assert x.residuals["difference"] < 1e-6 and x.residuals["gap"] < 1e-9


def test_L0_end_meets_l_plus(ref):
    l0 = trace_L0(ref, 101)
    lp = trace_l_pm(ref, 1, 101)
    assert (l0.p[-1], l0.q[-1]) == pytest.approx((lp.p[-1], lp.q[-1]), abs=1e-12)


def test_fixed_escape_lines(ref):
    c = trace_fixed_escape(ref, -1, (0.5, 2.5), 11)
    assert np.allclose(c.q, -c.p + ref(-1.0))
    assert np.all(curve_residuals(ref, c) < 1e-12)
    assert set(KINDS) >= {"L0", "Lambda0_offdiagonal", "l_plus", "l_minus"}
