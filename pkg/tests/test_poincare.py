import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from lips import (DegeneracyError, EscapeError, ReturnSystem, find_period2_roots, fixed_point,
                  identity, period2_residual, reference, select_domain_D)
from lips.poincare import displacement_jet, multiplicity_from_jet, poincare_map, return_slope

mp.mp.dps = 30


def test_poincare_map_examples(ref):
    assert poincare_map(ReturnSystem.at(identity(), 2, 1.5), 0.5) == pytest.approx(0.5, abs=1e-15)
    assert poincare_map(ReturnSystem.at(ref, 1, 0), 0.0) == pytest.approx(0.0, abs=1e-15)
    assert poincare_map(ReturnSystem.at(ref, 1, 4 / 3), 0.0) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(EscapeError):
        poincare_map(ReturnSystem.at(ref, 1, 3.0), 0.0)


def test_fixed_point_examples(ref):
    fp = fixed_point(ReturnSystem.at(ref, 1, 0))
    assert fp.y == 0.0 and fp.slope == -1.0
    assert fixed_point(ReturnSystem.at(identity(), 2, 1.5)).y == pytest.approx(0.5, abs=1e-15)
    assert fixed_point(ReturnSystem.at(ref, 2, 10)) is None


def test_residual_examples(ref):
    assert period2_residual(ReturnSystem.at(identity(), 1, 0.37), 0.2) == 0.0
    assert period2_residual(ReturnSystem.at(ref, 1, 0), 0.0) == 0.0
    f = lambda y: y + y**3 / 3
    oracle = float(-mp.mpf("0.5") - f(-f(mp.mpf("0.5"))))
    val = period2_residual(ReturnSystem.at(ref, 1, 0), 0.5)
    assert val == pytest.approx(oracle, rel=1e-14)
    assert val == pytest.approx(0.0946422, abs=1e-7)
    with pytest.raises(EscapeError):
        period2_residual(ReturnSystem.at(ref, 0.1, 0), 0.9)


def test_root_examples(ref):
    rep = find_period2_roots(ReturnSystem.at(ref, 1, 0))
    assert len(rep.period2_roots) == 1
    r = rep.period2_roots[0]
    assert r.y == pytest.approx(0.0, abs=1e-12) and r.is_fixed and r.multiplicity >= 2
    rep = find_period2_roots(ReturnSystem.at(identity(), 2, 1.5))
    assert [(round(r.y, 12), r.multiplicity) for r in rep.period2_roots] == [(0.5, 1)]
    assert rep.cycles == 1
    with pytest.raises(DegeneracyError):
        find_period2_roots(ReturnSystem.at(identity(), 1, 0.2))


def test_fold_pair_and_escape(ref):
    # just inside the fold: two fresh period-two pairs plus the fixed point
    rep = find_period2_roots(ReturnSystem.at(ref, 1.2, 0.0))
    assert rep.cycles >= 1
    assert all(abs(abs(r.y) - 1) > 1e-9 or r.escape for r in rep.period2_roots)
    # on l+ at w = 0: a root sits at y = 1 and is flagged
    p = ref.chord(1.0, 0.0)
    rep = find_period2_roots(ReturnSystem.at(ref, p, float(ref(1.0))))
    assert any(abs(r.y - 1) < 1e-9 and r.escape for r in rep.period2_roots)
    assert rep.escape_flags


def test_displacement_jet_examples(ref):
    j = displacement_jet(ReturnSystem.at(ref, 1, 0), 0.0, 3)
    assert np.allclose(j.values, (0, 0, 0, 4), atol=1e-12)
    j = displacement_jet(ReturnSystem.at(identity(), 1, 0.3), 0.1, 4)
    assert np.allclose(j.values, 0, atol=1e-14)
    assert multiplicity_from_jet(displacement_jet(ReturnSystem.at(ref, 1, 0), 0.0, 3)) == 3
    with pytest.raises(EscapeError):
        displacement_jet(ReturnSystem.at(ref, 1, 3), 0.0, 2)


D = select_domain_D(reference())
pq_in_D = st.tuples(st.floats(D.p0, D.p1), st.floats(-D.qmax, D.qmax))


@settings(max_examples=1000, deadline=None)
@given(pq=pq_in_D, y=st.floats(-1, 1))
def test_return_map_reverses_orientation(ref, pq, y):
    sys_ = ReturnSystem.at(ref, *pq)
    v = -pq[0] * y + pq[1]
    assume(ref.lo <= v <= ref.hi)
    assert return_slope(sys_, y) < 0


@settings(max_examples=300, deadline=None)
@given(pq=pq_in_D)
def test_root_report_invariants(ref, pq):
    sys_ = ReturnSystem.at(ref, *pq)
    rep = find_period2_roots(sys_)
    ys = [r.y for r in rep.period2_roots]
    if rep.fixed_root is not None:
        assert any(abs(y - rep.fixed_root.y) <= 1e-9 for y in ys)
        assert rep.fixed_root.slope < 0
    for r in rep.period2_roots:
        if r.is_fixed:
            continue
        w = float(sys_.partner(r.y))
        assert any(abs(w - y) <= 1e-8 for y in ys)
        assert abs(period2_residual(sys_, w)) < 1e-9


@settings(max_examples=1000, deadline=None)
@given(pq=pq_in_D)
def test_fixed_point_unique(ref, pq):
    sys_ = ReturnSystem.at(ref, *pq)
    ys = np.linspace(-1, 1, 4001)
    g = ref(ys) + pq[0] * ys - pq[1]
    assert np.all(np.diff(g) > 0)  # strictly increasing, so at most one zero
    fp = fixed_point(sys_)
    assert (fp is not None) == (g[0] <= 0 <= g[-1])


def test_roots_simple_outside_domain(ref, rng):
    n = 0
    while n < 500:
        p = rng.uniform(0.05, 6.0)
        q = rng.uniform(-8.0, 8.0)
        if D.contains(p, q):
            continue
        n += 1
        rep = find_period2_roots(ReturnSystem.at(ref, p, q))
        assert rep.all_simple, (p, q)
