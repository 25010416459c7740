import numpy as np
import pytest

from lips import DomainError, ReturnSystem, cyclicity_bound, identity, reference, sine
from lips.poincare import displacement_jet
from lips.cyclicity import DisplacementSystem, derivative_scale


@pytest.fixture(scope="module")
def ref_report():
    return cyclicity_bound(reference())


def test_reference_bound_is_three(ref_report):
    assert ref_report.certified and ref_report.n == 3
    assert ref_report.generic
    assert ref_report.certificate > ref_report.tolerance
    assert [w.m for w in ref_report.witnesses] == [1, 2]


def test_witnesses_are_displacement_zeros(ref_report):
    f = reference()
    for w in ref_report.witnesses:
        assert w.residual <= ref_report.tolerance
        y0 = ref_report.y0
        Q = w.q + float(f(y0)) + w.p * y0
        jet = displacement_jet(ReturnSystem.at(f, w.p, Q), y0, w.m)
        assert max(abs(v) for v in jet.values[1:w.m + 1]) < 1e-6


def test_closed_form_matches_jet(rng):
    f = reference()
    sysm = DisplacementSystem(f, 0.3)
    for _ in range(10):
        p, q = rng.uniform(0.5, 3.0), rng.uniform(-0.2, 0.2)
        Q = q + float(f(0.3)) + p * 0.3
        jet = displacement_jet(ReturnSystem.at(f, p, Q), 0.3, 6)
        np.testing.assert_allclose(sysm.h(p, q), jet.values[1:], rtol=1e-9, atol=1e-12)


def test_off_center_polycycle():
    rep = cyclicity_bound(reference(), y0=0.5)
    assert rep.n == 3


def test_affine_family_is_not_certified():
    rep = cyclicity_bound(identity())
    assert not rep.certified and not rep.generic
    assert "not certified" in rep.verdict


def test_bound_stable_under_tolerance_scaling(ref_report):
    assert cyclicity_bound(reference(), scale_factor=2.0).n == ref_report.n


def test_witness_orders_are_nested(ref_report):
    # a common zero of h_1..h_m is one of h_1..h_{m-1}
    f = reference()
    sysm = DisplacementSystem(f, 0.0)
    for w in ref_report.witnesses:
        h = np.abs(sysm.h(w.p, w.q, w.m))
        assert np.all(h <= ref_report.tolerance)


def test_bound_nonincreasing_in_domain():
    f = sine(0.1, 5.0)
    small = cyclicity_bound(f, p_range=(0.8, 1.25), grid=(81, 41))
    big = cyclicity_bound(f, p_range=(0.25, 4.0), grid=(241, 121))
    if small.certified and big.certified:
        assert small.n <= big.n


def test_rejects_bad_inputs():
    with pytest.raises(DomainError):
        cyclicity_bound(reference(), p_range=(2.0, 1.0))
    with pytest.raises(DomainError):
        cyclicity_bound(reference(), y0=1.5)
    assert derivative_scale(reference()) >= 1.0
