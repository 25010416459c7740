import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lips import DomainError, OutOfScopeError, Params, classify_stratum, coeff_C1, coeff_C2
from strata_fixture import STRATA_FIXTURE
from lips.normalform import (STRATA, NormalFormConfig, g_map, transition_1, transition_2,
                             verify_transition_ode)

mp.mp.dps = 40


def c_oracle(x):
    s = mp.sqrt(mp.mpf(x))
    return float(mp.exp(-(2 / s) * mp.atan(1 / s)))


def test_coefficient_values():
    assert coeff_C1(1.0) == pytest.approx(math.exp(-math.pi / 2), rel=1e-15)
    assert coeff_C1(1.0) == pytest.approx(0.2078796, abs=5e-8)
    # exp(-4 arctan 2), evaluated in 40-digit arithmetic
    assert coeff_C1(0.25) == pytest.approx(c_oracle(0.25), rel=1e-14)
    assert coeff_C1(0.25) == pytest.approx(0.011931242833, rel=1e-10)
    assert coeff_C2(0.25) == coeff_C1(0.25)
    assert coeff_C1(1e-6) < 1e-300 or coeff_C1(1e-6) == 0.0


@pytest.mark.parametrize("bad", [0.0, -0.1])
def test_coefficient_domain(bad):
    with pytest.raises(DomainError):
        coeff_C1(bad)
    with pytest.raises(DomainError):
        transition_1(0.1, bad)


def test_transition_examples():
    assert transition_1(0.0, 0.3).value == 0.0
    t = transition_1(0.1, 1.0)
    assert t.value == pytest.approx(0.1 / c_oracle(1.0), rel=1e-14)
    assert t.value == pytest.approx(0.48105, abs=1e-5)
    assert t.in_section
    assert not transition_1(0.5, 1.0).in_section
    assert transition_2(0.5, 0.25).value == pytest.approx(0.5 * c_oracle(0.25), rel=1e-14)


def test_g_map_examples():
    assert g_map(0.0, 0.7) == 0.7
    assert g_map(0.4, 0.0) == -0.4
    assert g_map(0.3, 0.1) == pytest.approx(-0.2)


def test_transition_ode_examples():
    chk = verify_transition_ode(1.0, 0.1)
    assert chk.empirical == pytest.approx(0.48105, abs=1e-5)
    assert chk.rel_err < 1e-6
    assert verify_transition_ode(1.0, 0.0, NormalFormConfig(a1=0.5)).empirical == 0.0
    skew = verify_transition_ode(1.0, 0.1, NormalFormConfig(a1=0.5))
    assert skew.analytic == chk.analytic
    assert skew.rel_err < 1e-6


def test_transition_ode_step_cap():
    from lips import NumericalError
    with pytest.raises(NumericalError):
        verify_transition_ode(1e-4, 0.1, max_steps=1000)


def test_config_bounds():
    with pytest.raises(DomainError):
        NormalFormConfig(a1=1.0)
    with pytest.raises(DomainError):
        Params(1.5, 0.0, 0.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_coefficient_monotone_in_unit_interval(a, b):
    lo, hi = sorted((a, b))
    assert 0.0 < coeff_C1(lo) < 1.0 and 0.0 < coeff_C1(hi) < 1.0
    if hi > lo * (1 + 1e-9):
        assert coeff_C1(lo) < coeff_C1(hi)


@settings(max_examples=50, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1).filter(lambda a: a != 0), st.floats(0.05, 1))
def test_transition_linearity(y, alpha, eps):
    if abs(alpha * y) <= 1:
        # equal up to the rounding of one product and one quotient
        assert transition_1(alpha * y, eps).value == pytest.approx(alpha * transition_1(y, eps).value,
                                                                  rel=1e-15, abs=1e-300)


def test_strata_fixture_covers_each_label_three_times():
    labels = [lab for _, lab in STRATA_FIXTURE]
    assert len(STRATA_FIXTURE) == 33
    assert all(labels.count(k) == 3 for k in range(1, 12))


@pytest.mark.parametrize("triple,label", STRATA_FIXTURE)
def test_strata_table(triple, label):
    st_ = classify_stratum(Params(*map(float, triple)))
    assert st_.label == label
    assert st_.description == STRATA[label]


def test_strata_examples():
    assert str(classify_stratum(Params(-0.1, 0.2, 0.0))) == "7: a saddle and a stable node"
    assert classify_stratum(Params(0.0, 0.0, 0.0)).description == \
        "two saddle-nodes connected by a separatrix"
    assert classify_stratum(Params(0.1, -0.1, 0.0)).description == "saddle and an unstable node"
    with pytest.raises(OutOfScopeError):
        classify_stratum(Params(0.1, 0.1, 0.0))


@settings(max_examples=200, deadline=None)
@given(st.sampled_from([-1, 0, 1]), st.sampled_from([-1, 0, 1]), st.sampled_from([-1, 0, 1]),
       st.floats(1e-6, 1.0))
def test_strata_total_on_its_domain(se, sd, sl, mag):
    nu = Params(se * mag, sd * mag, sl * mag)
    if se > 0 and sd > 0:
        with pytest.raises(OutOfScopeError):
            classify_stratum(nu)
    else:
        assert 1 <= classify_stratum(nu).label <= 11
