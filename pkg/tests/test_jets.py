import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lips import DomainError, check_genericity, eval_inverse_jet, eval_jet, identity, polynomial, sine
from lips.jets import MAX_ORDER, Jet, compose, conjugacy_residual, from_spec


def test_forward_jet_examples(ref):
    assert eval_jet(ref, 0.0, 3).values == (0.0, 1.0, 0.0, 2.0)
    assert eval_jet(identity(), 0.5, 2).values == (0.5, 1.0, 0.0)
    assert np.allclose(eval_jet(ref, 1.0, 1).values, (4 / 3, 2.0), rtol=0, atol=1e-15)


def test_inverse_jet_examples(ref):
    assert np.allclose(eval_inverse_jet(identity(), 0.3, 2).values, (0.3, 1.0, 0.0), atol=1e-15)
    assert np.allclose(eval_inverse_jet(ref, 4 / 3, 1).values, (1.0, 0.5), atol=1e-12)
    assert np.allclose(eval_inverse_jet(ref, 0.0, 3).values, (0.0, 1.0, 0.0, -2.0), atol=1e-12)


def test_inverse_jet_against_series_reversion(ref):
    # f^{-1}(x) = x - x^3/3 + x^5/3 - ... for f = y + y^3/3
    vals = eval_inverse_jet(ref, 0.0, 5).values
    assert np.allclose(vals, (0.0, 1.0, 0.0, -2.0, 0.0, 40.0), atol=1e-10)


@pytest.mark.parametrize("order", [0, 7, 2.5])
def test_order_out_of_range(ref, order):
    with pytest.raises(DomainError):
        eval_jet(ref, 0.0, order)


def test_inverse_outside_range(ref):
    with pytest.raises(DomainError):
        eval_inverse_jet(ref, 2.0, 2)


def test_construction_rejects_bad_functions():
    with pytest.raises(DomainError):
        polynomial([0.0, 1.0])  # affine without the flag
    with pytest.raises(DomainError):
        polynomial([0.0, 0.1, 0.0, -1.0])  # decreasing near the ends
    with pytest.raises(DomainError):
        sine(0.6, 4.0)  # f' = 1 + 2.4 cos(4y) < 0 at y = pi/4
    with pytest.raises(DomainError):
        Jet(0.0, (1.0,))


def test_from_spec_round_trip(ref):
    assert from_spec({"kind": "poly", "coeffs": [0, 1, 0, 1 / 3]})(0.5) == pytest.approx(ref(0.5))
    assert from_spec({"kind": "sine", "a": 0.1, "b": 5})(0.3) == pytest.approx(0.3 + 0.1 * math.sin(1.5))
    with pytest.raises(DomainError):
        from_spec({"kind": "exp"})


def test_genericity_examples(ref):
    e = check_genericity(ref, [0.0]).entries[0]
    assert e.nonaffine_order == 3
    assert e.conjugacy_order == 3
    rep = check_genericity(identity(), [0.0])
    assert rep.entries[0].nonaffine_order is None
    assert not rep.certified
    assert "not certified" in rep.summary()


def test_conjugacy_residual_vanishes_for_odd_function_at_low_order(ref):
    # alpha(x) = -x conjugates the 2-jets of an odd function and its inverse
    r, (b1, b2) = conjugacy_residual(ref, 0.0, 2)
    assert r < 1e-10
    assert b1 == pytest.approx(-1.0, abs=1e-6)


models = st.sampled_from([polynomial([0, 1, 0, 1 / 3]), sine(0.1, 5.0),
                          polynomial([0, 1, 0.2, 0.3, 0, -0.1]), sine(0.2, 2.5)])


@settings(max_examples=100, deadline=None)
@given(y0=st.floats(-0.99, 0.99))
def test_reference_jet_matches_central_differences(y0):
    f = polynomial([0, 1, 0, 1 / 3])
    h = 1e-3
    v = eval_jet(f, y0, 3).values
    fd1 = (f(y0 + h) - f(y0 - h)) / (2 * h)
    fd2 = (f(y0 + h) - 2 * f(y0) + f(y0 - h)) / h**2
    fd3 = (f(y0 + 2 * h) - 2 * f(y0 + h) + 2 * f(y0 - h) - f(y0 - 2 * h)) / (2 * h**3)
    assert abs(fd1 - v[1]) <= 1e-6 * abs(v[1])
    assert abs(fd2 - v[2]) <= 1e-6 * max(1.0, abs(v[2]))
    assert abs(fd3 - v[3]) <= 1e-6 * abs(v[3])


@settings(max_examples=100, deadline=None)
@given(f=models, y0=st.floats(-0.99, 0.99))
def test_jet_matches_fourth_order_differences(f, y0):
    # five-point stencils; truncation error O(h^4) keeps oscillatory f in reach
    h = 1e-3
    v = eval_jet(f, y0, 2).values
    fm2, fm1, f0, fp1, fp2 = (float(f(y0 + k * h)) for k in (-2, -1, 0, 1, 2))
    fd1 = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h)
    fd2 = (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h**2)
    assert abs(fd1 - v[1]) <= 1e-6 * abs(v[1])
    assert abs(fd2 - v[2]) <= 1e-5 * max(1.0, abs(v[2]))


@settings(max_examples=100, deadline=None)
@given(f=models, t=st.floats(0.0, 1.0))
def test_inverse_round_trip(f, t):
    q = f.lo + t * (f.hi - f.lo)
    assert abs(f(eval_inverse_jet(f, q, 1).values[0]) - q) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(f=models, y0=st.floats(-0.95, 0.95), order=st.integers(1, MAX_ORDER))
def test_inverse_after_forward_is_identity(f, y0, order):
    fwd = eval_jet(f, y0, order)
    inv = eval_inverse_jet(f, fwd.values[0], order)
    ident = compose(inv, fwd).values
    expect = (y0, 1.0) + (0.0,) * (order - 1)
    assert np.allclose(ident, expect, rtol=0, atol=1e-9 * max(1.0, max(map(abs, fwd.values))) ** order)
