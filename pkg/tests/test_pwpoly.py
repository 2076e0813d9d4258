"""Exact piecewise-polynomial algebra."""

from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dtlab.errors import UsageError
from dtlab.pwpoly import PW_ONE, PW_X, PW_ZERO, PiecewisePoly

rationals = st.fractions(min_value=-3, max_value=3, max_denominator=12)


@st.composite
def piecewise_polys(draw):
    n_cuts = draw(st.integers(0, 2))
    cuts = sorted(draw(st.lists(
        st.fractions(min_value=F(1, 8), max_value=F(7, 8), max_denominator=16),
        min_size=n_cuts, max_size=n_cuts, unique=True)))
    breaks = [F(0)] + cuts + [F(1)]
    pieces = []
    for lo, hi in zip(breaks, breaks[1:]):
        coeffs = draw(st.lists(rationals, min_size=0, max_size=3))
        pieces.append((lo, hi, tuple(coeffs)))
    return PiecewisePoly(tuple(pieces))


def test_constructors_and_eval():
    assert PW_ONE.evaluate(F(1, 3)) == 1
    assert PW_X.evaluate(F(2, 5)) == F(2, 5)
    assert PW_X.evaluate(1) == 1
    p = PiecewisePoly.step([0, F(1, 2), 1], [3, 7])
    assert p.evaluate(F(1, 2)) == 7  # left-closed pieces
    assert p.evaluate(F(499, 1000)) == 3
    ind = PiecewisePoly.indicator(F(1, 4), F(3, 4))
    assert ind.evaluate(F(1, 4)) == 1 and ind.evaluate(F(3, 4)) == 0
    assert ind.integral() == F(1, 2)


def test_validation_errors():
    with pytest.raises(UsageError):
        PiecewisePoly(((F(0), F(1, 2), (F(1),)),))  # does not reach 1
    with pytest.raises(UsageError):
        PiecewisePoly(((F(0), F(1, 2), ()), (F(3, 4), F(1), ())))  # gap
    with pytest.raises(UsageError):
        PW_ONE.evaluate(F(3, 2))
    with pytest.raises(UsageError):
        PiecewisePoly.monomial(-1)


def test_integrals():
    assert PW_ONE.integral() == 1
    assert PW_X.integral() == F(1, 2)
    assert PiecewisePoly.monomial(4).integral() == F(1, 5)
    assert PW_ONE.integrate_right() == PiecewisePoly.poly([1, -1])
    assert PW_X.integrate_right() == PiecewisePoly.poly([F(1, 2), 0, F(-1, 2)])
    assert PW_ZERO.integrate_right() == PW_ZERO
    assert PW_ONE.integrate_left() == PW_X
    assert PW_X.integrate_left() == PiecewisePoly.poly([0, 0, F(1, 2)])
    half_step = PiecewisePoly.step([0, F(1, 2), 1], [1, 0])
    li = half_step.integrate_left()
    assert li.evaluate(F(1, 4)) == F(1, 4)
    assert li.evaluate(F(3, 4)) == F(1, 2)


@given(piecewise_polys(), piecewise_polys())
@settings(max_examples=40, deadline=None)
def test_algebra_pointwise(p, q):
    for x in (F(0), F(1, 7), F(1, 2), F(9, 10), F(1)):
        assert (p + q).evaluate(x) == p.evaluate(x) + q.evaluate(x)
        assert (p * q).evaluate(x) == p.evaluate(x) * q.evaluate(x)
        assert (p - q).evaluate(x) == p.evaluate(x) - q.evaluate(x)
        assert p.scale(F(2, 3)).evaluate(x) == F(2, 3) * p.evaluate(x)


@given(piecewise_polys())
@settings(max_examples=40, deadline=None)
def test_fundamental_theorem(p):
    # the two one-sided integrals always sum to the total mass
    assert p.integrate_left() + p.integrate_right() == PiecewisePoly.constant(p.integral())
    assert p.integrate_left().evaluate(1) == p.integral()
    assert p.integrate_right().evaluate(0) == p.integral()


@given(piecewise_polys())
@settings(max_examples=25, deadline=None)
def test_text_round_trip(p):
    assert PiecewisePoly.from_text(p.to_text()) == p


def test_eval_float_matches_exact():
    p = PiecewisePoly.step([0, F(1, 3), 1], [2, 5]) * PW_X + PW_ONE
    xs = np.array([0.0, 0.25, 1.0 / 3.0, 0.5, 0.99, 1.0])
    got = p.eval_float(xs)
    want = [float(p.evaluate(F(x).limit_denominator(10 ** 9))) for x in xs]
    assert np.allclose(got, want)


def test_canonical_merging():
    # adjacent equal pieces merge, so equality is equality of functions
    a = PiecewisePoly(((F(0), F(1, 2), (F(1),)), (F(1, 2), F(1), (F(1),))))
    assert a == PW_ONE
    assert len(a.pieces) == 1
